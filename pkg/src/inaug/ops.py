"""Base transform kernels: geometric warps, tone curves, and CutOut.

Each kernel is a pure image -> image function parameterized by a single
value resolved from a discrete magnitude level (0-9) through a
:class:`MagnitudeTable`. Geometric kernels use inverse-mapped
nearest-neighbor resampling about the image center and fill vacated
pixels with gray (128, 128, 128).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .image import Image, _round_u8_owned, round_u8

FILL_RGB = (128, 128, 128)
MAX_LEVEL = 9

# ITU-R 601-2 luma in integer permille, used by Color/Contrast references.
# Integer math keeps the reference gray values exactly reproducible.
_LUMA_PERMILLE = (299, 587, 114)

# 3x3 smoothing kernel backing the Sharpness reference.
_SMOOTH = np.array([[1, 1, 1], [1, 5, 1], [1, 1, 1]], dtype=np.float32) / np.float32(13.0)

# Per-channel histogram offsets so equalize needs a single bincount pass.
_EQ_OFFSETS = np.array([0, 256, 512], dtype=np.int16)

# Broadcast channel index for one-shot per-channel LUT gathers.
_CH_IDX = np.arange(3).reshape(1, 1, 3)
_CH_IDX.setflags(write=False)


class OpKind(Enum):
    SHEAR_X = "ShearX"
    SHEAR_Y = "ShearY"
    TRANSLATE_X = "TranslateX"
    TRANSLATE_Y = "TranslateY"
    ROTATE = "Rotate"
    AUTOCONTRAST = "AutoContrast"
    INVERT = "Invert"
    EQUALIZE = "Equalize"
    SOLARIZE = "Solarize"
    POSTERIZE = "Posterize"
    CONTRAST = "Contrast"
    COLOR = "Color"
    BRIGHTNESS = "Brightness"
    SHARPNESS = "Sharpness"
    CUTOUT = "CutOut"


#: Kinds whose kernels take no parameter; their magnitude level is ignored.
PARAM_FREE = frozenset({OpKind.AUTOCONTRAST, OpKind.INVERT, OpKind.EQUALIZE})

#: Kinds whose parameter is multiplied by a sampled +/- direction.
SIGNED = frozenset(
    {OpKind.SHEAR_X, OpKind.SHEAR_Y, OpKind.TRANSLATE_X, OpKind.TRANSLATE_Y, OpKind.ROTATE}
)


@dataclass(frozen=True)
class OpSpec:
    """One transform slot: kind, firing probability, magnitude level."""

    kind: OpKind
    probability: float
    magnitude: int

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {self.probability}")
        if not 0 <= self.magnitude <= MAX_LEVEL:
            raise ValueError(
                f"magnitude level must be in [0, {MAX_LEVEL}], got {self.magnitude}"
            )


MAGNITUDES_HEADER = "inaug-magnitudes 1"


class MagnitudeTable:
    """Linear level-to-parameter map per op kind.

    Level 0 maps to the range minimum, level 9 to the maximum. Translate
    and CutOut parameters are fractions of the image dimension so one
    table serves any resolution.
    """

    def __init__(self, ranges: dict[OpKind, tuple[float, float]]):
        missing = [
            k.value for k in OpKind if k not in PARAM_FREE and k not in ranges
        ]
        if missing:
            raise ValueError(f"magnitude table is missing ranges for: {missing}")
        self._ranges = dict(ranges)

    def range_for(self, kind: OpKind) -> tuple[float, float]:
        return self._ranges[kind]

    def resolve(self, kind: OpKind, level: int) -> float:
        """Parameter for ``level``; 0.0 for parameter-free kinds."""
        if not 0 <= level <= MAX_LEVEL:
            raise ValueError(f"magnitude level must be in [0, {MAX_LEVEL}]")
        if kind in PARAM_FREE:
            return 0.0
        lo, hi = self._ranges[kind]
        return lo + (hi - lo) * (level / MAX_LEVEL)

    @classmethod
    def parse(cls, text: str) -> "MagnitudeTable":
        kinds = {k.value: k for k in OpKind}
        ranges: dict[OpKind, tuple[float, float]] = {}
        header_seen = False
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if not header_seen:
                if line != MAGNITUDES_HEADER:
                    raise ValueError(
                        f"line {lineno}: expected header '{MAGNITUDES_HEADER}'"
                    )
                header_seen = True
                continue
            fields = line.split()
            if len(fields) != 3:
                raise ValueError(f"line {lineno}: expected 'Kind min max'")
            if fields[0] not in kinds:
                raise ValueError(f"line {lineno}: unknown op kind '{fields[0]}'")
            try:
                lo, hi = float(fields[1]), float(fields[2])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad number: {exc}") from None
            ranges[kinds[fields[0]]] = (lo, hi)
        if not header_seen:
            raise ValueError(f"expected header '{MAGNITUDES_HEADER}'")
        return cls(ranges)


_V256 = np.arange(256)
_V256.setflags(write=False)


def invert(img: Image) -> Image:
    return Image._wrap(255 - img.pixels)


def solarize(img: Image, threshold: float) -> Image:
    """Invert every intensity at or above ``threshold``."""
    lut = np.where(_V256 >= threshold, 255 - _V256, _V256).astype(np.uint8)
    return Image._wrap(lut[img.pixels])


def posterize(img: Image, bits: int) -> Image:
    """Keep the top ``bits`` bits of every channel value."""
    if not 1 <= bits <= 8:
        raise ValueError(f"bits must be in [1, 8], got {bits}")
    mask = np.uint8(0xFF & (0xFF << (8 - bits)))
    return Image._wrap(img.pixels & mask)


def equalize(img: Image) -> Image:
    """Per-channel histogram equalization.

    Uses the conventional nonzero-step cumulative remap: with h the
    256-bin histogram and step = (pixels - count(max present value)) // 255,
    value v maps to clip((step // 2 + sum(h[:v])) // step, 0, 255); a zero
    step (including constant channels) leaves the channel unchanged.
    """
    px = img.pixels
    flat = px.reshape(-1, 3)
    hists = np.bincount((flat + _EQ_OFFSETS).ravel(), minlength=768).reshape(3, 256)
    total = flat.shape[0]
    present = hists > 0
    last = 255 - np.argmax(present[:, ::-1], axis=1)
    steps = np.where(
        present.sum(axis=1) > 1, (total - hists[np.arange(3), last]) // 255, 0
    )
    before = np.cumsum(hists, axis=1) - hists  # sum of h[u] for u < v
    safe = np.maximum(steps, 1)[:, None]
    luts = np.clip((safe // 2 + before) // safe, 0, 255)
    # zero-step channels keep the identity map
    luts = np.where(steps[:, None] > 0, luts, _V256[None, :]).astype(np.uint8)
    return Image._wrap(luts[_CH_IDX, px])


def autocontrast(img: Image) -> Image:
    """Per-channel linear remap of [min, max] onto [0, 255]."""
    px = img.pixels
    flat = px.reshape(-1, 3)
    los = flat.min(axis=0).astype(np.float64)
    his = flat.max(axis=0).astype(np.float64)
    span = np.where(his > los, his - los, 1.0)
    # multiply before dividing: (v - lo) * 255 is exact in doubles, so the
    # quotient rounds the same way as the scalar definition
    luts = round_u8((_V256[None, :] - los[:, None]) * 255.0 / span[:, None])
    # constant channels keep the identity map
    luts = np.where((his > los)[:, None], luts, _V256[None, :]).astype(np.uint8)
    return Image._wrap(luts[_CH_IDX, px])


@functools.lru_cache(maxsize=64)
def _center_coords(n: int) -> np.ndarray:
    xs = np.arange(n, dtype=np.float64) + 0.5
    xs.setflags(write=False)
    return xs


def _warp_nn(img: Image, coeffs: tuple[float, float, float, float, float, float]) -> Image:
    """Inverse-map output pixel centers through an affine and gather nearest.

    ``coeffs`` = (a, b, c, d, e, f) with source = (a*x + b*y + c, d*x + e*y + f)
    for output center (x, y); out-of-bounds samples become FILL_RGB.
    """
    h, w = img.height, img.width
    a, b, c, d, e, f = coeffs
    xs = _center_coords(w)
    ys = _center_coords(h)
    sx = a * xs[None, :] + b * ys[:, None] + c
    sy = d * xs[None, :] + e * ys[:, None] + f
    ix = np.floor(sx).astype(np.intp)
    iy = np.floor(sy).astype(np.intp)
    inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    np.clip(ix, 0, w - 1, out=ix)
    np.clip(iy, 0, h - 1, out=iy)
    out = img.pixels[iy, ix]
    out[~inside] = FILL_RGB
    return Image._wrap(out)


def shear_x(img: Image, amount: float) -> Image:
    cy = img.height / 2.0
    return _warp_nn(img, (1.0, amount, -amount * cy, 0.0, 1.0, 0.0))


def shear_y(img: Image, amount: float) -> Image:
    cx = img.width / 2.0
    return _warp_nn(img, (1.0, 0.0, 0.0, amount, 1.0, -amount * cx))


def _shift(img: Image, k: int, axis: int) -> Image:
    # Whole-image shift by k pixels along axis; equals the affine inverse
    # map floor(center - t) because the offset is constant per axis.
    out = np.empty_like(img.pixels)
    out[:] = FILL_RGB
    n = img.pixels.shape[axis]
    lo = max(0, -k)
    hi = min(n, n - k)
    if hi > lo:
        if axis == 1:
            out[:, lo:hi] = img.pixels[:, lo + k : hi + k]
        else:
            out[lo:hi] = img.pixels[lo + k : hi + k]
    return Image._wrap(out)


def translate_x(img: Image, fraction: float) -> Image:
    """Shift content right by ``fraction`` of the width (left if negative)."""
    return _shift(img, math.floor(0.5 - fraction * img.width), axis=1)


def translate_y(img: Image, fraction: float) -> Image:
    return _shift(img, math.floor(0.5 - fraction * img.height), axis=0)


def rotate(img: Image, degrees: float) -> Image:
    """Rotate content about the image center by ``degrees``."""
    cx = img.width / 2.0
    cy = img.height / 2.0
    cos = math.cos(math.radians(degrees))
    sin = math.sin(math.radians(degrees))
    return _warp_nn(
        img,
        (
            cos,
            -sin,
            cx - cos * cx + sin * cy,
            sin,
            cos,
            cy - sin * cx - cos * cy,
        ),
    )


def _blend(img: Image, reference: np.ndarray, factor: float) -> Image:
    """reference + factor * (img - reference), rounded once at the end."""
    out = img.pixels.astype(np.float32)
    out -= reference
    out *= np.float32(factor)
    out += reference
    return Image._wrap(_round_u8_owned(out))


def brightness(img: Image, factor: float) -> Image:
    """Blend toward black: factor 0 is black, 1 the original."""
    out = img.pixels.astype(np.float32)
    out *= np.float32(factor)
    return Image._wrap(_round_u8_owned(out))


def _luma(img: Image) -> np.ndarray:
    """Per-pixel gray: (299 R + 587 G + 114 B + 500) // 1000, exact."""
    p = img.pixels.astype(np.int32)
    wr, wg, wb = _LUMA_PERMILLE
    return (p[:, :, 0] * wr + p[:, :, 1] * wg + p[:, :, 2] * wb + 500) // 1000


def color(img: Image, factor: float) -> Image:
    """Blend toward the per-pixel grayscale image."""
    return _blend(img, _luma(img)[:, :, None].astype(np.float32), factor)


def contrast(img: Image, factor: float) -> Image:
    """Blend toward the constant image at the rounded mean luminance."""
    mean = math.floor(float(_luma(img).mean(dtype=np.float64)) + 0.5)
    return _blend(img, np.float32(mean), factor)


def sharpness(img: Image, factor: float) -> Image:
    """Blend away from a 3x3-smoothed copy; factor > 1 sharpens."""
    smooth = ndimage.correlate(
        img.pixels.astype(np.float32), _SMOOTH[:, :, None], mode="nearest"
    )
    return _blend(img, smooth, factor)


def cutout(img: Image, cut: tuple[int, int], center: tuple[int, int], fill=FILL_RGB) -> Image:
    """Overwrite the cut-sized region centered at ``center`` with ``fill``.

    The region is clipped at the image boundary; a zero-sized cut is the
    identity.
    """
    cw, ch = cut
    if cw <= 0 or ch <= 0:
        return img
    cx, cy = center
    x0 = max(cx - cw // 2, 0)
    y0 = max(cy - ch // 2, 0)
    x1 = min(cx - cw // 2 + cw, img.width)
    y1 = min(cy - ch // 2 + ch, img.height)
    if x0 >= x1 or y0 >= y1:
        return img
    out = img.pixels.copy()
    out[y0:y1, x0:x1] = fill
    return Image._wrap(out)


def apply_kernel(img: Image, kind: OpKind, param: float, direction: int = 1) -> Image:
    """Dispatch one kernel with its resolved parameter.

    ``direction`` signs the parameter for geometric kinds and is ignored
    elsewhere. Policy-driven CutOut cuts a square of side
    ``param * min(W, H)`` at the image center; positional randomness is the
    standalone :func:`cutout` caller's business.
    """
    if kind is OpKind.SHEAR_X:
        return shear_x(img, direction * param)
    if kind is OpKind.SHEAR_Y:
        return shear_y(img, direction * param)
    if kind is OpKind.TRANSLATE_X:
        return translate_x(img, direction * param)
    if kind is OpKind.TRANSLATE_Y:
        return translate_y(img, direction * param)
    if kind is OpKind.ROTATE:
        return rotate(img, direction * param)
    if kind is OpKind.AUTOCONTRAST:
        return autocontrast(img)
    if kind is OpKind.INVERT:
        return invert(img)
    if kind is OpKind.EQUALIZE:
        return equalize(img)
    if kind is OpKind.SOLARIZE:
        return solarize(img, param)
    if kind is OpKind.POSTERIZE:
        return posterize(img, int(math.floor(param + 0.5)))
    if kind is OpKind.CONTRAST:
        return contrast(img, param)
    if kind is OpKind.COLOR:
        return color(img, param)
    if kind is OpKind.BRIGHTNESS:
        return brightness(img, param)
    if kind is OpKind.SHARPNESS:
        return sharpness(img, param)
    if kind is OpKind.CUTOUT:
        side = int(math.floor(param * min(img.width, img.height) + 0.5))
        return cutout(img, (side, side), (img.width // 2, img.height // 2))
    raise ValueError(f"unhandled op kind {kind}")


def apply_op(
    img: Image, spec: OpSpec, fired: bool, direction: int, magnitudes: MagnitudeTable
) -> Image:
    """Apply one op slot with externally sampled randomness.

    ``fired`` and ``direction`` come from the policy sampler, keeping this
    function deterministic; a non-fired op returns the input unchanged.
    """
    if not fired:
        return img
    return apply_kernel(img, spec.kind, magnitudes.resolve(spec.kind, spec.magnitude), direction)
