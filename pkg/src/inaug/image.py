"""Pixel buffers and the low-level geometric kernels everything composes.

All operations are pure: inputs are never mutated and every result is a new
:class:`Image`. Kernels compute in floating point and round back to u8
half-away-from-zero, so outputs are reproducible bit-for-bit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage


class EmptyIntersection(ValueError):
    """Crop rectangle does not overlap the image."""


@dataclass(frozen=True)
class Dims:
    """Width/height pair, both at least one pixel."""

    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"dims must be at least 1x1, got {self.w}x{self.h}")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle; offsets may lie outside an image, consumers clamp."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"rect extent must be non-negative, got {self.w}x{self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    def clamped(self, bounds: Dims) -> "Rect":
        """Intersection with [0, bounds.w) x [0, bounds.h); may be empty."""
        x0 = max(self.x, 0)
        y0 = max(self.y, 0)
        x1 = min(self.x + self.w, bounds.w)
        y1 = min(self.y + self.h, bounds.h)
        return Rect(x0, y0, max(x1 - x0, 0), max(y1 - y0, 0))


class InterpMode(Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"


class PadMode(Enum):
    SYMMETRIC = "symmetric"
    ZERO = "zero"
    TILE = "tile"


def round_u8(values: np.ndarray) -> np.ndarray:
    """Round half away from zero and clip to the u8 range."""
    return np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)


def _round_u8_owned(values: np.ndarray) -> np.ndarray:
    # In-place variant for float temporaries the caller owns.
    values += 0.5
    np.floor(values, out=values)
    np.clip(values, 0.0, 255.0, out=values)
    return values.astype(np.uint8)


class Image:
    """Immutable H x W x 3 image of 8-bit RGB intensities."""

    __slots__ = ("_px",)

    def __init__(self, pixels):
        px = np.array(pixels, dtype=np.uint8, copy=True)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected an HxWx3 array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("images must be at least 1x1")
        px.setflags(write=False)
        object.__setattr__(self, "_px", px)

    @classmethod
    def _wrap(cls, px: np.ndarray) -> "Image":
        # Trusted internal constructor: takes ownership, skips the copy.
        img = object.__new__(cls)
        if not px.flags.c_contiguous:
            px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(img, "_px", px)
        return img

    @classmethod
    def full(cls, width: int, height: int, rgb=(0, 0, 0)) -> "Image":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:] = rgb
        return cls._wrap(px)

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "Image":
        if len(data) != width * height * 3:
            raise ValueError(
                f"buffer holds {len(data)} bytes, expected {width * height * 3}"
            )
        px = np.frombuffer(bytearray(data), dtype=np.uint8).reshape(height, width, 3)
        return cls._wrap(px)

    @property
    def pixels(self) -> np.ndarray:
        """Read-only (H, W, 3) u8 view."""
        return self._px

    @property
    def width(self) -> int:
        return self._px.shape[1]

    @property
    def height(self) -> int:
        return self._px.shape[0]

    @property
    def dims(self) -> Dims:
        return Dims(self.width, self.height)

    def tobytes(self) -> bytes:
        return self._px.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self._px.shape == other._px.shape and bool(
            np.array_equal(self._px, other._px)
        )

    def __hash__(self):
        return hash((self._px.shape, self._px.tobytes()))

    def __repr__(self) -> str:
        return f"Image({self.width}x{self.height})"


@functools.lru_cache(maxsize=128)
def _bilinear_axis(n_out: int, n_in: int):
    s = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    np.clip(s, 0.0, n_in - 1.0, out=s)
    lo = np.floor(s).astype(np.intp)
    frac = (s - lo).astype(np.float32)
    hi = np.minimum(lo + 1, n_in - 1)
    for a in (lo, hi, frac):
        a.setflags(write=False)
    return lo, hi, frac


@functools.lru_cache(maxsize=128)
def _nearest_axis(n_out: int, n_in: int) -> np.ndarray:
    idx = np.floor((np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out))
    idx = np.minimum(idx.astype(np.intp), n_in - 1)
    idx.setflags(write=False)
    return idx


def resize(img: Image, target: Dims, interp: InterpMode = InterpMode.BILINEAR) -> Image:
    """Resample to ``target`` using half-pixel-center sampling.

    Bilinear interpolates with edge clamping; nearest takes the floor of
    the half-pixel-center source coordinate. Resizing to the input size is
    the identity in both modes.
    """
    if target == img.dims:
        return img
    px = img.pixels
    if interp is InterpMode.NEAREST:
        ys = _nearest_axis(target.h, img.height)
        xs = _nearest_axis(target.w, img.width)
        return Image._wrap(px[np.ix_(ys, xs)])
    y_lo, y_hi, ty = _bilinear_axis(target.h, img.height)
    x_lo, x_hi, tx = _bilinear_axis(target.w, img.width)
    # float32 keeps the math well inside the +/-1 contract while halving
    # memory traffic; rows are gathered as u8 before widening.
    top = px[y_lo].astype(np.float32)
    rows = px[y_hi].astype(np.float32)
    rows -= top
    rows *= ty[:, None, None]
    rows += top
    left = rows[:, x_lo]
    out = rows[:, x_hi]
    out -= left
    out *= tx[None, :, None]
    out += left
    return Image._wrap(_round_u8_owned(out))


def crop_clamped(img: Image, r: Rect) -> Image:
    """Pixels of ``r`` intersected with the image bounds; never pads.

    Raises :class:`EmptyIntersection` when the intersection has zero area.
    """
    c = r.clamped(img.dims)
    if c.area == 0:
        raise EmptyIntersection(
            f"rect {r} does not intersect a {img.width}x{img.height} image"
        )
    return Image._wrap(img.pixels[c.y : c.y + c.h, c.x : c.x + c.w].copy())


def blit_clipped(dst: Image, src: Image, x: int, y: int) -> Image:
    """Paste ``src`` over ``dst`` at (x, y), discarding out-of-bounds pixels."""
    x0 = max(x, 0)
    y0 = max(y, 0)
    x1 = min(x + src.width, dst.width)
    y1 = min(y + src.height, dst.height)
    if x0 >= x1 or y0 >= y1:
        return dst
    out = dst.pixels.copy()
    out[y0:y1, x0:x1] = src.pixels[y0 - y : y1 - y, x0 - x : x1 - x]
    return Image._wrap(out)


def _extended_index(n: int, d: int, mode: PadMode) -> np.ndarray:
    t = np.arange(-d, n + d)
    if mode is PadMode.TILE:
        return t % n
    # symmetric: reflect including the edge pixel, periodic beyond the extent
    m = t % (2 * n)
    return np.where(m >= n, 2 * n - 1 - m, m)


def pad(img: Image, d: int, mode: PadMode) -> Image:
    """Grow each border by ``d`` pixels.

    ``symmetric`` mirrors across the border including the edge pixel and
    continues periodically when ``d`` exceeds the image extent; ``zero``
    fills with black; ``tile`` wraps the image periodically.
    """
    if d < 0:
        raise ValueError("pad amount must be non-negative")
    if d == 0:
        return img
    px = img.pixels
    if mode is PadMode.ZERO:
        out = np.zeros((img.height + 2 * d, img.width + 2 * d, 3), dtype=np.uint8)
        out[d : d + img.height, d : d + img.width] = px
        return Image._wrap(out)
    ys = _extended_index(img.height, d, mode)
    xs = _extended_index(img.width, d, mode)
    return Image._wrap(px[np.ix_(ys, xs)])


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps with radius ceil(3 * sigma)."""
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_blur(img: Image, sigma: float) -> Image:
    """Separable Gaussian blur, edge-clamped; sigma 0 is the identity."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return img
    w = gaussian_kernel(sigma).astype(np.float32)
    a = img.pixels.astype(np.float32)
    a = ndimage.correlate1d(a, w, axis=0, mode="nearest")
    a = ndimage.correlate1d(a, w, axis=1, mode="nearest")
    return Image._wrap(_round_u8_owned(a))
