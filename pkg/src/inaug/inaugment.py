"""Copy-resize-augment-paste: the engine's core per-image operation.

Pipeline: sample one transform for the image, copy patches from the
*original* (pre-transform) image with boundary trimming, resize and
augment them (in either order), augment the base image with the same
transform, then paste the prepared patches back, largest first, each kept
with its paste probability and clipped at the boundary.

Randomness is drawn in a fixed, documented order so the per-image stream
is reproducible for a given config and policy shape:

1. ``sample_transform``: 1 + 3k draws (k = chosen sub-policy length).
2. Per patch, in spec order: size draw, x, y (3 draws each, the size draw
   is consumed even for fixed sizes).
3. Per patch, in spec order: target draw (1 each, consumed even for fixed
   targets and scale factors).
4. If per-patch coin resampling is enabled: 3k draws per patch.
5. Per patch, in spec order: keep draw, paste x, paste y (3 draws each,
   consumed whether or not the patch is kept).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .image import Dims, Image, InterpMode, Rect, blit_clipped, resize
from .ops import MagnitudeTable
from .policy import (
    Policy,
    SampledTransform,
    apply_transform,
    resample_fired,
    sample_transform,
    transform_draws,
)
from .rng import RngState, spread_below

COPY_DRAWS_PER_PATCH = 3
TARGET_DRAWS_PER_PATCH = 1
PASTE_DRAWS_PER_PATCH = 3


class Ordering(Enum):
    RESIZE_FIRST = "resize_first"
    AUGMENT_FIRST = "augment_first"


@dataclass(frozen=True)
class PatchSpec:
    """How one patch is copied, resized, and pasted.

    Exactly one of ``size``/``size_range`` picks the copy size
    (``size_range`` draws a square side, inclusive). At most one of
    ``target``/``scale``/``target_range`` picks the resize target;
    omitting all three means no resize (scale 1.0). ``scale`` resolves
    against the copied, post-trim dims, rounded to the nearest pixel with
    a floor of 1.
    """

    paste_prob: float = 1.0
    size: Dims | None = None
    size_range: tuple[int, int] | None = None
    target: Dims | None = None
    scale: float | None = None
    target_range: tuple[int, int] | None = None

    def __post_init__(self):
        if not 0.0 <= self.paste_prob <= 1.0:
            raise ValueError(f"paste_prob must be in [0, 1], got {self.paste_prob}")
        if (self.size is None) == (self.size_range is None):
            raise ValueError("exactly one of size/size_range is required")
        targets = [t for t in (self.target, self.scale, self.target_range) if t is not None]
        if len(targets) > 1:
            raise ValueError("at most one of target/scale/target_range is allowed")
        for label, rng_ in (("size_range", self.size_range), ("target_range", self.target_range)):
            if rng_ is not None:
                lo, hi = rng_
                if lo < 1 or lo > hi:
                    raise ValueError(f"{label} must satisfy 1 <= lo <= hi, got {rng_}")
        if self.scale is not None and self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def resolved_scale(self) -> float | None:
        """The effective scale factor, 1.0 when no resize was requested."""
        if self.target is None and self.target_range is None:
            return self.scale if self.scale is not None else 1.0
        return None


@dataclass(frozen=True)
class InAugConfig:
    """Full recipe: patch schedule, ordering mode, and base policy."""

    policy: Policy
    magnitudes: MagnitudeTable
    patches: tuple[PatchSpec, ...] = ()
    ordering: Ordering = Ordering.AUGMENT_FIRST
    shared_fire: bool = True


@dataclass(frozen=True)
class Patch:
    """A copied patch: its pixels and the source rect actually read."""

    pixels: Image
    origin: Rect


def scale_schedule(n: int) -> tuple[float, ...]:
    """Halving rescale factors for an n-patch schedule: 1, 0.5, 0.25, ..."""
    return tuple(0.5**i for i in range(n))


def copy_patches(img: Image, cfg: InAugConfig, rng: RngState) -> list[Patch]:
    """Copy ``cfg.patches`` rects with uniform in-bounds top-lefts.

    Rects extending past the boundary are trimmed to the image, never
    padded; the in-bounds top-left guarantees a non-empty patch.
    """
    patches = []
    for spec in cfg.patches:
        size_draw = rng.next_u64()
        if spec.size_range is not None:
            lo, hi = spec.size_range
            side = lo + spread_below(size_draw, hi - lo + 1)
            w = h = side
        else:
            w, h = spec.size.w, spec.size.h
        x = rng.next_below(img.width)
        y = rng.next_below(img.height)
        origin = Rect(x, y, w, h).clamped(img.dims)
        pixels = Image._wrap(
            img.pixels[origin.y : origin.y + origin.h, origin.x : origin.x + origin.w].copy()
        )
        patches.append(Patch(pixels, origin))
    return patches


def resolve_targets(patches: list[Patch], cfg: InAugConfig, rng: RngState) -> list[Dims]:
    """Resolve each patch's resize target, consuming one draw per patch."""
    targets = []
    for patch, spec in zip(patches, cfg.patches):
        draw = rng.next_u64()
        if spec.target is not None:
            targets.append(spec.target)
        elif spec.target_range is not None:
            lo, hi = spec.target_range
            side = lo + spread_below(draw, hi - lo + 1)
            targets.append(Dims(side, side))
        else:
            s = spec.scale if spec.scale is not None else 1.0
            targets.append(
                Dims(
                    max(1, math.floor(s * patch.pixels.width + 0.5)),
                    max(1, math.floor(s * patch.pixels.height + 0.5)),
                )
            )
    return targets


def prepare_resize_first(
    patches: list[Patch], targets: list[Dims], cfg: InAugConfig, t: SampledTransform
) -> list[Image]:
    """Resize each patch to its target, then augment with the shared t."""
    return [
        apply_transform(resize(p.pixels, tgt, InterpMode.BILINEAR), t, cfg.policy)
        for p, tgt in zip(patches, targets)
    ]


def prepare_augment_first(
    patches: list[Patch], targets: list[Dims], cfg: InAugConfig, t: SampledTransform
) -> list[Image]:
    """Augment each patch with the shared t, then resize to its target."""
    return [
        resize(apply_transform(p.pixels, t, cfg.policy), tgt, InterpMode.BILINEAR)
        for p, tgt in zip(patches, targets)
    ]


def paste_patches(
    base: Image, prepared: list[Image], specs: tuple[PatchSpec, ...], rng: RngState
) -> Image:
    """Paste kept patches largest-area first at uniform in-bounds top-lefts.

    Each patch survives with its spec's paste probability; keep and
    position draws are consumed for every patch so the stream does not
    depend on the outcomes. Area ties keep spec order, so later patches
    paint over earlier ones; out-of-bounds parts are clipped.
    """
    if len(prepared) != len(specs):
        raise ValueError("prepared patches and specs differ in length")
    kept = []
    for i, spec in enumerate(specs):
        keep = rng.next_float() < spec.paste_prob
        x = rng.next_below(base.width)
        y = rng.next_below(base.height)
        if keep:
            kept.append((i, x, y))
    kept.sort(key=lambda item: (-prepared[item[0]].width * prepared[item[0]].height, item[0]))
    out = base
    for i, x, y in kept:
        out = blit_clipped(out, prepared[i], x, y)
    return out


def inaugment(img: Image, cfg: InAugConfig, rng: RngState) -> Image:
    """The end-to-end per-image map; output dims equal input dims.

    With no patches this degrades to plain base augmentation. Patches are
    copied from the original image, not the augmented one.
    """
    t = sample_transform(cfg.policy, cfg.magnitudes, rng)
    patches = copy_patches(img, cfg, rng)
    targets = resolve_targets(patches, cfg, rng)
    prepare = prepare_resize_first if cfg.ordering is Ordering.RESIZE_FIRST else prepare_augment_first
    if cfg.shared_fire:
        prepared = prepare(patches, targets, cfg, t)
    else:
        prepared = []
        for patch, target in zip(patches, targets):
            t_i = resample_fired(cfg.policy, t, rng)
            prepared.extend(prepare([patch], [target], cfg, t_i))
    base = apply_transform(img, t, cfg.policy)
    return paste_patches(base, prepared, cfg.patches, rng)


def draws_per_image(cfg: InAugConfig) -> int:
    """Total draws :func:`inaugment` consumes for a uniform-length policy."""
    n = len(cfg.patches)
    per_patch = COPY_DRAWS_PER_PATCH + TARGET_DRAWS_PER_PATCH + PASTE_DRAWS_PER_PATCH
    base = transform_draws(cfg.policy) + n * per_patch
    if not cfg.shared_fire:
        base += n * (transform_draws(cfg.policy) - 1)
    return base
