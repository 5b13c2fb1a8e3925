"""inaug: deterministic copy-resize-augment-paste image augmentation."""

__version__ = "0.1.0"

from .image import (
    Dims,
    EmptyIntersection,
    Image,
    InterpMode,
    PadMode,
    Rect,
    blit_clipped,
    crop_clamped,
    gaussian_blur,
    pad,
    resize,
)
from .inaugment import (
    InAugConfig,
    Ordering,
    Patch,
    PatchSpec,
    copy_patches,
    draws_per_image,
    inaugment,
    paste_patches,
    prepare_augment_first,
    prepare_resize_first,
    resolve_targets,
    scale_schedule,
)
from .ops import (
    FILL_RGB,
    MagnitudeTable,
    OpKind,
    OpSpec,
    apply_kernel,
    apply_op,
    autocontrast,
    brightness,
    color,
    contrast,
    cutout,
    equalize,
    invert,
    posterize,
    rotate,
    sharpness,
    shear_x,
    shear_y,
    solarize,
    translate_x,
    translate_y,
)
from .policy import (
    Policy,
    SampledTransform,
    SchemaError,
    SubPolicy,
    apply_transform,
    parse_policy,
    sample_transform,
    serialize_policy,
)
from .rng import RngState, derive_image_rng, derive_stream

__all__ = [
    "__version__",
    "Dims",
    "EmptyIntersection",
    "Image",
    "InterpMode",
    "PadMode",
    "Rect",
    "blit_clipped",
    "crop_clamped",
    "gaussian_blur",
    "pad",
    "resize",
    "InAugConfig",
    "Ordering",
    "Patch",
    "PatchSpec",
    "copy_patches",
    "draws_per_image",
    "inaugment",
    "paste_patches",
    "prepare_augment_first",
    "prepare_resize_first",
    "resolve_targets",
    "scale_schedule",
    "FILL_RGB",
    "MagnitudeTable",
    "OpKind",
    "OpSpec",
    "apply_kernel",
    "apply_op",
    "autocontrast",
    "brightness",
    "color",
    "contrast",
    "cutout",
    "equalize",
    "invert",
    "posterize",
    "rotate",
    "sharpness",
    "shear_x",
    "shear_y",
    "solarize",
    "translate_x",
    "translate_y",
    "Policy",
    "SampledTransform",
    "SchemaError",
    "SubPolicy",
    "apply_transform",
    "parse_policy",
    "sample_transform",
    "serialize_policy",
    "RngState",
    "derive_image_rng",
    "derive_stream",
]
