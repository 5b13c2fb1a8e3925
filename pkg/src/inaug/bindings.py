"""In-process buffer API for training loops: no file I/O on the call path.

``augment_buffer`` is byte-identical to the batch runner's output for the
same (config, seed, epoch, index) on the same pixels; both go through the
one shared per-image code path. Configs cross this boundary as serialized
TOML text so there is exactly one schema and one parser.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import __version__
from .image import Image
from .pipeline import augment_image, config_from_text, preset_names, preset_path


class UnknownPreset(KeyError):
    def __init__(self, name: str):
        available = ", ".join(preset_names())
        super().__init__(f"unknown preset '{name}'; available: {available}")


@dataclass(frozen=True)
class BufferDescriptor:
    """A borrowed row-major RGB byte buffer; the engine never writes into it."""

    height: int
    width: int
    data: bytes
    channels: int = 3

    def __post_init__(self):
        if self.channels != 3:
            raise ValueError(f"only 3-channel buffers are supported, got {self.channels}")
        if self.height < 1 or self.width < 1:
            raise ValueError("buffer dims must be at least 1x1")
        if len(self.data) != self.height * self.width * 3:
            raise ValueError(
                f"buffer holds {len(self.data)} bytes, expected {self.height * self.width * 3}"
            )


def engine_version() -> str:
    return __version__


def load_preset(name: str) -> str:
    """Exact text of a shipped preset config."""
    try:
        return preset_path(name).read_text()
    except ValueError:
        raise UnknownPreset(name) from None


def augment_buffer(
    buf: BufferDescriptor, config_text: str, seed: int, epoch: int = 0, index: int = 0
) -> BufferDescriptor:
    """Augment one pixel buffer; returns a newly allocated output buffer.

    Raises ``ValueError`` (ConfigError/SchemaError) with the engine's
    diagnostics on malformed config text; the input buffer is untouched
    in every case.
    """
    cfg = config_from_text(config_text)
    img = Image.from_bytes(buf.width, buf.height, buf.data)
    out = augment_image(img, cfg, seed, epoch, index)
    return BufferDescriptor(out.height, out.width, out.tobytes())
