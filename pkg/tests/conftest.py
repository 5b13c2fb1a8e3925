import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from inaug import Image
from inaug.rng import RngState


def fixed_pixels(width: int, height: int, key: int) -> np.ndarray:
    """Deterministic pixel noise derived from the engine-independent seed."""
    rng = RngState(key)
    flat = bytes(rng.next_below(256) for _ in range(height * width * 3))
    return np.frombuffer(flat, dtype=np.uint8).reshape(height, width, 3).copy()


def fixed_image(width: int, height: int, key: int) -> Image:
    return Image(fixed_pixels(width, height, key))


@pytest.fixture
def seed8() -> Image:
    """The 8x8 image all golden buffers are pinned to."""
    return fixed_image(8, 8, 0xC0FFEE)


@pytest.fixture
def noise32() -> Image:
    return fixed_image(32, 32, 0xBEEF)


def make_cifar_bin(path: Path, count: int, key0: int = 0) -> Path:
    """Write a synthetic CIFAR-10-layout file with ``count`` records."""
    records = []
    for i in range(count):
        px = fixed_pixels(32, 32, key0 + i)
        records.append(bytes([i % 10]) + px.transpose(2, 0, 1).tobytes())
    path.write_bytes(b"".join(records))
    return path


def make_image_dir(root: Path, per_class: dict[str, int], size=(32, 32), key0=0) -> Path:
    """Write a class-per-subdirectory PNG tree."""
    from inaug.data import encode_png

    key = key0
    for cls, count in per_class.items():
        d = root / cls
        d.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            (d / f"img{i:03d}.png").write_bytes(
                encode_png(fixed_image(size[0], size[1], key))
            )
            key += 1
    return root
