"""Dataset ingestion and output writing.

Readers are deterministic generators: the same source yields the same
ordered stream on every platform. Outputs round-trip byte-exactly in both
supported formats (PNG and CIFAR-style binary records).
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .image import Image

log = logging.getLogger("inaug.data")

CIFAR_SIDE = 32
_PLANE = CIFAR_SIDE * CIFAR_SIDE
_PIXEL_BYTES = 3 * _PLANE

_IMAGE_EXTS = (".png", ".ppm")


class DatasetError(Exception):
    """Base class for data ingestion problems."""


class TruncatedFile(DatasetError):
    """File size is not a whole number of records."""


class LabelOutOfRange(DatasetError):
    """A record's label byte exceeds the dataset's class count."""


class DecodeError(DatasetError):
    """An image file could not be decoded."""


@dataclass(frozen=True)
class LabeledImage:
    image: Image
    label: int
    source_id: str


@dataclass(frozen=True)
class DatasetSource:
    """Where a dataset lives: cifar10 | cifar100 binary files or an image dir."""

    kind: str
    root: Path
    split: str = "train"

    def __post_init__(self):
        if self.kind not in ("cifar10", "cifar100", "image_dir"):
            raise ValueError(f"unknown source kind '{self.kind}'")


def _cifar_files(src: DatasetSource) -> list[Path]:
    root = Path(src.root)
    if root.is_file():
        return [root]
    if not root.is_dir():
        raise DatasetError(f"source root does not exist: {root}")
    if src.kind == "cifar10":
        names = (
            [f"data_batch_{i}.bin" for i in range(1, 6)]
            if src.split == "train"
            else ["test_batch.bin"]
        )
    else:
        names = ["train.bin"] if src.split == "train" else ["test.bin"]
    files = [root / n for n in names if (root / n).exists()]
    if not files:
        raise DatasetError(f"no {src.kind} {src.split} files under {root}")
    return files


def _planes_to_image(pixel_bytes: bytes) -> Image:
    planes = np.frombuffer(pixel_bytes, dtype=np.uint8).reshape(3, CIFAR_SIDE, CIFAR_SIDE)
    return Image(planes.transpose(1, 2, 0))


def read_cifar(src: DatasetSource) -> Iterator[LabeledImage]:
    """Stream CIFAR binary records in file order.

    CIFAR-10 records are 1 label byte + 3072 plane-ordered pixel bytes;
    CIFAR-100 records carry coarse then fine label bytes and only the fine
    label is exposed.
    """
    label_bytes = 1 if src.kind == "cifar10" else 2
    num_classes = 10 if src.kind == "cifar10" else 100
    record_len = label_bytes + _PIXEL_BYTES
    for path in _cifar_files(src):
        blob = path.read_bytes()
        if len(blob) % record_len != 0:
            raise TruncatedFile(
                f"{path}: {len(blob)} bytes is not a multiple of the {record_len}-byte record"
            )
        for i in range(len(blob) // record_len):
            rec = blob[i * record_len : (i + 1) * record_len]
            if src.kind == "cifar100":
                coarse, fine = rec[0], rec[1]
                if coarse >= 20:
                    raise LabelOutOfRange(f"{path} record {i}: coarse label {coarse} >= 20")
                label = fine
            else:
                label = rec[0]
            if label >= num_classes:
                raise LabelOutOfRange(
                    f"{path} record {i}: label {label} >= {num_classes}"
                )
            yield LabeledImage(
                _planes_to_image(rec[label_bytes:]), label, f"{path.stem}-{i:05d}"
            )


def read_image_dir(
    src: DatasetSource, on_skip: Callable[[Path, Exception], None] | None = None
) -> Iterator[LabeledImage]:
    """Stream a class-per-subdirectory tree in lexicographic order.

    Class indices follow sorted directory names. Undecodable files are
    skipped with a warning and reported through ``on_skip``.
    """
    root = Path(src.root)
    if not root.is_dir():
        raise DatasetError(f"source root does not exist: {root}")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    for label, class_dir in enumerate(class_dirs):
        for path in sorted(class_dir.iterdir()):
            if not path.is_file() or path.suffix.lower() not in _IMAGE_EXTS:
                continue
            try:
                img = decode_image_file(path)
            except DecodeError as exc:
                log.warning("skipping %s: %s", path, exc)
                if on_skip is not None:
                    on_skip(path, exc)
                continue
            yield LabeledImage(img, label, f"{class_dir.name}/{path.stem}")


def open_source(
    src: DatasetSource, on_skip: Callable[[Path, Exception], None] | None = None
) -> Iterator[LabeledImage]:
    if src.kind == "image_dir":
        return read_image_dir(src, on_skip=on_skip)
    return read_cifar(src)


def decode_image_file(path: Path) -> Image:
    try:
        with PILImage.open(path) as im:
            return Image(np.asarray(im.convert("RGB")))
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc


def encode_png(img: Image) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(np.asarray(img.pixels)).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> Image:
    with PILImage.open(io.BytesIO(data)) as im:
        return Image(np.asarray(im.convert("RGB")))


def encode_cifar_record(img: Image, label: int) -> bytes:
    """CIFAR-10-layout record: label byte + three 1024-byte channel planes."""
    if img.width != CIFAR_SIDE or img.height != CIFAR_SIDE:
        raise DatasetError(
            f"cifar records require {CIFAR_SIDE}x{CIFAR_SIDE} images, got {img.width}x{img.height}"
        )
    if not 0 <= label <= 255:
        raise DatasetError(f"cifar record label must fit one byte, got {label}")
    planes = np.asarray(img.pixels).transpose(2, 0, 1)
    return bytes([label]) + planes.tobytes()


def sanitize_id(source_id: str) -> str:
    """Make a source id safe for use in file names."""
    return source_id.replace("/", "__").replace("\\", "__")


class OutputWriter:
    """Writes augmented images under a root in one of the two formats.

    PNG mode lays files out as ``<root>/<label>/<source_id>_<epoch>.png``;
    record mode appends CIFAR-layout records to ``<root>/records.bin``.
    Lossy formats are not offered: outputs must be byte-reproducible.
    """

    RECORDS_NAME = "records.bin"

    def __init__(self, root: Path, format: str):
        if format not in ("png", "cifar_record"):
            raise ValueError(f"unknown output format '{format}'")
        self.root = Path(root)
        self.format = format
        self.count = 0
        self.root.mkdir(parents=True, exist_ok=True)
        self._records = None
        if format == "cifar_record":
            self._records = open(self.root / self.RECORDS_NAME, "wb")

    def encode(self, img: Image, label: int) -> bytes:
        if self.format == "png":
            return encode_png(img)
        return encode_cifar_record(img, label)

    def write_encoded(self, payload: bytes, source_id: str, label: int, epoch: int) -> str:
        """Write one already-encoded image; returns the manifest path."""
        if self.format == "png":
            rel = Path(str(label)) / f"{sanitize_id(source_id)}_{epoch}.png"
            dest = self.root / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(payload)
            out_path = str(rel)
        else:
            self._records.write(payload)
            out_path = f"{self.RECORDS_NAME}#{self.count}"
        self.count += 1
        return out_path

    def write(self, img: Image, source_id: str, label: int, epoch: int) -> str:
        return self.write_encoded(self.encode(img, label), source_id, label, epoch)

    def close(self):
        if self._records is not None:
            self._records.close()
            self._records = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass(frozen=True)
class ManifestEntry:
    source_id: str
    label: int
    path: str
    seed: str


class Manifest:
    """One line per written record: source_id, label, output path, seed."""

    def __init__(self):
        self.entries: list[ManifestEntry] = []
        self.skipped = 0

    def add(self, source_id: str, label: int, path: str, seed: str):
        self.entries.append(ManifestEntry(source_id, label, path, seed))

    def to_text(self) -> str:
        lines = ["# inaug-manifest 1", f"# skipped {self.skipped}"]
        lines += [f"{e.source_id}\t{e.label}\t{e.path}\t{e.seed}" for e in self.entries]
        return "\n".join(lines) + "\n"

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path
