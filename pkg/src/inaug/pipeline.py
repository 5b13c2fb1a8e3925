"""Batch pipeline: config parsing, deterministic execution, bench, preview,
and the padded out-of-distribution validation-set generator.

Every output byte is a pure function of (config, seed): work is keyed by
(epoch, image index), each image gets its own derived random stream, and
results are written in task order regardless of worker count.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .data import (
    DatasetSource,
    Manifest,
    OutputWriter,
    open_source,
)
from .image import (
    Dims,
    Image,
    InterpMode,
    PadMode,
    Rect,
    crop_clamped,
    gaussian_blur,
    pad,
    resize,
)
from .inaugment import (
    InAugConfig,
    Ordering,
    PatchSpec,
    copy_patches,
    inaugment,
    paste_patches,
    prepare_augment_first,
    prepare_resize_first,
    resolve_targets,
)
from .ops import MagnitudeTable
from .policy import apply_transform, parse_policy, sample_transform
from .rng import RngState, derive_image_rng

CONFIG_VERSION = 1

PREPROCESS_DRAWS = 3

_PRESET_DIR = Path(__file__).parent / "presets"


class ConfigError(ValueError):
    """Invalid or incomplete pipeline configuration."""


class EmptySource(ValueError):
    """The configured source yielded no images."""


@dataclass(frozen=True)
class PreprocessConfig:
    """Standard pad-crop-flip preprocessing applied before augmentation."""

    enabled: bool = False
    pad: int = 4


@dataclass(frozen=True)
class SinkConfig:
    root: Path
    format: str = "png"


@dataclass(frozen=True)
class OodConfig:
    """Padded validation-set generation: pad by D, blur the ring, re-crop.

    ``blur_sigma`` defaults to D / 8 and only applies in symmetric mode,
    where the blurred ring surrounds a byte-identical original interior.
    The evaluation preprocess center-crops ``crop_frac`` of the short side
    and resizes to ``target``.
    """

    pad: int
    mode: PadMode = PadMode.SYMMETRIC
    blur_sigma: float | None = None
    target: Dims | None = None
    crop_frac: float = 0.875

    def __post_init__(self):
        if self.pad < 0:
            raise ValueError("pad must be non-negative")
        if self.blur_sigma is not None and self.blur_sigma < 0:
            raise ValueError("blur_sigma must be non-negative")
        if not 0.0 < self.crop_frac <= 1.0:
            raise ValueError("crop_frac must be in (0, 1]")

    @property
    def effective_sigma(self) -> float:
        return self.pad / 8.0 if self.blur_sigma is None else self.blur_sigma


@dataclass(frozen=True)
class PipelineConfig:
    inaug: InAugConfig
    preprocess: PreprocessConfig = PreprocessConfig()
    source: DatasetSource | None = None
    sink: SinkConfig | None = None
    epochs: int = 1
    seed: int = 0
    workers: int = 1
    ood: OodConfig | None = None
    preview_rows: int = 4
    preview_cols: int = 6
    bench_duration: float = 5.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def preset_names() -> list[str]:
    return sorted(p.stem for p in _PRESET_DIR.glob("*.toml"))


def preset_path(name: str) -> Path:
    p = _PRESET_DIR / f"{name}.toml"
    if not p.exists():
        raise ConfigError(f"unknown preset '{name}'; available: {', '.join(preset_names())}")
    return p


def _resolve_data_file(name: str, base_dir: Path | None) -> Path:
    """Bare names resolve to shipped preset files, paths to the filesystem."""
    if "/" not in name and "\\" not in name and (_PRESET_DIR / name).exists():
        return _PRESET_DIR / name
    p = Path(name)
    if not p.is_absolute() and base_dir is not None:
        p = base_dir / p
    if not p.exists():
        raise ConfigError(f"referenced file does not exist: {name}")
    return p


def _magnitude_table(name: str, base_dir: Path | None) -> MagnitudeTable:
    if name in ("cifar", "imagenet"):
        path = _PRESET_DIR / f"magnitudes-{name}.txt"
    else:
        path = _resolve_data_file(name, base_dir)
    try:
        return MagnitudeTable.parse(path.read_text())
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _require(table: dict, key: str, types, where: str):
    if key not in table:
        raise ConfigError(f"missing '{key}' in [{where}]")
    value = table[key]
    if not isinstance(value, types):
        raise ConfigError(f"'{key}' in [{where}] has the wrong type")
    return value


def _dims(value, where: str) -> Dims:
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ConfigError(f"{where} must be a [width, height] pair of integers")
    try:
        return Dims(value[0], value[1])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _int_range(value, where: str) -> tuple[int, int]:
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ConfigError(f"{where} must be a [lo, hi] pair of integers")
    lo, hi = value
    if lo > hi:
        lo, hi = hi, lo
    return lo, hi


def _patch_spec(table: dict, index: int) -> PatchSpec:
    where = f"inaugment.patch[{index}]"
    known = {"size", "size_range", "target", "scale", "target_range", "paste_prob"}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")
    kwargs = {}
    if "size" in table:
        kwargs["size"] = _dims(table["size"], f"{where}.size")
    if "size_range" in table:
        kwargs["size_range"] = _int_range(table["size_range"], f"{where}.size_range")
    if "target" in table:
        kwargs["target"] = _dims(table["target"], f"{where}.target")
    if "scale" in table:
        kwargs["scale"] = float(table["scale"])
    if "target_range" in table:
        kwargs["target_range"] = _int_range(table["target_range"], f"{where}.target_range")
    if "paste_prob" in table:
        kwargs["paste_prob"] = float(table["paste_prob"])
    try:
        return PatchSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def config_from_dict(doc: dict, base_dir: Path | None = None) -> PipelineConfig:
    if doc.get("version", CONFIG_VERSION) != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {doc.get('version')}")

    pol_tab = doc.get("policy")
    if pol_tab is None:
        raise ConfigError("missing [policy] section")
    policy_file = _require(pol_tab, "file", str, "policy")
    path = _resolve_data_file(policy_file, base_dir)
    policy = parse_policy(path.read_text(), name=path.stem)
    magnitudes = _magnitude_table(pol_tab.get("magnitudes", "cifar"), base_dir)
    shared_fire = bool(pol_tab.get("shared_fire", True))

    aug_tab = doc.get("inaugment", {})
    ordering_name = aug_tab.get("ordering", "augment_first")
    try:
        ordering = Ordering(ordering_name)
    except ValueError:
        raise ConfigError(f"unknown ordering '{ordering_name}'") from None
    patches = tuple(
        _patch_spec(p, i) for i, p in enumerate(aug_tab.get("patch", []))
    )
    inaug = InAugConfig(
        policy=policy,
        magnitudes=magnitudes,
        patches=patches,
        ordering=ordering,
        shared_fire=shared_fire,
    )

    pre_tab = doc.get("preprocess", {})
    preprocess = PreprocessConfig(
        enabled=bool(pre_tab.get("enabled", False)), pad=int(pre_tab.get("pad", 4))
    )
    if preprocess.pad < 0:
        raise ConfigError("preprocess.pad must be non-negative")

    source = None
    if "source" in doc:
        s = doc["source"]
        kind = _require(s, "kind", str, "source")
        root = Path(_require(s, "root", str, "source"))
        if not root.is_absolute() and base_dir is not None:
            root = base_dir / root
        try:
            source = DatasetSource(kind, root, s.get("split", "train"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    sink = None
    if "sink" in doc:
        s = doc["sink"]
        fmt = s.get("format", "png")
        if fmt not in ("png", "cifar_record"):
            raise ConfigError(f"unknown sink format '{fmt}'")
        root = Path(_require(s, "root", str, "sink"))
        if not root.is_absolute() and base_dir is not None:
            root = base_dir / root
        sink = SinkConfig(root, fmt)

    ood = None
    if "ood" in doc:
        o = doc["ood"]
        try:
            ood = OodConfig(
                pad=int(_require(o, "pad", int, "ood")),
                mode=PadMode(o.get("mode", "symmetric")),
                blur_sigma=float(o["blur_sigma"]) if "blur_sigma" in o else None,
                target=_dims(o["target"], "ood.target") if "target" in o else None,
                crop_frac=float(o.get("crop_frac", 0.875)),
            )
        except ValueError as exc:
            raise ConfigError(f"[ood]: {exc}") from exc

    run_tab = doc.get("run", {})
    preview_tab = doc.get("preview", {})
    bench_tab = doc.get("bench", {})
    try:
        return PipelineConfig(
            inaug=inaug,
            preprocess=preprocess,
            source=source,
            sink=sink,
            epochs=int(run_tab.get("epochs", 1)),
            seed=int(run_tab.get("seed", 0)),
            workers=int(run_tab.get("workers", 1)),
            ood=ood,
            preview_rows=int(preview_tab.get("rows", 4)),
            preview_cols=int(preview_tab.get("cols", 6)),
            bench_duration=float(bench_tab.get("duration", 5.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_text(text: str, base_dir: Path | None = None) -> PipelineConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    return config_from_dict(doc, base_dir)


def _deep_merge(base: dict, overlay: dict) -> dict:
    out = dict(base)
    for key, value in overlay.items():
        if key == "patch":
            # patch lists replace wholesale; merging schedules makes no sense
            out[key] = value
        elif isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(
    config_path: Path | None = None,
    preset: str | None = None,
    overrides: dict | None = None,
) -> PipelineConfig:
    """Compose preset <- config file <- overrides, later layers winning."""
    doc: dict = {}
    base_dir = None
    if preset is not None:
        doc = tomllib.loads(preset_path(preset).read_text())
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigError(f"config file does not exist: {config_path}")
        try:
            overlay = tomllib.loads(config_path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{config_path}: {exc}") from exc
        doc = _deep_merge(doc, overlay)
        base_dir = config_path.parent.resolve()
    if overrides:
        doc = _deep_merge(doc, overrides)
    return config_from_dict(doc, base_dir)


def standard_preprocess(img: Image, pad_px: int, rng: RngState) -> Image:
    """Zero-pad, random crop back to the original size, random h-flip.

    Consumes exactly PREPROCESS_DRAWS draws: crop x, crop y, flip coin.
    Implemented as one gather: the crop window at (x, y) in the padded
    frame reads source pixels offset by (x - pad, y - pad), zeros outside.
    """
    x = rng.next_below(2 * pad_px + 1)
    y = rng.next_below(2 * pad_px + 1)
    flip = rng.next_float() < 0.5
    if pad_px == 0:
        return Image._wrap(img.pixels[:, ::-1].copy()) if flip else img
    w, h = img.width, img.height
    px = img.pixels
    ox = x - pad_px
    oy = y - pad_px
    out = np.zeros_like(px)
    dest = out[:, ::-1] if flip else out
    sx0, sy0 = max(0, ox), max(0, oy)
    sx1, sy1 = min(w, ox + w), min(h, oy + h)
    if sx1 > sx0 and sy1 > sy0:
        dest[sy0 - oy : sy1 - oy, sx0 - ox : sx1 - ox] = px[sy0:sy1, sx0:sx1]
    return Image._wrap(out)


def augment_image(
    img: Image, cfg: PipelineConfig, seed: int, epoch: int, index: int
) -> Image:
    """The per-image path shared by the runner, preview, and buffer API."""
    rng = derive_image_rng(seed, epoch, index)
    if cfg.preprocess.enabled:
        img = standard_preprocess(img, cfg.preprocess.pad, rng)
    return inaugment(img, cfg.inaug, rng)


# Worker globals for the process pool; set once per worker via initializer.
_WORKER_CFG: PipelineConfig | None = None


def _pool_init(cfg: PipelineConfig):
    global _WORKER_CFG
    _WORKER_CFG = cfg


def _augment_task(task):
    # Tasks carry raw pixel bytes, not objects: cheap to pickle either way.
    epoch, index, source_id, label, width, height, pixels = task
    cfg = _WORKER_CFG
    img = Image.from_bytes(width, height, pixels)
    out = augment_image(img, cfg, cfg.seed, epoch, index)
    fmt = cfg.sink.format if cfg.sink else "png"
    if fmt == "png":
        from .data import encode_png

        payload = encode_png(out)
    else:
        from .data import encode_cifar_record

        payload = encode_cifar_record(out, label)
    key = derive_image_rng(cfg.seed, epoch, index).key
    return epoch, index, source_id, label, payload, f"{key:016x}"


def run_augment(cfg: PipelineConfig) -> Manifest:
    """Augment every (epoch, image) pair and write outputs plus a manifest.

    The output byte stream is identical for every worker count: tasks are
    keyed by (epoch, index), and the parent writes results in task order.
    """
    if cfg.source is None:
        raise ConfigError("run_augment needs a [source] section")
    if cfg.sink is None:
        raise ConfigError("run_augment needs a [sink] section")
    manifest = Manifest()

    def on_skip(path, exc):
        manifest.skipped += 1

    def tasks():
        for epoch in range(cfg.epochs):
            for index, limg in enumerate(open_source(cfg.source, on_skip=on_skip)):
                img = limg.image
                yield (
                    epoch,
                    index,
                    limg.source_id,
                    limg.label,
                    img.width,
                    img.height,
                    img.tobytes(),
                )

    with OutputWriter(cfg.sink.root, cfg.sink.format) as writer:
        if cfg.workers == 1:
            _pool_init(cfg)
            results = map(_augment_task, tasks())
            for epoch, index, source_id, label, payload, key in results:
                path = writer.write_encoded(payload, source_id, label, epoch)
                manifest.add(source_id, label, path, key)
        else:
            ctx = get_context("fork" if sys.platform != "win32" else "spawn")
            with ctx.Pool(cfg.workers, initializer=_pool_init, initargs=(cfg,)) as pool:
                for epoch, index, source_id, label, payload, key in pool.imap(
                    _augment_task, tasks(), chunksize=32
                ):
                    path = writer.write_encoded(payload, source_id, label, epoch)
                    manifest.add(source_id, label, path, key)
        manifest.save(Path(cfg.sink.root) / "manifest.tsv")
    return manifest


_BENCH_STAGES = ("preprocess", "sample", "copy", "prepare", "base_augment", "paste")


@dataclass
class BenchReport:
    """Throughput measurement; structure is stable, numbers are not."""

    images_per_sec: float = 0.0
    samples: int = 0
    elapsed_s: float = 0.0
    p50_ms: float = 0.0
    p99_ms: float = 0.0
    stage_ms: dict = field(default_factory=lambda: {s: 0.0 for s in _BENCH_STAGES})

    def to_text(self) -> str:
        lines = [
            "inaug-bench 1",
            f"images_per_sec: {self.images_per_sec:.1f}",
            f"samples: {self.samples}",
            f"elapsed_s: {self.elapsed_s:.3f}",
            f"p50_ms: {self.p50_ms:.3f}",
            f"p99_ms: {self.p99_ms:.3f}",
        ]
        lines += [f"stage_ms.{name}: {self.stage_ms[name]:.3f}" for name in _BENCH_STAGES]
        return "\n".join(lines) + "\n"


def _augment_image_staged(img: Image, cfg: PipelineConfig, rng: RngState, acc: dict) -> Image:
    """augment_image with per-stage timing; same ops in the same order."""
    clock = time.perf_counter
    t0 = clock()
    if cfg.preprocess.enabled:
        img = standard_preprocess(img, cfg.preprocess.pad, rng)
    t1 = clock()
    acc["preprocess"] += t1 - t0
    ia = cfg.inaug
    t = sample_transform(ia.policy, ia.magnitudes, rng)
    t2 = clock()
    acc["sample"] += t2 - t1
    patches = copy_patches(img, ia, rng)
    targets = resolve_targets(patches, ia, rng)
    t3 = clock()
    acc["copy"] += t3 - t2
    prepare = prepare_resize_first if ia.ordering is Ordering.RESIZE_FIRST else prepare_augment_first
    if ia.shared_fire:
        prepared = prepare(patches, targets, ia, t)
    else:
        from .policy import resample_fired

        prepared = []
        for patch, target in zip(patches, targets):
            prepared.extend(prepare([patch], [target], ia, resample_fired(ia.policy, t, rng)))
    t4 = clock()
    acc["prepare"] += t4 - t3
    base = apply_transform(img, t, ia.policy)
    t5 = clock()
    acc["base_augment"] += t5 - t4
    out = paste_patches(base, prepared, ia.patches, rng)
    acc["paste"] += clock() - t5
    return out


def run_bench(cfg: PipelineConfig, duration: float) -> BenchReport:
    """Measure single-threaded steady-state augmentation throughput.

    The corpus is preloaded so decode and write time are excluded; the
    report covers the in-memory augmentation path only.
    """
    if duration <= 0:
        return BenchReport()
    if cfg.source is None:
        raise ConfigError("run_bench needs a [source] section")
    corpus = []
    for limg in open_source(cfg.source):
        corpus.append(limg.image)
        if len(corpus) >= 256:
            break
    if not corpus:
        raise EmptySource(f"no images under {cfg.source.root}")

    acc = {s: 0.0 for s in _BENCH_STAGES}
    for i in range(min(3, len(corpus))):  # warmup
        _augment_image_staged(corpus[i], cfg, derive_image_rng(cfg.seed, 0, i), dict(acc))

    totals = []
    clock = time.perf_counter
    start = clock()
    i = 0
    while True:
        img = corpus[i % len(corpus)]
        rng = derive_image_rng(cfg.seed, 1, i)
        t0 = clock()
        _augment_image_staged(img, cfg, rng, acc)
        t1 = clock()
        totals.append(t1 - t0)
        i += 1
        if t1 - start >= duration:
            break
    elapsed = clock() - start
    totals_ms = np.asarray(totals) * 1e3
    return BenchReport(
        images_per_sec=len(totals) / elapsed,
        samples=len(totals),
        elapsed_s=elapsed,
        p50_ms=float(np.percentile(totals_ms, 50)),
        p99_ms=float(np.percentile(totals_ms, 99)),
        stage_ms={name: value * 1e3 / len(totals) for name, value in acc.items()},
    )


_GUTTER = 2
_GUTTER_RGB = (40, 40, 40)


def run_preview(cfg: PipelineConfig, rows: int, cols: int) -> Image:
    """Grid of augmented samples; column 0 holds the unaugmented originals.

    Cell (r, c >= 1) shows image r augmented with the stream for
    (seed, epoch=c-1, index=r); the whole grid is deterministic.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if cfg.source is None:
        raise ConfigError("run_preview needs a [source] section")
    originals = []
    for limg in open_source(cfg.source):
        originals.append(limg.image)
        if len(originals) >= rows:
            break
    if not originals:
        raise EmptySource(f"no images under {cfg.source.root}")
    cell = originals[0].dims
    canvas = np.empty(
        (rows * (cell.h + _GUTTER), cols * (cell.w + _GUTTER), 3), dtype=np.uint8
    )
    canvas[:] = _GUTTER_RGB
    for r in range(rows):
        original = resize(originals[r % len(originals)], cell, InterpMode.BILINEAR)
        for c in range(cols):
            shown = (
                original
                if c == 0
                else augment_image(original, cfg, cfg.seed, c - 1, r)
            )
            y0 = r * (cell.h + _GUTTER)
            x0 = c * (cell.w + _GUTTER)
            canvas[y0 : y0 + cell.h, x0 : x0 + cell.w] = shown.pixels
    return Image._wrap(canvas)


def ood_pad(img: Image, ood: OodConfig) -> Image:
    """Pad per the mode; in symmetric mode blur only the padded ring.

    The ring blur is implemented by blurring the whole padded image and
    restoring the central window, so the original pixels survive
    byte-identically and the ring stays seam-free.
    """
    if ood.pad == 0:
        return img
    padded = pad(img, ood.pad, ood.mode)
    if ood.mode is PadMode.SYMMETRIC and ood.effective_sigma > 0:
        blurred = gaussian_blur(padded, ood.effective_sigma)
        px = blurred.pixels.copy()
        px[ood.pad : ood.pad + img.height, ood.pad : ood.pad + img.width] = img.pixels
        return Image._wrap(px)
    return padded


def ood_eval_preprocess(img: Image, ood: OodConfig) -> Image:
    """Standard evaluation preprocess: center crop then resize to target."""
    target = ood.target if ood.target is not None else img.dims
    side = max(1, math.floor(ood.crop_frac * min(img.width, img.height) + 0.5))
    x0 = (img.width - side) // 2
    y0 = (img.height - side) // 2
    cropped = crop_clamped(img, Rect(x0, y0, side, side))
    return resize(cropped, target, InterpMode.BILINEAR)


def ood_transform(img: Image, ood: OodConfig) -> Image:
    return ood_eval_preprocess(ood_pad(img, ood), ood)


def run_ood_gen(src: DatasetSource, ood: OodConfig, sink: SinkConfig) -> Manifest:
    """Generate the padded evaluation set; deterministic, no randomness."""
    manifest = Manifest()

    def on_skip(path, exc):
        manifest.skipped += 1

    with OutputWriter(sink.root, sink.format) as writer:
        for limg in open_source(src, on_skip=on_skip):
            out = ood_transform(limg.image, ood)
            path = writer.write(out, limg.source_id, limg.label, 0)
            manifest.add(limg.source_id, limg.label, path, "-")
        manifest.save(Path(sink.root) / "manifest.tsv")
    return manifest
