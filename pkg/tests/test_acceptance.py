"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
PASS/FAIL lines.
"""

import functools
import hashlib
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from conftest import fixed_image, fixed_pixels, make_cifar_bin, make_image_dir
from inaug import (
    Dims,
    Image,
    InAugConfig,
    MagnitudeTable,
    OpKind,
    Ordering,
    Patch,
    PatchSpec,
    Rect,
    apply_kernel,
    paste_patches,
    prepare_augment_first,
    prepare_resize_first,
    scale_schedule,
)
from inaug.ops import PARAM_FREE, SIGNED
from inaug.pipeline import OodConfig, load_config, ood_pad, run_augment, run_bench
from inaug.policy import load_policy, sample_transform
from inaug.rng import derive_stream, spread_below

PRESETS = Path(__file__).parent.parent / "src/inaug/presets"
MAGS = MagnitudeTable.parse((PRESETS / "magnitudes-cifar.txt").read_text())


def criterion(name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL")
                raise
            print(f"ACCEPTANCE {name}: PASS")

        return run

    return wrap


@criterion("preset-fidelity")
def test_preset_fidelity():
    wrn = load_config(preset="cifar-wrn").inaug
    assert len(wrn.patches) == 1
    assert wrn.patches[0].size == Dims(32, 32)
    assert wrn.patches[0].resolved_scale() == 1.0  # no resize
    assert wrn.patches[0].paste_prob == 1.0
    assert wrn.ordering is Ordering.AUGMENT_FIRST

    shake = load_config(preset="cifar-shakeshake").inaug
    assert len(shake.patches) == 2
    assert all(p.size == Dims(32, 32) for p in shake.patches)
    assert shake.patches[0].resolved_scale() == 1.0
    assert shake.patches[1].resolved_scale() == 0.5
    assert all(p.paste_prob == 1.0 for p in shake.patches)

    r50 = load_config(preset="imagenet-resnet50").inaug
    assert [p.target for p in r50.patches] == [Dims(134, 134), Dims(80, 80), Dims(48, 48)]
    assert all(p.paste_prob == 0.5 for p in r50.patches)
    assert all(p.size_range is not None for p in r50.patches)
    assert r50.ordering is Ordering.RESIZE_FIRST

    b3 = load_config(preset="imagenet-effnet-b3").inaug
    assert [p.target_range for p in b3.patches] == [(150, 300), (8, 150)]
    assert all(p.paste_prob == 0.5 for p in b3.patches)
    assert b3.ordering is Ordering.RESIZE_FIRST


@criterion("multi-patch-schedule")
def test_multi_patch_schedule():
    x3 = load_config(preset="cifar-x3").inaug
    resolved = tuple(p.resolved_scale() for p in x3.patches)
    assert resolved == (1.0, 0.5, 0.25)
    assert resolved == scale_schedule(3)
    assert all(p.size == Dims(32, 32) for p in x3.patches)


def _paste_compositor_oracle(base, prepared, specs, rng):
    """Per-pixel z-order resolution; shares no code with paste_patches."""
    kept = []
    for i, spec in enumerate(specs):
        keep = rng.next_float() < spec.paste_prob
        x = rng.next_below(base.width)
        y = rng.next_below(base.height)
        if keep:
            kept.append((i, x, y, prepared[i].width * prepared[i].height))
    out = np.array(base.pixels, copy=True)
    for oy in range(base.height):
        for ox in range(base.width):
            best = None
            for i, x, y, area in kept:
                if x <= ox < x + prepared[i].width and y <= oy < y + prepared[i].height:
                    # smallest area wins; later spec order wins ties
                    key = (area, -i)
                    if best is None or key < best[0]:
                        best = (key, prepared[i].pixels[oy - y, ox - x])
            if best is not None:
                out[oy, ox] = best[1]
    return out


@criterion("paste-compositor-oracle")
def test_paste_compositor_oracle_1000_configs():
    for trial in range(1000):
        cfg_rng = derive_stream(0xAB5E, trial)
        n = cfg_rng.next_below(5)
        prepared = []
        specs = []
        for j in range(n):
            w = 1 + cfg_rng.next_below(16)
            h = 1 + cfg_rng.next_below(16)
            prepared.append(fixed_image(w, h, trial * 31 + j))
            specs.append(
                PatchSpec(
                    size=Dims(w, h),
                    paste_prob=(0.0, 0.3, 0.5, 1.0)[cfg_rng.next_below(4)],
                )
            )
        base = fixed_image(16, 16, 7000 + trial)
        rng = derive_stream(0x9A57E, trial)
        out = paste_patches(base, prepared, tuple(specs), rng.clone())
        expect = _paste_compositor_oracle(base, prepared, tuple(specs), rng.clone())
        assert np.array_equal(out.pixels, expect), f"trial {trial}"


_EXACT_KINDS = PARAM_FREE | {
    OpKind.INVERT,
    OpKind.SOLARIZE,
    OpKind.POSTERIZE,
    OpKind.CUTOUT,
    OpKind.SHEAR_X,
    OpKind.SHEAR_Y,
    OpKind.TRANSLATE_X,
    OpKind.TRANSLATE_Y,
    OpKind.ROTATE,
}

_KERNEL_ORACLES = {
    OpKind.SHEAR_X: lambda px, p, d: oracles.shear_x_o(px, d * p),
    OpKind.SHEAR_Y: lambda px, p, d: oracles.shear_y_o(px, d * p),
    OpKind.TRANSLATE_X: lambda px, p, d: oracles.translate_x_o(px, d * p),
    OpKind.TRANSLATE_Y: lambda px, p, d: oracles.translate_y_o(px, d * p),
    OpKind.ROTATE: lambda px, p, d: oracles.rotate_o(px, d * p),
    OpKind.AUTOCONTRAST: lambda px, p, d: oracles.autocontrast_o(px),
    OpKind.INVERT: lambda px, p, d: oracles.invert_o(px),
    OpKind.EQUALIZE: lambda px, p, d: oracles.equalize_o(px),
    OpKind.SOLARIZE: lambda px, p, d: oracles.solarize_o(px, p),
    OpKind.POSTERIZE: lambda px, p, d: oracles.posterize_o(px, round(p)),
    OpKind.CONTRAST: lambda px, p, d: oracles.contrast_o(px, p),
    OpKind.COLOR: lambda px, p, d: oracles.color_o(px, p),
    OpKind.BRIGHTNESS: lambda px, p, d: oracles.brightness_o(px, p),
    OpKind.SHARPNESS: lambda px, p, d: oracles.sharpness_o(px, p),
    OpKind.CUTOUT: lambda px, p, d: oracles.cutout_o(
        px,
        int(np.floor(p * min(px.shape[:2]) + 0.5)),
        int(np.floor(p * min(px.shape[:2]) + 0.5)),
        px.shape[1] // 2,
        px.shape[0] // 2,
    ),
}


@criterion("transform-oracle-suite")
def test_transform_oracle_suite():
    for kind in OpKind:
        allowed = 0 if kind in _EXACT_KINDS else 1
        for level in (0, 2, 5, 7, 9):
            param = MAGS.resolve(kind, level)
            for direction in (1, -1) if kind in SIGNED else (1,):
                for key in (3, 11):
                    px = fixed_pixels(8, 8, key * 1000 + level)
                    out = apply_kernel(Image(px), kind, param, direction)
                    expect = _KERNEL_ORACLES[kind](px, param, direction)
                    diff = np.max(np.abs(out.pixels.astype(int) - expect.astype(int)))
                    assert diff <= allowed, (
                        f"{kind.value} level={level} dir={direction}: diff {diff}"
                    )


@criterion("ordering-contract")
def test_resize_augment_ordering_contract():
    from golden_data import ORDERING_PAIR

    policy = load_policy(PRESETS / "cifar-aa.policy")
    base_img = fixed_image(32, 32, 0x0DDBA11)
    for trial in range(100):
        rng = derive_stream(0xE92, trial)
        t = sample_transform(policy, MAGS, rng)
        w = 2 + spread_below(rng.next_u64(), 30)
        h = 2 + spread_below(rng.next_u64(), 30)
        x = rng.next_below(32 - w + 1)
        y = rng.next_below(32 - h + 1)
        patch = Patch(
            Image(np.asarray(base_img.pixels)[y : y + h, x : x + w].copy()),
            Rect(x, y, w, h),
        )
        cfg = InAugConfig(
            policy=policy,
            magnitudes=MAGS,
            patches=(PatchSpec(size=Dims(w, h), scale=1.0),),
        )
        targets = [Dims(w, h)]  # S_i equals the copied dims
        a = prepare_resize_first([patch], targets, cfg, t)
        b = prepare_augment_first([patch], targets, cfg, t)
        assert a[0] == b[0], f"trial {trial}"

    # committed divergent pair: rotate then downscale vs downscale then rotate
    from inaug import InterpMode, resize, rotate

    patch_img = fixed_image(16, 16, 0xFACADE)
    rf = rotate(resize(patch_img, Dims(8, 8), InterpMode.BILINEAR), 30.0)
    af = resize(rotate(patch_img, 30.0), Dims(8, 8), InterpMode.BILINEAR)
    assert rf != af
    assert rf.tobytes().hex() == ORDERING_PAIR["resize_first"]
    assert af.tobytes().hex() == ORDERING_PAIR["augment_first"]


@criterion("drop-probability")
def test_drop_probability_statistics():
    base = Image.full(4, 4, (0, 0, 0))
    white = Image.full(1, 1, (255, 255, 255))
    specs = (PatchSpec(size=Dims(1, 1), paste_prob=0.5),)
    kept = 0
    for i in range(10_000):
        out = paste_patches(base, [white], specs, derive_stream(0xD0, i))
        kept += bool(out.pixels.any())
    assert 0.485 <= kept / 10_000 <= 0.515, kept


def _tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


@criterion("determinism-across-workers")
def test_determinism_across_workers(tmp_path):
    start = time.perf_counter()
    make_cifar_bin(tmp_path / "fixture.bin", 100, key0=900)
    digests = set()
    manifests = set()
    for workers in (1, 4, 8):
        out = tmp_path / f"out-w{workers}"
        cfg = load_config(
            preset="cifar-wrn",
            overrides={
                "source": {"kind": "cifar10", "root": str(tmp_path / "fixture.bin")},
                "sink": {"root": str(out), "format": "png"},
                "run": {"seed": 2024, "workers": workers},
            },
        )
        manifest = run_augment(cfg)
        assert len(manifest.entries) == 100
        manifests.add(manifest.to_text())
        digests.add(_tree_digest(out))
    elapsed = time.perf_counter() - start
    assert len(digests) == 1 and len(manifests) == 1
    assert elapsed < 60.0, f"took {elapsed:.1f}s"


@criterion("ood-generator")
def test_ood_generator():
    img = fixed_image(24, 24, 0x00D)
    lap_kernel = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64)

    def mean_abs_laplacian(gray, mask):
        from scipy import ndimage

        lap = ndimage.convolve(gray, lap_kernel, mode="nearest")
        return float(np.abs(lap[mask]).mean())

    for d in (64, 128, 256, 512):
        ood = OodConfig(pad=d, target=Dims(24, 24))
        padded = ood_pad(img, ood)
        assert padded.dims == Dims(24 + 2 * d, 24 + 2 * d)
        assert np.array_equal(
            padded.pixels[d : d + 24, d : d + 24], np.asarray(img.pixels)
        )
        gray = padded.pixels.astype(np.float64).mean(axis=2)
        n = padded.height
        interior = np.zeros((n, n), dtype=bool)
        interior[d + 1 : d + 23, d + 1 : d + 23] = True  # inside, off the seam
        ring = np.zeros((n, n), dtype=bool)
        ring[1 : n - 1, 1 : n - 1] = True
        ring[d - 1 : d + 25, d - 1 : d + 25] = False  # off the seam and frame
        assert mean_abs_laplacian(gray, ring) < mean_abs_laplacian(gray, interior), d


@criterion("throughput-budget")
def test_throughput_budget(tmp_path):
    make_cifar_bin(tmp_path / "bench.bin", 64, key0=100)
    cifar_cfg = load_config(
        preset="cifar-wrn",
        overrides={"source": {"kind": "cifar10", "root": str(tmp_path / "bench.bin")}},
    )
    cifar = run_bench(cifar_cfg, duration=1.5)
    print(f"  cifar-wrn: {cifar.images_per_sec:.0f} images/sec")

    root = tmp_path / "in224"
    make_image_dir(root, {"a": 6}, size=(224, 224), key0=500)
    imagenet_cfg = load_config(
        preset="imagenet-resnet50",
        overrides={"source": {"kind": "image_dir", "root": str(root)}},
    )
    imagenet = run_bench(imagenet_cfg, duration=2.0)
    print(f"  imagenet-resnet50: {imagenet.images_per_sec:.0f} images/sec")

    assert cifar.images_per_sec >= 5000, f"{cifar.images_per_sec:.0f}/s < 5000/s"
    assert imagenet.images_per_sec >= 150, f"{imagenet.images_per_sec:.0f}/s < 150/s"


@criterion("resize-first-efficiency")
def test_resize_first_is_faster_on_large_inputs(tmp_path):
    root = tmp_path / "in224"
    make_image_dir(root, {"a": 4}, size=(224, 224), key0=700)
    patches = [
        {"size_range": [192, 224], "target": [48, 48], "paste_prob": 1.0}
    ] * 3
    reports = {}
    for ordering in ("resize_first", "augment_first"):
        cfg = load_config(
            preset="imagenet-resnet50",
            overrides={
                "source": {"kind": "image_dir", "root": str(root)},
                "inaugment": {"ordering": ordering, "patch": patches},
            },
        )
        reports[ordering] = run_bench(cfg, duration=1.5)
    rf = reports["resize_first"].p50_ms
    af = reports["augment_first"].p50_ms
    print(f"  p50 resize_first={rf:.2f}ms augment_first={af:.2f}ms")
    assert rf < af
