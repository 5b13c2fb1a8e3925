"""Command-line surface: flags, exit codes, outputs."""

import numpy as np

from conftest import make_cifar_bin
from inaug.cli import main
from inaug.data import decode_png


def write_run_config(tmp_path, src, out, fmt="cifar_record", extra=""):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        "version = 1\n"
        '[policy]\nfile = "standard.policy"\nmagnitudes = "cifar"\n'
        f'[source]\nkind = "cifar10"\nroot = "{src}"\n'
        f'[sink]\nroot = "{out}"\nformat = "{fmt}"\n' + extra
    )
    return cfg


def test_augment_success(tmp_path, capsys):
    src = make_cifar_bin(tmp_path / "data.bin", 4)
    cfg = write_run_config(tmp_path, src, tmp_path / "out")
    assert main(["augment", "--config", str(cfg), "--seed", "3"]) == 0
    assert "wrote 4 outputs" in capsys.readouterr().out
    assert (tmp_path / "out" / "records.bin").exists()


def test_augment_with_preset_and_overrides(tmp_path, capsys):
    src = make_cifar_bin(tmp_path / "data.bin", 2)
    cfg = tmp_path / "io.toml"
    cfg.write_text(
        f'[source]\nkind = "cifar10"\nroot = "{src}"\n'
        f'[sink]\nroot = "{tmp_path / "out"}"\nformat = "png"\n'
    )
    code = main(
        ["augment", "--config", str(cfg), "--preset", "cifar-wrn", "--epochs", "2", "--seed", "1"]
    )
    assert code == 0
    assert "wrote 4 outputs" in capsys.readouterr().out


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[policy]\nfile = 3\n")
    assert main(["augment", "--config", str(bad)]) == 1
    assert "config error" in capsys.readouterr().err
    assert main(["augment", "--preset", "no-such"]) == 1


def test_data_error_exit_code(tmp_path, capsys):
    truncated = tmp_path / "data.bin"
    truncated.write_bytes(b"\0" * 10)
    cfg = write_run_config(tmp_path, truncated, tmp_path / "out")
    assert main(["augment", "--config", str(cfg)]) == 2
    assert "data error" in capsys.readouterr().err


def test_preview_writes_grid(tmp_path, capsys):
    src = make_cifar_bin(tmp_path / "data.bin", 3)
    cfg = write_run_config(tmp_path, src, tmp_path / "out", extra="[preview]\nrows = 2\ncols = 3\n")
    out = tmp_path / "grid.png"
    assert main(["preview", "--config", str(cfg), "--out", str(out)]) == 0
    grid = decode_png(out.read_bytes())
    assert grid.width == 3 * 34 and grid.height == 2 * 34


def test_bench_prints_report(tmp_path, capsys):
    src = make_cifar_bin(tmp_path / "data.bin", 4)
    cfg = write_run_config(
        tmp_path, src, tmp_path / "out", extra="[bench]\nduration = 0.05\n"
    )
    assert main(["bench", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("inaug-bench 1")
    assert "images_per_sec:" in out


def test_ood_gen(tmp_path, capsys):
    src = make_cifar_bin(tmp_path / "data.bin", 2)
    cfg = write_run_config(
        tmp_path,
        src,
        tmp_path / "ood",
        fmt="png",
        extra="[ood]\npad = 4\ntarget = [32, 32]\n",
    )
    assert main(["ood-gen", "--config", str(cfg)]) == 0
    assert "wrote 2 padded images" in capsys.readouterr().out
    assert (tmp_path / "ood" / "manifest.tsv").exists()


def test_ood_gen_without_section_fails(tmp_path, capsys):
    src = make_cifar_bin(tmp_path / "data.bin", 1)
    cfg = write_run_config(tmp_path, src, tmp_path / "ood")
    assert main(["ood-gen", "--config", str(cfg)]) == 1
