import json
import subprocess
import sys

import pytest

from skelhar.cli import EXIT_CONFIG, EXIT_DATA, main

CONFIG = """
[corpus]
synthetic = yes
frames_per_recording = 24

[run]
seed = 2
methods = knn, gng
modes = none, centre_mirror

[gng]
max_nodes = 30
epochs = 1
"""


def run_cli(*args):
    return main([str(a) for a in args])


def test_run_grid_writes_reports(tmp_path, capsys):
    cfg = tmp_path / "grid.ini"
    cfg.write_text(CONFIG)
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "a") == 0
    grid = (tmp_path / "a" / "grid.csv").read_text().splitlines()
    assert grid[0] == "preconditioning,KNN,GNG"
    cells = [float(v) for row in grid[1:] for v in row.split(",")[1:]]
    assert len(cells) == 4 and all(0 <= v <= 100 for v in cells)
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 2 and manifest["config"]["methods"] == ["knn", "gng"]
    assert {"versions", "wall_time_s", "argv"} <= set(manifest)
    for name in ("results.csv", "scenes_knn_none.csv", "confusion_gng_centre_mirror_bathroom.csv", "report_knn_none.json"):
        assert (tmp_path / "a" / name).exists()
    assert "reports written" in capsys.readouterr().out


def test_run_is_byte_reproducible(tmp_path):
    cfg = tmp_path / "grid.ini"
    cfg.write_text(CONFIG)
    run_cli("run", "--config", cfg, "--out", tmp_path / "a")
    run_cli("run", "--config", cfg, "--out", tmp_path / "b", "--jobs", 2)
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.suffix in (".csv", ".json") and p.name != "manifest.json")
    assert names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_seed_flag_overrides_config(tmp_path):
    cfg = tmp_path / "grid.ini"
    cfg.write_text(CONFIG)
    run_cli("run", "--config", cfg, "--out", tmp_path / "a", "--seed", 99)
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seed"] == 99


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[corpus]\nsynthetic = yes\n")
    assert run_cli("run", "--config", cfg) == EXIT_CONFIG
    assert run_cli("run", "--config", tmp_path / "missing.ini") == EXIT_CONFIG
    assert "seed" in capsys.readouterr().err


def test_data_error_exit_code(tmp_path):
    cfg = tmp_path / "grid.ini"
    cfg.write_text(f"[corpus]\npath = {tmp_path / 'nowhere'}\n[run]\nseed = 1\n")
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "o") == EXIT_DATA


def test_synth_then_inspect(tmp_path, capsys):
    assert run_cli("synth", "--out", tmp_path / "c", "--seed", 7, "--subjects", 4, "--classes", 3, "--frames", 60) == 0
    capsys.readouterr()
    assert run_cli("inspect", tmp_path / "c") == 0
    out = capsys.readouterr().out
    assert "subjects:   4" in out and "labels:     3" in out and "frames:     720" in out


def test_synth_bad_counts(tmp_path):
    assert run_cli("synth", "--out", tmp_path, "--subjects", 9) == EXIT_CONFIG


def test_inspect_empty_directory(tmp_path):
    assert run_cli("inspect", tmp_path) == EXIT_DATA
    assert run_cli("inspect", tmp_path / "absent") == EXIT_DATA


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "skelhar", "inspect", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == EXIT_DATA
    assert "data error" in proc.stderr


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
