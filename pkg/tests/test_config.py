import pytest

from skelhar.config import ConfigError, load_config, parse_config

BASE = """
[corpus]
synthetic = yes
subjects = 3

[run]
seed = 11
methods = knn, gwr
modes = none; centre_mirror
"""


def test_parse_defaults_and_lists():
    cfg = parse_config(BASE, env={})
    assert cfg.seed == 11
    assert cfg.methods == ("knn", "gwr")
    assert cfg.modes == ("none", "centre_mirror")
    assert cfg.synthetic.subjects == 3 and cfg.synthetic.classes == 3
    assert cfg.scene_policy == "per_scene" and cfg.jobs == 1
    assert cfg.hierarchy.gwr.max_nodes == 1000 and cfg.hierarchy.gwr.gamma == 4.0


def test_seed_is_mandatory():
    with pytest.raises(ConfigError, match="seed"):
        parse_config("[corpus]\nsynthetic = yes\n", env={})


def test_exactly_one_corpus_source():
    with pytest.raises(ConfigError):
        parse_config("[run]\nseed = 1\n", env={})
    with pytest.raises(ConfigError):
        parse_config("[corpus]\nsynthetic = yes\npath = /x\n[run]\nseed = 1\n", env={})


def test_env_and_cli_overrides():
    env = {"SKELHAR_RUN_SEED": "3", "SKELHAR_GWR_MAX_NODES": "none", "SKELHAR_GWR_GAMMA": "off", "HOME": "/root"}
    cfg = parse_config(BASE, env=env)
    assert cfg.seed == 3
    assert cfg.hierarchy.gwr.max_nodes is None and cfg.hierarchy.gwr.gamma is None
    cfg = parse_config(BASE, env=env, overrides={("run", "seed"): 9, ("run", "out"): None})
    assert cfg.seed == 9 and cfg.out == "results"


@pytest.mark.parametrize(
    "key, value",
    [("methods", "lda"), ("modes", "rotate"), ("scene_policy", "rooms"), ("jobs", "0"), ("colour", "blue")],
)
def test_bad_run_values(key, value):
    with pytest.raises(ConfigError):
        parse_config(BASE, env={}, overrides={("run", key): value})


@pytest.mark.parametrize(
    "extra",
    ["[gwr]\neps_b = fast\n", "[gwr]\nwobble = 1\n", "[knn]\nk = 0\n", "[hierarchy]\nclassify_at = l2\n", "[plots]\nx = 1\n"],
)
def test_bad_sections_are_config_errors(extra):
    with pytest.raises(ConfigError):
        parse_config(BASE + extra, env={})


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini", env={})


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.ini")):
        cfg = load_config(path, env={})
        assert cfg.methods and cfg.modes
