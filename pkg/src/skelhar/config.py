"""Experiment configuration read from INI-style ``key = value`` files.

Every key has a default except ``run.seed`` and the corpus source.  Any key
can be overridden from the environment as ``SKELHAR_<SECTION>_<KEY>``, e.g.
``SKELHAR_RUN_SEED=3`` or ``SKELHAR_GWR_MAX_NODES=200``.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .baselines import KnnParams, SvmParams
from .evaluation import METHODS, MethodSpec
from .gas import GngParams, GwrParams
from .hierarchy import HierarchyConfig
from .precondition import PreconditionMode

ENV_PREFIX = "SKELHAR_"


class ConfigError(ValueError):
    pass


@dataclass
class SyntheticSpec:
    seed: int = 7
    subjects: int = 4
    classes: int = 3
    frames_per_recording: int = 60


@dataclass
class ExperimentConfig:
    seed: int
    corpus_path: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    methods: tuple[str, ...] = ("knn",)
    modes: tuple[str, ...] = ("centre_mirror",)
    scene_policy: str = "per_scene"
    include_random_still: bool = False
    out: str = "results"
    jobs: int = 1
    svg: bool = False
    knn: KnnParams = field(default_factory=KnnParams)
    svm: SvmParams = field(default_factory=SvmParams)
    hierarchy: HierarchyConfig = field(default_factory=HierarchyConfig)

    def __post_init__(self):
        if (self.corpus_path is None) == (self.synthetic is None):
            raise ConfigError("set exactly one corpus source: [corpus] path or [corpus] synthetic = yes")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.modes:
            raise ConfigError("at least one preconditioning mode is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        for m in self.modes:
            try:
                PreconditionMode(m)
            except ValueError:
                raise ConfigError(f"unknown preconditioning mode {m!r}") from None
        if self.scene_policy not in ("per_scene", "all_actions"):
            raise ConfigError("scene_policy must be per_scene or all_actions")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def method_spec(self, name: str) -> MethodSpec:
        return MethodSpec(name, self.knn, self.svm, self.hierarchy)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "yes", "true", "on"):
        return True
    if value in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _optional_int(text: str) -> Optional[int]:
    return None if text.strip().lower() in ("none", "inf", "infinity", "") else int(text)


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("none", "off", "") else float(text)


def _list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.replace(";", ",").split(",") if p.strip())


def _coerce_dataclass(cls, section: Mapping[str, str], where: str):
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, raw in section.items():
        if key not in fields:
            raise ConfigError(f"[{where}] unknown key {key!r}")
        default = fields[key].default
        ftype = str(fields[key].type)
        try:
            if "Optional[int]" in ftype:
                kwargs[key] = _optional_int(raw)
            elif "Optional[float]" in ftype:
                kwargs[key] = _optional_float(raw)
            elif isinstance(default, bool):
                kwargs[key] = _bool(raw)
            elif isinstance(default, int):
                kwargs[key] = int(raw)
            elif isinstance(default, float):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"[{where}] {key}: {exc}") from None
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}] {exc}") from None


def _apply_env(parser: configparser.ConfigParser, env: Mapping[str, str]):
    for name, value in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX) :].lower()
        section, _, key = rest.partition("_")
        if not key:
            continue
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)


def parse_config(text: str = "", env: Optional[Mapping[str, str]] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    _apply_env(parser, os.environ if env is None else env)
    for (section, key), value in (overrides or {}).items():
        if value is None:
            continue
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))

    known = {"corpus", "run", "knn", "svm", "gwr", "gng", "hierarchy"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")

    corpus = dict(parser["corpus"]) if parser.has_section("corpus") else {}
    run = dict(parser["run"]) if parser.has_section("run") else {}
    if "seed" not in run:
        raise ConfigError("run.seed is mandatory (set it in [run] or pass --seed)")

    synthetic = None
    path = corpus.pop("path", None)
    if _bool(corpus.pop("synthetic", "no")):
        synthetic = _coerce_dataclass(SyntheticSpec, corpus, "corpus")
    elif corpus:
        raise ConfigError(f"[corpus] keys {sorted(corpus)} only apply with synthetic = yes")

    try:
        hierarchy_keys = dict(parser["hierarchy"]) if parser.has_section("hierarchy") else {}
        gwr = _coerce_dataclass(GwrParams, parser["gwr"] if parser.has_section("gwr") else {}, "gwr")
        gng = _coerce_dataclass(GngParams, parser["gng"] if parser.has_section("gng") else {}, "gng")
        hierarchy = HierarchyConfig(
            engine="gwr",
            gwr=gwr,
            gng=gng,
            classify_at=hierarchy_keys.pop("classify_at", "l1_pose").strip(),
            train_upper_layers=_bool(hierarchy_keys.pop("train_upper_layers", "no")),
        )
        if hierarchy_keys:
            raise ConfigError(f"[hierarchy] unknown keys {sorted(hierarchy_keys)}")
        cfg = ExperimentConfig(
            seed=int(run.pop("seed")),
            corpus_path=path,
            synthetic=synthetic,
            methods=_list(run.pop("methods", "knn")),
            modes=_list(run.pop("modes", "centre_mirror")),
            scene_policy=run.pop("scene_policy", "per_scene").strip(),
            include_random_still=_bool(run.pop("include_random_still", "no")),
            out=run.pop("out", "results").strip(),
            jobs=int(run.pop("jobs", "1")),
            svg=_bool(run.pop("svg", "no")),
            knn=_coerce_dataclass(KnnParams, parser["knn"] if parser.has_section("knn") else {}, "knn"),
            svm=_coerce_dataclass(SvmParams, parser["svm"] if parser.has_section("svm") else {}, "svm"),
            hierarchy=hierarchy,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if run:
        raise ConfigError(f"[run] unknown keys {sorted(run)}")
    return cfg


def load_config(path, env: Optional[Mapping[str, str]] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, env, overrides)
