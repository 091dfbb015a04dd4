"""Confusion matrices, precision/recall and the leave-one-subject-out driver.

Accuracy aggregation: per (scene, subject) accuracy is trace / total poses;
a scene's accuracy is the mean over subjects; a method's accuracy is the
mean over scenes.  Under the all-actions policy there is a single scene
called ``"all"``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .baselines import KnnModel, KnnParams, SvmParams, knn_predict_many, svm_predict_many, svm_train
from .dataset import LABELS, SCENES, Corpus, scene_labels, scene_subset, split_loso
from .hierarchy import HierarchyConfig, TooShortRecordingError, classify, train_hierarchy
from .precondition import PoseSequence, PreconditionMode, apply_preconditioning, stack

log = logging.getLogger(__name__)

METHODS = ("svm", "knn", "gng", "gwr")
ALL_ACTIONS = "all"


class UnknownLabelError(KeyError):
    pass


class EmptyMatrixError(ValueError):
    pass


class ConfusionMatrix:
    """Rows are true classes, columns predicted, both in ``classes`` order."""

    def __init__(self, classes: Sequence[int], counts=None):
        self.classes = tuple(int(c) for c in classes)
        self._pos = {c: i for i, c in enumerate(self.classes)}
        n = len(self.classes)
        self.counts = np.zeros((n, n), dtype=np.int64) if counts is None else np.array(counts, dtype=np.int64)
        if self.counts.shape != (n, n):
            raise ValueError("counts must be square and match the class list")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    def _index(self, label) -> int:
        try:
            return self._pos[int(label)]
        except KeyError:
            raise UnknownLabelError(f"label {label} not in {self.classes}") from None

    def add(self, true, predicted, n: int = 1):
        self.counts[self._index(true), self._index(predicted)] += n
        return self

    def add_many(self, true, predicted):
        t = np.array([self._index(v) for v in np.asarray(true).ravel()], dtype=np.int64)
        p = np.array([self._index(v) for v in np.asarray(predicted).ravel()], dtype=np.int64)
        if len(t) != len(p):
            raise ValueError("true and predicted lengths differ")
        np.add.at(self.counts, (t, p), 1)
        return self

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.classes != self.classes:
            raise ValueError("cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.classes, self.counts + other.counts)

    def copy(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.classes, self.counts.copy())


def accumulate(confusion: ConfusionMatrix, true, predicted) -> ConfusionMatrix:
    return confusion.add(true, predicted)


def accuracy(confusion: ConfusionMatrix) -> float:
    if confusion.total == 0:
        raise EmptyMatrixError("accuracy of an empty confusion matrix")
    return confusion.trace / confusion.total


def accuracy_exact(confusion: ConfusionMatrix) -> Fraction:
    if confusion.total == 0:
        raise EmptyMatrixError("accuracy of an empty confusion matrix")
    return Fraction(confusion.trace, confusion.total)


def precision_recall(confusion: ConfusionMatrix) -> dict[int, tuple[Optional[float], Optional[float]]]:
    """Per class (precision, recall); ``None`` where the denominator is zero."""
    diag = np.diag(confusion.counts)
    col = confusion.counts.sum(axis=0)
    row = confusion.counts.sum(axis=1)
    out = {}
    for i, c in enumerate(confusion.classes):
        p = diag[i] / col[i] if col[i] else None
        r = diag[i] / row[i] if row[i] else None
        out[c] = (None if p is None else float(p), None if r is None else float(r))
    return out


@dataclass
class SceneSubjectResult:
    method: str
    mode: str
    scene: str
    subject: int
    confusion: ConfusionMatrix

    @property
    def accuracy(self) -> float:
        return accuracy(self.confusion)


@dataclass
class ClassStats:
    label: int
    precision_mean: Optional[float]
    precision_std: Optional[float]
    recall_mean: Optional[float]
    recall_std: Optional[float]


@dataclass
class AggregateReport:
    method: str
    mode: str
    scene_policy: str
    scene_accuracy: dict[str, float]
    accuracy: float
    pooled: dict[str, ConfusionMatrix]
    class_stats: dict[str, list[ClassStats]]
    scene_average: dict[str, tuple]  # scene -> (p_mean, p_std, r_mean, r_std)
    global_average: tuple
    n_participants: int
    n_scenes: int

    @property
    def pooled_accuracy(self) -> float:
        total = sum((m.trace for m in self.pooled.values()))
        n = sum((m.total for m in self.pooled.values()))
        return total / n if n else float("nan")


@dataclass
class ExperimentResult:
    report: AggregateReport
    results: list[SceneSubjectResult] = field(default_factory=list)


def _mean_std(values: list[float]) -> tuple[Optional[float], Optional[float]]:
    if not values:
        return None, None
    arr = np.array(values, dtype=float)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else None
    return float(arr.mean()), std


def aggregate(results: Sequence[SceneSubjectResult], method: str = "", mode: str = "", scene_policy: str = "") -> AggregateReport:
    """Combine per-(scene, subject) confusions into the accuracy/precision/recall report."""
    scenes = []
    for r in results:
        if r.scene not in scenes:
            scenes.append(r.scene)
    order = {s: i for i, s in enumerate(SCENES + (ALL_ACTIONS,))}
    scenes.sort(key=lambda s: order.get(s, len(order)))

    scene_acc, pooled, class_stats, scene_avg = {}, {}, {}, {}
    all_p, all_r = [], []
    for scene in scenes:
        rs = [r for r in results if r.scene == scene and r.confusion.total > 0]
        if not rs:
            continue
        scene_acc[scene] = float(np.mean([r.accuracy for r in rs]))
        pooled_m = rs[0].confusion.copy()
        for r in rs[1:]:
            pooled_m = pooled_m + r.confusion
        pooled[scene] = pooled_m

        per_subject = [precision_recall(r.confusion) for r in rs]
        stats, sp, sr = [], [], []
        for c in rs[0].confusion.classes:
            ps = [pr[c][0] for pr in per_subject if pr[c][0] is not None]
            rcs = [pr[c][1] for pr in per_subject if pr[c][1] is not None]
            if not ps and not rcs:
                continue
            stats.append(ClassStats(c, *_mean_std(ps), *_mean_std(rcs)))
            sp += ps
            sr += rcs
        class_stats[scene] = stats
        scene_avg[scene] = _mean_std(sp) + _mean_std(sr)
        all_p += sp
        all_r += sr

    if not scene_acc:
        raise EmptyMatrixError("no scene produced any classified pose")
    return AggregateReport(
        method=method,
        mode=mode,
        scene_policy=scene_policy,
        scene_accuracy=scene_acc,
        accuracy=float(np.mean(list(scene_acc.values()))),
        pooled=pooled,
        class_stats=class_stats,
        scene_average=scene_avg,
        global_average=_mean_std(all_p) + _mean_std(all_r),
        n_participants=len({r.subject for r in results}),
        n_scenes=len(scene_acc),
    )


def aggregate_exact(per_scene_accuracies: dict[str, Sequence]) -> Fraction:
    """Mean over scenes of the mean over subjects, in exact rational arithmetic."""
    scene_means = [sum(map(Fraction, accs), Fraction(0)) / len(accs) for accs in per_scene_accuracies.values()]
    return sum(scene_means, Fraction(0)) / len(scene_means)


# ---------------------------------------------------------------------------
# methods


@dataclass
class MethodSpec:
    name: str
    knn: KnnParams = field(default_factory=KnnParams)
    svm: SvmParams = field(default_factory=SvmParams)
    hierarchy: HierarchyConfig = field(default_factory=HierarchyConfig)

    def __post_init__(self):
        if self.name not in METHODS:
            raise ValueError(f"unknown method {self.name!r}; choose from {METHODS}")


def _seed_for(seed: int, *parts: int) -> int:
    return int(np.random.SeedSequence([seed, *parts]).generate_state(1)[0])


def fit_predict(method: MethodSpec, train: list[PoseSequence], test: list[PoseSequence], seed: int):
    """Train on ``train`` and return (true, predicted) per-step label arrays for ``test``."""
    X, y = stack(train)
    true_parts, pred_parts = [], []
    if method.name == "knn":
        model = KnnModel(X, y, min(method.knn.k, len(X)))
        for s in test:
            true_parts.append(np.full(len(s), s.label))
            pred_parts.append(knn_predict_many(model, s.vectors))
    elif method.name == "svm":
        model = svm_train(X, y, method.svm.lam, method.svm.epochs, seed, method.svm.standardize)
        for s in test:
            true_parts.append(np.full(len(s), s.label))
            pred_parts.append(svm_predict_many(model, s.vectors))
    else:
        cfg = method.hierarchy
        cfg = HierarchyConfig(method.name, cfg.gwr, cfg.gng, cfg.classify_at, cfg.train_upper_layers)
        model = train_hierarchy(train, cfg, seed)
        for s in test:
            try:
                steps, _ = classify(model, s.vectors)
            except TooShortRecordingError:
                log.info("recording %s too short for %s, skipped", s.recording_id, cfg.classify_at)
                continue
            true_parts.append(np.full(len(steps), s.label))
            pred_parts.append(steps)
    if not true_parts:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(true_parts), np.concatenate(pred_parts)


def fold_units(corpus: Corpus, scene_policy: str) -> list[tuple[str, int]]:
    scenes = [ALL_ACTIONS] if scene_policy == "all_actions" else list(SCENES)
    return [(scene, subject) for scene in scenes for subject in corpus.subjects]


def run_fold(corpus: Corpus, method: MethodSpec, mode, scene: str, subject: int, seed: int, include_optional: bool = False) -> Optional[SceneSubjectResult]:
    mode = PreconditionMode(mode)
    if scene == ALL_ACTIONS:
        classes = tuple(range(len(LABELS)))
        data = corpus
    else:
        classes = scene_labels(scene, include_optional)
        data = scene_subset(corpus, scene, include_optional)
    if subject not in data.subjects:
        log.info("no test data for subject %s in scene %s", subject, scene)
        return None
    split = split_loso(data, subject)
    if len(split.train) == 0:
        log.info("no training data for scene %s without subject %s", scene, subject)
        return None
    if method.name == "svm" and len(split.train.labels) < 2:
        log.info("scene %s fold %s has a single training class; SVM skipped", scene, subject)
        return None
    train = apply_preconditioning(split.train, mode, "train")
    test = apply_preconditioning(split.test, mode, "test")
    fold_seed = _seed_for(seed, METHODS.index(method.name), list(PreconditionMode).index(mode), (SCENES + (ALL_ACTIONS,)).index(scene), subject)
    true, pred = fit_predict(method, train, test, fold_seed)
    if len(true) == 0:
        log.info("scene %s subject %s produced no evaluable poses", scene, subject)
        return None
    cm = ConfusionMatrix(classes)
    cm.add_many(true, pred)
    return SceneSubjectResult(method.name, mode.value, scene, subject, cm)


def run_loso_experiment(
    corpus: Corpus,
    method: MethodSpec,
    mode,
    scene_policy: str = "per_scene",
    seed: int = 0,
    include_optional: bool = False,
) -> ExperimentResult:
    if scene_policy not in ("per_scene", "all_actions"):
        raise ValueError("scene_policy must be 'per_scene' or 'all_actions'")
    if len(corpus.subjects) < 2:
        raise ValueError("leave-one-subject-out needs at least two subjects")
    mode = PreconditionMode(mode)
    results = []
    for scene, subject in fold_units(corpus, scene_policy):
        r = run_fold(corpus, method, mode, scene, subject, seed, include_optional)
        if r is not None:
            results.append(r)
    return ExperimentResult(aggregate(results, method.name, mode.value, scene_policy), results)
