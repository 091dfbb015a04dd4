"""Two-branch (pose / velocity) gas hierarchy with a combined third layer.

Layer layout, for a recording of n frames (0-based frame t):

* pose_l1  on pose vectors p(t)                                  dim 45
* pose_l2  on windows of 3 remapped poses ending at t            dim 135
* vel_l1   on v(t) = p(t) - p(t-1), t >= 1                       dim 45
* vel_l2   on windows of 3 remapped velocities ending at t       dim 135
* combined_l3 on [pose_l2(t), vel_l2(t)] taken at t-6, t-3, t    dim 810

Layer 3 therefore sees the 9 pose frames t-8..t (plus frame t-9 through the
first velocity), and needs recordings of at least ``MIN_L3_FRAMES`` frames.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import neighbors
from .gas import GasGraph, GngParams, GwrParams, params_from_json, quantize_many, train_gas
from .precondition import DIM, PoseSequence, compute_velocities, sliding_windows

WINDOW = 3
RECEPTIVE_FIELD = WINDOW * WINDOW
MIN_L3_FRAMES = RECEPTIVE_FIELD + 1
LAYERS = ("pose_l1", "pose_l2", "vel_l1", "vel_l2", "combined_l3")


class TooShortRecordingError(ValueError):
    pass


class EmptyTrainingError(ValueError):
    pass


@dataclass
class LayerSpec:
    engine: str
    params: object
    window: int = 1

    def __post_init__(self):
        if self.engine not in ("gwr", "gng"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.window not in (1, 3):
            raise ValueError("window must be 1 or 3")


@dataclass
class HierarchyConfig:
    engine: str = "gwr"
    gwr: GwrParams = field(default_factory=GwrParams)
    gng: GngParams = field(default_factory=GngParams)
    classify_at: str = "l1_pose"
    # build layers 2-3 even when classifying at layer 1 (costly, unused for prediction)
    train_upper_layers: bool = False

    def __post_init__(self):
        if self.engine not in ("gwr", "gng"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.classify_at not in ("l1_pose", "l3_combined"):
            raise ValueError("classify_at must be 'l1_pose' or 'l3_combined'")

    def layer_specs(self) -> dict[str, LayerSpec]:
        params = self.gwr if self.engine == "gwr" else self.gng
        return {
            name: LayerSpec(self.engine, params, 1 if name.endswith("l1") else WINDOW) for name in LAYERS
        }


@dataclass
class HierarchyModel:
    layers: dict[str, Optional[GasGraph]]
    prototype_labels: dict[int, int]
    classify_at: str
    specs: dict[str, LayerSpec] = field(default_factory=dict)

    @property
    def classifier_layer(self) -> str:
        return "pose_l1" if self.classify_at == "l1_pose" else "combined_l3"

    @property
    def min_frames(self) -> int:
        return 1 if self.classify_at == "l1_pose" else MIN_L3_FRAMES

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, graph in self.layers.items():
            if graph is not None:
                params = self.specs[name].params if name in self.specs else None
                (directory / f"{name}.json").write_text(graph.dumps(params) + "\n")
        manifest = {
            "classify_at": self.classify_at,
            "layers": [n for n, g in self.layers.items() if g is not None],
            "specs": {n: {"engine": s.engine, "window": s.window, "params": asdict(s.params)} for n, s in self.specs.items()},
            "labels": {str(k): v for k, v in sorted(self.prototype_labels.items())},
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    @classmethod
    def load(cls, directory) -> "HierarchyModel":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        layers = {name: None for name in LAYERS}
        for name in manifest["layers"]:
            layers[name] = GasGraph.from_json(json.loads((directory / f"{name}.json").read_text()))
        specs = {
            n: LayerSpec(s["engine"], params_from_json({"engine": s["engine"], **s["params"]}), s["window"])
            for n, s in manifest["specs"].items()
        }
        labels = {int(k): int(v) for k, v in manifest["labels"].items()}
        return cls(layers, labels, manifest["classify_at"], specs)


def remap_sequence(graph: GasGraph, vectors) -> np.ndarray:
    """Replace every vector by the weight of its best-matching node."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2:
        raise ValueError("expected a 2-D array of vectors")
    if len(vectors) == 0:
        return np.zeros((0, graph.dimension))
    ids, _ = quantize_many(graph, vectors)
    return graph.weights[[graph.slot(int(i)) for i in ids]]


def label_prototypes(graph: GasGraph, vectors, labels) -> dict[int, int]:
    """1-NN label for every node, looked up among the labelled training vectors."""
    vectors = np.asarray(vectors, dtype=float)
    labels = np.asarray(labels)
    if len(vectors) == 0:
        raise EmptyTrainingError("no labelled training vectors")
    if len(graph) == 0:
        return {}
    idx, _ = neighbors.nearest(vectors, graph.weights)
    return {int(nid): int(labels[i]) for nid, i in zip(graph.ids, idx)}


def _branch_l2_inputs(l1: GasGraph, seq_vectors: np.ndarray) -> np.ndarray:
    return sliding_windows(remap_sequence(l1, seq_vectors), WINDOW)


def _combined_inputs(pose_l2_out: np.ndarray, vel_l2_out: np.ndarray) -> np.ndarray:
    """Align branch outputs on their last frame, concatenate, window with dilation 3."""
    # pose_l2_out[i] ends at frame i+2, vel_l2_out[j] ends at frame j+3
    n_common = min(len(pose_l2_out) - 1, len(vel_l2_out))
    if n_common <= 0:
        return np.zeros((0, 2 * WINDOW * WINDOW * DIM))
    combined = np.concatenate([pose_l2_out[1 : 1 + n_common], vel_l2_out[:n_common]], axis=1)
    return sliding_windows(combined, WINDOW, dilation=WINDOW)


def _upper_features(model_layers: dict, vectors: np.ndarray) -> np.ndarray:
    pose_l2_in = _branch_l2_inputs(model_layers["pose_l1"], vectors)
    vel = compute_velocities(vectors)
    vel_l2_in = _branch_l2_inputs(model_layers["vel_l1"], vel) if len(vel) else np.zeros((0, WINDOW * DIM))
    p2 = remap_sequence(model_layers["pose_l2"], pose_l2_in)
    v2 = remap_sequence(model_layers["vel_l2"], vel_l2_in)
    return _combined_inputs(p2, v2)


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def train_hierarchy(sequences: list[PoseSequence], config: HierarchyConfig = HierarchyConfig(), seed: int = 0) -> HierarchyModel:
    """Train the layer stack on preconditioned training sequences and label the classifying layer."""
    sequences = [s for s in sequences if len(s)]
    if not sequences:
        raise EmptyTrainingError("no training sequences")
    specs = config.layer_specs()
    seeds = dict(zip(LAYERS, _child_seeds(seed, len(LAYERS))))
    layers: dict[str, Optional[GasGraph]] = {name: None for name in LAYERS}

    poses = np.concatenate([s.vectors for s in sequences])
    pose_labels = np.concatenate([np.full(len(s), s.label) for s in sequences])
    layers["pose_l1"] = train_gas(poses, specs["pose_l1"].params, seeds["pose_l1"])

    if config.classify_at == "l1_pose" and not config.train_upper_layers:
        labels = label_prototypes(layers["pose_l1"], poses, pose_labels)
        return HierarchyModel(layers, labels, config.classify_at, {"pose_l1": specs["pose_l1"]})

    pose_l2_in = [_branch_l2_inputs(layers["pose_l1"], s.vectors) for s in sequences]
    layers["pose_l2"] = _train_stacked(pose_l2_in, specs["pose_l2"].params, seeds["pose_l2"], "pose_l2")

    velocities = [compute_velocities(s.vectors) for s in sequences]
    layers["vel_l1"] = _train_stacked(velocities, specs["vel_l1"].params, seeds["vel_l1"], "vel_l1")
    vel_l2_in = [_branch_l2_inputs(layers["vel_l1"], v) if len(v) else np.zeros((0, WINDOW * DIM)) for v in velocities]
    layers["vel_l2"] = _train_stacked(vel_l2_in, specs["vel_l2"].params, seeds["vel_l2"], "vel_l2")

    l3_in, l3_labels = [], []
    short = 0
    for seq, p_in, v_in in zip(sequences, pose_l2_in, vel_l2_in):
        if len(seq) < MIN_L3_FRAMES:
            short += 1
            continue
        c = _combined_inputs(remap_sequence(layers["pose_l2"], p_in), remap_sequence(layers["vel_l2"], v_in))
        l3_in.append(c)
        l3_labels.append(np.full(len(c), seq.label))
    if short:
        warnings.warn(f"{short} recordings shorter than {MIN_L3_FRAMES} frames only feed layers 1-2", stacklevel=2)
    if not l3_in:
        raise TooShortRecordingError(f"no recording reaches layer 3 (needs {MIN_L3_FRAMES} frames)")
    l3_data = np.concatenate(l3_in)
    l3_labels = np.concatenate(l3_labels)
    layers["combined_l3"] = train_gas(l3_data, specs["combined_l3"].params, seeds["combined_l3"])

    if config.classify_at == "l1_pose":
        labels = label_prototypes(layers["pose_l1"], poses, pose_labels)
    else:
        labels = label_prototypes(layers["combined_l3"], l3_data, l3_labels)
    return HierarchyModel(layers, labels, config.classify_at, specs)


def _train_stacked(chunks: list[np.ndarray], params, seed: int, name: str) -> GasGraph:
    chunks = [c for c in chunks if len(c)]
    if not chunks:
        raise TooShortRecordingError(f"no data reaches layer {name}")
    data = np.concatenate(chunks)
    if len(data) < 2:
        raise TooShortRecordingError(f"layer {name} needs at least two samples")
    return train_gas(data, params, seed)


def classify(model: HierarchyModel, vectors) -> tuple[np.ndarray, int]:
    """Per-step labels of one preconditioned recording, and their majority vote.

    In layer-3 mode the first ``MIN_L3_FRAMES - 1`` frames have no label.
    """
    vectors = np.asarray(vectors, dtype=float)
    if len(vectors) < model.min_frames:
        raise TooShortRecordingError(f"{len(vectors)} frames; the {model.classify_at} classifier needs {model.min_frames}")
    if model.classify_at == "l1_pose":
        feats = vectors
    else:
        feats = _upper_features(model.layers, vectors)
    graph = model.layers[model.classifier_layer]
    if set(model.prototype_labels) != set(graph.ids.tolist()):
        raise ValueError(f"prototype labels do not belong to the {model.classifier_layer} layer")
    ids, _ = quantize_many(graph, feats)
    steps = np.array([model.prototype_labels[int(i)] for i in ids], dtype=np.int64)
    return steps, majority_label(steps)


def majority_label(steps) -> int:
    counts = Counter(int(s) for s in steps)
    top = max(counts.values())
    return min(lab for lab, c in counts.items() if c == top)


def first_labelled_frame(model: HierarchyModel) -> int:
    """0-based frame offset of the first per-step label."""
    return model.min_frames - 1
