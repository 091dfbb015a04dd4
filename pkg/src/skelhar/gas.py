"""Growing Neural Gas and Growing-When-Required networks.

Both learners share :class:`GasGraph`: node weights live in one contiguous
array kept in increasing id order (ids are never reused), so ``argmin``
picks the smallest id on ties.  Edges are stored as ``{(a, b): age}`` with
``a < b`` plus an adjacency map.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import neighbors


class TooFewNodesError(ValueError):
    pass


class EmptyGraphError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


@dataclass
class GwrParams:
    a_t: float = 0.995
    max_nodes: Optional[int] = 1000  # None: unlimited
    epochs: int = 10
    eps_b: float = 0.2
    eps_n: float = 0.006
    a_max: int = 50
    h_0: float = 1.0
    alpha_b: float = 0.95
    alpha_n: float = 0.95
    tau_b: float = 3.33
    tau_n: float = 14.3
    h_t: float = 0.1
    h_min: float = 0.001
    gamma: Optional[float] = 4.0  # None disables the outlier gate
    warmup: int = 100
    gate_mode: str = "skip"  # "skip": no update at all; "no_insert": adapt but never insert

    def __post_init__(self):
        if not 0 < self.eps_n <= self.eps_b < 1:
            raise ValueError("need 0 < eps_n <= eps_b < 1")
        if not 0 < self.a_t <= 1:
            raise ValueError("a_t must be in (0, 1]")
        if self.tau_b <= 0 or self.tau_n <= 0:
            raise ValueError("time constants must be positive")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not 0 < self.h_min < self.h_0:
            raise ValueError("need 0 < h_min < h_0")
        if self.max_nodes is not None and self.max_nodes < 2:
            raise ValueError("max_nodes must be at least 2")
        if self.gate_mode not in ("skip", "no_insert"):
            raise ValueError("gate_mode must be 'skip' or 'no_insert'")


@dataclass
class GngParams:
    lam: int = 3
    eps_b: float = 0.2
    eps_n: float = 0.006
    a_max: int = 1
    d: float = 0.995
    alpha_split: float = 0.5
    max_nodes: Optional[int] = 1000
    epochs: int = 10

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        if not 0 < self.d < 1:
            raise ValueError("d must be in (0, 1)")
        if not 0 < self.eps_n <= self.eps_b < 1:
            raise ValueError("need 0 < eps_n <= eps_b < 1")
        if self.max_nodes is not None and self.max_nodes < 2:
            raise ValueError("max_nodes must be at least 2")


class GasGraph:
    def __init__(self, dimension: int, h_0: float = 1.0):
        self.dimension = int(dimension)
        self.h_0 = h_0
        self._ids = np.zeros(0, dtype=np.int64)
        self._w = np.zeros((0, self.dimension))
        self._h = np.zeros(0)
        self._err = np.zeros(0)
        self._wins = np.zeros(0, dtype=np.int64)
        self._n = 0
        self._next_id = 0
        self._slot: dict[int, int] = {}
        self.edges: dict[tuple[int, int], int] = {}
        self._nbrs: dict[int, set[int]] = {}

    # -- nodes ---------------------------------------------------------
    def __len__(self):
        return self._n

    @property
    def ids(self) -> np.ndarray:
        return self._ids[: self._n]

    @property
    def weights(self) -> np.ndarray:
        return self._w[: self._n]

    @property
    def habituation(self) -> np.ndarray:
        return self._h[: self._n]

    @property
    def errors(self) -> np.ndarray:
        return self._err[: self._n]

    @property
    def win_counts(self) -> np.ndarray:
        return self._wins[: self._n]

    def slot(self, node_id: int) -> int:
        return self._slot[node_id]

    def weight(self, node_id: int) -> np.ndarray:
        return self._w[self._slot[node_id]]

    def _grow(self):
        cap = max(8, 2 * len(self._ids))
        for name in ("_ids", "_w", "_h", "_err", "_wins"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            new[: self._n] = old[: self._n]
            setattr(self, name, new)

    def add_node(self, weight, h: Optional[float] = None, error: float = 0.0, node_id: Optional[int] = None) -> int:
        weight = np.asarray(weight, dtype=float)
        if weight.shape != (self.dimension,):
            raise DimensionMismatchError(f"node weight has shape {weight.shape}, graph dimension is {self.dimension}")
        if self._n == len(self._ids):
            self._grow()
        nid = self._next_id if node_id is None else int(node_id)
        if self._n and nid <= self._ids[self._n - 1]:
            raise ValueError("node ids must be added in increasing order")
        s = self._n
        self._ids[s] = nid
        self._w[s] = weight
        self._h[s] = self.h_0 if h is None else h
        self._err[s] = error
        self._wins[s] = 0
        self._slot[nid] = s
        self._nbrs[nid] = set()
        self._n += 1
        self._next_id = nid + 1
        return nid

    def remove_node(self, node_id: int):
        for other in list(self._nbrs[node_id]):
            self.remove_edge(node_id, other)
        s = self._slot.pop(node_id)
        del self._nbrs[node_id]
        n = self._n
        for name in ("_ids", "_w", "_h", "_err", "_wins"):
            arr = getattr(self, name)
            arr[s : n - 1] = arr[s + 1 : n]
        self._n -= 1
        for k in range(s, self._n):
            self._slot[int(self._ids[k])] = k

    # -- edges ---------------------------------------------------------
    @staticmethod
    def _key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def neighbors(self, node_id: int) -> set[int]:
        return self._nbrs[node_id]

    def set_edge(self, a: int, b: int, age: int = 0):
        if a == b:
            raise ValueError("self-loops are not allowed")
        self.edges[self._key(a, b)] = age
        self._nbrs[a].add(b)
        self._nbrs[b].add(a)

    def has_edge(self, a: int, b: int) -> bool:
        return self._key(a, b) in self.edges

    def remove_edge(self, a: int, b: int):
        if self.edges.pop(self._key(a, b), None) is not None:
            self._nbrs[a].discard(b)
            self._nbrs[b].discard(a)

    def age_edges_of(self, node_id: int):
        for other in self._nbrs[node_id]:
            self.edges[self._key(node_id, other)] += 1

    def prune(self, a_max: int, touched) -> list[int]:
        """Drop edges older than ``a_max`` around ``touched``, then any node left isolated."""
        candidates = set()
        for nid in touched:
            if nid not in self._nbrs:
                continue
            for other in list(self._nbrs[nid]):
                if self.edges[self._key(nid, other)] > a_max:
                    self.remove_edge(nid, other)
                    candidates.update((nid, other))
        removed = []
        for nid in sorted(candidates):
            if self._n <= 2:
                break
            if nid in self._nbrs and not self._nbrs[nid]:
                self.remove_node(nid)
                removed.append(nid)
        return removed

    # -- serialization -------------------------------------------------
    def to_json(self, params=None) -> dict:
        doc = {
            "dimension": self.dimension,
            "h_0": self.h_0,
            "next_id": self._next_id,
            "nodes": [
                {"id": int(i), "weight": w.tolist(), "h": float(h), "error": float(e), "wins": int(c)}
                for i, w, h, e, c in zip(self.ids, self.weights, self.habituation, self.errors, self.win_counts)
            ],
            "edges": [{"a": a, "b": b, "age": age} for (a, b), age in sorted(self.edges.items())],
        }
        if params is not None:
            doc["params"] = {"engine": "gwr" if isinstance(params, GwrParams) else "gng", **asdict(params)}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "GasGraph":
        g = cls(doc["dimension"], doc.get("h_0", 1.0))
        for node in doc["nodes"]:
            nid = g.add_node(node["weight"], node["h"], node.get("error", 0.0), node_id=node["id"])
            g._wins[g._slot[nid]] = node.get("wins", 0)
        for e in doc["edges"]:
            g.set_edge(e["a"], e["b"], e["age"])
        g._next_id = doc.get("next_id", g._next_id)
        return g

    def dumps(self, params=None) -> str:
        return json.dumps(self.to_json(params))

    def copy(self) -> "GasGraph":
        return GasGraph.from_json(self.to_json())

    def same_as(self, other: "GasGraph") -> bool:
        return self.to_json() == other.to_json()


def params_from_json(doc: dict):
    doc = dict(doc)
    engine = doc.pop("engine")
    return GwrParams(**doc) if engine == "gwr" else GngParams(**doc)


# ---------------------------------------------------------------------------
# queries


def _check_dim(graph: GasGraph, x: np.ndarray):
    if x.shape[-1] != graph.dimension:
        raise DimensionMismatchError(f"input dimension {x.shape[-1]} != graph dimension {graph.dimension}")


def find_best_two(graph: GasGraph, x) -> tuple[int, int, float]:
    """Best and second-best node ids and the best Euclidean distance."""
    if len(graph) < 2:
        raise TooFewNodesError("need at least two nodes")
    x = np.asarray(x, dtype=float)
    _check_dim(graph, x)
    d2 = neighbors.squared_distances(graph.weights, x)
    b = int(np.argmin(d2))
    best_d2 = d2[b]
    d2[b] = np.inf
    s = int(np.argmin(d2))
    return int(graph.ids[b]), int(graph.ids[s]), float(math.sqrt(best_d2))


def quantize(graph: GasGraph, x) -> tuple[int, float]:
    if len(graph) == 0:
        raise EmptyGraphError("graph has no nodes")
    x = np.asarray(x, dtype=float)
    _check_dim(graph, x)
    d2 = neighbors.squared_distances(graph.weights, x)
    b = int(np.argmin(d2))
    return int(graph.ids[b]), float(math.sqrt(d2[b]))


def quantize_many(graph: GasGraph, X) -> tuple[np.ndarray, np.ndarray]:
    """Node ids and distances for every row of ``X``."""
    if len(graph) == 0:
        raise EmptyGraphError("graph has no nodes")
    X = np.asarray(X, dtype=float)
    _check_dim(graph, X)
    if len(X) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    slots, dist = neighbors.nearest(graph.weights, X)
    return graph.ids[slots], dist


def quantization_error(graph: GasGraph, data) -> float:
    return float(np.mean(quantize_many(graph, data)[1]))


# ---------------------------------------------------------------------------
# GWR


class ActivationStats:
    """Running mean/std (Welford) of best-match activations."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self._m2 = 0.0

    def update(self, a: float):
        self.n += 1
        delta = a - self.mean
        self.mean += delta / self.n
        self._m2 += delta * (a - self.mean)

    @property
    def std(self) -> float:
        return math.sqrt(self._m2 / (self.n - 1)) if self.n > 1 else 0.0


@dataclass
class StepReport:
    best: int
    second: int
    distance: float
    activation: float = float("nan")
    inserted: Optional[int] = None
    skipped: bool = False
    removed: list = field(default_factory=list)


def _habituate(h: float, h_0: float, alpha: float, tau: float, h_min: float) -> float:
    return min(h_0, max(h_min, h + (alpha * (h_0 - h) - 1.0) / tau))


def gwr_step(graph: GasGraph, x, params: GwrParams, stats: Optional[ActivationStats] = None) -> StepReport:
    x = np.asarray(x, dtype=float)
    _check_dim(graph, x)
    b, s, dist = find_best_two(graph, x)
    a = math.exp(-dist)
    report = StepReport(b, s, dist, a)
    graph.set_edge(b, s, 0)

    gated = (
        stats is not None
        and params.gamma is not None
        and stats.n >= params.warmup
        and a < stats.mean - params.gamma * stats.std
    )
    if gated and params.gate_mode == "skip":
        report.skipped = True
        return report

    sb = graph.slot(b)
    graph._wins[sb] += 1
    h_b = graph._h[sb]
    room = params.max_nodes is None or len(graph) < params.max_nodes
    if not gated and a < params.a_t and h_b <= params.h_t and room:
        r = graph.add_node(0.5 * (graph.weight(b) + x), params.h_0)
        graph.set_edge(r, b, 0)
        graph.set_edge(r, s, 0)
        graph.remove_edge(b, s)
        report.inserted = r
    else:
        graph._w[sb] += params.eps_b * h_b * (x - graph._w[sb])
        for n in graph.neighbors(b):
            sn = graph.slot(n)
            graph._w[sn] += params.eps_n * graph._h[sn] * (x - graph._w[sn])

    graph.age_edges_of(b)
    graph._h[sb] = _habituate(h_b, params.h_0, params.alpha_b, params.tau_b, params.h_min)
    for n in graph.neighbors(b):
        sn = graph.slot(n)
        graph._h[sn] = _habituate(graph._h[sn], params.h_0, params.alpha_n, params.tau_n, params.h_min)

    report.removed = graph.prune(params.a_max, [b])
    if stats is not None:
        stats.update(a)

    assert params.max_nodes is None or len(graph) <= params.max_nodes
    return report


def _init_graph(data: np.ndarray, rng: np.random.Generator, h_0: float) -> GasGraph:
    if len(data) < 2:
        raise ValueError("need at least two training samples")
    graph = GasGraph(data.shape[1], h_0)
    i = int(rng.integers(len(data)))
    distinct = np.flatnonzero(np.any(data != data[i], axis=1))
    j = int(rng.choice(distinct)) if len(distinct) else (i + 1) % len(data)
    graph.add_node(data[i])
    graph.add_node(data[j])
    return graph


StepCallback = Callable[[GasGraph, StepReport], None]
EpochCallback = Callable[[int, GasGraph], None]


def gwr_train(
    data,
    params: GwrParams = GwrParams(),
    seed: int = 0,
    on_step: Optional[StepCallback] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> GasGraph:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise ValueError("data must be a non-empty 2-D array")
    rng = np.random.default_rng(seed)
    graph = _init_graph(data, rng, params.h_0)
    stats = ActivationStats()
    for epoch in range(params.epochs):
        for i in rng.permutation(len(data)):
            report = gwr_step(graph, data[i], params, stats)
            if on_step is not None:
                on_step(graph, report)
        if on_epoch is not None:
            on_epoch(epoch, graph)
    return graph


# ---------------------------------------------------------------------------
# GNG


def gng_step(graph: GasGraph, x, params: GngParams, step: int) -> StepReport:
    """One Fritzke update; ``step`` counts presented samples from 1."""
    x = np.asarray(x, dtype=float)
    _check_dim(graph, x)
    b, s, dist = find_best_two(graph, x)
    report = StepReport(b, s, dist)
    sb = graph.slot(b)
    graph._wins[sb] += 1

    graph.age_edges_of(b)
    graph._err[sb] += dist * dist
    graph._w[sb] += params.eps_b * (x - graph._w[sb])
    for n in graph.neighbors(b):
        sn = graph.slot(n)
        graph._w[sn] += params.eps_n * (x - graph._w[sn])
    graph.set_edge(b, s, 0)
    report.removed = graph.prune(params.a_max, [b])

    if step % params.lam == 0 and (params.max_nodes is None or len(graph) < params.max_nodes):
        errs = graph.errors
        q = int(graph.ids[int(np.argmax(errs))])
        nbrs = sorted(graph.neighbors(q))
        if nbrs:
            f = max(nbrs, key=lambda n: (graph._err[graph.slot(n)], -n))
            sq, sf = graph.slot(q), graph.slot(f)
            graph._err[sq] *= params.alpha_split
            graph._err[sf] *= params.alpha_split
            r = graph.add_node(0.5 * (graph._w[sq] + graph._w[sf]), error=graph._err[sq])
            graph.set_edge(r, q, 0)
            graph.set_edge(r, f, 0)
            graph.remove_edge(q, f)
            report.inserted = r

    graph._err[: len(graph)] *= params.d
    assert params.max_nodes is None or len(graph) <= params.max_nodes
    return report


def gng_train(
    data,
    params: GngParams = GngParams(),
    seed: int = 0,
    on_step: Optional[StepCallback] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> GasGraph:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise ValueError("data must be a non-empty 2-D array")
    rng = np.random.default_rng(seed)
    graph = _init_graph(data, rng, 1.0)
    step = 0
    for epoch in range(params.epochs):
        for i in rng.permutation(len(data)):
            step += 1
            report = gng_step(graph, data[i], params, step)
            if on_step is not None:
                on_step(graph, report)
        if on_epoch is not None:
            on_epoch(epoch, graph)
    return graph


def train_gas(data, params, seed: int = 0, **callbacks) -> GasGraph:
    if isinstance(params, GwrParams):
        return gwr_train(data, params, seed, **callbacks)
    if isinstance(params, GngParams):
        return gng_train(data, params, seed, **callbacks)
    raise TypeError(f"unsupported gas parameters {type(params).__name__}")
