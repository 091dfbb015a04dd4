"""CAD-60 skeleton corpus: parsing, JSON cache, synthetic data and LOSO splits.

Joint positions are kept in millimetres, in the order the CAD-60 files list
them.  Activity labels are referred to by their index in ``LABELS`` almost
everywhere; the index order is also the axis order of every confusion matrix.
"""

from __future__ import annotations

import csv
import io
import json
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

N_JOINTS = 15
FRAME_RATE = 30

JOINT_NAMES = (
    "head",
    "neck",
    "torso",
    "left_shoulder",
    "left_elbow",
    "right_shoulder",
    "right_elbow",
    "left_hip",
    "left_knee",
    "right_hip",
    "right_knee",
    "left_hand",
    "right_hand",
    "left_foot",
    "right_foot",
)
JOINT = {name: i for i, name in enumerate(JOINT_NAMES)}

# slot permutation exchanging each left joint with its right counterpart
MIRROR_PERMUTATION = np.arange(len(JOINT_NAMES))
for _side in ("shoulder", "elbow", "hip", "knee", "hand", "foot"):
    _l, _r = JOINT["left_" + _side], JOINT["right_" + _side]
    MIRROR_PERMUTATION[_l], MIRROR_PERMUTATION[_r] = _r, _l

# first 11 joints carry an orientation block, the last 4 only a position
_N_ORIENTED = 11
_ORIENTED_WIDTH = 9 + 1 + 3 + 1
_PLAIN_WIDTH = 3 + 1
LINE_TOKENS = 1 + _N_ORIENTED * _ORIENTED_WIDTH + (N_JOINTS - _N_ORIENTED) * _PLAIN_WIDTH

LABELS = (
    "brushing teeth",
    "cooking (chopping)",
    "cooking (stirring)",
    "drinking water",
    "opening pill container",
    "random",
    "relaxing on couch",
    "rinsing mouth with water",
    "still",
    "talking on couch",
    "talking on the phone",
    "wearing contact lenses",
    "working on computer",
    "writing on whiteboard",
)
LABEL_INDEX = {name: i for i, name in enumerate(LABELS)}
OPTIONAL_LABELS = frozenset({LABEL_INDEX["random"], LABEL_INDEX["still"]})

SCENES = ("bathroom", "bedroom", "kitchen", "livingroom", "office")


class Cad60Warning(UserWarning):
    pass


class MalformedLineError(ValueError):
    pass


class UnknownSubjectError(KeyError):
    pass


class EmptyCorpusError(ValueError):
    pass


def _load_scene_table() -> dict[str, list[tuple[int, bool]]]:
    text = resources.files("skelhar").joinpath("data/scenes.csv").read_text()
    table: dict[str, list[tuple[int, bool]]] = {s: [] for s in SCENES}
    for row in csv.reader(line for line in text.splitlines() if line and not line.startswith("#")):
        scene, label, optional = (c.strip() for c in row)
        table[scene].append((LABEL_INDEX[label], optional == "1"))
    return table


SCENE_TABLE = _load_scene_table()


def scene_labels(scene: str, include_optional: bool = False) -> tuple[int, ...]:
    """Label indices assigned to ``scene``, in canonical order."""
    if scene not in SCENE_TABLE:
        raise KeyError(f"unknown scene {scene!r}")
    return tuple(sorted(lab for lab, opt in SCENE_TABLE[scene] if include_optional or not opt))


def scenes_for_label(label: int) -> tuple[str, ...]:
    return tuple(s for s in SCENES if any(lab == label for lab, _ in SCENE_TABLE[s]))


def label_index(name: str) -> int:
    key = " ".join(name.strip().lower().split())
    try:
        return LABEL_INDEX[key]
    except KeyError:
        raise KeyError(f"unknown activity label {name!r}") from None


@dataclass(frozen=True)
class Joint:
    x: float
    y: float
    z: float
    position_confidence: float = 1.0


@dataclass(frozen=True, eq=False)
class SkeletonFrame:
    """One skeleton: ``positions`` is (15, 3) in mm, ``confidence`` is (15,)."""

    frame_index: int
    positions: np.ndarray
    confidence: np.ndarray = field(default_factory=lambda: np.ones(N_JOINTS))

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(N_JOINTS, 3)
        conf = np.array(self.confidence, dtype=float).reshape(N_JOINTS)
        if not np.all(np.isfinite(pos)):
            raise ValueError("joint coordinates must be finite")
        pos.flags.writeable = False
        conf.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "confidence", conf)

    @property
    def joints(self) -> tuple[Joint, ...]:
        return tuple(Joint(*p, c) for p, c in zip(self.positions.tolist(), self.confidence.tolist()))

    def __eq__(self, other):
        if not isinstance(other, SkeletonFrame):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.confidence, other.confidence)
        )


@dataclass(frozen=True, eq=False)
class ActionRecording:
    recording_id: str
    subject: int
    scenes: tuple[str, ...]
    label: int
    positions: np.ndarray  # (N, 15, 3) mm
    confidence: np.ndarray  # (N, 15)
    frame_indices: np.ndarray  # (N,)
    frame_rate: int = FRAME_RATE

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 3 or pos.shape[1:] != (N_JOINTS, 3) or len(pos) == 0:
            raise ValueError(f"recording {self.recording_id}: expected (N>0, 15, 3) positions, got {pos.shape}")
        conf = np.array(self.confidence, dtype=float).reshape(len(pos), N_JOINTS)
        idx = np.array(self.frame_indices, dtype=np.int64).reshape(len(pos))
        if np.any(np.diff(idx) <= 0):
            raise ValueError(f"recording {self.recording_id}: frame indices must increase")
        if self.frame_rate != FRAME_RATE:
            raise ValueError("CAD-60 recordings are 30 fps")
        if not 0 <= self.label < len(LABELS):
            raise ValueError(f"label index {self.label} out of range")
        for a in (pos, conf, idx):
            a.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "confidence", conf)
        object.__setattr__(self, "frame_indices", idx)
        object.__setattr__(self, "scenes", tuple(self.scenes))

    def __len__(self):
        return len(self.positions)

    @property
    def label_name(self) -> str:
        return LABELS[self.label]

    @property
    def frames(self) -> list[SkeletonFrame]:
        return [
            SkeletonFrame(int(i), p, c)
            for i, p, c in zip(self.frame_indices, self.positions, self.confidence)
        ]

    def __eq__(self, other):
        if not isinstance(other, ActionRecording):
            return NotImplemented
        return (
            (self.recording_id, self.subject, self.scenes, self.label, self.frame_rate)
            == (other.recording_id, other.subject, other.scenes, other.label, other.frame_rate)
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.confidence, other.confidence)
            and np.array_equal(self.frame_indices, other.frame_indices)
        )


@dataclass(frozen=True)
class Corpus:
    recordings: tuple[ActionRecording, ...]
    provenance: str = "cad60_raw"

    def __post_init__(self):
        object.__setattr__(self, "recordings", tuple(self.recordings))
        bad = {r.subject for r in self.recordings} - {1, 2, 3, 4}
        if bad:
            raise ValueError(f"subject ids must be in 1..4, got {sorted(bad)}")

    def __len__(self):
        return len(self.recordings)

    def __iter__(self):
        return iter(self.recordings)

    @property
    def subjects(self) -> tuple[int, ...]:
        return tuple(sorted({r.subject for r in self.recordings}))

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted({r.label for r in self.recordings}))

    @property
    def scenes(self) -> tuple[str, ...]:
        present = {s for r in self.recordings for s in r.scenes}
        return tuple(s for s in SCENES if s in present)

    @property
    def n_frames(self) -> int:
        return sum(len(r) for r in self.recordings)

    def lookup(self, subject: int, scene: str, label: int) -> list[ActionRecording]:
        return [r for r in self.recordings if r.subject == subject and r.label == label and scene in r.scenes]


@dataclass(frozen=True)
class LosoSplit:
    held_out_subject: int
    train: Corpus
    test: Corpus


# ---------------------------------------------------------------------------
# raw CAD-60 files


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8", errors="replace")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data


def _parse_arrays(source, name: str = "<stream>"):
    text = _read_text(source)
    indices, positions, confidence = [], [], []
    terminated = False
    for lineno, raw in enumerate(io.StringIO(text), 1):
        line = raw.strip()
        if not line:
            continue
        if line.upper() == "END":
            terminated = True
            break
        tokens = line.split(",")
        if tokens[-1].strip() == "":
            tokens = tokens[:-1]
        if len(tokens) != LINE_TOKENS:
            raise MalformedLineError(f"{name}:{lineno}: expected {LINE_TOKENS} values, found {len(tokens)}")
        try:
            values = np.array(tokens, dtype=float)
        except ValueError as exc:
            raise MalformedLineError(f"{name}:{lineno}: {exc}") from None
        oriented = values[1 : 1 + _N_ORIENTED * _ORIENTED_WIDTH].reshape(_N_ORIENTED, _ORIENTED_WIDTH)
        plain = values[1 + _N_ORIENTED * _ORIENTED_WIDTH :].reshape(N_JOINTS - _N_ORIENTED, _PLAIN_WIDTH)
        indices.append(int(values[0]))
        positions.append(np.vstack([oriented[:, 10:13], plain[:, :3]]))
        confidence.append(np.concatenate([oriented[:, 13], plain[:, 3]]))
    if not terminated:
        warnings.warn(f"{name}: missing END terminator; keeping {len(indices)} frames", Cad60Warning, stacklevel=3)
    if not indices:
        return np.zeros(0, np.int64), np.zeros((0, N_JOINTS, 3)), np.zeros((0, N_JOINTS))
    return np.array(indices, np.int64), np.array(positions), np.array(confidence)


def parse_cad60_skeleton_file(source) -> list[SkeletonFrame]:
    """Parse one CAD-60 skeleton text file (bytes, str or file object).

    Orientation blocks are discarded.  A line with the wrong number of
    values rejects the whole file with :class:`MalformedLineError`; a
    missing ``END`` line only triggers a :class:`Cad60Warning`.
    """
    idx, pos, conf = _parse_arrays(source)
    return [SkeletonFrame(int(i), p, c) for i, p, c in zip(idx, pos, conf)]


def _read_label_index(path: Path) -> list[tuple[str, str]]:
    rows = []
    for line in path.read_text(errors="replace").splitlines():
        line = line.strip()
        if not line or line.upper() == "END":
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 2 or not parts[1]:
            warnings.warn(f"{path}: cannot read label line {line!r}", Cad60Warning, stacklevel=2)
            continue
        rows.append((parts[0], parts[1]))
    return rows


def _subject_dirs(root: Path) -> list[tuple[int, Path]]:
    found = []
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        if not (d / "activityLabel.txt").exists():
            continue
        m = re.search(r"(\d+)$", d.name)
        if m is None:
            warnings.warn(f"{d}: cannot infer subject id from folder name", Cad60Warning, stacklevel=3)
            continue
        found.append((int(m.group(1)), d))
    return found


def load_corpus(root) -> Corpus:
    """Load a corpus from a CAD-60 tree (``data1`` .. ``data4``) or a JSON cache directory."""
    root = Path(root)
    if not root.is_dir():
        raise EmptyCorpusError(f"{root} is not a directory")
    if any(root.glob("*.json")):
        return load_cache(root)

    recordings = []
    subjects = _subject_dirs(root)
    for subject, folder in subjects:
        for rec_id, label_text in _read_label_index(folder / "activityLabel.txt"):
            try:
                label = label_index(label_text)
            except KeyError:
                warnings.warn(f"{folder.name}/{rec_id}: unknown label {label_text!r}, recording skipped", Cad60Warning, stacklevel=2)
                continue
            path = folder / f"{rec_id}.txt"
            if not path.exists():
                warnings.warn(f"{path}: listed in activityLabel.txt but missing", Cad60Warning, stacklevel=2)
                continue
            idx, pos, conf = _parse_arrays(path.read_bytes(), name=str(path))
            if len(idx) == 0:
                warnings.warn(f"{path}: no frames", Cad60Warning, stacklevel=2)
                continue
            recordings.append(
                ActionRecording(f"s{subject}/{rec_id}", subject, scenes_for_label(label), label, pos, conf, idx)
            )
    if not recordings:
        raise EmptyCorpusError(f"no recordings found under {root}")
    corpus = Corpus(tuple(recordings), "cad60_raw")
    if len(corpus.subjects) < 4:
        missing = sorted({1, 2, 3, 4} - set(corpus.subjects))
        warnings.warn(f"corpus has {len(corpus.subjects)} subjects; missing {missing}", Cad60Warning, stacklevel=2)
    return corpus


# ---------------------------------------------------------------------------
# JSON cache: one document per recording


def recording_to_json(rec: ActionRecording) -> dict:
    return {
        "recording_id": rec.recording_id,
        "subject": rec.subject,
        "scenes": list(rec.scenes),
        "label": rec.label_name,
        "frame_rate": rec.frame_rate,
        "frame_indices": rec.frame_indices.tolist(),
        "frames": rec.positions.reshape(len(rec), -1).tolist(),
        "confidence": rec.confidence.tolist(),
    }


def recording_from_json(doc: dict) -> ActionRecording:
    frames = np.array(doc["frames"], dtype=float)
    if frames.ndim != 2 or frames.shape[1] != 3 * N_JOINTS:
        raise MalformedLineError(f"recording {doc.get('recording_id')}: frames must be rows of 45 numbers")
    n = len(frames)
    return ActionRecording(
        recording_id=str(doc["recording_id"]),
        subject=int(doc["subject"]),
        scenes=tuple(doc["scenes"]),
        label=label_index(doc["label"]),
        positions=frames.reshape(n, N_JOINTS, 3),
        confidence=doc.get("confidence", np.ones((n, N_JOINTS))),
        frame_indices=doc.get("frame_indices", np.arange(1, n + 1)),
        frame_rate=int(doc.get("frame_rate", FRAME_RATE)),
    )


def _cache_name(rec_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", rec_id) + ".json"


def save_cache(corpus: Corpus, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for rec in corpus.recordings:
        path = directory / _cache_name(rec.recording_id)
        path.write_text(json.dumps(recording_to_json(rec)) + "\n")
        paths.append(path)
    (directory / "corpus.meta").write_text(json.dumps({"provenance": corpus.provenance, "order": [p.name for p in paths]}) + "\n")
    return paths


def load_cache(directory) -> Corpus:
    directory = Path(directory)
    meta_path = directory / "corpus.meta"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        names = meta["order"]
        provenance = meta.get("provenance", "cad60_raw")
    else:
        names = sorted(p.name for p in directory.glob("*.json"))
        provenance = "cad60_raw"
    recordings = [recording_from_json(json.loads((directory / n).read_text())) for n in names]
    if not recordings:
        raise EmptyCorpusError(f"no recordings in {directory}")
    return Corpus(tuple(recordings), provenance)


# ---------------------------------------------------------------------------
# synthetic corpus

# standing skeleton, mm, hip centre at the origin; left side on +x
_BASE_POSE = np.array(
    [
        [0, 650, 0],
        [0, 450, 0],
        [0, 200, 0],
        [170, 430, 0],
        [200, 160, 0],
        [-170, 430, 0],
        [-200, 160, 0],
        [100, 0, 0],
        [100, -420, 0],
        [-100, 0, 0],
        [-100, -420, 0],
        [210, -80, 0],
        [-210, -80, 0],
        [100, -830, 0],
        [-100, -830, 0],
    ],
    dtype=float,
)
# how strongly each joint takes part in class-specific posture and motion
LEFT_HANDED_SUBJECT = 3
_MOBILITY = np.array([0.4, 0.2, 0.1, 0.3, 0.7, 0.3, 0.7, 0.05, 0.1, 0.05, 0.1, 1.0, 1.0, 0.05, 0.05])


def synthetic_labels(classes: int) -> tuple[int, ...]:
    """Labels used by a synthetic corpus: target activities scene by scene, then random/still."""
    order = []
    for scene in SCENES:
        for lab in scene_labels(scene):
            if lab not in order:
                order.append(lab)
    order += sorted(OPTIONAL_LABELS)
    return tuple(order[:classes])


def generate_synthetic_corpus(seed: int, subjects: int = 4, classes: int = 3, frames_per_recording: int = 60) -> Corpus:
    """Deterministic toy corpus: one recording per (subject, class).

    Each class is a posture offset plus a sinusoidal joint trajectory.  Each
    subject has a body scale, its own posture bias, a per-recording room
    position and additive sensor noise; subject 3 performs everything with
    the other hand (a mirrored body).
    """
    if not 2 <= subjects <= 4:
        raise ValueError("subjects must be between 2 and 4")
    if not 2 <= classes <= len(LABELS):
        raise ValueError(f"classes must be between 2 and {len(LABELS)}")
    if frames_per_recording < 12:
        raise ValueError("frames_per_recording must be at least 12")

    rng = np.random.default_rng(seed)
    labels = synthetic_labels(classes)
    mob = _MOBILITY[:, None]
    templates = []
    for _ in labels:
        templates.append(
            {
                "offset": rng.normal(0.0, 150.0, (N_JOINTS, 3)) * mob,
                "amplitude": rng.uniform(20.0, 120.0, (N_JOINTS, 3)) * mob,
                "phase": rng.uniform(0, 2 * np.pi, (N_JOINTS, 3)),
                "freq": rng.uniform(0.3, 1.2),
            }
        )
    t = np.arange(frames_per_recording)[:, None, None] / FRAME_RATE
    recordings = []
    for subject in range(1, subjects + 1):
        scale = rng.uniform(0.85, 1.15)
        posture_bias = rng.normal(0.0, 120.0, (N_JOINTS, 3)) * mob
        for c, lab in enumerate(labels):
            tpl = templates[c]
            shift = rng.uniform(0, 2 * np.pi)
            motion = tpl["amplitude"] * np.sin(2 * np.pi * tpl["freq"] * t + tpl["phase"] + shift)
            body = scale * (_BASE_POSE + tpl["offset"] + posture_bias + motion)
            if subject == LEFT_HANDED_SUBJECT:
                body = body[:, MIRROR_PERMUTATION] * np.array([-1.0, 1.0, 1.0])
            position = np.array([rng.normal(0, 400), rng.normal(0, 150), rng.uniform(1800, 3200)])
            noise = rng.normal(0.0, 40.0, body.shape)
            positions = np.round(body + position + noise, 4)
            recordings.append(
                ActionRecording(
                    recording_id=f"synth-s{subject}-c{c:02d}",
                    subject=subject,
                    scenes=scenes_for_label(lab),
                    label=lab,
                    positions=positions,
                    confidence=np.ones((frames_per_recording, N_JOINTS)),
                    frame_indices=np.arange(1, frames_per_recording + 1),
                )
            )
    return Corpus(tuple(recordings), "synthetic")


def synthetic_templates(seed: int, classes: int) -> np.ndarray:
    """Noise-free class postures at t=0, flattened; used to check templates are distinct."""
    corpus_rng = np.random.default_rng(seed)
    mob = _MOBILITY[:, None]
    out = []
    for _ in range(classes):
        offset = corpus_rng.normal(0.0, 150.0, (N_JOINTS, 3)) * mob
        amplitude = corpus_rng.uniform(20.0, 120.0, (N_JOINTS, 3)) * mob
        phase = corpus_rng.uniform(0, 2 * np.pi, (N_JOINTS, 3))
        corpus_rng.uniform(0.3, 1.2)
        out.append((_BASE_POSE + offset + amplitude * np.sin(phase)).ravel())
    return np.array(out)


# ---------------------------------------------------------------------------
# splits


def split_loso(corpus: Corpus, held_out: int) -> LosoSplit:
    if held_out not in corpus.subjects:
        raise UnknownSubjectError(f"subject {held_out} not in corpus (have {corpus.subjects})")
    train = tuple(r for r in corpus.recordings if r.subject != held_out)
    test = tuple(r for r in corpus.recordings if r.subject == held_out)
    return LosoSplit(held_out, Corpus(train, corpus.provenance), Corpus(test, corpus.provenance))


def scene_subset(corpus: Corpus, scene: str, include_optional: bool = False) -> Corpus:
    """Recordings assigned to ``scene``; random/still only when ``include_optional``."""
    allowed = set(scene_labels(scene, include_optional))
    keep = tuple(r for r in corpus.recordings if scene in r.scenes and r.label in allowed)
    return Corpus(keep, corpus.provenance)


def iter_loso(corpus: Corpus) -> Iterable[LosoSplit]:
    for subject in corpus.subjects:
        yield split_loso(corpus, subject)


def describe(corpus: Corpus) -> dict:
    """Counts used by ``skelhar inspect``."""
    per_subject = {s: sum(1 for r in corpus if r.subject == s) for s in corpus.subjects}
    frames = {s: sum(len(r) for r in corpus if r.subject == s) for s in corpus.subjects}
    return {
        "provenance": corpus.provenance,
        "subjects": list(corpus.subjects),
        "scenes": list(corpus.scenes),
        "labels": [LABELS[i] for i in corpus.labels],
        "recordings": len(corpus),
        "frames": corpus.n_frames,
        "recordings_per_subject": per_subject,
        "frames_per_subject": frames,
    }

