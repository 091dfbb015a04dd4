"""Pose vectors, hip centring, mirroring, neck-torso scaling and windowing.

Frame-level functions accept either a :class:`SkeletonFrame` or an array
whose last two axes are (15, 3), and return the same kind of object.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import JOINT, MIRROR_PERMUTATION, N_JOINTS, Corpus, SkeletonFrame

DIM = 3 * N_JOINTS
EPS_DEGENERATE = 1e-6  # mm

_FLIP_X = np.array([-1.0, 1.0, 1.0])


class PreconditionMode(str, Enum):
    NONE = "none"
    CENTRE_MIRROR = "centre_mirror"
    CENTRE_MIRROR_NORMALIZE = "centre_mirror_normalize"


class DegenerateSkeletonError(ValueError):
    pass


class DegenerateSkeletonWarning(UserWarning):
    pass


def _unwrap(frame):
    if isinstance(frame, SkeletonFrame):
        return frame.positions, frame
    return np.asarray(frame, dtype=float), None


def _rewrap(positions, original, confidence=None):
    if original is None:
        return positions
    conf = original.confidence if confidence is None else confidence
    return SkeletonFrame(original.frame_index, positions, conf)


def hip_centre(positions: np.ndarray) -> np.ndarray:
    return 0.5 * (positions[..., JOINT["left_hip"], :] + positions[..., JOINT["right_hip"], :])


def centre_on_hips(frame):
    pos, original = _unwrap(frame)
    return _rewrap(pos - hip_centre(pos)[..., None, :], original)


def mirror_x(frame):
    """Negate x and swap left/right joint slots; an involution."""
    pos, original = _unwrap(frame)
    out = pos[..., MIRROR_PERMUTATION, :] * _FLIP_X
    conf = None if original is None else original.confidence[MIRROR_PERMUTATION]
    return _rewrap(out, original, conf)


def neck_torso_distance(positions: np.ndarray) -> np.ndarray:
    return np.linalg.norm(positions[..., JOINT["neck"], :] - positions[..., JOINT["torso"], :], axis=-1)


def normalize_neck_torso(frame):
    pos, original = _unwrap(frame)
    d = neck_torso_distance(pos)
    if np.any(d < EPS_DEGENERATE):
        raise DegenerateSkeletonError(f"neck-torso distance {np.min(d):.3g} mm is degenerate")
    return _rewrap(pos / np.asarray(d)[..., None, None], original)


def vectorize(positions: np.ndarray) -> np.ndarray:
    """(…, 15, 3) -> (…, 45), joint-major."""
    positions = np.asarray(positions, dtype=float)
    return positions.reshape(*positions.shape[:-2], DIM)


def unvectorize(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=float)
    return vectors.reshape(*vectors.shape[:-1], N_JOINTS, 3)


@dataclass(frozen=True, eq=False)
class PoseSequence:
    """Preconditioned pose vectors of one recording (or of its mirror copy)."""

    recording_id: str
    subject: int
    label: int
    vectors: np.ndarray  # (n, 45)
    frame_indices: np.ndarray  # (n,)
    mirrored: bool = False

    def __len__(self):
        return len(self.vectors)

    @property
    def key(self) -> str:
        return self.recording_id + ("~mirror" if self.mirrored else "")


def _precondition_positions(pos: np.ndarray, mode: PreconditionMode, name: str):
    keep = np.ones(len(pos), dtype=bool)
    if mode is PreconditionMode.NONE:
        return pos, keep
    pos = centre_on_hips(pos)
    if mode is PreconditionMode.CENTRE_MIRROR_NORMALIZE:
        d = neck_torso_distance(pos)
        keep = d >= EPS_DEGENERATE
        if not keep.all():
            warnings.warn(f"{name}: dropped {int((~keep).sum())} degenerate frames", DegenerateSkeletonWarning, stacklevel=3)
        pos = normalize_neck_torso(pos[keep])
    return pos, keep


def apply_preconditioning(corpus: Corpus, mode, role: str = "train") -> list[PoseSequence]:
    """Turn a corpus into pose sequences.

    Training sets under either centring mode are doubled: every centred
    sequence is followed (after all originals) by its mirror copy.  Test
    sets are never mirrored.
    """
    mode = PreconditionMode(mode)
    if role not in ("train", "test"):
        raise ValueError(f"role must be 'train' or 'test', not {role!r}")
    out = []
    for rec in corpus.recordings:
        pos, keep = _precondition_positions(rec.positions, mode, rec.recording_id)
        if len(pos) == 0:
            continue
        out.append(PoseSequence(rec.recording_id, rec.subject, rec.label, vectorize(pos), rec.frame_indices[keep]))
    if role == "train" and mode is not PreconditionMode.NONE:
        out += [
            PoseSequence(s.recording_id, s.subject, s.label, vectorize(mirror_x(unvectorize(s.vectors))), s.frame_indices, True)
            for s in list(out)
        ]
    return out


def stack(sequences: list[PoseSequence]) -> tuple[np.ndarray, np.ndarray]:
    """All vectors and their per-row labels."""
    if not sequences:
        return np.zeros((0, DIM)), np.zeros(0, dtype=np.int64)
    X = np.concatenate([s.vectors for s in sequences])
    y = np.concatenate([np.full(len(s), s.label, dtype=np.int64) for s in sequences])
    return X, y


def compute_velocities(vectors: np.ndarray) -> np.ndarray:
    """First differences v(k) = p(k) - p(k-1); empty when fewer than two frames."""
    vectors = np.asarray(vectors, dtype=float)
    if len(vectors) < 2:
        return np.zeros((0,) + vectors.shape[1:])
    return np.diff(vectors, axis=0)


def sliding_windows(vectors: np.ndarray, w: int, dilation: int = 1) -> np.ndarray:
    """Concatenate ``w`` vectors spaced ``dilation`` apart, at every start position.

    Returns an array of shape (max(0, n - (w-1)*dilation), w*D).
    """
    if w < 1 or dilation < 1:
        raise ValueError("window size and dilation must be >= 1")
    vectors = np.asarray(vectors, dtype=float)
    n, d = vectors.shape
    span = (w - 1) * dilation
    count = max(0, n - span)
    if count == 0:
        return np.zeros((0, w * d))
    return np.concatenate([vectors[i * dilation : i * dilation + count] for i in range(w)], axis=1)
