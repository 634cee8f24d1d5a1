"""Distance measures, per-class models and nearest-match classification."""

from __future__ import annotations

import enum
import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import ClassLabel
from .errors import (CorruptModel, EmptyClass, FormatVersionMismatch,
                     LengthMismatch, SigcatError)
from .features import FeatureKind

VARIANCE_FLOOR = 1e-6
DEFAULT_MINKOWSKI_P = 3.0
DEFAULT_DIFF_DELTA = 1e-4

MAGIC = b"SGCM"
FORMAT_VERSION = 1


class ClusteringKind(enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"
    NONE = "none"


class DistanceKind(enum.Enum):
    CHEBYSHEV = "cheb"
    EUCLIDEAN = "eucl"
    MINKOWSKI = "mink"
    MAHALANOBIS = "maha"
    DIFF = "diff"
    HAMMING = "hamming"
    COSINE = "cos"


# Cosine is opt-in and not part of the exhaustive sweep.
SWEEP_DISTANCES = tuple(d for d in DistanceKind if d is not DistanceKind.COSINE)


@dataclass(frozen=True)
class DistanceParams:
    minkowski_p: float = DEFAULT_MINKOWSKI_P
    diff_delta: float = DEFAULT_DIFF_DELTA
    variance: Optional[np.ndarray] = None


def _pairwise(query: np.ndarray, stored: np.ndarray, kind: DistanceKind,
              params: DistanceParams) -> np.ndarray:
    """Distances from each query row to each stored row, shape (m, n)."""
    if kind is DistanceKind.COSINE:
        qn = np.sqrt(np.einsum("ij,ij->i", query, query))
        sn = np.sqrt(np.einsum("ij,ij->i", stored, stored))
        dot = query @ stored.T
        denom = qn[:, None] * sn[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 1.0 - dot / denom
        out[denom == 0] = 1.0
        return out

    diff = np.abs(query[:, None, :] - stored[None, :, :])
    if kind is DistanceKind.CHEBYSHEV:
        return diff.max(axis=2)
    if kind is DistanceKind.EUCLIDEAN:
        return np.sqrt((diff * diff).sum(axis=2))
    if kind is DistanceKind.MINKOWSKI:
        p = params.minkowski_p
        return (diff ** p).sum(axis=2) ** (1.0 / p)
    if kind is DistanceKind.MAHALANOBIS:
        var = params.variance
        if var is None:
            var = np.ones(query.shape[1])
        var = np.maximum(np.asarray(var, dtype=np.float64), VARIANCE_FLOOR)
        return np.sqrt((diff * diff / var).sum(axis=2))
    over = diff > params.diff_delta
    if kind is DistanceKind.DIFF:
        return np.where(over, diff, 0.0).sum(axis=2)
    return over.sum(axis=2).astype(np.float64)


def pairwise(query, stored, kind: DistanceKind, params: DistanceParams = DistanceParams(),
             chunk_elements: int = 1 << 22) -> np.ndarray:
    query = np.atleast_2d(np.asarray(query, dtype=np.float64))
    stored = np.atleast_2d(np.asarray(stored, dtype=np.float64))
    if query.shape[1] != stored.shape[1]:
        raise LengthMismatch(f"vector lengths differ: {query.shape[1]} vs {stored.shape[1]}")
    kind = DistanceKind(kind)
    rows = max(1, chunk_elements // max(1, stored.shape[0] * stored.shape[1]))
    parts = [_pairwise(query[i:i + rows], stored, kind, params)
             for i in range(0, query.shape[0], rows)]
    return np.vstack(parts) if parts else np.zeros((0, stored.shape[0]))


def distance(a, b, kind: DistanceKind, params: DistanceParams = DistanceParams()) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"vector shapes differ: {a.shape} vs {b.shape}")
    return float(pairwise(a, b, kind, params)[0, 0])


@dataclass(frozen=True, eq=False)
class TrainedModel:
    per_class: Mapping[ClassLabel, np.ndarray]
    clustering: ClusteringKind
    feature_kind: FeatureKind
    fingerprint: str = ""
    variance: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.per_class:
            raise EmptyClass("model has no classes")
        lengths = {v.shape[1] for v in self.per_class.values()}
        if len(lengths) != 1:
            raise LengthMismatch(f"stored vectors have mixed lengths {sorted(lengths)}")
        for label, vectors in self.per_class.items():
            if vectors.ndim != 2 or vectors.shape[0] == 0:
                raise EmptyClass(f"class {label.spelling} has no stored vectors")
            if self.clustering is not ClusteringKind.NONE and vectors.shape[0] != 1:
                raise CorruptModel(f"{self.clustering.value} model stores "
                                   f"{vectors.shape[0]} vectors for {label.spelling}")

    @property
    def labels(self) -> list[ClassLabel]:
        return sorted(self.per_class)

    @property
    def dimension(self) -> int:
        return next(iter(self.per_class.values())).shape[1]

    def stacked(self):
        """All stored vectors in class-ordinal order plus the owning label per row."""
        labels = self.labels
        matrix = np.vstack([self.per_class[c] for c in labels])
        owner = np.concatenate([np.full(self.per_class[c].shape[0], int(c)) for c in labels])
        return matrix, owner

    def __eq__(self, other):
        if not isinstance(other, TrainedModel):
            return NotImplemented
        if (self.clustering, self.feature_kind, self.fingerprint) != \
                (other.clustering, other.feature_kind, other.fingerprint):
            return False
        if self.labels != other.labels:
            return False
        if any(not np.array_equal(self.per_class[c], other.per_class[c]) for c in self.labels):
            return False
        if (self.variance is None) != (other.variance is None):
            return False
        return self.variance is None or np.array_equal(self.variance, other.variance)


def pooled_variance(vectors: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Within-class variance pooled over classes, per dimension."""
    total = np.zeros(vectors.shape[1])
    classes = np.unique(labels)
    for c in classes:
        block = vectors[labels == c]
        total += ((block - block.mean(axis=0)) ** 2).sum(axis=0)
    dof = max(vectors.shape[0] - classes.size, 1)
    return np.maximum(total / dof, VARIANCE_FLOOR)


def train(vectors, labels: Sequence[ClassLabel], clustering: ClusteringKind,
          feature_kind: FeatureKind = FeatureKind.FFT, fingerprint: str = "") -> TrainedModel:
    clustering = ClusteringKind(clustering)
    labels = [ClassLabel(c) for c in labels]
    if len(labels) == 0:
        raise EmptyClass("no training samples")
    rows = [np.asarray(v, dtype=np.float64) for v in vectors]
    if len(rows) != len(labels):
        raise LengthMismatch(f"{len(rows)} vectors but {len(labels)} labels")
    if len({r.shape for r in rows}) != 1 or rows[0].ndim != 1:
        raise LengthMismatch("training vectors must share one length")
    matrix = np.vstack(rows)
    owner = np.array([int(c) for c in labels])

    per_class = {}
    for c in sorted(set(labels)):
        block = matrix[owner == int(c)]
        if clustering is ClusteringKind.MEAN:
            block = block.mean(axis=0, keepdims=True)
        elif clustering is ClusteringKind.MEDIAN:
            block = np.median(block, axis=0, keepdims=True)
        else:
            block = block.copy()
        per_class[c] = block
    return TrainedModel(per_class, clustering, FeatureKind(feature_kind), fingerprint,
                        pooled_variance(matrix, owner))


@dataclass(frozen=True)
class ClassificationResult:
    label: ClassLabel
    score: float
    per_class_best: dict = field(default_factory=dict)


def _params_for(model: TrainedModel, params: Optional[DistanceParams]) -> DistanceParams:
    params = params or DistanceParams()
    if params.variance is None and model.variance is not None:
        params = DistanceParams(params.minkowski_p, params.diff_delta, model.variance)
    return params


def classify_many(queries, model: TrainedModel, kind: DistanceKind,
                  params: Optional[DistanceParams] = None) -> list[ClassificationResult]:
    """Nearest stored vector per class; lowest class ordinal wins ties."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    params = _params_for(model, params)
    labels = model.labels
    best = np.empty((queries.shape[0], len(labels)))
    for j, c in enumerate(labels):
        best[:, j] = pairwise(queries, model.per_class[c], kind, params).min(axis=1)
    winners = np.argmin(best, axis=1)
    return [ClassificationResult(labels[w], float(row[w]),
                                 {c: float(x) for c, x in zip(labels, row)})
            for w, row in zip(winners, best)]


def classify_one(v, model: TrainedModel, kind: DistanceKind,
                 params: Optional[DistanceParams] = None) -> ClassificationResult:
    return classify_many(np.asarray(v, dtype=np.float64)[None, :], model, kind, params)[0]


# --------------------------------------------------------------------------
# Persistence
#
# "SGCM" | u16 version | u32 header length | JSON header | float64 LE blocks
# (per class in header order, then the variance if present) | u32 CRC-32 of
# every preceding byte. All integers little-endian.

def dump_model(model: TrainedModel) -> bytes:
    labels = model.labels
    header = {
        "clustering": model.clustering.value,
        "feature": model.feature_kind.value,
        "fingerprint": model.fingerprint,
        "dimension": model.dimension,
        "classes": [[c.spelling, int(model.per_class[c].shape[0])] for c in labels],
        "variance": model.variance is not None,
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    blocks = [model.per_class[c].astype("<f8").tobytes() for c in labels]
    if model.variance is not None:
        blocks.append(np.asarray(model.variance).astype("<f8").tobytes())
    body = MAGIC + struct.pack("<HI", FORMAT_VERSION, len(head)) + head + b"".join(blocks)
    return body + struct.pack("<I", zlib.crc32(body))


def parse_model(blob: bytes) -> TrainedModel:
    if len(blob) < 14 or blob[:4] != MAGIC:
        raise CorruptModel("not a model file (bad magic or too short)")
    version, head_len = struct.unpack_from("<HI", blob, 4)
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(f"model format version {version}, expected {FORMAT_VERSION}")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptModel("checksum mismatch")
    try:
        header = json.loads(body[10:10 + head_len].decode("utf-8"))
        dim = int(header["dimension"])
        offset = 10 + head_len
        per_class = {}
        for name, count in header["classes"]:
            size = 8 * dim * count
            chunk = body[offset:offset + size]
            if len(chunk) != size:
                raise CorruptModel("vector block truncated")
            per_class[ClassLabel.parse(name)] = np.frombuffer(chunk, "<f8").astype(np.float64).reshape(count, dim)
            offset += size
        variance = None
        if header["variance"]:
            chunk = body[offset:offset + 8 * dim]
            if len(chunk) != 8 * dim:
                raise CorruptModel("variance block truncated")
            variance = np.frombuffer(chunk, "<f8").astype(np.float64)
            offset += 8 * dim
        if offset != len(body):
            raise CorruptModel("trailing bytes after model payload")
        return TrainedModel(per_class, ClusteringKind(header["clustering"]),
                            FeatureKind(header["feature"]), header["fingerprint"], variance)
    except SigcatError as exc:
        if isinstance(exc, CorruptModel):
            raise
        raise CorruptModel(str(exc)) from None
    except (KeyError, ValueError, TypeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"malformed header: {exc}") from None


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_bytes(dump_model(model))


def load_model(path) -> TrainedModel:
    return parse_model(Path(path).read_bytes())
