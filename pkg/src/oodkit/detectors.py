"""Post-hoc OOD scoring methods over embeddings and logits.

Every scorer returns values where HIGHER means MORE in-distribution, so the
OOD probability of a softmax-based score is 1 - score. Fitted models are
immutable; scoring is read-only and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._util import ceil_rank
from .errors import FitError, ValidationError
from .features import FeatureSet

KNOWN_KINDS = ("msp", "energy", "mahalanobis", "knn", "react")

# Shrinkage scale for the shared covariance; keeps it positive definite on
# small or collinear feature sets.
MAHALANOBIS_SHRINKAGE = 1e-6


def _check_logits(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape[-1] < 2:
        raise ValidationError("logits need at least 2 classes")
    if not np.all(np.isfinite(logits)):
        raise ValidationError("logits contain non-finite values")
    return logits


def score_msp(logits) -> np.ndarray | float:
    """Maximum softmax probability; in (1/C, 1]. Stable via max-subtraction."""
    logits = _check_logits(logits)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    probs = np.exp(shifted)
    out = probs.max(axis=-1) / probs.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def score_energy(logits, temperature: float = 1.0) -> np.ndarray | float:
    """T * logsumexp(logits / T); shift-equivariant in the logits."""
    if not (temperature > 0.0):
        raise ValidationError(f"temperature must be positive, got {temperature}")
    logits = _check_logits(logits)
    out = temperature * logsumexp(logits / temperature, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


# Cap on the number of pairwise-distance entries materialized at once.
_SQ_CHUNK_ENTRIES = 1 << 24


def _pairwise_sq_dists(queries: np.ndarray, index: np.ndarray) -> np.ndarray:
    # (q - x)^2 expansion; clamped at 0 against round-off.
    sq = (
        (queries * queries).sum(axis=1)[:, None]
        + (index * index).sum(axis=1)[None, :]
        - 2.0 * (queries @ index.T)
    )
    return np.maximum(sq, 0.0)


def _kth_sq_dists(
    queries: np.ndarray, index: np.ndarray, k: int, exclude_row_offset: int | None = None
) -> np.ndarray:
    """Squared distance to the k-th nearest indexed row, chunked over queries.

    With exclude_row_offset set, query i skips index row offset + i (used for
    self-excluded calibration distances).
    """
    n = queries.shape[0]
    chunk = max(1, _SQ_CHUNK_ENTRIES // max(1, index.shape[0]))
    out = np.empty(n)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        sq = _pairwise_sq_dists(queries[lo:hi], index)
        if exclude_row_offset is not None:
            rows = np.arange(lo, hi)
            sq[rows - lo, exclude_row_offset + rows] = np.inf
        out[lo:hi] = np.partition(sq, k - 1, axis=1)[:, k - 1]
    return out


def _l2_normalize(rows: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValidationError(f"{what}: zero vector cannot be L2-normalized")
    return rows / norms


@dataclass(frozen=True)
class KNNDetector:
    """Exact k-nearest-neighbor distance scorer.

    Score is the negated Euclidean distance to the k-th nearest indexed row;
    rows and queries are L2-normalized first unless normalize=False.
    """

    index: np.ndarray
    k: int
    normalize: bool
    kind: str = "knn"

    def score(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        q = np.atleast_2d(x)
        if q.shape[1] != self.index.shape[1]:
            raise ValidationError(
                f"query dimension {q.shape[1]} does not match index "
                f"dimension {self.index.shape[1]}"
            )
        if not np.all(np.isfinite(q)):
            raise ValidationError("query contains non-finite values")
        if self.normalize:
            q = _l2_normalize(q, "query")
        kth = _kth_sq_dists(q, self.index, self.k)
        out = -np.sqrt(kth)
        return float(out[0]) if single else out

    def kth_distance(self, x) -> np.ndarray | float:
        """Distance to the k-th nearest indexed row (the raw filter signal)."""
        out = self.score(x)
        return -out

    def self_excluded_distances(self) -> np.ndarray:
        """k-th-NN distance of each indexed row to the REST of the index."""
        if self.k > self.index.shape[0] - 1:
            raise ValidationError(
                f"k={self.k} needs at least k+1 indexed rows for "
                f"self-excluded distances"
            )
        kth = _kth_sq_dists(self.index, self.index, self.k, exclude_row_offset=0)
        return np.sqrt(kth)

    def score_set(self, fs: FeatureSet) -> np.ndarray:
        return self.score(fs.features)


def fit_knn(train: FeatureSet, k: int = 50, normalize: bool = True) -> KNNDetector:
    if k < 1:
        raise ValidationError(f"k must be at least 1, got {k}")
    rows = np.asarray(train.features, dtype=np.float64)
    if k > rows.shape[0]:
        raise ValidationError(f"k={k} exceeds the {rows.shape[0]} indexed rows")
    if normalize:
        rows = _l2_normalize(rows, "train features")
    return KNNDetector(index=rows, k=k, normalize=normalize)


@dataclass(frozen=True)
class MahalanobisDetector:
    """Class-conditional Gaussian scorer with a shared covariance.

    Score is the negated squared Mahalanobis distance to the nearest class
    mean (no square root: rank-equivalent and cheaper).
    """

    means: np.ndarray  # C x D
    precision: np.ndarray  # D x D
    kind: str = "mahalanobis"

    def score(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        q = np.atleast_2d(x)
        if q.shape[1] != self.means.shape[1]:
            raise ValidationError(
                f"query dimension {q.shape[1]} does not match fitted "
                f"dimension {self.means.shape[1]}"
            )
        # dist[n, c] = (x_n - mu_c) P (x_n - mu_c)^T
        diffs = q[:, None, :] - self.means[None, :, :]
        d = np.einsum("ncd,de,nce->nc", diffs, self.precision, diffs)
        out = -d.min(axis=1)
        return float(out[0]) if single else out

    def score_set(self, fs: FeatureSet) -> np.ndarray:
        return self.score(fs.features)


def fit_mahalanobis(train: FeatureSet, shrinkage: float | None = None) -> MahalanobisDetector:
    """Per-class means plus shared covariance (1/N) sum of within-class
    scatter, shrunk by eps*I with eps = 1e-6 * trace/D unless overridden."""
    if train.labels is None:
        raise FitError("mahalanobis needs labeled training features")
    x = np.asarray(train.features, dtype=np.float64)
    labels = train.labels
    classes = np.unique(labels)
    if len(classes) < 1:
        raise FitError("no classes present")
    n, d = x.shape
    means = np.empty((len(classes), d))
    scatter = np.zeros((d, d))
    for ci, c in enumerate(classes):
        rows = x[labels == c]
        if rows.shape[0] < 2:
            raise FitError(f"class {c} has {rows.shape[0]} samples, need at least 2")
        mu = rows.mean(axis=0)
        means[ci] = mu
        centered = rows - mu
        scatter += centered.T @ centered
    cov = scatter / n
    if shrinkage is None:
        shrinkage = MAHALANOBIS_SHRINKAGE * np.trace(cov) / d
    cov = cov + shrinkage * np.eye(d)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as e:
        raise FitError(f"covariance singular after shrinkage eps={shrinkage:g}") from e
    ident = np.eye(d)
    inv_chol = np.linalg.solve(chol, ident)
    precision = inv_chol.T @ inv_chol
    return MahalanobisDetector(means=means, precision=precision)


@dataclass(frozen=True)
class ReActDetector:
    """Energy score after clipping penultimate activations at a percentile.

    The clip threshold is the nearest-rank percentile of the pooled training
    activations (pooled over units, not per-unit).
    """

    clip: float
    head_weights: np.ndarray
    head_bias: np.ndarray
    temperature: float = 1.0
    kind: str = "react"

    def score(self, penultimate_row) -> np.ndarray | float:
        a = np.asarray(penultimate_row, dtype=np.float64)
        single = a.ndim == 1
        q = np.atleast_2d(a)
        if q.shape[1] != self.head_weights.shape[1]:
            raise ValidationError(
                f"activation dimension {q.shape[1]} does not match head "
                f"dimension {self.head_weights.shape[1]}"
            )
        clipped = np.minimum(q, self.clip)
        logits = clipped @ self.head_weights.T + self.head_bias
        out = score_energy(logits, self.temperature)
        return float(np.atleast_1d(out)[0]) if single else out

    def score_set(self, fs: FeatureSet) -> np.ndarray:
        if fs.penultimate is None:
            raise ValidationError("feature set has no penultimate activations")
        return self.score(fs.penultimate)


def nearest_rank_percentile(values: np.ndarray, percentile: float) -> float:
    """Sorted-ascending value at 1-based rank ceil(p/100 * n)."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        raise ValidationError("empty sample for percentile")
    rank = ceil_rank(percentile / 100.0 * v.size)
    rank = min(max(rank, 1), v.size)
    return float(v[rank - 1])


def fit_react(train: FeatureSet, clip_percentile: float = 90.0) -> ReActDetector:
    missing = []
    if train.penultimate is None:
        missing.append("penultimate")
    if train.head_weights is None:
        missing.append("head_weights")
    if missing:
        raise FitError(f"react needs {' and '.join(missing)} in the training set")
    if not (0.0 < clip_percentile < 100.0):
        raise ValidationError(f"clip_percentile must be in (0, 100), got {clip_percentile}")
    clip = nearest_rank_percentile(train.penultimate, clip_percentile)
    if not (np.isfinite(clip) and clip > 0.0):
        raise FitError(f"clip threshold must be finite and positive, got {clip}")
    return ReActDetector(
        clip=clip,
        head_weights=np.asarray(train.head_weights, dtype=np.float64),
        head_bias=np.asarray(train.head_bias, dtype=np.float64),
    )


@dataclass(frozen=True)
class LogitDetector:
    """Stateless MSP or Energy scorer wrapped with the common interface."""

    kind: str
    temperature: float = 1.0

    def score(self, logits) -> np.ndarray | float:
        if self.kind == "msp":
            return score_msp(logits)
        return score_energy(logits, self.temperature)

    def score_set(self, fs: FeatureSet) -> np.ndarray:
        if fs.logits is None:
            raise ValidationError(f"{self.kind} requires logits")
        return self.score(fs.logits)


def make_detector(kind: str, train: FeatureSet, **params):
    """Fit (or instantiate) a detector by kind name."""
    if kind == "msp":
        return LogitDetector(kind="msp")
    if kind == "energy":
        return LogitDetector(kind="energy", temperature=params.get("temperature", 1.0))
    if kind == "mahalanobis":
        return fit_mahalanobis(train, shrinkage=params.get("shrinkage"))
    if kind == "knn":
        return fit_knn(
            train, k=params.get("k", 50), normalize=params.get("normalize", True)
        )
    if kind == "react":
        return fit_react(train, clip_percentile=params.get("clip_percentile", 90.0))
    raise ValidationError(f"unknown detector kind {kind!r}; known: {KNOWN_KINDS}")
