"""FeatureSet: the unit of benchmark I/O.

An N x D embedding matrix plus optional logits, penultimate activations,
classifier head, and class labels. Arrays are kept in the canonical on-disk
dtypes (float32 / int32) so file round-trips are bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Tolerance for checking stored logits against penultimate @ head.T + bias.
LOGIT_CONSISTENCY_ATOL = 1e-4


def _as_f32(a, name: str, ndim: int) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float32)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class FeatureSet:
    """Embeddings for one dataset split, with optional classifier outputs.

    Attributes:
        features: N x D feature matrix (the scoring space for KNN/Mahalanobis).
        logits: optional N x C classifier logits (MSP / Energy).
        penultimate: optional N x P activations feeding the head (ReAct).
        head_weights: optional C x P head weight matrix.
        head_bias: optional length-C bias vector (required with head_weights).
        labels: optional length-N integer class labels.
        meta: free-form provenance (source tag, split tag, seed).
    """

    features: np.ndarray
    logits: np.ndarray | None = None
    penultimate: np.ndarray | None = None
    head_weights: np.ndarray | None = None
    head_bias: np.ndarray | None = None
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "features", _as_f32(self.features, "features", 2))
        n = self.features.shape[0]
        if n < 1:
            raise ValidationError("FeatureSet needs at least one row")

        if self.logits is not None:
            object.__setattr__(self, "logits", _as_f32(self.logits, "logits", 2))
            if self.logits.shape[0] != n:
                raise ValidationError("logits row count does not match features")
            if self.logits.shape[1] < 2:
                raise ValidationError("logits need at least 2 classes")

        if self.penultimate is not None:
            object.__setattr__(
                self, "penultimate", _as_f32(self.penultimate, "penultimate", 2)
            )
            if self.penultimate.shape[0] != n:
                raise ValidationError("penultimate row count does not match features")

        if (self.head_weights is None) != (self.head_bias is None):
            raise ValidationError("head_weights and head_bias must be given together")
        if self.head_weights is not None:
            object.__setattr__(
                self, "head_weights", _as_f32(self.head_weights, "head_weights", 2)
            )
            object.__setattr__(
                self, "head_bias", _as_f32(self.head_bias, "head_bias", 1)
            )
            if self.head_bias.shape[0] != self.head_weights.shape[0]:
                raise ValidationError("head_bias length does not match head_weights rows")
            if self.penultimate is not None:
                if self.penultimate.shape[1] != self.head_weights.shape[1]:
                    raise ValidationError(
                        "head_weights columns do not match penultimate width"
                    )
                if self.logits is not None:
                    recon = self.penultimate @ self.head_weights.T + self.head_bias
                    if not np.allclose(
                        recon, self.logits, atol=LOGIT_CONSISTENCY_ATOL, rtol=0.0
                    ):
                        raise ValidationError(
                            "stored logits disagree with penultimate @ head.T + bias"
                        )

        if self.labels is not None:
            lab = np.ascontiguousarray(self.labels, dtype=np.int32)
            if lab.ndim != 1 or lab.shape[0] != n:
                raise ValidationError("labels must be a length-N vector")
            object.__setattr__(self, "labels", lab)
            c = self.n_classes
            if lab.min(initial=0) < 0:
                raise ValidationError("labels must be non-negative")
            if c is not None and lab.max(initial=-1) >= c:
                raise ValidationError(f"labels must lie in [0, {c})")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def feat_dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int | None:
        """Class count from logits or head, if either is present."""
        if self.logits is not None:
            return self.logits.shape[1]
        if self.head_weights is not None:
            return self.head_weights.shape[0]
        return None

    def equals(self, other: "FeatureSet") -> bool:
        """Bit-exact equality of all array blocks and metadata."""

        def same(a, b):
            if (a is None) != (b is None):
                return False
            return a is None or (a.shape == b.shape and np.array_equal(a, b))

        return (
            same(self.features, other.features)
            and same(self.logits, other.logits)
            and same(self.penultimate, other.penultimate)
            and same(self.head_weights, other.head_weights)
            and same(self.head_bias, other.head_bias)
            and same(self.labels, other.labels)
            and self.meta == other.meta
        )
