"""Two-stage detection: percentile-calibrated domain filter + second stage.

Stage 1 thresholds k-th-NN distances in a feature space that retains domain
information (a pretrained backbone's space, or raw features in synthetic
runs). Samples passing the filter are scored by an arbitrary second-stage
detector fitted in the supervised space; samples rejected by the filter are
pushed strictly below every second-stage score via a floor offset, ordered
among themselves by how far they overshoot the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import ceil_rank
from .detectors import KNNDetector, fit_knn
from .errors import ConfigError, ValidationError
from .features import FeatureSet

DEFAULT_P = 0.99
DEFAULT_K = 50
MIN_CALIBRATION_SAMPLES = 10


def calibrate_domain_threshold(train_distances, p: float) -> float:
    """Nearest-rank p-quantile of calibration distances.

    Sort ascending and take the 1-based rank ceil(p * n); at least the
    fraction p of the calibration distances is <= the returned threshold.
    """
    d = np.asarray(train_distances, dtype=np.float64).ravel()
    if d.size == 0:
        raise ValidationError("no calibration distances given")
    if d.size < MIN_CALIBRATION_SAMPLES:
        raise ValidationError(
            f"need at least {MIN_CALIBRATION_SAMPLES} calibration distances, got {d.size}"
        )
    if not (0.0 < p <= 1.0):
        raise ValidationError(f"percentile p must be in (0, 1], got {p}")
    d = np.sort(d)
    rank = ceil_rank(p * d.size)
    rank = min(max(rank, 1), d.size)
    return float(d[rank - 1])


@dataclass(frozen=True)
class DomainFilter:
    """KNN distance filter with a percentile-calibrated threshold."""

    knn: KNNDetector
    t_d: float
    p: float
    k: int

    def distances(self, x_pretrained) -> np.ndarray | float:
        try:
            return self.knn.kth_distance(x_pretrained)
        except ValidationError as e:
            raise ValidationError(f"pretrained space: {e}") from e

    def flags(self, x_pretrained) -> np.ndarray | bool:
        """True where the sample is rejected as out-of-domain."""
        d = self.distances(x_pretrained)
        return d > self.t_d

    def flag_rate(self, fs: FeatureSet) -> float:
        return float(np.mean(self.flags(fs.features)))


def fit_domain_filter(
    train_pretrained: FeatureSet,
    p: float = DEFAULT_P,
    k: int = DEFAULT_K,
    normalize: bool = True,
) -> DomainFilter:
    """Calibrate t_d on self-excluded k-th-NN distances of the training set.

    Each training point's zero-distance self match is excluded, otherwise
    calibration at small k is degenerate.
    """
    knn = fit_knn(train_pretrained, k=k, normalize=normalize)
    dists = knn.self_excluded_distances()
    t_d = calibrate_domain_threshold(dists, p)
    return DomainFilter(knn=knn, t_d=t_d, p=p, k=k)


@dataclass(frozen=True)
class TwoStageDetector:
    """Domain filter composed with a second-stage detector.

    score_floor sits strictly below every second-stage score seen on the
    calibration ID data; filtered samples score score_floor - (d_k - t_d),
    so they rank strictly below unfiltered samples and are ordered among
    themselves by distance overshoot.
    """

    filter: DomainFilter
    second_stage: object
    score_floor: float
    tau: float | None = None

    def _second_scores(self, x_supervised) -> np.ndarray | float:
        try:
            return self.second_stage.score(x_supervised)
        except ValidationError as e:
            raise ValidationError(f"supervised space: {e}") from e


# How far below the calibration score range the floor sits. The filtered /
# unfiltered cross-ranking is guaranteed for unfiltered samples scoring at
# least score_floor; the margin makes that cover anything remotely close to
# the calibration distribution, not just its exact range.
_FLOOR_MARGIN = 4.0


def make_two_stage(
    domain_filter: DomainFilter,
    second_stage,
    calibration_supervised: FeatureSet,
    tau: float | None = None,
) -> TwoStageDetector:
    """Fix the score floor from second-stage scores on calibration ID data."""
    scores = np.atleast_1d(second_stage.score_set(calibration_supervised))
    lo, hi = float(scores.min()), float(scores.max())
    floor = lo - _FLOOR_MARGIN * max(1.0, hi - lo)
    return TwoStageDetector(
        filter=domain_filter, second_stage=second_stage, score_floor=floor, tau=tau
    )


def two_stage_score(x_pretrained, x_supervised, det: TwoStageDetector):
    """Combined score; pass-through of the second stage when in-domain.

    Filtered samples return score_floor - (d_k - t_d) < score_floor; every
    filtered sample therefore ranks strictly below every unfiltered one.
    """
    single = np.ndim(x_pretrained) == 1
    d_k = np.atleast_1d(det.filter.distances(x_pretrained))
    second = np.atleast_1d(det._second_scores(x_supervised))
    if d_k.shape[0] != second.shape[0]:
        raise ValidationError(
            f"pretrained view has {d_k.shape[0]} rows, supervised view has "
            f"{second.shape[0]}"
        )
    rejected = d_k > det.filter.t_d
    out = np.where(rejected, det.score_floor - (d_k - det.filter.t_d), second)
    return float(out[0]) if single else out


def two_stage_decide(x_pretrained, x_supervised, det: TwoStageDetector):
    """Binary OOD decision (True = OOD); requires tau.

    Stage 1 rejects when d_k > t_d. Otherwise a sample is OOD when its
    second-stage (ID-oriented) score falls strictly below tau; ties at tau
    resolve to ID.
    """
    if det.tau is None:
        raise ConfigError("two_stage_decide needs a decision threshold tau")
    single = np.ndim(x_pretrained) == 1
    d_k = np.atleast_1d(det.filter.distances(x_pretrained))
    second = np.atleast_1d(det._second_scores(x_supervised))
    out = (d_k > det.filter.t_d) | (second < det.tau)
    return bool(out[0]) if single else out


def two_stage_score_set(
    det: TwoStageDetector, pretrained: FeatureSet, supervised: FeatureSet
) -> np.ndarray:
    """Set-level combined scores; the supervised block is chosen per the
    second stage's score_set."""
    d_k = np.atleast_1d(det.filter.distances(pretrained.features))
    second = np.atleast_1d(det.second_stage.score_set(supervised))
    if d_k.shape[0] != second.shape[0]:
        raise ValidationError("pretrained and supervised views differ in length")
    rejected = d_k > det.filter.t_d
    return np.where(rejected, det.score_floor - (d_k - det.filter.t_d), second)
