"""Rank metrics and the paired significance test used by the benchmark.

Conventions pinned here (and mirrored by the brute-force test oracles):
higher score = more in-distribution; the FPR@TPR threshold is the ascending
nearest-rank (1 - tpr) quantile of the ID scores with ties counted as
detected-ID; AUROC is the Mann-Whitney pair-counting statistic.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import norm, rankdata

from ._util import ceil_rank
from .errors import ValidationError

EXACT_WILCOXON_MAX_N = 20


def _check_scores(scores, name: str) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValidationError(f"{name} scores are empty")
    if not np.all(np.isfinite(s)):
        raise ValidationError(f"{name} scores contain non-finite values")
    return s


def fpr_at_tpr(id_scores, ood_scores, tpr: float = 0.95) -> float:
    """False-positive rate on OOD at the threshold keeping `tpr` of ID.

    The threshold is the ID score at ascending nearest rank
    ceil((1 - tpr) * n), clamped to the minimum; samples scoring >= the
    threshold count as detected-ID, so at least `tpr` of the ID scores pass.
    """
    id_s = _check_scores(id_scores, "ID")
    ood_s = _check_scores(ood_scores, "OOD")
    if not (0.0 < tpr <= 1.0):
        raise ValidationError(f"tpr must be in (0, 1], got {tpr}")
    srt = np.sort(id_s)
    rank = ceil_rank((1.0 - tpr) * srt.size)
    rank = min(max(rank, 1), srt.size)
    threshold = srt[rank - 1]
    return float(np.mean(ood_s >= threshold))


def auroc(id_scores, ood_scores) -> float:
    """Probability that an ID sample outscores an OOD sample (ties half).

    Computed from rank sums; equals exhaustive pair counting
    (#[ID > OOD] + 0.5 #ties) / (n_id * n_ood) exactly.
    """
    id_s = _check_scores(id_scores, "ID")
    ood_s = _check_scores(ood_scores, "OOD")
    ranks = rankdata(np.concatenate([id_s, ood_s]))
    u = ranks[: id_s.size].sum() - id_s.size * (id_s.size + 1) / 2.0
    return float(u / (id_s.size * ood_s.size))


def wilcoxon_signed_rank(paired_diffs, alternative: str = "greater") -> float:
    """One-sided signed-rank p-value for paired differences.

    Zero differences are dropped. For n <= 20 the exact null distribution of
    W+ is computed (equivalent to enumerating all 2^n sign assignments, with
    average ranks for tied magnitudes); larger n uses the normal
    approximation with tie and continuity corrections.
    """
    if alternative != "greater":
        raise ValidationError(f"only the 'greater' alternative is supported, got {alternative!r}")
    d = np.asarray(paired_diffs, dtype=np.float64).ravel()
    if not np.all(np.isfinite(d)):
        raise ValidationError("paired differences contain non-finite values")
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise ValidationError("all differences are zero; the test is undefined")

    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0.0].sum())

    if n <= EXACT_WILCOXON_MAX_N:
        return _exact_tail(ranks, w_plus)

    mean = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    z = (w_plus - mean - 0.5) / np.sqrt(var)
    return float(norm.sf(z))


def _exact_tail(ranks: np.ndarray, w_plus: float) -> float:
    # Average ranks are half-integer multiples; double them to integers and
    # convolve the subset-sum distribution (same null as 2^n enumeration).
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    total = int(r2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    w2 = int(np.rint(2.0 * w_plus))
    tail = counts[w2:].sum()
    return float(tail / 2.0 ** len(r2))
