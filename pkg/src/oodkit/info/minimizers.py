"""Exhaustive search for loss-minimizing sufficient representation maps.

Enumerates every deterministic map from the support of a finite joint into a
z alphabet of a given size, keeps the sufficient ones, and returns all maps
attaining the minimum bottleneck loss, each annotated with I(x_d; z). The
enumeration is chunked and fully vectorized; results are independent of the
chunking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientAlphabetError, ValidationError
from .joint import DiscreteJoint, RepresentationMap
from .measures import IBLossSpec, SUFFICIENCY_TOL, ib_loss

MAX_SUPPORT = 12
DEFAULT_MAX_MAPS = 5_000_000
TIE_TOL = 1e-9
_CHUNK = 1 << 16

# Below this smallest support mass, an impure z-fiber could in principle slip
# under the sufficiency tolerance, so the fast purity prefilter is disabled.
_PREFILTER_MIN_MASS = 1e-6


@dataclass(frozen=True)
class MinimizerRecord:
    rep: RepresentationMap
    loss: float
    mi_domain: float  # I(x_d; z)


@dataclass(frozen=True)
class EnumerationResult:
    minimizers: list[MinimizerRecord]
    n_maps: int
    n_sufficient: int
    min_loss: float
    beta_independent: bool  # I(z; y) is constant across sufficient maps

    def __iter__(self):
        return iter(self.minimizers)

    def __len__(self):
        return len(self.minimizers)


def _validate_h4_h5(joint: DiscreteJoint) -> None:
    if joint.mutual_information("x_d", "x_y") > SUFFICIENCY_TOL:
        raise ValidationError("joint violates H4: I(x_d; x_y) > 0")
    if not joint.variable_is_function_of("y", "x_y"):
        raise ValidationError("joint violates H5: y is not determined by x_y")
    if len(np.unique(joint.d_codes)) != 1:
        raise ValidationError("joint violates H5: d is not constant on the support")


def enumerate_minimizers(
    joint: DiscreteJoint,
    spec: IBLossSpec,
    z_alphabet_size: int,
    max_maps: int = DEFAULT_MAX_MAPS,
) -> EnumerationResult:
    """All sufficient maps of minimum loss, annotated with I(x_d; z).

    Raises InsufficientAlphabetError when no sufficient map exists at the
    requested alphabet size, and ValidationError when the search space
    z_alphabet_size ** |support| would exceed ``max_maps``.
    """
    s = joint.support_size
    if s > MAX_SUPPORT:
        raise ValidationError(f"support size {s} exceeds {MAX_SUPPORT}")
    m = int(z_alphabet_size)
    if not (1 <= m <= s):
        raise ValidationError(
            f"z alphabet size must be in [1, |support|={s}], got {m}"
        )
    _validate_h4_h5(joint)

    n_maps = m**s
    if n_maps > max_maps:
        raise ValidationError(
            f"exhaustive search over {m}^{s} = {n_maps} maps exceeds the "
            f"budget of {max_maps}"
        )

    p = joint.support_pmf
    y = joint.y_codes
    n_y = int(y.max()) + 1
    h_y = _grouped_entropy(y, p)

    # Impure pairs: support points whose shared z symbol breaks sufficiency.
    pairs = [
        (a, b) for a in range(s) for b in range(a + 1, s) if y[a] != y[b]
    ]
    use_prefilter = p.min() >= _PREFILTER_MIN_MASS

    # Weight columns: [p, p * 1{y=v} for each v]; (A == k) @ W then yields
    # the z-fiber mass and the (z, y) cell masses in one matmul per symbol.
    w = np.empty((s, n_y + 1))
    w[:, 0] = p
    for v in range(n_y):
        w[:, v + 1] = p * (y == v)

    pows = m ** np.arange(s, dtype=np.int64)
    running_min = np.inf
    cand_idx: list[np.ndarray] = []
    cand_loss: list[np.ndarray] = []
    n_sufficient = 0
    izy_lo, izy_hi = np.inf, -np.inf

    for lo in range(0, n_maps, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, n_maps), dtype=np.int64)
        digits = (idx[:, None] // pows[None, :]) % m

        if use_prefilter and pairs:
            viol = np.zeros(len(idx), dtype=bool)
            for a, b in pairs:
                viol |= digits[:, a] == digits[:, b]
            digits_c = digits[~viol]
            idx_c = idx[~viol]
        else:
            digits_c = digits
            idx_c = idx
        if len(idx_c) == 0:
            continue

        cells = np.empty((len(idx_c), m, n_y + 1))
        for k in range(m):
            cells[:, k, :] = (digits_c == k) @ w
        h_z = _xlogx_rows(cells[:, :, 0])
        h_zy = _xlogx_rows(cells[:, :, 1:].reshape(len(idx_c), -1))
        cmi = h_zy - h_z  # = H(y|z) since y is a function of x
        suff = cmi <= SUFFICIENCY_TOL
        if not np.any(suff):
            continue

        i_zy = h_z[suff] + h_y - h_zy[suff]
        loss = h_z[suff] - spec.beta * i_zy
        n_sufficient += int(suff.sum())
        izy_lo = min(izy_lo, float(i_zy.min()))
        izy_hi = max(izy_hi, float(i_zy.max()))

        running_min = min(running_min, float(loss.min()))
        keep = loss <= running_min + TIE_TOL
        cand_idx.append(idx_c[suff][keep])
        cand_loss.append(loss[keep])

    if n_sufficient == 0:
        raise InsufficientAlphabetError(
            f"no sufficient representation exists at z alphabet size {m}; "
            f"the label variable needs at least {n_y} symbols"
        )

    all_idx = np.concatenate(cand_idx)
    all_loss = np.concatenate(cand_loss)
    final = all_loss <= running_min + TIE_TOL
    order = np.argsort(all_idx[final])
    winner_idx = all_idx[final][order]

    points = joint.support_points()
    records = []
    for mi in winner_idx:
        digits = (mi // pows) % m
        rep = RepresentationMap({pt: int(dv) for pt, dv in zip(points, digits)})
        records.append(
            MinimizerRecord(
                rep=rep,
                loss=ib_loss(joint, rep, spec),
                mi_domain=joint.mutual_information("x_d", rep),
            )
        )

    return EnumerationResult(
        minimizers=records,
        n_maps=n_maps,
        n_sufficient=n_sufficient,
        min_loss=running_min,
        beta_independent=(izy_hi - izy_lo) <= TIE_TOL,
    )


def _grouped_entropy(codes: np.ndarray, weights: np.ndarray) -> float:
    masses = np.bincount(codes, weights=weights)
    masses = masses[masses > 0.0]
    return float(max(0.0, -np.dot(masses, np.log(masses))))


def _xlogx_rows(masses: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(masses > 0.0, masses * np.log(masses), 0.0)
    return np.maximum(0.0, -t.sum(axis=1))
