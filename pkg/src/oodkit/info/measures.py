"""Entropy, mutual information, IB loss, sufficiency, and lemma checks.

All quantities are exact finite-alphabet computations in nats; convert to
bits only at display time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OODKitError, ValidationError
from .joint import DiscreteJoint, RepresentationMap, xlogx_sum

PMF_INPUT_TOL = 1e-9
SUFFICIENCY_TOL = 1e-9
LEMMA_TOL = 1e-12


def entropy(pmf) -> float:
    """Shannon entropy H = -sum p ln p of a probability vector, in nats."""
    p = np.asarray(pmf, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValidationError("empty probability vector")
    if np.any(p < 0.0):
        raise ValidationError("probabilities must be non-negative")
    total = p.sum()
    if abs(total - 1.0) > PMF_INPUT_TOL:
        raise ValidationError(f"probabilities sum to {total!r}, expected 1")
    return xlogx_sum(p)


def mutual_information(joint: DiscreteJoint, a, b) -> float:
    """I(a; b) over a finite joint; selectors as in DiscreteJoint.codes_for."""
    return joint.mutual_information(a, b)


def conditional_mi(joint: DiscreteJoint, a, b, given) -> float:
    """I(a; b | given); non-negative."""
    return joint.conditional_mi(a, b, given)


@dataclass(frozen=True)
class IBLossSpec:
    """Complexity/utility trade-off coefficient for the bottleneck loss."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ValidationError(f"beta must be positive, got {self.beta}")


def ib_loss(joint: DiscreteJoint, z: RepresentationMap, spec: IBLossSpec) -> float:
    """Bottleneck loss I(x; z) - beta * I(z; y) for a deterministic map z.

    Because z is a function of x, I(x; z) = H(z); both are computed and
    cross-checked before the factorized form is used.
    """
    i_xz = joint.mutual_information("x", z)
    h_z = joint.entropy_of(z)
    if abs(i_xz - h_z) > 1e-10:
        raise OODKitError(
            f"deterministic-map identity violated: I(x;z)={i_xz!r} vs H(z)={h_z!r}"
        )
    return h_z - spec.beta * joint.mutual_information(z, "y")


def is_sufficient(joint: DiscreteJoint, z: RepresentationMap) -> bool:
    """True iff I(x; y | z) vanishes (within SUFFICIENCY_TOL nats).

    When sufficient, the equivalent characterization I(y; z) = I(x; y) is
    asserted as an internal consistency check.
    """
    cmi = joint.conditional_mi("x", "y", z)
    sufficient = cmi <= SUFFICIENCY_TOL
    if sufficient:
        gap = abs(joint.mutual_information("y", z) - joint.mutual_information("x", "y"))
        if gap > SUFFICIENCY_TOL:
            raise OODKitError(
                f"sufficiency equivalence violated: |I(y;z) - I(x;y)| = {gap:.3e}"
            )
    return sufficient


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    holds: bool
    skipped: bool = False
    detail: str = ""


@dataclass(frozen=True)
class LemmaReport:
    """Outcome of the supporting-lemma checks for one (joint, map) pair."""

    info_bound: LemmaCheck        # I(x;z) >= I(z;y), and >= I(x;y) if sufficient
    loss_factorization: LemmaCheck  # I(x;z) = H(z)
    noise_conditioning: LemmaCheck  # I(part; z | other) = I(part; z)
    sufficiency_identity: LemmaCheck  # I(x;y) - I(y;z) = I(x;y|z)

    @property
    def all_hold(self) -> bool:
        return all(
            c.holds or c.skipped
            for c in (
                self.info_bound,
                self.loss_factorization,
                self.noise_conditioning,
                self.sufficiency_identity,
            )
        )


def verify_lemmas(
    joint: DiscreteJoint, z: RepresentationMap, tol: float = LEMMA_TOL
) -> LemmaReport:
    """Check the information-bound, factorization, and noise-conditioning
    lemmas plus the sufficiency identity on one instance.

    The noise-conditioning check requires the two coordinates to be
    independent and z to depend on exactly one of them; otherwise it is
    reported as skipped with the reason, never raised.
    """
    i_xz = joint.mutual_information("x", z)
    i_zy = joint.mutual_information(z, "y")
    i_xy = joint.mutual_information("x", "y")
    h_z = joint.entropy_of(z)

    c1_ok = i_xz >= i_zy - tol
    detail = f"I(x;z)={i_xz:.12f} I(z;y)={i_zy:.12f}"
    sufficient = joint.conditional_mi("x", "y", z) <= SUFFICIENCY_TOL
    if sufficient:
        c1_ok = c1_ok and i_xz >= i_xy - tol
        detail += f" I(x;y)={i_xy:.12f} (sufficient)"
    info_bound = LemmaCheck("info_bound", c1_ok, detail=detail)

    loss_factorization = LemmaCheck(
        "loss_factorization",
        abs(i_xz - h_z) <= tol,
        detail=f"I(x;z)={i_xz:.12f} H(z)={h_z:.12f}",
    )

    noise_conditioning = _check_noise_conditioning(joint, z, tol)

    gap = abs((i_xy - i_zy) - joint.conditional_mi("x", "y", z))
    sufficiency_identity = LemmaCheck(
        "sufficiency_identity", gap <= tol, detail=f"|I(x;y)-I(y;z)-I(x;y|z)|={gap:.3e}"
    )

    return LemmaReport(info_bound, loss_factorization, noise_conditioning, sufficiency_identity)


def _check_noise_conditioning(joint, z, tol) -> LemmaCheck:
    if joint.mutual_information("x_d", "x_y") > tol:
        return LemmaCheck(
            "noise_conditioning", False, skipped=True,
            detail="coordinates are not independent",
        )
    if joint.variable_is_function_of(z, "x_y"):
        part, noise = "x_y", "x_d"
    elif joint.variable_is_function_of(z, "x_d"):
        part, noise = "x_d", "x_y"
    else:
        return LemmaCheck(
            "noise_conditioning", False, skipped=True,
            detail="z depends on both coordinates",
        )
    lhs = joint.conditional_mi(part, z, noise)
    rhs = joint.mutual_information(part, z)
    return LemmaCheck(
        "noise_conditioning",
        abs(lhs - rhs) <= tol,
        detail=f"I({part};z|{noise})={lhs:.12f} I({part};z)={rhs:.12f}",
    )
