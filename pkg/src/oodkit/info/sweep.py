"""Desk-scale theory verification: theorem sweep, lemma sweep, Fano grids.

Drives the exhaustive enumerator over batches of randomly generated joints
that satisfy the collapse theorem's hypotheses, checks every returned
minimizer for vanishing domain information, and sweeps the supporting lemmas
and Fano-bound monotonicity. Backs the `verify-theory` CLI subcommand.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..rng import GENERATOR_NAME, make_rng
from .fano import FanoQuery, fano_min_error, mi_lower_bound_from_error
from .joint import DiscreteJoint
from .measures import IBLossSpec, verify_lemmas
from .minimizers import enumerate_minimizers
from .random_joints import random_collapse_joint, random_joint, random_map

THEOREM_MI_TOL = 1e-9
DEFAULT_BETAS = (0.5, 1.0, 2.0, 10.0)


@dataclass(frozen=True)
class TheoremTrial:
    trial: int
    n_d: int
    n_yfeat: int
    n_labels: int
    z_size: int
    beta: float
    n_maps: int
    n_sufficient: int
    n_minimizers: int
    max_mi_domain: float
    beta_independent: bool

    @property
    def violated(self) -> bool:
        return self.max_mi_domain > THEOREM_MI_TOL


@dataclass
class TheoryReport:
    seed: int
    theorem_trials: list[TheoremTrial] = field(default_factory=list)
    lemma_instances: int = 0
    lemma_failures: list[str] = field(default_factory=list)
    lemma_skipped: dict = field(default_factory=dict)
    fano_grid_points: int = 0
    fano_violations: int = 0
    elapsed_s: float = 0.0
    generator: str = GENERATOR_NAME

    @property
    def theorem_violations(self) -> list[TheoremTrial]:
        return [t for t in self.theorem_trials if t.violated]

    @property
    def max_mi_domain(self) -> float:
        return max((t.max_mi_domain for t in self.theorem_trials), default=0.0)

    @property
    def ok(self) -> bool:
        return (
            not self.theorem_violations
            and not self.lemma_failures
            and self.fano_violations == 0
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "generator": self.generator,
            "theorem": {
                "trials": len(self.theorem_trials),
                "violations": len(self.theorem_violations),
                "max_mi_domain_nats": self.max_mi_domain,
                "total_maps_searched": int(sum(t.n_maps for t in self.theorem_trials)),
            },
            "lemmas": {
                "instances": self.lemma_instances,
                "failures": self.lemma_failures,
                "skipped": self.lemma_skipped,
            },
            "fano": {
                "grid_points": self.fano_grid_points,
                "violations": self.fano_violations,
            },
            "elapsed_s": self.elapsed_s,
            "ok": self.ok,
        }

    def to_text(self) -> str:
        d = self.to_dict()
        lines = [
            "theory verification report",
            f"  seed: {self.seed}   generator: {self.generator}",
            "",
            f"collapse-theorem sweep: {d['theorem']['trials']} joints, "
            f"{d['theorem']['total_maps_searched']} maps searched",
            f"  minimizers with I(x_d; z) > {THEOREM_MI_TOL:g} nats: "
            f"{d['theorem']['violations']}",
            f"  largest I(x_d; z) over all minimizers: "
            f"{d['theorem']['max_mi_domain_nats']:.3e} nats",
            "",
            f"lemma sweep: {self.lemma_instances} (joint, map) instances",
            f"  failures: {len(self.lemma_failures)}",
            f"  skipped (precondition not met): {self.lemma_skipped}",
            "",
            f"fano monotonicity grid: {self.fano_grid_points} points, "
            f"{self.fano_violations} violations",
            "",
            f"elapsed: {self.elapsed_s:.2f} s",
            f"overall: {'PASS' if self.ok else 'FAIL'}",
        ]
        for t in self.theorem_violations[:20]:
            lines.append(
                f"  VIOLATION trial {t.trial}: |D|={t.n_d} |Yf|={t.n_yfeat} "
                f"z={t.z_size} beta={t.beta} I(x_d;z)={t.max_mi_domain:.3e}"
            )
        for msg in self.lemma_failures[:20]:
            lines.append(f"  LEMMA FAILURE: {msg}")
        return "\n".join(lines) + "\n"


def _pick_z_size(rng, support: int, n_labels: int, budget: int, z_max: int) -> int:
    z_hi = min(support, z_max)
    while z_hi > n_labels and z_hi**support > budget:
        z_hi -= 1
    z_hi = max(z_hi, n_labels)
    return int(rng.integers(n_labels, z_hi + 1))


def run_theorem_sweep(
    n_trials: int = 200,
    seed: int = 0,
    support_max: int = 9,
    support_min: int = 4,
    betas: tuple = DEFAULT_BETAS,
    map_budget: int = 1_200_000,
    z_max: int = 12,
) -> list[TheoremTrial]:
    """Enumerate minimizers for random hypothesis-satisfying joints."""
    rng = make_rng(seed, stream=1)
    trials = []
    for t in range(n_trials):
        joint = random_collapse_joint(
            rng, max_support=support_max, min_support=support_min
        )
        n_labels = int(joint.y_codes.max()) + 1
        z_size = _pick_z_size(rng, joint.support_size, n_labels, map_budget, z_max)
        beta = float(rng.choice(betas))
        result = enumerate_minimizers(joint, IBLossSpec(beta), z_size, max_maps=map_budget)
        trials.append(
            TheoremTrial(
                trial=t,
                n_d=len(joint.alphabet_d),
                n_yfeat=len(joint.alphabet_y_feat),
                n_labels=n_labels,
                z_size=z_size,
                beta=beta,
                n_maps=result.n_maps,
                n_sufficient=result.n_sufficient,
                n_minimizers=len(result.minimizers),
                max_mi_domain=max(r.mi_domain for r in result.minimizers),
                beta_independent=result.beta_independent,
            )
        )
    return trials


def run_lemma_sweep(n_instances: int = 500, seed: int = 0):
    """Random (joint, map) instances through the lemma checker.

    Alternates between product joints with single-coordinate maps (which
    exercise the noise-conditioning lemma) and unconstrained instances.
    """
    rng = make_rng(seed, stream=2)
    failures: list[str] = []
    skipped: dict = {}
    for i in range(n_instances):
        style = i % 4
        if style == 0:
            joint = random_joint(rng, product=True)
            rep = random_map(rng, joint, depends_on="x_y")
        elif style == 1:
            joint = random_joint(rng, product=True)
            rep = random_map(rng, joint, depends_on="x_d")
        elif style == 2:
            joint = random_collapse_joint(rng)
            rep = random_map(rng, joint)
        else:
            joint = random_joint(rng)
            rep = random_map(rng, joint)
        report = verify_lemmas(joint, rep)
        for check in (
            report.info_bound,
            report.loss_factorization,
            report.noise_conditioning,
            report.sufficiency_identity,
        ):
            if check.skipped:
                skipped[check.name] = skipped.get(check.name, 0) + 1
            elif not check.holds:
                failures.append(f"instance {i}: {check.name}: {check.detail}")
    return n_instances, failures, skipped


def run_fano_grid(mi_points: int = 50, cardinalities=(2, 3, 4, 8)) -> tuple[int, int]:
    """Monotonicity of the minimum-error bound over (mi, h_y) grids."""
    points = 0
    violations = 0
    for card in cardinalities:
        h_max = math.log(card)
        for h_frac in (0.5, 0.9, 1.0):
            h_y = h_frac * h_max
            grid = np.linspace(0.0, h_y, mi_points)
            errs = [fano_min_error(FanoQuery(h_y=h_y, mi=float(m), cardinality=card)) for m in grid]
            points += len(grid)
            # Non-increasing in mi, up to bisection resolution.
            violations += int(np.sum(np.diff(errs) > 1e-9))
        # Non-decreasing in h_y at fixed mi.
        h_grid = np.linspace(0.0, h_max, 25)
        errs = [fano_min_error(FanoQuery(h_y=float(h), mi=0.0, cardinality=card)) for h in h_grid]
        points += len(h_grid)
        violations += int(np.sum(np.diff(errs) < -1e-9))
        # Round trip: the bound recovered from the minimum error never
        # exceeds the mutual information that produced it.
        for mi in np.linspace(0.0, h_max, 12):
            e = fano_min_error(FanoQuery(h_y=h_max, mi=float(mi), cardinality=card))
            back = mi_lower_bound_from_error(e, card, h_max)
            points += 1
            violations += int(back > mi + 1e-6)
    return points, violations


def run_theory_verification(
    n_theorem_trials: int = 200,
    n_lemma_instances: int = 500,
    seed: int = 0,
    support_max: int = 9,
    support_min: int = 4,
    betas: tuple = DEFAULT_BETAS,
    map_budget: int = 1_200_000,
    z_max: int = 12,
) -> TheoryReport:
    start = time.perf_counter()
    report = TheoryReport(seed=seed)
    report.theorem_trials = run_theorem_sweep(
        n_theorem_trials, seed=seed, support_max=support_max,
        support_min=support_min, betas=betas, map_budget=map_budget, z_max=z_max,
    )
    report.lemma_instances, report.lemma_failures, report.lemma_skipped = run_lemma_sweep(
        n_lemma_instances, seed=seed
    )
    report.fano_grid_points, report.fano_violations = run_fano_grid()
    report.elapsed_s = time.perf_counter() - start
    return report
