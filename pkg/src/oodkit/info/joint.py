"""Finite joint distributions over (domain-feature, class-feature) pairs.

DiscreteJoint is the substrate for all exact information computations: a pmf
over a grid of (x_d, x_y) symbol pairs, plus labeling maps f_y (class label,
may depend on both coordinates) and f_d (domain label, depends on x_d only).
All derived variables (x, y, d, or the image of a representation map) are
integer-coded over the support so entropies reduce to weighted bincounts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Mapping

import numpy as np

from ..errors import ValidationError

PMF_SUM_TOL = 1e-12
INDEPENDENCE_TOL = 1e-12


def xlogx_sum(masses: np.ndarray) -> float:
    """-sum(m ln m) with the 0 ln 0 = 0 convention; never below 0."""
    m = masses[masses > 0.0]
    return float(max(0.0, -np.dot(m, np.log(m))))


@dataclass(frozen=True)
class RepresentationMap:
    """Deterministic map from support points (x_d, x_y) to symbols in Z.

    Totality over the support is checked against a joint at use time; being a
    plain table, H(z|x) = 0 by construction.
    """

    table: Mapping[tuple, Hashable]

    def z_alphabet(self) -> tuple:
        seen: dict = {}
        for v in self.table.values():
            seen.setdefault(v, None)
        return tuple(seen)


@dataclass(frozen=True)
class DiscreteJoint:
    """Exact finite joint distribution over (x_d, x_y).

    Attributes:
        alphabet_d: ordered symbols for the domain-feature coordinate.
        alphabet_y_feat: ordered symbols for the class-feature coordinate.
        pmf: (|D|, |Yf|) probabilities, entries >= 0 summing to 1.
        f_y: (|D|, |Yf|) class labels, y = f_y[i, j].
        f_d: (|D|,) domain labels, d = f_d[i].
        is_product: set when constructed as an independent product; checked
            against I(x_d; x_y) = 0.
    """

    alphabet_d: tuple
    alphabet_y_feat: tuple
    pmf: np.ndarray
    f_y: np.ndarray
    f_d: np.ndarray
    is_product: bool = field(default=False)

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if pmf.shape != (len(self.alphabet_d), len(self.alphabet_y_feat)):
            raise ValidationError(
                f"pmf shape {pmf.shape} does not match alphabets "
                f"({len(self.alphabet_d)}, {len(self.alphabet_y_feat)})"
            )
        if np.any(pmf < 0.0):
            raise ValidationError("pmf entries must be non-negative")
        if abs(pmf.sum() - 1.0) > PMF_SUM_TOL:
            raise ValidationError(f"pmf sums to {pmf.sum()!r}, expected 1")
        object.__setattr__(self, "pmf", pmf)
        f_y = np.asarray(self.f_y)
        if f_y.shape != pmf.shape:
            raise ValidationError("f_y must cover the full (x_d, x_y) grid")
        object.__setattr__(self, "f_y", f_y)
        f_d = np.asarray(self.f_d)
        if f_d.shape != (len(self.alphabet_d),):
            raise ValidationError("f_d must assign a domain label per x_d symbol")
        object.__setattr__(self, "f_d", f_d)
        if pmf.sum() == 0.0 or not np.any(pmf > 0.0):
            raise ValidationError("empty support")
        if self.is_product:
            mi = self.mutual_information("x_d", "x_y")
            if mi > INDEPENDENCE_TOL:
                raise ValidationError(
                    f"product-flagged joint has I(x_d; x_y) = {mi:.3e} > 0"
                )

    @classmethod
    def from_product(cls, p_d, p_y, f_y, f_d, alphabet_d=None, alphabet_y_feat=None):
        """Build an independent product distribution (Definition-3 structure)."""
        p_d = np.asarray(p_d, dtype=np.float64)
        p_y = np.asarray(p_y, dtype=np.float64)
        alphabet_d = tuple(alphabet_d) if alphabet_d is not None else tuple(range(len(p_d)))
        alphabet_y_feat = (
            tuple(alphabet_y_feat) if alphabet_y_feat is not None else tuple(range(len(p_y)))
        )
        return cls(
            alphabet_d=alphabet_d,
            alphabet_y_feat=alphabet_y_feat,
            pmf=np.outer(p_d, p_y),
            f_y=np.asarray(f_y),
            f_d=np.asarray(f_d),
            is_product=True,
        )

    # -- support and variable coding ------------------------------------

    @cached_property
    def support(self) -> np.ndarray:
        """(S, 2) array of (i, j) grid indices with positive mass."""
        idx = np.argwhere(self.pmf > 0.0)
        return idx

    @cached_property
    def support_pmf(self) -> np.ndarray:
        return self.pmf[self.support[:, 0], self.support[:, 1]]

    @property
    def support_size(self) -> int:
        return self.support.shape[0]

    def support_points(self) -> list[tuple]:
        """Support as (x_d symbol, x_y symbol) pairs, in canonical order."""
        return [
            (self.alphabet_d[i], self.alphabet_y_feat[j]) for i, j in self.support
        ]

    @cached_property
    def y_codes(self) -> np.ndarray:
        vals = self.f_y[self.support[:, 0], self.support[:, 1]]
        _, codes = np.unique(vals, return_inverse=True)
        return codes

    @cached_property
    def d_codes(self) -> np.ndarray:
        vals = self.f_d[self.support[:, 0]]
        _, codes = np.unique(vals, return_inverse=True)
        return codes

    def codes_for(self, selector) -> np.ndarray:
        """Integer codes of a variable over the support points.

        Selectors: "x_d", "x_y", "x", "y", "d", or a RepresentationMap.
        """
        if isinstance(selector, RepresentationMap):
            return self._map_codes(selector)
        if selector == "x_d":
            return self.support[:, 0]
        if selector == "x_y":
            return self.support[:, 1]
        if selector == "x":
            return np.arange(self.support_size)
        if selector == "y":
            return self.y_codes
        if selector == "d":
            return self.d_codes
        raise ValidationError(f"unknown variable selector {selector!r}")

    def _map_codes(self, rep: RepresentationMap) -> np.ndarray:
        points = self.support_points()
        missing = [p for p in points if p not in rep.table]
        if missing:
            raise ValidationError(
                f"representation map is not total over the support "
                f"(missing {missing[0]!r} and {len(missing) - 1} more)"
            )
        vals = [rep.table[p] for p in points]
        lookup: dict = {}
        codes = np.empty(len(vals), dtype=np.int64)
        for s, v in enumerate(vals):
            codes[s] = lookup.setdefault(v, len(lookup))
        return codes

    # -- exact information measures --------------------------------------

    def _combined_codes(self, selectors) -> np.ndarray:
        combined = np.zeros(self.support_size, dtype=np.int64)
        for sel in selectors:
            codes = self.codes_for(sel)
            combined = combined * (int(codes.max()) + 1) + codes
        _, combined = np.unique(combined, return_inverse=True)
        return combined

    def entropy_of(self, *selectors) -> float:
        """Exact joint entropy H(selectors...) in nats."""
        if not selectors:
            raise ValidationError("entropy_of needs at least one selector")
        codes = self._combined_codes(selectors)
        masses = np.bincount(codes, weights=self.support_pmf)
        return xlogx_sum(masses)

    def mutual_information(self, a, b) -> float:
        """I(a; b) = H(a) + H(b) - H(a, b), clamped to 0 from tiny negatives."""
        val = self.entropy_of(a) + self.entropy_of(b) - self.entropy_of(a, b)
        return max(0.0, val)

    def conditional_mi(self, a, b, given) -> float:
        """I(a; b | given) = H(a|c) - H(a|b,c), clamped at 0."""
        val = (
            self.entropy_of(a, given)
            + self.entropy_of(b, given)
            - self.entropy_of(a, b, given)
            - self.entropy_of(given)
        )
        return max(0.0, val)

    def variable_is_function_of(self, selector, of) -> bool:
        """True when `selector` is constant on each level of `of` over support."""
        target = self.codes_for(selector)
        base = self.codes_for(of)
        for lvl in np.unique(base):
            if len(np.unique(target[base == lvl])) > 1:
                return False
        return True
