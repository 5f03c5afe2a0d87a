"""Random finite joints for property sweeps.

Two generators: `random_collapse_joint` instantiates the independence and
determinism hypotheses of the collapse theorem (product pmf, y a function of
the class-feature coordinate, single constant domain label); `random_joint`
draws an unconstrained pmf for lemma sweeps.
"""

from __future__ import annotations

import numpy as np

from .joint import DiscreteJoint, RepresentationMap


def random_collapse_joint(
    rng: np.random.Generator,
    n_d: int | None = None,
    n_yfeat: int | None = None,
    n_labels: int | None = None,
    max_support: int = 9,
    min_support: int = 4,
) -> DiscreteJoint:
    """Product joint with y = g(x_y) (random surjection) and constant d."""
    if min_support > max_support:
        raise ValueError(f"min_support {min_support} exceeds max_support {max_support}")
    if n_d is None:
        n_d = int(rng.integers(2, 4))
    if n_yfeat is None:
        lo = max(2, -(-min_support // n_d))
        hi = max(lo, max_support // n_d)
        n_yfeat = int(rng.integers(lo, hi + 1))
    if n_d * n_yfeat > max_support:
        raise ValueError(f"support {n_d}x{n_yfeat} exceeds {max_support}")
    if n_labels is None:
        n_labels = int(rng.integers(2, n_yfeat + 1))

    p_d = rng.dirichlet(np.ones(n_d))
    p_y = rng.dirichlet(np.ones(n_yfeat))

    # Surjection onto {0..n_labels-1}: each label claims one symbol first.
    g = np.empty(n_yfeat, dtype=np.int64)
    perm = rng.permutation(n_yfeat)
    g[perm[:n_labels]] = np.arange(n_labels)
    if n_yfeat > n_labels:
        g[perm[n_labels:]] = rng.integers(0, n_labels, size=n_yfeat - n_labels)
    f_y = np.tile(g, (n_d, 1))
    f_d = np.zeros(n_d, dtype=np.int64)

    return DiscreteJoint.from_product(p_d, p_y, f_y=f_y, f_d=f_d)


def random_joint(
    rng: np.random.Generator,
    n_d: int | None = None,
    n_yfeat: int | None = None,
    product: bool = False,
) -> DiscreteJoint:
    """Unconstrained random joint; f_y may depend on both coordinates."""
    if n_d is None:
        n_d = int(rng.integers(2, 4))
    if n_yfeat is None:
        n_yfeat = int(rng.integers(2, 4))
    n_labels = int(rng.integers(2, n_d * n_yfeat + 1))
    f_y = rng.integers(0, n_labels, size=(n_d, n_yfeat))
    n_domains = int(rng.integers(1, n_d + 1))
    f_d = rng.integers(0, n_domains, size=n_d)
    if product:
        return DiscreteJoint.from_product(
            rng.dirichlet(np.ones(n_d)), rng.dirichlet(np.ones(n_yfeat)),
            f_y=f_y, f_d=f_d,
        )
    pmf = rng.dirichlet(np.ones(n_d * n_yfeat)).reshape(n_d, n_yfeat)
    return DiscreteJoint(
        alphabet_d=tuple(range(n_d)),
        alphabet_y_feat=tuple(range(n_yfeat)),
        pmf=pmf,
        f_y=f_y,
        f_d=f_d,
    )


def random_map(
    rng: np.random.Generator,
    joint: DiscreteJoint,
    z_alphabet_size: int | None = None,
    depends_on: str | None = None,
) -> RepresentationMap:
    """Random deterministic map over the support.

    With depends_on="x_y" (or "x_d") the map is constant in the other
    coordinate, which is the shape the noise-conditioning lemma requires.
    """
    points = joint.support_points()
    if z_alphabet_size is None:
        z_alphabet_size = int(rng.integers(1, len(points) + 1))
    if depends_on is None:
        vals = rng.integers(0, z_alphabet_size, size=len(points))
        return RepresentationMap({pt: int(v) for pt, v in zip(points, vals)})
    if depends_on == "x_y":
        keys = sorted({pt[1] for pt in points}, key=repr)
        pick = 1
    elif depends_on == "x_d":
        keys = sorted({pt[0] for pt in points}, key=repr)
        pick = 0
    else:
        raise ValueError(f"depends_on must be 'x_d' or 'x_y', got {depends_on!r}")
    assign = {k: int(v) for k, v in zip(keys, rng.integers(0, z_alphabet_size, size=len(keys)))}
    return RepresentationMap({pt: assign[pt[pick]] for pt in points})
