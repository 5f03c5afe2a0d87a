"""Independent brute-force oracles shared by the test suite.

These deliberately avoid the library's code paths: probabilities live in
plain dictionaries, mutual information is computed by direct summation of
p log(p / q) terms (not by combining entropies), metrics by O(n^2) loops
and exact rationals.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def dict_joint(points):
    """points: iterable of (value_tuple, prob) -> normalized dict."""
    d = {}
    for v, p in points:
        d[v] = d.get(v, 0.0) + p
    return d


def marginal(joint, idx):
    out = {}
    for v, p in joint.items():
        key = tuple(v[i] for i in idx)
        out[key] = out.get(key, 0.0) + p
    return out


def mi_direct(joint, a_idx, b_idx):
    """I(A; B) = sum p(a,b) ln( p(a,b) / (p(a) p(b)) ) by direct summation."""
    pab = marginal(joint, a_idx + b_idx)
    pa = marginal(joint, a_idx)
    pb = marginal(joint, b_idx)
    total = 0.0
    for v, p in pab.items():
        if p <= 0:
            continue
        va = v[: len(a_idx)]
        vb = v[len(a_idx):]
        total += p * math.log(p / (pa[va] * pb[vb]))
    return total


def cmi_direct(joint, a_idx, b_idx, c_idx):
    """I(A; B | C) = sum p(a,b,c) ln( p(a,b,c) p(c) / (p(a,c) p(b,c)) )."""
    pabc = marginal(joint, a_idx + b_idx + c_idx)
    pac = marginal(joint, a_idx + c_idx)
    pbc = marginal(joint, b_idx + c_idx)
    pc = marginal(joint, c_idx)
    na, nb = len(a_idx), len(b_idx)
    total = 0.0
    for v, p in pabc.items():
        if p <= 0:
            continue
        va, vb, vc = v[:na], v[na : na + nb], v[na + nb :]
        total += p * math.log(p * pc[vc] / (pac[va + vc] * pbc[vb + vc]))
    return total


def joint_points_from_discrete(joint):
    """Library DiscreteJoint -> list of ((x_d, x_y, y, d), prob) tuples."""
    pts = []
    for i, xd in enumerate(joint.alphabet_d):
        for j, xy in enumerate(joint.alphabet_y_feat):
            p = float(joint.pmf[i, j])
            if p > 0:
                pts.append(((xd, xy, joint.f_y[i, j], joint.f_d[i]), p))
    return pts


def auroc_fraction(id_scores, ood_scores) -> Fraction:
    gt = ties = 0
    for a in id_scores:
        for b in ood_scores:
            if a > b:
                gt += 1
            elif a == b:
                ties += 1
    return Fraction(2 * gt + ties, 2 * len(id_scores) * len(ood_scores))


def fpr_at_tpr_bruteforce(id_scores, ood_scores, tpr=0.95) -> float:
    """Literal re-derivation: walk the sorted ID scores counting ranks until
    the ascending nearest rank of the (1 - tpr) quantile is reached, then
    count OOD scores at or above that threshold."""
    srt = sorted(id_scores)
    n = len(srt)
    rank = 0
    while rank * 1.0 < (1.0 - tpr) * n - 1e-9:
        rank += 1
    rank = min(max(rank, 1), n)
    threshold = srt[rank - 1]
    hits = sum(1 for s in ood_scores if s >= threshold)
    return hits / len(ood_scores)


def wilcoxon_enumerate(diffs) -> float:
    """Exact one-sided-greater p by enumerating all 2^n sign assignments."""
    d = [x for x in diffs if x != 0]
    n = len(d)
    mags = sorted((abs(x), i) for i, x in enumerate(d))
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j < n and mags[j][0] == mags[i][0]:
            j += 1
        avg = (i + 1 + j) / 2.0
        for k in range(i, j):
            ranks[mags[k][1]] = avg
        i = j
    w_obs = sum(r for r, x in zip(ranks, d) if x > 0)
    count = 0
    for signs in itertools.product((1, -1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s > 0)
        if w >= w_obs - 1e-12:
            count += 1
    return count / 2.0**n
