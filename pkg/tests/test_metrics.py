import numpy as np
import pytest

from _oracles import auroc_fraction, fpr_at_tpr_bruteforce, wilcoxon_enumerate
from oodkit.errors import ValidationError
from oodkit.metrics import auroc, fpr_at_tpr, wilcoxon_signed_rank
from oodkit.rng import make_rng


def random_score_pair(rng, max_size=200):
    n_id = int(rng.integers(1, max_size + 1))
    n_ood = int(rng.integers(1, max_size + 1))
    if rng.random() < 0.5:
        # Integer-valued scores force ties across and within groups.
        id_s = rng.integers(0, 20, size=n_id).astype(float)
        ood_s = rng.integers(0, 20, size=n_ood).astype(float)
    else:
        id_s = rng.standard_normal(n_id) + rng.uniform(0, 2)
        ood_s = rng.standard_normal(n_ood)
    return id_s, ood_s


class TestFprAtTpr:
    def test_worked_example(self):
        assert fpr_at_tpr(np.arange(1, 101, dtype=float), [0.5, 5.5, 200.0]) == pytest.approx(
            2 / 3, abs=0
        )

    def test_fully_separated(self):
        assert fpr_at_tpr([10, 11, 12], [1, 2, 3]) == 0.0

    def test_fully_inverted(self):
        assert fpr_at_tpr([1, 2, 3], [10, 11, 12]) == 1.0

    def test_matches_bruteforce_on_random_inputs(self):
        rng = make_rng(100)
        for _ in range(100):
            id_s, ood_s = random_score_pair(rng)
            assert fpr_at_tpr(id_s, ood_s) == fpr_at_tpr_bruteforce(id_s, ood_s)
        # Larger inputs, including heavy ties.
        for _ in range(5):
            id_s = rng.integers(0, 40, size=1000).astype(float)
            ood_s = rng.integers(0, 40, size=1000).astype(float)
            assert fpr_at_tpr(id_s, ood_s) == fpr_at_tpr_bruteforce(id_s, ood_s)

    def test_non_increasing_as_tpr_decreases(self):
        rng = make_rng(101)
        id_s, ood_s = rng.standard_normal(300) + 1, rng.standard_normal(300)
        grid = np.linspace(0.5, 1.0, 21)
        vals = [fpr_at_tpr(id_s, ood_s, t) for t in grid]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValidationError):
            fpr_at_tpr([], [1.0])
        with pytest.raises(ValidationError):
            fpr_at_tpr([1.0], [])

    def test_tpr_range(self):
        with pytest.raises(ValidationError):
            fpr_at_tpr([1.0], [1.0], tpr=0.0)


class TestAuroc:
    def test_identical_multisets(self):
        assert auroc([1, 2, 3], [1, 2, 3]) == 0.5

    def test_fully_separated(self):
        assert auroc([5, 6], [1, 2]) == 1.0

    def test_middle_point(self):
        assert auroc([1, 3], [2]) == 0.5

    def test_exact_pair_counting_on_random_inputs(self):
        rng = make_rng(102)
        for _ in range(100):
            id_s, ood_s = random_score_pair(rng)
            assert auroc(id_s, ood_s) == float(auroc_fraction(id_s.tolist(), ood_s.tolist()))

    def test_shared_increasing_transform_is_exact_invariance(self):
        rng = make_rng(103)
        id_s, ood_s = random_score_pair(rng)
        assert auroc(2 * id_s + 1, 2 * ood_s + 1) == auroc(id_s, ood_s)
        assert fpr_at_tpr(2 * id_s + 1, 2 * ood_s + 1) == fpr_at_tpr(id_s, ood_s)


class TestWilcoxon:
    def test_five_positive_differences(self):
        assert wilcoxon_signed_rank([1.0, 2.0, 3.0, 4.0, 5.0]) == 0.03125

    def test_single_difference(self):
        assert wilcoxon_signed_rank([2.5]) == 0.5

    def test_matches_enumeration_up_to_n12(self):
        rng = make_rng(104)
        for n in range(1, 13):
            for _ in range(6):
                d = rng.standard_normal(n)
                if rng.random() < 0.4:
                    d = np.round(d, 0)  # force tied magnitudes and zeros
                if np.all(d == 0):
                    continue
                assert wilcoxon_signed_rank(d) == pytest.approx(
                    wilcoxon_enumerate(d.tolist()), abs=1e-12
                )

    def test_all_zero_undefined(self):
        with pytest.raises(ValidationError, match="zero"):
            wilcoxon_signed_rank([0.0, 0.0])

    def test_zero_differences_dropped(self):
        assert wilcoxon_signed_rank([0.0, 1.0]) == 0.5

    def test_normal_approximation_regime(self):
        rng = make_rng(105)
        d = np.abs(rng.standard_normal(40)) + 0.1  # all positive, n > 20
        p = wilcoxon_signed_rank(d)
        assert 0.0 < p < 1e-6
        mixed = rng.standard_normal(40)
        assert 0.0 < wilcoxon_signed_rank(mixed) < 1.0

    def test_one_sided_only(self):
        with pytest.raises(ValidationError):
            wilcoxon_signed_rank([1.0], alternative="less")
