import numpy as np
import pytest

from oodkit.detectors import fit_knn
from oodkit.errors import ConfigError, ValidationError
from oodkit.features import FeatureSet
from oodkit.rng import make_rng
from oodkit.two_stage import (
    DomainFilter,
    calibrate_domain_threshold,
    fit_domain_filter,
    make_two_stage,
    two_stage_decide,
    two_stage_score,
    two_stage_score_set,
)


class TestCalibration:
    def test_nearest_rank_990(self):
        assert calibrate_domain_threshold(np.arange(1, 1001, dtype=float), 0.99) == 990.0

    def test_p_one_is_max(self):
        assert calibrate_domain_threshold(np.arange(1, 1001, dtype=float), 1.0) == 1000.0

    def test_supported_grid(self):
        d = np.arange(1, 1001, dtype=float)
        for p in (0.98, 0.99, 0.999):
            t = calibrate_domain_threshold(d, p)
            assert np.mean(d <= t) >= p

    def test_coverage_on_random_data(self):
        rng = make_rng(0)
        for p in (0.5, 0.9, 0.97):
            d = rng.exponential(size=197)
            t = calibrate_domain_threshold(d, p)
            assert np.mean(d <= t) >= p

    def test_input_validation(self):
        with pytest.raises(ValidationError):
            calibrate_domain_threshold([], 0.99)
        with pytest.raises(ValidationError):
            calibrate_domain_threshold(np.arange(5, dtype=float), 0.99)
        with pytest.raises(ValidationError):
            calibrate_domain_threshold(np.arange(100, dtype=float), 0.0)
        with pytest.raises(ValidationError):
            calibrate_domain_threshold(np.arange(100, dtype=float), 1.5)

    def test_threshold_monotone_in_p(self):
        rng = make_rng(1)
        train = FeatureSet(features=rng.standard_normal((300, 4)).astype(np.float32))
        thresholds = [
            fit_domain_filter(train, p=p, k=10, normalize=False).t_d
            for p in (0.5, 0.8, 0.98, 0.99, 0.999, 1.0)
        ]
        assert all(b >= a for a, b in zip(thresholds, thresholds[1:]))


def build_two_stage(seed=0, p=0.99, k=10):
    rng = make_rng(seed)
    pre_train = FeatureSet(features=rng.standard_normal((400, 6)).astype(np.float32))
    sup_train = FeatureSet(features=rng.standard_normal((400, 3)).astype(np.float32))
    dfilter = fit_domain_filter(pre_train, p=p, k=k, normalize=False)
    second = fit_knn(sup_train, k=5, normalize=False)
    ts = make_two_stage(dfilter, second, sup_train)
    return rng, ts


class TestTwoStageScore:
    def test_pass_through_is_exact(self):
        rng, ts = build_two_stage()
        x_pre = np.zeros(6)  # dense region, certainly under threshold
        x_sup = rng.standard_normal(3)
        assert ts.filter.distances(x_pre) <= ts.filter.t_d
        assert two_stage_score(x_pre, x_sup, ts) == ts.second_stage.score(x_sup)

    def test_rejected_below_floor_and_decreasing(self):
        rng, ts = build_two_stage()
        x_sup = rng.standard_normal(3)
        scores = []
        for r in (50.0, 100.0, 200.0):
            x_pre = np.full(6, r)
            assert ts.filter.distances(x_pre) > ts.filter.t_d
            s = two_stage_score(x_pre, x_sup, ts)
            assert s < ts.score_floor
            scores.append(s)
        assert scores[0] > scores[1] > scores[2]

    def test_mixed_batch_cross_ranking(self):
        rng, ts = build_two_stage()
        near = rng.standard_normal((5, 6)) * 0.5
        far = rng.standard_normal((5, 6)) + 40.0
        x_pre = np.vstack([near, far])
        x_sup = rng.standard_normal((10, 3))
        s = two_stage_score(x_pre, x_sup, ts)
        flags = ts.filter.flags(x_pre)
        assert list(flags) == [False] * 5 + [True] * 5
        for su in s[:5]:
            for sf in s[5:]:
                assert sf < su  # all 25 cross pairs

    def test_ranking_contract_randomized_batches(self):
        # Batches drift around the calibration distribution (the regime the
        # floor construction covers); filtered must rank strictly worst.
        rng, ts = build_two_stage(seed=3)
        for trial in range(100):
            n = int(rng.integers(4, 30))
            x_pre = rng.standard_normal((n, 6)) * rng.uniform(0.3, 2.0)
            x_pre[rng.random(n) < 0.4] += rng.uniform(20, 80)
            x_sup = rng.standard_normal((n, 3)) * rng.uniform(0.5, 1.6)
            s = two_stage_score(x_pre, x_sup, ts)
            flags = np.atleast_1d(ts.filter.flags(x_pre))
            assert np.all(s[flags] < ts.score_floor)
            if flags.any() and (~flags).any():
                assert s[flags].max() < s[~flags].min()

    def test_dimension_errors_name_the_space(self):
        rng, ts = build_two_stage()
        with pytest.raises(ValidationError, match="pretrained space"):
            two_stage_score(np.zeros(5), np.zeros(3), ts)
        with pytest.raises(ValidationError, match="supervised space"):
            two_stage_score(np.zeros(6), np.zeros(4), ts)

    def test_second_stage_swap_preserves_partition(self):
        # Replacing the second stage reorders only the unfiltered samples.
        rng = make_rng(9)
        pre_train = FeatureSet(features=rng.standard_normal((300, 6)).astype(np.float32))
        sup_train = FeatureSet(features=rng.standard_normal((300, 3)).astype(np.float32))
        dfilter = fit_domain_filter(pre_train, p=0.99, k=10, normalize=False)
        second_a = fit_knn(sup_train, k=3, normalize=False)
        second_b = fit_knn(sup_train, k=20, normalize=False)
        ts_a = make_two_stage(dfilter, second_a, sup_train)
        ts_b = make_two_stage(dfilter, second_b, sup_train)

        n = 40
        x_pre = rng.standard_normal((n, 6))
        x_pre[: n // 2] += 30.0
        x_sup = rng.standard_normal((n, 3))
        s_a = two_stage_score(x_pre, x_sup, ts_a)
        s_b = two_stage_score(x_pre, x_sup, ts_b)
        flags = ts_a.filter.flags(x_pre)
        assert np.array_equal(flags, ts_b.filter.flags(x_pre))
        if flags.any() and (~flags).any():
            assert s_a[flags].max() < s_a[~flags].min()
            assert s_b[flags].max() < s_b[~flags].min()
        # Stage 1 owns the ordering within the filtered set.
        assert np.array_equal(np.argsort(s_a[flags]), np.argsort(s_b[flags]))

    def test_score_set_matches_vector_path(self):
        rng, ts = build_two_stage()
        x_pre = rng.standard_normal((20, 6))
        x_sup = rng.standard_normal((20, 3)).astype(np.float32)
        batch = two_stage_score_set(
            ts, FeatureSet(features=x_pre.astype(np.float32)), FeatureSet(features=x_sup)
        )
        single = two_stage_score(
            np.asarray(FeatureSet(features=x_pre.astype(np.float32)).features, dtype=np.float64),
            np.asarray(x_sup, dtype=np.float64),
            ts,
        )
        assert np.allclose(batch, single, atol=0, rtol=0)


class TestDecide:
    def test_far_point_rejected_regardless_of_second_stage(self):
        rng, ts = build_two_stage()
        ts = type(ts)(filter=ts.filter, second_stage=ts.second_stage,
                      score_floor=ts.score_floor, tau=-1e9)
        assert two_stage_decide(np.full(6, 100.0), np.zeros(3), ts) is True

    def test_in_domain_above_tau_accepted(self):
        rng, ts = build_two_stage()
        x_pre, x_sup = np.zeros(6), rng.standard_normal(3)
        s = ts.second_stage.score(x_sup)
        ts2 = type(ts)(filter=ts.filter, second_stage=ts.second_stage,
                       score_floor=ts.score_floor, tau=s - 1.0)
        assert two_stage_decide(x_pre, x_sup, ts2) is False

    def test_tie_at_tau_is_id(self):
        rng, ts = build_two_stage()
        x_pre, x_sup = np.zeros(6), rng.standard_normal(3)
        s = ts.second_stage.score(x_sup)
        ts2 = type(ts)(filter=ts.filter, second_stage=ts.second_stage,
                       score_floor=ts.score_floor, tau=s)
        assert two_stage_decide(x_pre, x_sup, ts2) is False

    def test_below_tau_is_ood(self):
        rng, ts = build_two_stage()
        x_pre, x_sup = np.zeros(6), rng.standard_normal(3)
        s = ts.second_stage.score(x_sup)
        ts2 = type(ts)(filter=ts.filter, second_stage=ts.second_stage,
                       score_floor=ts.score_floor, tau=s + 1e-6)
        assert two_stage_decide(x_pre, x_sup, ts2) is True

    def test_tau_required(self):
        rng, ts = build_two_stage()
        with pytest.raises(ConfigError, match="tau"):
            two_stage_decide(np.zeros(6), np.zeros(3), ts)


class TestFlagRate:
    def test_p_one_no_calibration_flags(self):
        rng = make_rng(12)
        train = FeatureSet(features=rng.standard_normal((200, 4)).astype(np.float32))
        dfilter = fit_domain_filter(train, p=1.0, k=5, normalize=False)
        assert dfilter.flag_rate(train) == 0.0

    def test_flag_rate_tracks_one_minus_p(self):
        rng = make_rng(13)
        train = FeatureSet(features=rng.standard_normal((3000, 4)).astype(np.float32))
        held = FeatureSet(features=rng.standard_normal((20000, 4)).astype(np.float32))
        for p in (0.9, 0.98):
            dfilter = fit_domain_filter(train, p=p, k=10, normalize=False)
            rate = dfilter.flag_rate(held)
            se = np.sqrt((1 - p) * p * (1 / 20000 + 1 / 3000))
            assert abs(rate - (1 - p)) < 2.58 * se + 1e-9

    def test_score_floor_below_calibration_scores(self):
        rng, ts = build_two_stage()
        # Calibration scores were the training set's own second-stage scores.
        calib = ts.second_stage.score(np.asarray(ts.second_stage.index))
        assert ts.score_floor < calib.min()
