import math

import numpy as np
import pytest

from oodkit.detectors import (
    fit_knn,
    fit_mahalanobis,
    fit_react,
    make_detector,
    nearest_rank_percentile,
    score_energy,
    score_msp,
)
from oodkit.errors import FitError, ValidationError
from oodkit.features import FeatureSet
from oodkit.metrics import auroc, fpr_at_tpr
from oodkit.rng import make_rng


class TestMSP:
    def test_uniform_logits(self):
        assert score_msp([0.0, 0.0]) == pytest.approx(0.5, abs=1e-15)

    def test_dominated(self):
        assert score_msp([100.0, 0.0]) == pytest.approx(1.0, abs=1e-12)

    def test_three_way(self):
        # softmax max of (1.0, 0.5, 0.2), frozen from an extended-precision run.
        assert score_msp([1.0, 0.5, 0.2]) == pytest.approx(0.4864145335648466, abs=1e-12)

    def test_range(self):
        rng = make_rng(0)
        logits = rng.standard_normal((200, 5)) * 10
        s = score_msp(logits)
        assert np.all(s > 1 / 5) and np.all(s <= 1.0)

    def test_stability_large_logits(self):
        assert np.isfinite(score_msp([1e30, -1e30, 0.0]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            score_msp([np.nan, 0.0])
        with pytest.raises(ValidationError):
            score_msp([1.0])


class TestEnergy:
    def test_uniform(self):
        assert score_energy([0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)

    def test_ten_zero(self):
        # T log(e^10 + e^0) = 10 + log1p(e^-10)
        expected = 10 + math.log1p(math.exp(-10))
        assert expected == pytest.approx(10.000045398899218, abs=1e-14)
        assert score_energy([10.0, 0.0]) == pytest.approx(expected, abs=1e-12)

    def test_temperature_limit_is_max(self):
        for a, b in [(3.0, 1.0), (-2.0, 5.0), (0.3, 0.2)]:
            for t in (1e-2, 1e-3, 1e-4):
                got = score_energy([a, b], temperature=t)
                assert got == pytest.approx(max(a, b), abs=t * math.log(2) + 1e-12)

    def test_shift_equivariance(self):
        rng = make_rng(1)
        logits = rng.standard_normal(6)
        assert score_energy(logits + 7.5) == pytest.approx(
            score_energy(logits) + 7.5, abs=1e-9
        )

    def test_temperature_validated(self):
        with pytest.raises(ValidationError):
            score_energy([0.0, 1.0], temperature=0.0)


class TestKNN:
    def index_set(self):
        return FeatureSet(features=np.array([[0, 0], [1, 0], [0, 2]], dtype=np.float32))

    def test_query_on_indexed_point(self):
        det = fit_knn(self.index_set(), k=1, normalize=False)
        assert det.score([1.0, 0.0]) == 0.0

    def test_second_neighbor(self):
        det = fit_knn(self.index_set(), k=2, normalize=False)
        assert det.score([0.0, 0.0]) == pytest.approx(-1.0, abs=1e-12)

    def test_third_neighbor(self):
        det = fit_knn(self.index_set(), k=3, normalize=False)
        assert det.score([0.0, 0.0]) == pytest.approx(-2.0, abs=1e-12)

    def test_bruteforce_oracle_random(self):
        rng = make_rng(2)
        index = rng.standard_normal((40, 5))
        queries = rng.standard_normal((25, 5))
        det = fit_knn(FeatureSet(features=index.astype(np.float32)), k=7, normalize=False)
        got = det.score(queries)
        idx64 = np.asarray(det.index)
        for qi, q in enumerate(queries):
            dists = sorted(float(np.linalg.norm(q - r)) for r in idx64)
            assert got[qi] == pytest.approx(-dists[6], abs=1e-9)

    def test_k_bounds(self):
        with pytest.raises(ValidationError):
            fit_knn(self.index_set(), k=4)
        with pytest.raises(ValidationError):
            fit_knn(self.index_set(), k=0)

    def test_zero_vector_under_normalization(self):
        fs = FeatureSet(features=np.array([[0.0, 0.0], [1.0, 0.0]], dtype=np.float32))
        with pytest.raises(ValidationError, match="zero vector"):
            fit_knn(fs, k=1, normalize=True)

    def test_determinism(self):
        rng = make_rng(3)
        fs = FeatureSet(features=rng.standard_normal((100, 8)).astype(np.float32))
        det = fit_knn(fs, k=10)
        q = rng.standard_normal((50, 8))
        a, b = det.score(q), det.score(q)
        assert np.array_equal(a, b)

    def test_dimension_mismatch(self):
        det = fit_knn(self.index_set(), k=1, normalize=False)
        with pytest.raises(ValidationError, match="dimension"):
            det.score([1.0, 2.0, 3.0])


class TestMahalanobis:
    def identity_cov_set(self):
        # +-1 pattern: per-class mean 0, pooled within-class covariance I.
        pts = np.array(
            [[1, 1], [1, -1], [-1, 1], [-1, -1]] * 2, dtype=np.float32
        )
        labels = np.zeros(len(pts), dtype=np.int64)
        return FeatureSet(features=pts, labels=labels)

    def test_identity_covariance_squared_distance(self):
        det = fit_mahalanobis(self.identity_cov_set(), shrinkage=0.0)
        assert det.score([3.0, 4.0]) == pytest.approx(-25.0, abs=1e-9)

    def test_score_at_mean_is_maximum(self):
        det = fit_mahalanobis(self.identity_cov_set(), shrinkage=0.0)
        assert det.score(det.means[0]) == pytest.approx(0.0, abs=1e-12)
        rng = make_rng(4)
        others = rng.standard_normal((50, 2))
        assert np.all(det.score(others) <= 1e-12)

    def test_symmetric_classes_tie(self):
        pts = np.vstack(
            [
                np.array([[2, 1], [2, -1], [2, 1], [2, -1]]),
                np.array([[-2, 1], [-2, -1], [-2, 1], [-2, -1]]),
            ]
        ).astype(np.float32)
        labels = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        det = fit_mahalanobis(FeatureSet(features=pts, labels=labels), shrinkage=1e-9)
        # Points on the perpendicular bisector are equidistant to both means.
        d0 = (np.array([0.0, 0.7]) - det.means[0]) @ det.precision @ (
            np.array([0.0, 0.7]) - det.means[0]
        )
        d1 = (np.array([0.0, 0.7]) - det.means[1]) @ det.precision @ (
            np.array([0.0, 0.7]) - det.means[1]
        )
        assert d0 == pytest.approx(d1, rel=1e-12)
        assert det.score([0.0, 0.7]) == pytest.approx(-d0, rel=1e-12)

    def test_affine_invariance_without_shrinkage(self):
        rng = make_rng(5)
        x = rng.standard_normal((60, 3))
        labels = np.repeat([0, 1, 2], 20)
        x += labels[:, None] * 2.0
        queries = rng.standard_normal((10, 3)) * 3
        a = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        shift = rng.standard_normal(3)

        det = fit_mahalanobis(
            FeatureSet(features=x.astype(np.float32), labels=labels), shrinkage=0.0
        )
        det_t = fit_mahalanobis(
            FeatureSet(features=(x @ a.T + shift).astype(np.float32), labels=labels),
            shrinkage=0.0,
        )
        # float32 storage limits agreement, but ranks and values must track.
        s = det.score(queries)
        s_t = det_t.score(queries @ a.T + shift)
        assert np.allclose(s, s_t, rtol=1e-3, atol=1e-3)

    def test_needs_labels_and_min_class_size(self):
        fs = FeatureSet(features=np.eye(3, dtype=np.float32))
        with pytest.raises(FitError):
            fit_mahalanobis(fs)
        fs2 = FeatureSet(
            features=np.eye(3, dtype=np.float32), labels=np.array([0, 0, 1])
        )
        with pytest.raises(FitError, match="class"):
            fit_mahalanobis(fs2)


class TestReAct:
    def single_unit_set(self):
        pen = np.arange(1, 101, dtype=np.float32).reshape(-1, 1)
        head_w = np.array([[1.0], [0.0]], dtype=np.float32)
        head_b = np.array([0.0, 0.0], dtype=np.float32)
        return FeatureSet(
            features=pen, penultimate=pen, head_weights=head_w, head_bias=head_b
        )

    def test_nearest_rank_percentile(self):
        assert nearest_rank_percentile(np.arange(1, 101, dtype=float), 90.0) == 90.0
        assert nearest_rank_percentile(np.arange(1, 101, dtype=float), 100.0 * 0.999) == 100.0

    def test_clip_from_pooled_percentile(self):
        det = fit_react(self.single_unit_set(), clip_percentile=90.0)
        assert det.clip == 90.0

    def test_clipping_inactive_below_threshold(self):
        det = fit_react(self.single_unit_set(), clip_percentile=90.0)
        for a in (5.0, 42.0, 89.9):
            assert det.score(np.array([a])) == pytest.approx(
                score_energy([a, 0.0]), abs=1e-12
            )

    def test_clipping_active_above_threshold(self):
        det = fit_react(self.single_unit_set(), clip_percentile=90.0)
        assert det.score(np.array([95.0])) == pytest.approx(
            score_energy([90.0, 0.0]), abs=1e-12
        )

    def test_missing_blocks_named(self):
        fs = FeatureSet(features=np.ones((4, 2), dtype=np.float32))
        with pytest.raises(FitError, match="penultimate and head_weights"):
            fit_react(fs)
        fs2 = FeatureSet(
            features=np.ones((4, 2), dtype=np.float32),
            penultimate=np.ones((4, 2), dtype=np.float32),
        )
        with pytest.raises(FitError, match="head_weights"):
            fit_react(fs2)


class TestScoreOrientation:
    def test_increasing_transform_preserves_rank_metrics(self):
        rng = make_rng(6)
        train = FeatureSet(features=rng.standard_normal((80, 4)).astype(np.float32))
        det = fit_knn(train, k=5)
        id_q = rng.standard_normal((60, 4))
        ood_q = rng.standard_normal((60, 4)) + 3.0
        id_s, ood_s = det.score(id_q), det.score(ood_q)
        for f in (lambda s: 2 * s + 1, np.tanh, lambda s: np.exp(s / 4)):
            assert fpr_at_tpr(f(id_s), f(ood_s)) == fpr_at_tpr(id_s, ood_s)
            assert auroc(f(id_s), f(ood_s)) == pytest.approx(
                auroc(id_s, ood_s), abs=1e-15
            )


class TestFactory:
    def test_known_kinds(self):
        rng = make_rng(7)
        fs = FeatureSet(
            features=rng.standard_normal((40, 3)).astype(np.float32),
            logits=rng.standard_normal((40, 4)).astype(np.float32),
            labels=np.repeat([0, 1], 20),
        )
        for kind in ("msp", "energy", "mahalanobis", "knn"):
            det = make_detector(kind, fs, k=5)
            assert np.atleast_1d(det.score_set(fs)).shape == (40,)

    def test_unknown_kind(self):
        fs = FeatureSet(features=np.ones((2, 2), dtype=np.float32))
        with pytest.raises(ValidationError, match="unknown detector"):
            make_detector("odin", fs)
