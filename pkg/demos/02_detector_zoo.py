"""Fit every post-hoc detector on the same synthetic data and compare.

Three Gaussian classes serve as in-distribution data; a shifted cloud plays
the OOD role. All detectors return scores where higher = more ID, so the
same FPR@95 / AUROC machinery evaluates each one.
"""

import numpy as np

from oodkit import FeatureSet, auroc, fpr_at_tpr, make_detector
from oodkit.rng import make_rng

rng = make_rng(0)

n_per_class, dim, n_classes = 100, 8, 3
means = rng.standard_normal((n_classes, dim)) * 3.0
x_train = np.vstack([means[c] + rng.standard_normal((n_per_class, dim))
                     for c in range(n_classes)])
labels = np.repeat(np.arange(n_classes), n_per_class)

# A linear head supplies logits / penultimate activations for the
# logit-based detectors (MSP, Energy, ReAct).
head_w = rng.standard_normal((n_classes, dim)).astype(np.float32)
head_b = np.zeros(n_classes, dtype=np.float32)

def featureset(x, with_labels=None):
    pen = x.astype(np.float32)
    return FeatureSet(
        features=pen,
        logits=pen @ head_w.T + head_b,
        penultimate=pen,
        head_weights=head_w,
        head_bias=head_b,
        labels=with_labels,
    )

train = featureset(x_train, labels)
x_id = np.vstack([means[c] + rng.standard_normal((60, dim)) for c in range(n_classes)])
x_ood = rng.standard_normal((180, dim)) + 7.0
id_set, ood_set = featureset(x_id), featureset(x_ood)

print(f"{'detector':<14}{'FPR@95':>10}{'AUROC':>10}")
for kind in ("msp", "energy", "mahalanobis", "knn", "react"):
    det = make_detector(kind, train, k=10, normalize=False)
    id_scores = det.score_set(id_set)
    ood_scores = det.score_set(ood_set)
    print(f"{kind:<14}{fpr_at_tpr(id_scores, ood_scores):>10.3f}"
          f"{auroc(id_scores, ood_scores):>10.3f}")

print()
print("scores are rank-equivalent under any increasing transform:")
det = make_detector("knn", train, k=10, normalize=False)
s_id, s_ood = det.score_set(id_set), det.score_set(ood_set)
print(f"  raw      FPR@95 = {fpr_at_tpr(s_id, s_ood):.3f}")
print(f"  2s + 1   FPR@95 = {fpr_at_tpr(2 * s_id + 1, 2 * s_ood + 1):.3f}")
