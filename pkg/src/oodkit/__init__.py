"""Feature-space OOD detection toolkit.

Post-hoc detector zoo, a percentile-calibrated two-stage domain filter, a
benchmark harness with FPR@95 / AUROC / signed-rank machinery, a synthetic
domain-feature-collapse lab, an exact discrete information-theory engine
that verifies the collapse theorem by brute force, and a bit-exact feature
file format tying it all together.
"""

__version__ = "0.1.0"

from .detectors import (
    fit_knn,
    fit_mahalanobis,
    fit_react,
    make_detector,
    score_energy,
    score_msp,
)
from .features import FeatureSet
from .harness import (
    BenchmarkConfig,
    EvalReport,
    SplitSpec,
    make_adjacent_split,
    percentile_sweep,
    render_report_text,
    run_benchmark,
)
from .metrics import auroc, fpr_at_tpr, wilcoxon_signed_rank
from .oodf import inspect_header, read_feature_file, write_feature_file
from .two_stage import (
    DomainFilter,
    TwoStageDetector,
    calibrate_domain_threshold,
    fit_domain_filter,
    make_two_stage,
    two_stage_decide,
    two_stage_score,
    two_stage_score_set,
)

__all__ = [
    "__version__",
    "FeatureSet",
    "fit_knn",
    "fit_mahalanobis",
    "fit_react",
    "make_detector",
    "score_energy",
    "score_msp",
    "BenchmarkConfig",
    "EvalReport",
    "SplitSpec",
    "make_adjacent_split",
    "percentile_sweep",
    "render_report_text",
    "run_benchmark",
    "auroc",
    "fpr_at_tpr",
    "wilcoxon_signed_rank",
    "inspect_header",
    "read_feature_file",
    "write_feature_file",
    "DomainFilter",
    "TwoStageDetector",
    "calibrate_domain_threshold",
    "fit_domain_filter",
    "make_two_stage",
    "two_stage_decide",
    "two_stage_score",
    "two_stage_score_set",
]
