"""Uncertainty-aware evaluation of binary rankers against soft labels."""

from .errors import (
    DegenerateLabelsError,
    EmptyAnnotationsError,
    InputError,
    InvalidScoreError,
    InvalidVoteError,
    OutOfRangeError,
    SoftEvalError,
    TieError,
    Undefined,
    is_defined,
)
from .labels import (
    AnnotationTable,
    ItemRatings,
    LabelPipeline,
    MajorityRule,
    RatingScale,
    ThresholdRule,
    aggregate_mean,
    aggregate_table,
    binarize_threshold,
    majority_vote,
    normalize_rating,
)
from .report import ComparisonReport, build_comparison, detect_flips, summarize_r2
from .softmetrics import (
    LabeledScoreSet,
    MetricQuad,
    canonical_sort,
    cumulative_counts,
    metric_quad,
    pr_curve,
    roc_curve,
    soft_ap,
    soft_ap_pairwise_oracle,
    soft_auroc,
    soft_auroc_pairwise_oracle,
)
from .stability import (
    BootstrapConfig,
    StabilityReport,
    bootstrap_resample_item,
    bootstrap_stability,
    kendall_tau,
    pearson_r2,
    sign_test,
    spearman_rho,
)

__version__ = "0.1.0"
