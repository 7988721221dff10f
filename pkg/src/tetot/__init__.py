"""Transferability estimation for frozen classifiers via optimal transport.

Given embeddings of a labeled source domain and an unlabeled target domain
plus the source classifier head, the toolkit scores how well the frozen
model will transfer: the exact optimal transport cost between the two
embedding clouds under a combined feature + pseudo-label ground cost.
Lower cost predicts higher target accuracy. A statistics-only variant
(`compute_tetot_approx`) works from Gaussian moment fits when the source
data itself cannot be shared, and `prediction_entropy` provides the
standard target-only baseline for comparison.
"""

from .errors import (
    DataError,
    FormatError,
    InputError,
    SolverError,
    TetotError,
)
from .data_model import (
    ClassifierHead,
    EmbeddingSet,
    MetricReport,
    NormalizationMode,
    TetotConfig,
    generate_synthetic_fixture,
    normalize_features,
    subsample,
)
from .ot_solver import (
    OtResult,
    brute_force_oracle,
    solve_exact,
    solve_sinkhorn,
    verify_plan,
    warmup_jit,
)
from .metric import (
    OneHotLabels,
    PseudoLabelMatrix,
    combine_costs,
    compute_tetot,
    feature_cost_matrix,
    label_cost_matrix,
    pseudo_label,
)
from .gaussian import (
    GaussianStats,
    compute_tetot_approx,
    gaussian_stats,
    sym_psd_sqrt,
    w2_squared,
)
from .baselines import prediction_entropy, transferability_ground_truth
from .evaluation import (
    Candidate,
    CorrelationReport,
    correlate_with_accuracy,
    correlation_summary,
    pearson,
    rank_candidates,
)
from .formats import (
    load_classifier_head,
    load_embedding_set,
    load_gaussian_stats,
    save_classifier_head,
    save_embedding_set,
    save_gaussian_stats,
)

__version__ = "0.1.0"

__all__ = [
    "TetotError",
    "InputError",
    "DataError",
    "SolverError",
    "FormatError",
    "EmbeddingSet",
    "ClassifierHead",
    "NormalizationMode",
    "TetotConfig",
    "MetricReport",
    "subsample",
    "normalize_features",
    "generate_synthetic_fixture",
    "OtResult",
    "solve_exact",
    "solve_sinkhorn",
    "brute_force_oracle",
    "verify_plan",
    "warmup_jit",
    "PseudoLabelMatrix",
    "OneHotLabels",
    "feature_cost_matrix",
    "pseudo_label",
    "label_cost_matrix",
    "combine_costs",
    "compute_tetot",
    "GaussianStats",
    "gaussian_stats",
    "sym_psd_sqrt",
    "w2_squared",
    "compute_tetot_approx",
    "prediction_entropy",
    "transferability_ground_truth",
    "Candidate",
    "CorrelationReport",
    "pearson",
    "rank_candidates",
    "correlate_with_accuracy",
    "correlation_summary",
    "load_embedding_set",
    "save_embedding_set",
    "load_classifier_head",
    "save_classifier_head",
    "load_gaussian_stats",
    "save_gaussian_stats",
    "__version__",
]
