"""One-class anomaly detection on embeddings: density-weighted mean-shift
refinement followed by PCA-reduced Gaussian density estimation with
Mahalanobis scoring, plus evaluation and hyperparameter-search harnesses.
"""

from .config import MsdeConfig, build_config, parse_config_file
from .data import (
    DatasetSplit,
    EmbeddingMatrix,
    Standardizer,
    SyntheticSpec,
    apply_standardizer,
    fit_standardizer,
    generate_synthetic,
    load_embeddings,
    save_scores,
)
from .knn import (
    DistanceExtremes,
    NeighborGraph,
    brute_force_knn,
    build_knn_graph,
    count_within_radius,
    distance_extremes,
)
from .metrics import (
    MetricResult,
    auc_roc,
    auc_roc_pairwise,
    average_precision,
    average_precision_stepwise,
    evaluate,
)
from .scoring import (
    GaussianScorer,
    PcaBasis,
    ScoreReport,
    fit_gaussian,
    fit_pca,
    load_scorer,
    mahalanobis,
    normalize_scores,
    project,
    save_scorer,
    score_pipeline,
)
from .shift import (
    ShiftParams,
    ShiftTrace,
    ShiftedEmbeddings,
    joint_shift,
    run_shift,
    shift_step,
)
from .tune import (
    LeakageSplit,
    SearchSpace,
    TrialRecord,
    make_leakage_split,
    random_search,
)
from .weights import (
    DensityWeights,
    FuzzyGraph,
    RadiusSchedule,
    build_fuzzy_graph,
    compute_empirical_weights,
    pairwise_distances,
    search_radius,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetSplit",
    "DensityWeights",
    "DistanceExtremes",
    "EmbeddingMatrix",
    "FuzzyGraph",
    "GaussianScorer",
    "LeakageSplit",
    "MetricResult",
    "MsdeConfig",
    "NeighborGraph",
    "PcaBasis",
    "RadiusSchedule",
    "ScoreReport",
    "SearchSpace",
    "ShiftParams",
    "ShiftTrace",
    "ShiftedEmbeddings",
    "Standardizer",
    "SyntheticSpec",
    "TrialRecord",
    "apply_standardizer",
    "auc_roc",
    "auc_roc_pairwise",
    "average_precision",
    "average_precision_stepwise",
    "brute_force_knn",
    "build_config",
    "build_fuzzy_graph",
    "build_knn_graph",
    "compute_empirical_weights",
    "count_within_radius",
    "distance_extremes",
    "evaluate",
    "fit_gaussian",
    "fit_pca",
    "fit_standardizer",
    "generate_synthetic",
    "joint_shift",
    "load_embeddings",
    "load_scorer",
    "mahalanobis",
    "make_leakage_split",
    "normalize_scores",
    "pairwise_distances",
    "parse_config_file",
    "project",
    "random_search",
    "run_shift",
    "save_scorer",
    "save_scores",
    "score_pipeline",
    "search_radius",
    "shift_step",
]
