"""Active-learning engine for entity matching.

Selects which candidate record pairs a labeler should annotate next by
combining model uncertainty, neighborhood (spatial) agreement on a pair
similarity graph, PageRank centrality, and a balanced per-component budget.
Ships with a lightweight built-in matcher, a ground-truth oracle for benchmark
runs, and an HTTP labeling service for live annotation sessions.
"""

from almatch.dataset import (
    CandidatePair,
    DatasetSplit,
    LabelStore,
    Record,
    draw_seed,
    load_candidate_pairs,
    serialize_pair,
    split_dataset,
)
from almatch.matcher import (
    BaselineMatcher,
    MatcherConfig,
    PairEncoding,
    encode_all,
    export_encodings,
    import_encodings,
    train_baseline,
)
from almatch.clustering import (
    ClusterBounds,
    Clustering,
    constrained_kmeans,
    kneedle,
    select_k,
    silhouette,
)
from almatch.pairgraph import (
    ComponentSet,
    NodeKind,
    PairGraph,
    build_graph,
    build_iteration_graphs,
    connected_components,
    cosine_similarity,
)
from almatch.scoring import (
    NodeScores,
    conditional_entropy,
    fused_rank,
    pagerank,
    spatial_confidence,
    uncertainty_score,
)
from almatch.selector import (
    BudgetPlan,
    LoopConfig,
    LoopState,
    distribute_budget,
    positive_budget,
    run_active_learning,
    run_iteration,
)
from almatch.evaluation import IterationReport, auc_f1, f1_scores

__version__ = "0.1.0"

__all__ = [
    "BaselineMatcher",
    "BudgetPlan",
    "CandidatePair",
    "ClusterBounds",
    "Clustering",
    "ComponentSet",
    "DatasetSplit",
    "IterationReport",
    "LabelStore",
    "LoopConfig",
    "LoopState",
    "MatcherConfig",
    "NodeKind",
    "NodeScores",
    "PairEncoding",
    "PairGraph",
    "Record",
    "auc_f1",
    "build_graph",
    "build_iteration_graphs",
    "conditional_entropy",
    "connected_components",
    "constrained_kmeans",
    "cosine_similarity",
    "distribute_budget",
    "draw_seed",
    "encode_all",
    "export_encodings",
    "f1_scores",
    "fused_rank",
    "import_encodings",
    "kneedle",
    "load_candidate_pairs",
    "pagerank",
    "positive_budget",
    "run_active_learning",
    "run_iteration",
    "select_k",
    "serialize_pair",
    "silhouette",
    "spatial_confidence",
    "split_dataset",
    "train_baseline",
    "uncertainty_score",
]
