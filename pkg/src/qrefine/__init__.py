"""Taxonomy-backed query refinement.

Given a list-intent query over an entity-type taxonomy, pick the k subtype
refinements whose answer sets best partition the query's answers; expose the
selection as a library, a dataset-construction pipeline, an evaluation
toolkit, and an interactive drill-down service.
"""

from .discovery import (
    DiscoveryConfig,
    DiscoveryOutcome,
    DiscoverySession,
    back,
    drill,
    simulate_discovery,
    start_session,
)
from .evaluation import (
    EmbeddingTable,
    PredictorConfig,
    correction_report,
    flag_irrelevant,
    predict_answers,
    set_prf,
)
from .filters import (
    CandidatePool,
    FilterRule,
    Gazetteer,
    apply_filters,
    candidate_pool,
    default_gazetteer,
    default_rules,
    filtered_pool,
    token_diff,
)
from .optimizer import (
    CostBreakdown,
    IlpModel,
    RefinementSet,
    SolveResult,
    build_model,
    score,
    solve,
    solve_exhaustive,
)
from .pipeline import (
    DatasetRecord,
    PipelineConfig,
    build_dataset,
    cost_comparison_report,
    select_dev_queries,
    select_training_queries,
)
from .stats import binomial_test, chi_square_2x2, cohen_kappa, fisher_exact_2x2
from .taxonomy import EntitySet, LoadReport, Taxonomy, load_taxonomy

__version__ = "0.1.0"

__all__ = [
    "CandidatePool",
    "CostBreakdown",
    "DatasetRecord",
    "DiscoveryConfig",
    "DiscoveryOutcome",
    "DiscoverySession",
    "EmbeddingTable",
    "EntitySet",
    "FilterRule",
    "Gazetteer",
    "IlpModel",
    "LoadReport",
    "PipelineConfig",
    "PredictorConfig",
    "RefinementSet",
    "SolveResult",
    "Taxonomy",
    "apply_filters",
    "back",
    "binomial_test",
    "build_dataset",
    "build_model",
    "candidate_pool",
    "chi_square_2x2",
    "cohen_kappa",
    "correction_report",
    "cost_comparison_report",
    "default_gazetteer",
    "default_rules",
    "drill",
    "filtered_pool",
    "fisher_exact_2x2",
    "flag_irrelevant",
    "load_taxonomy",
    "predict_answers",
    "score",
    "select_dev_queries",
    "select_training_queries",
    "set_prf",
    "simulate_discovery",
    "solve",
    "solve_exhaustive",
    "start_session",
    "token_diff",
]
