"""Aggregate flat classifiers with different label sets through a class taxonomy."""

__version__ = "0.1.0"

from .errors import TaxAggError
from .taxonomy import Taxonomy, build_taxonomy
from .scores import ScoreSheet
from .heuristic import PropagatedScores, aggregate_heuristic, propagate
from .network import (
    Binormal,
    Discrete,
    EvidenceFactor,
    Network,
    ObservationParams,
    build_network,
    score_evidence,
    transform_score,
)
from .junction import PosteriorReport, brute_force_marginals, infer_marginals
from .paths import (
    EntropyPolicy,
    EntryLevelPolicy,
    MarginalPolicy,
    entry_level_backoff,
    normalized_entropy,
    walk_entropy,
    walk_marginal,
)
from .estimation import em_fit, fit_binormal, fit_discrete, fit_supervised, gold_to_binary
from .metrics import EvalReport, evaluate, lca_prf

__all__ = [
    "TaxAggError", "Taxonomy", "build_taxonomy", "ScoreSheet", "PropagatedScores",
    "aggregate_heuristic", "propagate", "Binormal", "Discrete", "EvidenceFactor",
    "Network", "ObservationParams", "build_network", "score_evidence", "transform_score",
    "PosteriorReport", "brute_force_marginals", "infer_marginals", "EntropyPolicy",
    "EntryLevelPolicy", "MarginalPolicy", "entry_level_backoff", "normalized_entropy",
    "walk_entropy", "walk_marginal", "em_fit", "fit_binormal", "fit_discrete",
    "fit_supervised", "gold_to_binary", "EvalReport", "evaluate", "lca_prf",
]
