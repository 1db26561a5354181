from .adversary import (
    AdversaryObservations,
    MapResult,
    MleResult,
    PriorModel,
    lambda_d,
    lambda_d_entrywise,
    map_estimate,
    mle_estimate,
)
from .dp import (
    DpParams,
    NonIdentifiability,
    check_non_identifiability,
    dp_budget,
    dp_ratio_check,
    is_adjacent,
)
from .tradeoff import TradeoffParams, TradeoffResult, objective, tradeoff_optimize

__all__ = [
    "AdversaryObservations", "MapResult", "MleResult", "PriorModel", "lambda_d",
    "lambda_d_entrywise", "map_estimate", "mle_estimate", "DpParams", "NonIdentifiability",
    "check_non_identifiability", "dp_budget", "dp_ratio_check", "is_adjacent",
    "TradeoffParams", "TradeoffResult", "objective", "tradeoff_optimize",
]
