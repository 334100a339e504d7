from .scoring import (
    GAUC_WEIGHTINGS,
    MetricsReport,
    auc,
    auc_bruteforce,
    compute_report,
    effective_rank,
    g_auc,
    group_auc,
    logloss,
    ne_delta,
    normalized_entropy,
)

__all__ = [
    "GAUC_WEIGHTINGS",
    "MetricsReport",
    "auc",
    "auc_bruteforce",
    "compute_report",
    "effective_rank",
    "g_auc",
    "group_auc",
    "logloss",
    "ne_delta",
    "normalized_entropy",
]
