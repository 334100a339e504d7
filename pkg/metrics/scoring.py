# metrics/scoring.py
"""
Offline evaluation metrics: AUC, gAUC, LogLoss, Normalized Entropy and the
effective rank of an embedding table. All logs are natural logs.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from scipy.stats import entropy, rankdata
from sklearn.metrics import log_loss

from autodiff.tensor import PROB_EPS
from core.errors import ArgumentError, ShapeError, UndefinedMetricError

logger = logging.getLogger(__name__)

GAUC_WEIGHTINGS = ("uniform", "impressions")


def _as_pair(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if s.shape != y.shape:
        raise ShapeError(f"scores {s.shape} vs labels {y.shape}")
    if s.size == 0:
        raise UndefinedMetricError("no examples to score")
    return s, y


def _require_both_classes(y: np.ndarray, metric: str) -> None:
    positives = int(y.sum())
    if positives == 0 or positives == y.size:
        raise UndefinedMetricError(f"{metric} is undefined for single-class labels")


def _midrank_auc(s: np.ndarray, y: np.ndarray) -> float:
    positive = y == 1
    n_pos = int(positive.sum())
    n_neg = y.size - n_pos
    rank_sum = float(rankdata(s)[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc(scores, labels) -> float:
    """
    Mann-Whitney AUC from midranks; tied pairs count 0.5.

    Midranks are multiples of 0.5, so the rank-sum numerator is exact and the
    result equals the pairwise count bit for bit.
    """
    s, y = _as_pair(scores, labels)
    _require_both_classes(y, "AUC")
    return _midrank_auc(s, y)


def auc_bruteforce(scores, labels) -> float:
    """O(P·N) pairwise count, used as a reference for ``auc``."""
    s, y = _as_pair(scores, labels)
    _require_both_classes(y, "AUC")
    pos = s[y == 1]
    neg = s[y == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (pos.size * neg.size))


@dataclass(frozen=True)
class GroupAUC:
    value: float | None
    users_scored: int
    users_skipped: int


def group_auc(scores, labels, user_ids, weighting: str = "uniform") -> GroupAUC:
    """
    Per-user AUC averaged over users that have both a click and a non-click.

    weighting="uniform" is a plain mean over users; "impressions" weights each
    user by its example count.
    """
    if weighting not in GAUC_WEIGHTINGS:
        raise ArgumentError(f"unknown gAUC weighting {weighting!r}; expected {GAUC_WEIGHTINGS}")
    s, y = _as_pair(scores, labels)
    users = np.asarray(user_ids).reshape(-1)
    if users.shape != s.shape:
        raise ShapeError(f"user_ids {users.shape} vs scores {s.shape}")

    order = np.argsort(users, kind="stable")
    uniq, starts = np.unique(users[order], return_index=True)
    bounds = list(starts[1:]) + [order.size]

    values: list[float] = []
    sizes: list[int] = []
    for start, end in zip(starts, bounds):
        rows = order[start:end]
        yu = y[rows]
        positives = yu.sum()
        if positives == 0 or positives == yu.size:
            continue
        values.append(_midrank_auc(s[rows], yu))
        sizes.append(rows.size)

    skipped = uniq.size - len(values)
    if not values:
        raise UndefinedMetricError(
            f"gAUC: none of {uniq.size} users has both classes"
        )
    weights = np.asarray(sizes, dtype=np.float64) if weighting == "impressions" else None
    value = float(np.average(values, weights=weights))
    return GroupAUC(value=value, users_scored=len(values), users_skipped=skipped)


def g_auc(scores, labels, user_ids, weighting: str = "uniform") -> float:
    return group_auc(scores, labels, user_ids, weighting).value


def logloss(scores, labels) -> float:
    """Mean BCE with scores clamped to [PROB_EPS, 1 - PROB_EPS]."""
    s, y = _as_pair(scores, labels)
    return float(log_loss(y, np.clip(s, PROB_EPS, 1.0 - PROB_EPS), labels=[0, 1]))


def base_entropy(labels) -> float:
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise UndefinedMetricError("no labels")
    _require_both_classes(y, "normalized entropy")
    return float(entropy([y.mean(), 1.0 - y.mean()]))


def normalized_entropy(scores, labels) -> float:
    """Mean BCE over the entropy of the empirical click rate."""
    s, y = _as_pair(scores, labels)
    return logloss(s, y) / base_entropy(y)


def ne_delta(ne_a: float, ne_b: float) -> float:
    """Relative change (NE_b - NE_a) / NE_a; negative means b is better."""
    if ne_a <= 0:
        raise ArgumentError(f"reference NE must be > 0, got {ne_a}")
    return (ne_b - ne_a) / ne_a


def effective_rank(table) -> float:
    """exp(Shannon entropy of the normalized singular values); 1.0 for a zero table."""
    t = np.asarray(table, dtype=np.float64)
    if t.ndim != 2:
        raise ShapeError(f"effective_rank needs a 2-D table, got shape {t.shape}")
    sv = np.linalg.svd(t, compute_uv=False)
    total = sv.sum()
    if total <= 0:
        return 1.0
    return float(np.exp(entropy(sv / total)))


@dataclass(frozen=True)
class MetricsReport:
    auc: float
    gauc: float | None  # None when no user has both classes
    logloss: float
    ne: float
    examples: int
    users_scored: int
    users_skipped: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def compute_report(scores, labels, user_ids, gauc_weighting: str = "uniform") -> MetricsReport:
    """
    Every headline metric for one split. A split where no user has both a click
    and a non-click (small or sparse-user evaluation sets) reports gauc=None
    instead of failing.
    """
    s, y = _as_pair(scores, labels)
    try:
        grouped = group_auc(s, y, user_ids, gauc_weighting)
    except UndefinedMetricError as e:
        logger.warning("gAUC not reported: %s", e)
        users = np.unique(np.asarray(user_ids).reshape(-1)).size
        grouped = GroupAUC(value=None, users_scored=0, users_skipped=users)
    report = MetricsReport(
        auc=auc(s, y),
        gauc=grouped.value,
        logloss=logloss(s, y),
        ne=normalized_entropy(s, y),
        examples=int(s.size),
        users_scored=grouped.users_scored,
        users_skipped=grouped.users_skipped,
    )
    logger.debug("Scored %d examples: %s", s.size, report)
    return report
