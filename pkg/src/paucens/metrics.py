"""Exact ROC, AUC and partial-AUC on score lists.

Tie rule: a positive whose score equals a negative's score counts as
misordered. Negatives with equal scores are ranked by ascending input index.
Both rules are shared with the structured-SVM oracle so that the two agree
to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

__all__ = ["PaucRange", "auc", "pauc", "pauc_risk", "rank_negatives", "roc_points", "roc_area"]

# n*alpha that lands within this relative distance of an integer is snapped to it,
# so that e.g. 10 * 0.7 == 7.000000000000001 does not push ceil() one rank too far
_SNAP = 1e-9

# searchsorted side used to count positives "at or below" a negative; "right"
# makes ties misordered. Self-test fault injection flips it to "left".
_TIE_SIDE = "right"


def _snap(x: float) -> float:
    r = round(x)
    return float(r) if abs(x - r) <= _SNAP * max(1.0, abs(x)) else x


@dataclass(frozen=True)
class PaucRange:
    """False-positive-rate interval ``[alpha, beta]``."""

    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ConfigError("alpha and beta must be finite")
        if not (0.0 <= a < b <= 1.0):
            raise ConfigError(f"need 0 <= alpha < beta <= 1, got alpha={a}, beta={b}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    def j_alpha(self, n: int) -> int:
        return math.ceil(_snap(n * self.alpha))

    def j_beta(self, n: int) -> int:
        return math.floor(_snap(n * self.beta))

    def indices(self, n: int):
        """Return ``(j_alpha, j_beta)`` for ``n`` negatives, rejecting empty windows."""
        ja, jb = self.j_alpha(n), self.j_beta(n)
        if jb - ja < 1:
            raise ConfigError(
                f"FPR range [{self.alpha}, {self.beta}] selects no negative rank for n={n} "
                f"(j_alpha={ja}, j_beta={jb}); widen the range or add negatives"
            )
        return ja, jb

    def normalizer(self, m: int, n: int) -> float:
        """The constant ``m * n * (beta - alpha)`` dividing every pair count."""
        return m * n * (self.beta - self.alpha)


def _scores(values, what):
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise DataError(f"{what} scores are empty")
    if not np.isfinite(arr).all():
        raise DataError(f"{what} scores must be finite")
    return arr


def rank_negatives(neg_scores) -> np.ndarray:
    """Indices of negatives sorted by descending score, ties by ascending index."""
    return np.argsort(-np.asarray(neg_scores, dtype=np.float64), kind="stable")


def auc(pos_scores, neg_scores) -> float:
    """Fraction of (positive, negative) pairs with the positive strictly above."""
    pos = np.sort(_scores(pos_scores, "positive"))
    neg = _scores(neg_scores, "negative")
    # written as one minus the misordered fraction so that pauc over [0, 1]
    # reproduces this value bit for bit
    misordered = np.searchsorted(pos, neg, side=_TIE_SIDE).sum()
    return 1.0 - float(misordered) / (pos.size * neg.size)


def pauc_risk(pos_scores, neg_scores, rng: PaucRange) -> float:
    """Normalized count of misordered pairs against negatives ranked in the window."""
    pos = np.sort(_scores(pos_scores, "positive"))
    neg = _scores(neg_scores, "negative")
    ja, jb = rng.indices(neg.size)
    window = neg[rank_negatives(neg)[ja:jb]]
    # positives scoring <= each windowed negative
    misordered = np.searchsorted(pos, window, side=_TIE_SIDE).sum()
    return float(misordered) / rng.normalizer(pos.size, neg.size)


def pauc(pos_scores, neg_scores, rng: PaucRange) -> float:
    """Partial AUC over the FPR range ``rng``, i.e. one minus :func:`pauc_risk`."""
    return 1.0 - pauc_risk(pos_scores, neg_scores, rng)


def roc_points(pos_scores, neg_scores) -> np.ndarray:
    """Vertices of the empirical ROC polyline as an ``(k, 2)`` array of (FPR, TPR).

    Thresholds sweep the distinct scores from high to low. When a threshold is
    shared by positives and negatives, an extra corner vertex is emitted so
    that the negatives are passed first; the area under the polyline then
    equals :func:`auc` under the pessimistic tie rule.
    """
    pos = _scores(pos_scores, "positive")
    neg = _scores(neg_scores, "negative")
    m, n = pos.size, neg.size
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    tp = m - np.searchsorted(pos_sorted, thresholds, side="left")
    fp = n - np.searchsorted(neg_sorted, thresholds, side="left")
    points = [(0.0, 0.0)]
    prev_tp = prev_fp = 0
    for t_count, f_count in zip(tp.tolist(), fp.tolist()):
        if t_count > prev_tp and f_count > prev_fp:
            points.append((f_count / n, prev_tp / m))
        points.append((f_count / n, t_count / m))
        prev_tp, prev_fp = t_count, f_count
    return np.asarray(points, dtype=np.float64)


def roc_area(points) -> float:
    """Trapezoidal area under an ROC polyline."""
    pts = np.asarray(points, dtype=np.float64)
    dx = np.diff(pts[:, 0])
    return float(np.sum(dx * (pts[1:, 1] + pts[:-1, 1]) * 0.5))
