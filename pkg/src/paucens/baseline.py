"""Discrete AdaBoost with optional shrinkage, sharing the weak-learner module."""

from __future__ import annotations

import math

import numpy as np

from .ensemble import EnsembleModel
from .errors import ConfigError
from .metrics import PaucRange
from .weaklearn import DegenerateWeightsError, quantize, train_stump, train_tree

__all__ = ["ERROR_FLOOR", "adaboost_coefficient", "adaboost_train"]

# weighted error used in place of an exact zero
ERROR_FLOOR = 1e-10


def adaboost_coefficient(error: float, shrinkage: float = 1.0) -> float:
    """``shrinkage * 0.5 * ln((1 - error) / error)`` with the error floored at 1e-10."""
    e = max(float(error), ERROR_FLOOR)
    return shrinkage * 0.5 * math.log((1.0 - e) / e)


def adaboost_train(dataset, t_max: int = 100, tree_depth: int = 3, shrinkage: float = 1.0):
    """Train AdaBoost; returns an :class:`EnsembleModel` tagged ``method="adaboost"``.

    Weights start uniform over all samples. Each round fits the learner with
    the largest weighted edge, stops if its weighted error reaches 0.5, and
    otherwise applies the normalized exponential update. The training log
    records the error, the coefficient and the error of the chosen learner
    under the updated weights.
    """
    if t_max < 1:
        raise ConfigError("t_max must be >= 1")
    if not 0.0 < shrinkage <= 1.0:
        raise ConfigError("shrinkage must lie in (0, 1]")
    X, y = dataset.stacked()
    q = quantize(X)
    u = np.full(y.size, 1.0 / y.size)
    learners, coefs, records = [], [], []
    stop_reason = "t_max"
    for t in range(t_max):
        try:
            if tree_depth <= 1:
                h = train_stump(q, y, u)
            else:
                h = train_tree(q, y, u, tree_depth)
        except DegenerateWeightsError:
            stop_reason = "degenerate weights"
            break
        pred = h.predict_bins(q.bins)
        wrong = pred != y
        err = float(u[wrong].sum())
        if err >= 0.5:
            stop_reason = "weak learner no better than chance"
            break
        alpha = adaboost_coefficient(err, shrinkage)
        u = u * np.exp(-alpha * y * pred)
        u /= u.sum()
        learners.append(h)
        coefs.append(alpha)
        records.append({
            "iteration": t + 1,
            "error": err,
            "coefficient": alpha,
            "error_after_update": float(u[wrong].sum()),
            "weight_sum": float(u.sum()),
        })
    return EnsembleModel(
        weak_learners=learners,
        w=np.asarray(coefs, dtype=np.float64),
        rng=PaucRange(0.0, 1.0),
        method="adaboost",
        shrinkage=float(shrinkage),
        n_features=dataset.d,
        training_log=records,
        stop_reason=stop_reason,
    )
