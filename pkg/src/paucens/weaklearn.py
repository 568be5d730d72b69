"""Decision stumps and shallow decision trees over 256-bin quantized features.

Every learner outputs labels in {-1, +1} and is trained to maximize the
weighted edge ``sum_l u_l * y_l * h(x_l)``. Candidate thresholds are the
interior bin edges of an equal-width quantization of each feature, so one
threshold scan per feature costs O(256) after an O(N) histogram.

A sample is on the *high* side of a threshold ``t`` when ``x >= t``. The
quantizer assigns bins with the same comparison, which makes a threshold on
bin ``b`` and the raw threshold ``edges[f, b]`` classify every value
identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

__all__ = [
    "N_BINS",
    "DecisionStump",
    "DecisionTree",
    "DegenerateWeightsError",
    "QuantizedMatrix",
    "quantize",
    "train_stump",
    "train_tree",
    "weighted_edge",
]

N_BINS = 256


class DegenerateWeightsError(NumericalError):
    """Raised when sample weights carry no information (all zero)."""


@dataclass(frozen=True)
class QuantizedMatrix:
    """Per-feature bin indices of a sample matrix.

    Attributes
    ----------
    bins : uint8 array, shape (N, d)
    edges : float array, shape (d, 256)
        ``edges[f, 0]`` is the feature minimum; ``edges[f, b]`` for ``b >= 1``
        is the lower boundary of bin ``b``. Constant features get ``+inf``
        interior edges so that every value falls in bin 0.
    raw_min, raw_max : float arrays, shape (d,)
    """

    bins: np.ndarray
    edges: np.ndarray
    raw_min: np.ndarray
    raw_max: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.bins.shape[0]

    @property
    def n_features(self) -> int:
        return self.bins.shape[1]

    def transform(self, X) -> np.ndarray:
        """Bin indices of new samples under the stored edges."""
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape, dtype=np.uint8)
        for f in range(self.n_features):
            out[:, f] = np.searchsorted(self.edges[f, 1:], X[:, f], side="right")
        return out


def quantize(data) -> QuantizedMatrix:
    """Equal-width 256-bin quantization over the observed range of each feature.

    ``data`` is a :class:`~paucens.dataset.Dataset` (positives stacked above
    negatives) or an ``(N, d)`` array.
    """
    if hasattr(data, "stacked"):
        X = data.stacked()[0]
    else:
        X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("quantize needs a non-empty 2-D sample matrix")
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    steps = np.arange(N_BINS, dtype=np.float64) / N_BINS
    edges = lo[:, None] + (hi - lo)[:, None] * steps[None, :]
    const = hi <= lo
    edges[const, 1:] = np.inf
    # rounding must not let an interior edge reach past the maximum
    edges[:, 1:] = np.minimum(edges[:, 1:], np.where(const, np.inf, hi)[:, None])
    edges = np.maximum.accumulate(edges, axis=1)
    q = QuantizedMatrix(np.empty(X.shape, dtype=np.uint8), edges, lo, hi)
    object.__setattr__(q, "bins", q.transform(X))
    return q


def weighted_edge(pred, labels, weights) -> float:
    """``sum_l u_l y_l h(x_l)``."""
    return float(np.dot(np.asarray(weights) * np.asarray(labels), np.asarray(pred)))


@dataclass(frozen=True)
class DecisionStump:
    """``h(x) = polarity`` if ``x[feature] >= threshold`` else ``-polarity``."""

    feature: int
    threshold: float
    polarity: int
    bin: int = -1

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        hi = X[:, self.feature] >= self.threshold
        return np.where(hi, self.polarity, -self.polarity).astype(np.float64)

    def predict_bins(self, bins) -> np.ndarray:
        hi = bins[:, self.feature] >= self.bin
        return np.where(hi, self.polarity, -self.polarity).astype(np.float64)

    def negated(self) -> "DecisionStump":
        return DecisionStump(self.feature, self.threshold, -self.polarity, self.bin)

    @property
    def depth(self) -> int:
        return 1

    def to_dict(self) -> dict:
        return {
            "kind": "stump",
            "feature": int(self.feature),
            "threshold": float(self.threshold),
            "polarity": int(self.polarity),
            "bin": int(self.bin),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["feature"]), float(d["threshold"]), int(d["polarity"]), int(d.get("bin", -1)))


def _stump_edges(bins, uy):
    """Edges of every (feature, threshold bin 1..255, polarity) candidate.

    Returns an array of shape (d, 255, 2); the last axis holds polarity +1
    then -1.
    """
    N, d = bins.shape
    idx = bins.astype(np.int64) + (np.arange(d, dtype=np.int64) * N_BINS)[None, :]
    hist = np.bincount(idx.ravel(), weights=np.repeat(uy, d), minlength=d * N_BINS)
    hist = hist.reshape(d, N_BINS)
    below = np.cumsum(hist, axis=1)[:, :-1]  # weight strictly below bin b, b = 1..255
    total = uy.sum()
    plus = total - 2.0 * below
    return np.stack([plus, -plus], axis=-1)


def _check_weights(weights):
    w = np.asarray(weights, dtype=np.float64)
    if not np.isfinite(w).all() or (w < 0).any():
        raise ValueError("weights must be finite and non-negative")
    if not w.sum() > 0:
        raise DegenerateWeightsError("all sample weights are zero")
    return w


def train_stump(q: QuantizedMatrix, labels, weights) -> DecisionStump:
    """Stump with maximal weighted edge.

    Ties go to the lowest feature index, then the lowest threshold, then
    polarity +1.
    """
    u = _check_weights(weights)
    y = np.asarray(labels, dtype=np.float64)
    return _best_stump(q, q.bins, y * u)


def _best_stump(q, bins, uy):
    edges = _stump_edges(bins, uy)
    flat = int(np.argmax(edges))
    f, b0, p = np.unravel_index(flat, edges.shape)
    b = int(b0) + 1
    return DecisionStump(int(f), float(q.edges[f, b]), 1 if p == 0 else -1, b)


@dataclass(frozen=True)
class DecisionTree:
    """Binary tree stored as parallel node arrays.

    Node 0 is the root. For an internal node ``k``, samples with
    ``x[feature[k]] >= threshold[k]`` go to ``high[k]``, the rest to
    ``low[k]``. Leaves have ``feature == -1`` and carry ``value`` in {-1, +1}.
    """

    feature: tuple
    threshold: tuple
    bin: tuple
    low: tuple
    high: tuple
    value: tuple

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        def walk(k):
            if self.feature[k] < 0:
                return 0
            return 1 + max(walk(self.low[k]), walk(self.high[k]))

        return walk(0)

    def _route(self, M, thresholds):
        feat = np.asarray(self.feature)
        low = np.asarray(self.low)
        high = np.asarray(self.high)
        node = np.zeros(M.shape[0], dtype=np.int64)
        for _ in range(self.n_nodes):
            rows = np.nonzero(feat[node] >= 0)[0]
            if rows.size == 0:
                break
            k = node[rows]
            go_high = M[rows, feat[k]] >= thresholds[k]
            node[rows] = np.where(go_high, high[k], low[k])
        return np.asarray(self.value, dtype=np.float64)[node]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self._route(X, np.asarray(self.threshold, dtype=np.float64))

    def predict_bins(self, bins) -> np.ndarray:
        return self._route(bins, np.asarray(self.bin))

    def negated(self) -> "DecisionTree":
        return DecisionTree(
            self.feature, self.threshold, self.bin, self.low, self.high,
            tuple(-v for v in self.value),
        )

    def to_dict(self) -> dict:
        return {
            "kind": "tree",
            "feature": [int(v) for v in self.feature],
            "threshold": [float(v) for v in self.threshold],
            "bin": [int(v) for v in self.bin],
            "low": [int(v) for v in self.low],
            "high": [int(v) for v in self.high],
            "value": [int(v) for v in self.value],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(int(v) for v in d["feature"]),
            tuple(float(v) for v in d["threshold"]),
            tuple(int(v) for v in d["bin"]),
            tuple(int(v) for v in d["low"]),
            tuple(int(v) for v in d["high"]),
            tuple(int(v) for v in d["value"]),
        )


def learner_from_dict(d):
    kind = d.get("kind")
    if kind == "stump":
        return DecisionStump.from_dict(d)
    if kind == "tree":
        return DecisionTree.from_dict(d)
    raise ValueError(f"unknown weak learner kind {kind!r}")


def train_tree(q: QuantizedMatrix, labels, weights, depth: int = 3) -> DecisionTree:
    """Greedy top-down tree of at most ``depth`` split levels.

    Each internal node is the best stump (by weighted edge) on the samples
    routed to it. A node becomes a leaf when the depth budget is spent, when
    its weighted samples all carry one label, or when the best stump leaves
    one side empty. Leaves predict the sign of their weighted label sum,
    with ties resolved to +1.
    """
    if depth < 1:
        raise ValueError("tree depth must be >= 1")
    u = _check_weights(weights)
    y = np.asarray(labels, dtype=np.float64)
    uy = u * y
    nodes = {"feature": [], "threshold": [], "bin": [], "low": [], "high": [], "value": []}

    def new_node():
        for key in nodes:
            nodes[key].append(-1 if key != "threshold" else 0.0)
        nodes["value"][-1] = 0
        return len(nodes["feature"]) - 1

    def make_leaf(k, idx):
        nodes["value"][k] = 1 if uy[idx].sum() >= 0 else -1

    def grow(k, idx, level):
        live = idx[u[idx] > 0]
        pure = live.size == 0 or np.all(y[live] == y[live[0]])
        if level == depth or pure:
            make_leaf(k, idx)
            return
        stump = _best_stump(q, q.bins[idx], uy[idx])
        go_high = q.bins[idx, stump.feature] >= stump.bin
        if go_high.all() or not go_high.any():
            make_leaf(k, idx)
            return
        nodes["feature"][k] = stump.feature
        nodes["threshold"][k] = stump.threshold
        nodes["bin"][k] = stump.bin
        lo, hi = new_node(), new_node()
        nodes["low"][k], nodes["high"][k] = lo, hi
        grow(lo, idx[~go_high], level + 1)
        grow(hi, idx[go_high], level + 1)

    root = new_node()
    grow(root, np.arange(q.n_samples), 0)
    return DecisionTree(*(tuple(nodes[k]) for k in ("feature", "threshold", "bin", "low", "high", "value")))
