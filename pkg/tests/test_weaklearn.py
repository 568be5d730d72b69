import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paucens.weaklearn import (
    N_BINS,
    DecisionStump,
    DecisionTree,
    DegenerateWeightsError,
    learner_from_dict,
    quantize,
    train_stump,
    train_tree,
    weighted_edge,
)


def exhaustive_stump_edge(q, y, u):
    best = -np.inf
    for f in range(q.n_features):
        for b in range(1, N_BINS):
            hi = q.bins[:, f] >= b
            for pol in (1, -1):
                pred = np.where(hi, pol, -pol)
                best = max(best, float(np.dot(u * y, pred)))
    return best


def test_constant_feature_is_bin_zero():
    q = quantize(np.full((5, 1), 3.0))
    assert (q.bins == 0).all()


def test_endpoints():
    q = quantize(np.array([[0.0], [255.0]]))
    assert q.bins.ravel().tolist() == [0, 255]


def test_linear_feature_uses_every_bin():
    q = quantize(np.arange(256.0)[:, None])
    assert q.bins.ravel().tolist() == list(range(256))


def test_transform_matches_training_bins():
    g = np.random.default_rng(0)
    X = g.normal(size=(100, 5))
    q = quantize(X)
    assert np.array_equal(q.transform(X), q.bins)


def test_raw_thresholds_agree_with_bins():
    g = np.random.default_rng(1)
    X = g.normal(size=(100, 5))
    y = np.where(g.random(100) < 0.5, 1.0, -1.0)
    q = quantize(X)
    h = train_stump(q, y, np.full(100, 0.01))
    assert np.array_equal(h.predict(X), h.predict_bins(q.bins))


def test_separable_edge_is_total_weight():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    u = np.full(4, 0.25)
    h = train_stump(quantize(X), y, u)
    assert weighted_edge(h.predict(X), y, u) == pytest.approx(1.0)


def test_concentrated_weight_follows_one_point():
    g = np.random.default_rng(2)
    X = g.normal(size=(20, 3))
    y = np.ones(20)
    y[7] = -1.0
    u = np.zeros(20)
    u[7] = 1.0
    h = train_stump(quantize(X), y, u)
    assert h.predict(X[7:8])[0] == -1.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_stump_matches_exhaustive_search(seed):
    g = np.random.default_rng(seed)
    X = g.normal(size=(30, 3))
    y = np.where(g.random(30) < 0.5, 1.0, -1.0)
    u = g.random(30)
    q = quantize(X)
    h = train_stump(q, y, u)
    got = weighted_edge(h.predict_bins(q.bins), y, u)
    assert got == pytest.approx(exhaustive_stump_edge(q, y, u), abs=1e-12)


def test_zero_weights_raise():
    q = quantize(np.zeros((3, 1)))
    with pytest.raises(DegenerateWeightsError):
        train_stump(q, np.ones(3), np.zeros(3))
    with pytest.raises(ValueError):
        train_stump(q, np.ones(3), np.array([1.0, -1.0, 1.0]))


def test_depth_one_tree_is_best_stump():
    g = np.random.default_rng(4)
    X = g.normal(size=(50, 4))
    y = np.where(X[:, 2] + 0.3 * g.normal(size=50) > 0, 1.0, -1.0)
    u = g.random(50)
    q = quantize(X)
    tree, stump = train_tree(q, y, u, depth=1), train_stump(q, y, u)
    assert np.array_equal(tree.predict(X), stump.predict(X))


def test_xor_needs_depth_two():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    u = np.full(4, 0.25)
    tree = train_tree(quantize(X), y, u, depth=2)
    assert np.array_equal(tree.predict(X), y)
    assert tree.depth == 2


def test_single_class_gives_leaf():
    X = np.random.default_rng(0).normal(size=(10, 2))
    tree = train_tree(quantize(X), np.ones(10), np.ones(10), depth=3)
    assert tree.n_nodes == 1
    assert (tree.predict(X) == 1).all()


def test_leaf_tie_is_positive():
    X = np.zeros((2, 1))
    tree = train_tree(quantize(X), np.array([1.0, -1.0]), np.ones(2), depth=2)
    assert tree.predict(X).tolist() == [1.0, 1.0]


def test_tree_depth_budget():
    g = np.random.default_rng(9)
    X = g.normal(size=(200, 4))
    y = np.where(g.random(200) < 0.5, 1.0, -1.0)
    for depth in (1, 2, 3):
        assert train_tree(quantize(X), y, np.ones(200), depth=depth).depth <= depth
    with pytest.raises(ValueError):
        train_tree(quantize(X), y, np.ones(200), depth=0)


def test_negated():
    g = np.random.default_rng(6)
    X = g.normal(size=(40, 3))
    y = np.where(g.random(40) < 0.5, 1.0, -1.0)
    q = quantize(X)
    for h in (train_stump(q, y, np.ones(40)), train_tree(q, y, np.ones(40), 3)):
        assert np.array_equal(h.negated().predict(X), -h.predict(X))


def test_learner_dict_round_trip():
    g = np.random.default_rng(8)
    X = g.normal(size=(40, 3))
    y = np.where(g.random(40) < 0.5, 1.0, -1.0)
    q = quantize(X)
    for h in (train_stump(q, y, np.ones(40)), train_tree(q, y, np.ones(40), 3)):
        back = learner_from_dict(h.to_dict())
        assert type(back) is type(h)
        assert np.array_equal(back.predict(X), h.predict(X))
    with pytest.raises(ValueError):
        learner_from_dict({"kind": "forest"})


def test_stump_threshold_semantics():
    h = DecisionStump(feature=0, threshold=1.0, polarity=-1)
    assert h.predict(np.array([[0.5], [1.0], [2.0]])).tolist() == [1.0, -1.0, -1.0]


def test_tree_routing_by_hand():
    # root splits on f0 >= 0; high child splits on f1 >= 5
    tree = DecisionTree((0, -1, 1, -1, -1), (0.0, 0.0, 5.0, 0.0, 0.0), (1, -1, 1, -1, -1),
                        (1, -1, 3, -1, -1), (2, -1, 4, -1, -1), (0, -1, 0, -1, 1))
    X = np.array([[-1.0, 9.0], [1.0, 1.0], [1.0, 7.0]])
    assert tree.predict(X).tolist() == [-1.0, -1.0, 1.0]
    assert list(itertools.chain(tree.to_dict()["value"])) == [0, -1, 0, -1, 1]
