import itertools

import numpy as np
import pytest

from abclust.kernels.base import AbsoluteMetric, EuclideanMetric
from abclust.transport import (
    CostMatrix,
    TransportResult,
    apply_matching,
    build_cost,
    hungarian,
    sinkhorn,
    wasserstein_1d,
)


def brute_force_assignment(values: np.ndarray):
    """Exhaustive minimum over all n! permutations; the assignment oracle."""
    n = values.shape[0]
    best_cost, best_perm = np.inf, None
    for cols in itertools.permutations(range(n)):
        c = sum(values[i, cols[i]] for i in range(n))
        if c < best_cost:
            best_cost, best_perm = c, cols
    return best_cost, best_perm


def test_cost_matrix_validation():
    CostMatrix(np.ones((3, 3)), q=2.0)
    with pytest.raises(ValueError):
        CostMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        CostMatrix(np.array([[1.0, np.inf], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        CostMatrix(np.array([[1.0, -0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        CostMatrix(np.ones((2, 2)), q=0.5)


def test_transport_result_requires_bijection():
    with pytest.raises(ValueError):
        TransportResult(0.0, np.array([0, 0]), 0.0, "sort")


def test_build_cost_uses_pairwise_and_power():
    y = np.array([0.0, 2.0])
    s = np.array([1.0, 5.0])
    c = build_cost(y, s, AbsoluteMetric(), q=2.0)
    np.testing.assert_allclose(c.values, [[1.0, 25.0], [1.0, 9.0]])
    # plain-callable metric path agrees
    c2 = build_cost(y, s, lambda a, b: abs(a - b), q=2.0)
    np.testing.assert_allclose(c2.values, c.values)


def test_build_cost_euclidean_zero_diagonal():
    y = np.random.default_rng(0).normal(size=(4, 2))
    c = build_cost(y, y, EuclideanMetric(), q=2.0)
    assert np.diag(c.values) == pytest.approx(np.zeros(4), abs=1e-12)


def test_wasserstein_1d_frozen_examples():
    res = wasserstein_1d([0.0, 1.0], [1.0, 0.0], q=1.0)
    assert res.distance == 0.0
    assert res.permutation.tolist() == [1, 0]

    res = wasserstein_1d([0.0, 2.0], [1.0, 3.0], q=1.0)
    assert res.distance == pytest.approx(1.0, abs=1e-12)  # (|0-1| + |2-3|)/2

    y = np.random.default_rng(1).normal(size=10)
    res = wasserstein_1d(y, y, q=2.0)
    assert res.distance == 0.0
    assert res.permutation.tolist() == list(range(10))


def test_wasserstein_1d_matches_brute_force():
    rng = np.random.default_rng(2)
    for q in (1.0, 2.0):
        for n in (2, 3, 5, 6):
            y = rng.normal(size=n)
            s = rng.normal(size=n)
            res = wasserstein_1d(y, s, q)
            cost = np.abs(y[:, None] - s[None, :]) ** q
            best, _ = brute_force_assignment(cost)
            assert res.cost == pytest.approx(best, abs=1e-10)
            # the reported permutation achieves the reported cost
            achieved = sum(cost[res.permutation[j], j] for j in range(n))
            assert achieved == pytest.approx(best, abs=1e-10)


def test_wasserstein_1d_guards():
    with pytest.raises(ValueError):
        wasserstein_1d([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        wasserstein_1d([], [])
    with pytest.raises(ValueError):
        wasserstein_1d([1.0], [1.0], q=0.5)


def test_hungarian_frozen_examples():
    res = hungarian(CostMatrix(np.array([[1.0, 2.0], [2.0, 1.0]])))
    assert res.cost == pytest.approx(2.0)
    assert res.permutation.tolist() == [0, 1]

    # planted zero-cost permutation is recovered exactly
    rng = np.random.default_rng(3)
    n = 6
    planted = rng.permutation(n)
    values = np.full((n, n), 50.0)
    values[planted, np.arange(n)] = 0.0
    res = hungarian(CostMatrix(values))
    assert res.cost == 0.0
    assert res.permutation.tolist() == planted.tolist()


def test_hungarian_matches_brute_force():
    rng = np.random.default_rng(4)
    for n in (2, 3, 4, 5, 6, 7):
        for _ in range(10):
            values = rng.uniform(size=(n, n))
            res = hungarian(CostMatrix(values, q=1.0))
            best, _ = brute_force_assignment(values)
            assert res.cost == pytest.approx(best, abs=1e-10)
            achieved = sum(values[res.permutation[j], j] for j in range(n))
            assert achieved == pytest.approx(best, abs=1e-10)


def test_hungarian_equals_sort_on_scalar_costs():
    rng = np.random.default_rng(5)
    for n in (8, 33, 64):
        y = rng.normal(size=n)
        s = rng.normal(size=n)
        direct = wasserstein_1d(y, s, q=2.0)
        via_matrix = hungarian(build_cost(y, s, AbsoluteMetric(), q=2.0))
        assert direct.distance == pytest.approx(via_matrix.distance, abs=1e-10)


def test_sinkhorn_recovers_dominant_permutation():
    rng = np.random.default_rng(6)
    n = 5
    planted = rng.permutation(n)
    values = rng.uniform(0.5, 1.0, size=(n, n))
    values[planted, np.arange(n)] = 0.0
    res = sinkhorn(CostMatrix(values), reg=0.01)
    assert res.permutation.tolist() == planted.tolist()
    assert res.converged


def test_sinkhorn_reg_sweep_approaches_hungarian():
    rng = np.random.default_rng(7)
    values = rng.uniform(size=(10, 10))
    cost = CostMatrix(values, q=2.0)
    exact = hungarian(cost)
    med = float(np.median(values))
    last = np.inf
    for reg in (1.0 * med, 0.1 * med, 0.001 * med):
        res = sinkhorn(cost, reg=reg)
        assert res.distance <= last + 1e-9  # tightening temperature helps
        last = res.distance
    assert res.distance == pytest.approx(exact.distance, rel=0.01)


def test_sinkhorn_identity_costs_vanish():
    # well separated support keeps the smoothed plan on the diagonal
    y = np.arange(6) * 10.0
    cost = build_cost(y, y, AbsoluteMetric(), q=2.0)
    res = sinkhorn(cost, reg=1e-3)
    assert res.distance < 1e-9
    assert res.permutation.tolist() == list(range(6))


def test_sinkhorn_trace_is_recorded():
    values = np.random.default_rng(9).uniform(size=(4, 4))
    res, trace = sinkhorn(CostMatrix(values), return_trace=True)
    assert len(trace) == res.iterations
    assert trace[-1] * 4 == pytest.approx(res.cost, rel=1e-9)


def test_sinkhorn_rejects_bad_reg():
    with pytest.raises(ValueError):
        sinkhorn(CostMatrix(np.ones((2, 2))), reg=0.0)


def test_apply_matching_round_trip():
    labels = np.array([0, 0, 1, 2])
    perm = np.array([2, 0, 3, 1])  # synthetic j sits at data index perm[j]
    out = apply_matching(labels, perm)
    for j in range(4):
        assert out[perm[j]] == labels[j]


def test_apply_matching_identity():
    labels = np.array([0, 1, 1])
    assert apply_matching(labels, np.arange(3)).tolist() == labels.tolist()
