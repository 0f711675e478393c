import math

import numpy as np
import pytest

from abclust import (
    ChainSample,
    Partition,
    ess,
    normalized_vi,
    similarity,
    summarize_chain,
    vi_point_estimate,
)

A = Partition(np.array([0, 0, 1, 1]))
B = Partition(np.array([0, 1, 2, 3]))


def make_samples(partitions, start=0):
    out = []
    for r, p in enumerate(partitions, start=start):
        out.append(
            ChainSample(
                iteration=r, partition=p, raw_partition=p,
                distance=0.1, attempts=1, epsilon=1.0, cost=0.1,
            )
        )
    return out


# ---- similarity ---------------------------------------------------------------


def test_similarity_single_partition_is_binary():
    sim = similarity([Partition(np.array([0, 0, 1]))] * 7)
    np.testing.assert_allclose(
        sim.matrix, [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    )
    assert sim.sample_count == 7


def test_similarity_alternating_chain_averages():
    sim = similarity([A, B] * 50)
    # items 0,1 (and 2,3) share a block in exactly half the samples
    assert sim.matrix[0, 1] == pytest.approx(0.5)
    assert sim.matrix[2, 3] == pytest.approx(0.5)
    assert sim.matrix[0, 2] == pytest.approx(0.0)
    np.testing.assert_allclose(np.diag(sim.matrix), 1.0)
    np.testing.assert_allclose(sim.matrix, sim.matrix.T)


def test_similarity_values_bounded():
    rng = np.random.default_rng(1)
    parts = [Partition(rng.integers(0, 3, size=6)) for _ in range(40)]
    sim = similarity(parts)
    assert np.all(sim.matrix >= 0.0) and np.all(sim.matrix <= 1.0)


def test_similarity_empty_chain_rejected():
    with pytest.raises(ValueError, match="no samples"):
        similarity([])


# ---- VI point estimate ---------------------------------------------------------


def test_point_estimate_of_constant_chain_is_that_partition():
    est = vi_point_estimate([A] * 30, thin=1)
    assert est == A


def test_point_estimate_prefers_dominant_mode():
    est = vi_point_estimate([A] * 90 + [B] * 10, thin=1)
    assert est == A


def test_point_estimate_needs_items():
    with pytest.raises(ValueError, match="n >= 2"):
        vi_point_estimate([Partition(np.array([0]))] * 5)
    with pytest.raises(ValueError, match="no samples"):
        vi_point_estimate([])


def test_point_estimate_thinning_still_returns_partition():
    est = vi_point_estimate([A, B] * 40, thin=10)
    assert isinstance(est, Partition)
    assert est.n == 4


# ---- effective sample size -----------------------------------------------------


def test_ess_iid_close_to_n():
    x = np.random.default_rng(314).standard_normal(10000)
    assert 8500 <= ess(x) <= 11500  # measured 9536.8 at this seed


def test_ess_ar1_matches_closed_form():
    # AR(1) with phi = 0.9 has integrated autocorrelation (1+phi)/(1-phi) = 19.
    rng = np.random.default_rng(2718)
    n, phi = 20000, 0.9
    x = np.empty(n)
    x[0] = rng.standard_normal()
    innov = rng.standard_normal(n) * math.sqrt(1.0 - phi * phi)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + innov[t]
    expected = n * (1.0 - phi) / (1.0 + phi)
    assert ess(x) == pytest.approx(expected, rel=0.3)  # measured 1036.5


def test_ess_constant_series_returns_n():
    assert ess(np.ones(64)) == 64.0


def test_ess_negative_correlation_capped_at_n():
    # pair sums go nonpositive immediately; the N cap kicks in
    assert ess(np.tile([1.0, -1.0], 500)) == 1000.0


def test_ess_short_series_rejected():
    with pytest.raises(ValueError, match="too short"):
        ess([1.0])


# ---- chain summary -------------------------------------------------------------


def test_summarize_chain_wiring():
    samples = make_samples([A] * 60 + [B] * 40)
    secs = np.concatenate([np.full(50, 0.002), np.full(50, 0.004)])
    out = summarize_chain(
        samples,
        burnin=50,
        truth=B,
        acceptance_rate=0.25,
        mean_attempts=4.0,
        iter_seconds=secs,
        thin=1,
    )
    # post-burn-in slice is 10 copies of A then 40 of B
    assert out.point_estimate == B
    assert out.vi_to_truth == pytest.approx(0.0, abs=1e-12)
    assert out.similarity.sample_count == 50
    assert out.similarity.matrix[0, 1] == pytest.approx(0.2)
    assert out.acceptance_rate == 0.25
    assert out.mean_attempts == 4.0
    assert out.median_iter_seconds == pytest.approx(0.004)
    assert out.ess_blocks > 0
    assert out.ess_entropy > 0

    d = out.to_dict()
    assert d["point_estimate"] == B.labels.tolist()
    assert d["n_blocks"] == 4
    assert d["vi_to_truth"] == pytest.approx(0.0, abs=1e-12)


def test_summarize_chain_optional_fields_default_to_none():
    out = summarize_chain(make_samples([A] * 20), thin=1)
    assert out.vi_to_truth is None
    assert out.median_iter_seconds is None
    d = out.to_dict()
    assert "vi_to_truth" not in d and "median_iter_seconds" not in d


def test_summarize_chain_vi_to_truth_nonzero_for_mismatch():
    out = summarize_chain(make_samples([A] * 20), truth=B, thin=1)
    assert out.vi_to_truth == pytest.approx(normalized_vi(A, B))
    assert out.vi_to_truth > 0


def test_summarize_chain_empty_after_burnin():
    with pytest.raises(ValueError, match="post-burn-in"):
        summarize_chain(make_samples([A] * 5), burnin=5)
