import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from abclust import (
    AbcConfig,
    EpsilonSchedule,
    PitmanYor,
    StallError,
    abc_mcmc_adaptive,
    abc_mcmc_fixed,
    default_threshold,
    enumerate_partitions,
    rejection_abc,
    tune_eps_star,
    update_epsilon,
)
from abclust.kernels import ErgmModel, GaussianNIG

PRIOR = PitmanYor(1.0, 0.2)

# 30-digit evaluations of the schedule formula
#   eps = w1*eps0 + w2*g + (1 - w1 - w2)*eps_star,  w2 = (1 - w1)*w1
# at eps0 = 2, eps_star = 0.5:
#   l = 1, empty window (g weight folds into eps_star): 0.5 + 1.5*e^(-0.001)
COLD_EPS = 1.9985007497500625
#   l = 693, window pinned at 1.0 so any quantile gives g = 1
L693_EPS = 1.3751103908354883
#   l = 6, window [1..5]: the 0.1 quantile interpolates to g = 1.4
WINDOW_EPS = 1.9963785721537071


def config(**kw):
    base = dict(prior=PRIOR, kernel=GaussianNIG(), solver="sort",
                iterations=100, burnin=10)
    base.update(kw)
    return AbcConfig(**base)


def test_default_threshold_frozen_values():
    # sqrt(n log n) on the raw objective, so /n^(1/q) on the normalized one
    assert default_threshold(100) == pytest.approx(2.145966026289347, abs=1e-14)
    assert default_threshold(4) == pytest.approx(1.1774100225154747, abs=1e-14)
    assert default_threshold(4, q=1.0) == pytest.approx(
        1.1774100225154747 / 2.0, abs=1e-14
    )
    assert default_threshold(100, fraction=0.9) == pytest.approx(
        0.9 * 2.145966026289347, abs=1e-14
    )
    with pytest.raises(ValueError):
        default_threshold(1)


def test_schedule_cold_start():
    s = EpsilonSchedule(eps0=2.0, eps_star=0.5, decay_from_start=True)
    assert s.current_epsilon() == pytest.approx(COLD_EPS, abs=1e-14)


def test_schedule_frozen_decay_point():
    s = EpsilonSchedule(eps0=2.0, eps_star=0.5, decay_from_start=True)
    for _ in range(100):
        s.observe(1.0)
    s.attempts = 692  # next attempt is l = 693
    assert s.current_epsilon() == pytest.approx(L693_EPS, abs=1e-13)


def test_schedule_windowed_quantile():
    s = EpsilonSchedule(eps0=2.0, eps_star=0.5, decay_from_start=True)
    for d in (1.0, 2.0, 3.0, 4.0, 5.0):
        s.observe(d)
    assert s.current_epsilon() == pytest.approx(WINDOW_EPS, abs=1e-13)


def test_schedule_window_drops_old_distances():
    s = EpsilonSchedule(eps0=2.0, eps_star=0.5, decay_from_start=True,
                        window_size=3)
    for d in (50.0, 60.0, 3.0, 4.0, 5.0):
        s.observe(d)
    # only (3, 4, 5) survive; their 0.1 quantile is 3.2
    l = s.attempts + 1
    w1 = math.exp(-l / s.decay_scale)
    w2 = (1.0 - w1) * w1
    want = w1 * 2.0 + w2 * 3.2 + (1.0 - w1 - w2) * 0.5
    assert s.current_epsilon() == pytest.approx(want, abs=1e-13)


def test_schedule_converges_to_eps_star():
    s = EpsilonSchedule(eps0=2.0, eps_star=0.5, decay_from_start=True)
    for _ in range(200):
        s.observe(1.0)
    s.attempts = 50000
    assert s.current_epsilon() == pytest.approx(0.5, abs=1e-8)


def test_schedule_holds_eps0_through_burnin():
    # "always" mode: the decay clock starts when burn-in ends
    s = EpsilonSchedule(eps0=2.0, eps_star=0.5, mode="always")
    for d in (0.3, 0.9, 1.8):
        assert s.current_epsilon() == 2.0
        s.observe(d)
    s.mark_burnin_complete()
    assert s.l_burn == 3
    assert s.current_epsilon() < 2.0


def test_schedule_freeze_after_burnin():
    s = EpsilonSchedule(eps0=2.0, eps_star=0.5, mode="stop_after_burnin")
    for d in (0.3, 0.9, 1.8, 0.7):
        s.observe(d)
    s.mark_burnin_complete()
    frozen = s.current_epsilon()
    assert frozen == s.frozen_eps
    for d in (9.0, 11.0):
        s.observe(d)
    assert s.current_epsilon() == frozen


def test_update_epsilon_reports_pre_observation_threshold():
    s = EpsilonSchedule(eps0=2.0, eps_star=0.5, decay_from_start=True)
    before = s.current_epsilon()
    assert update_epsilon(s, 7.0) == before
    assert s.attempts == 1


def test_schedule_validation():
    with pytest.raises(ValueError):
        EpsilonSchedule(eps0=0.0, eps_star=0.5)
    with pytest.raises(ValueError):
        EpsilonSchedule(eps0=1.0, eps_star=-1.0)
    with pytest.raises(ValueError):
        EpsilonSchedule(eps0=1.0, eps_star=0.5, mode="sometimes")
    with pytest.raises(ValueError):
        EpsilonSchedule(eps0=1.0, eps_star=0.5, quantile=1.0)
    with pytest.raises(ValueError, match="eps0 >= eps_star"):
        EpsilonSchedule(eps0=0.5, eps_star=1.0)  # schedules only tighten


def test_config_validation():
    with pytest.raises(ValueError):
        config(solver="newton")
    with pytest.raises(ValueError):
        config(kernel=ErgmModel(n_nodes=4), solver="sort")  # graphs not scalar
    with pytest.raises(ValueError):
        config(q=0.5)
    with pytest.raises(ValueError):
        config(iterations=10, burnin=10)
    with pytest.raises(ValueError):
        config(max_attempts=0)


def test_solver_dispatch_agrees_on_scalars():
    y = np.array([-1.0, 0.5, 2.0])
    s = np.array([0.1, -0.9, 1.7])
    d_sort = config().solve(y, s)
    d_hung = config(solver="hungarian").solve(y, s)
    assert d_sort.distance == pytest.approx(d_hung.distance, abs=1e-12)


def test_rejection_prior_recovery_at_infinite_threshold():
    # with eps = inf every attempt is accepted, so raw partitions are prior
    # draws and must match the EPPF over all 15 set partitions of n = 4
    y = np.array([-3.1, -2.7, 2.9, 3.3])
    run = rejection_abc(y, config(), math.inf, 20000, np.random.default_rng(101))
    assert run.mean_attempts == 1.0
    parts = list(enumerate_partitions(4))
    probs = {p: math.exp(PRIOR.log_eppf(p.block_sizes())) for p in parts}
    counts = Counter(s.raw_partition for s in run.samples)
    observed = np.array([counts.get(p, 0) for p in parts])
    expected = np.array([probs[p] * 20000 for p in parts])
    _, pval = chisquare(observed, expected)
    assert pval > 0.01


def test_rejection_matching_preserves_block_sizes():
    y = np.array([-3.1, -2.7, 2.9, 3.3])
    run = rejection_abc(y, config(), math.inf, 200, np.random.default_rng(3))
    for s in run.samples:
        assert sorted(s.partition.block_sizes()) == sorted(
            s.raw_partition.block_sizes()
        )


def test_rejection_tight_threshold_concentrates():
    # coincident observations at a tight threshold: the one-block posterior
    # mass must rise above its prior value (1 - sigma)/(theta + 1) = 0.4
    y = np.array([0.0, 0.0])
    run = rejection_abc(y, config(), 0.3, 800, np.random.default_rng(5))
    one_block = np.mean([s.partition.k == 1 for s in run.samples])
    assert one_block > 0.45


def test_chain_bookkeeping():
    y = np.array([-3.0, -2.5, 3.0])
    cfg = config(iterations=60, burnin=20)
    run = abc_mcmc_fixed(y, cfg, 1.5, np.random.default_rng(8))
    assert len(run.samples) == 60
    assert [s.iteration for s in run.samples] == list(range(60))
    assert len(run.kept()) == 40
    # one proposal per recorded iteration
    assert run.total_attempts == 60
    np.testing.assert_array_equal(run.attempt_iteration, np.arange(60))
    moves = int(run.attempt_accepted.sum())
    assert 0 < moves < 60
    assert run.acceptance_rate == pytest.approx(moves / 60)
    assert run.mean_attempts == pytest.approx(60 / moves)
    # every row carries the acceptance record of the state it holds
    for s in run.samples:
        assert s.distance < s.epsilon


def test_chain_holds_state_on_rejection():
    y = np.array([-3.0, -2.5, 3.0])
    run = abc_mcmc_fixed(y, config(iterations=80, burnin=0), 1.5,
                         np.random.default_rng(8))
    streak = None
    for s, accepted in zip(run.samples, run.attempt_accepted):
        if accepted:
            prev = streak
            assert s.attempts == (prev + 1 if prev is not None else s.attempts)
            streak = 0
        else:
            if streak is not None:
                assert streak + 1 == s.attempts
            streak = s.attempts
    # rejected rows duplicate the standing state
    for t in range(1, 80):
        if not run.attempt_accepted[t]:
            assert run.samples[t].partition == run.samples[t - 1].partition
            assert run.samples[t].distance == run.samples[t - 1].distance


def test_chain_is_seed_reproducible():
    y = np.array([-3.0, -2.5, 3.0])
    r1 = abc_mcmc_fixed(y, config(iterations=40, burnin=0), 1.5,
                        np.random.default_rng(9))
    r2 = abc_mcmc_fixed(y, config(iterations=40, burnin=0), 1.5,
                        np.random.default_rng(9))
    assert [s.partition for s in r1.samples] == [s.partition for s in r2.samples]
    np.testing.assert_array_equal(r1.attempt_distance, r2.attempt_distance)


def test_chain_rejects_bad_inputs():
    y = np.array([-3.0, -2.5, 3.0])
    with pytest.raises(ValueError):
        abc_mcmc_fixed(y, config(), 0.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        abc_mcmc_fixed(np.array([1.0]), config(), 1.0, np.random.default_rng(0))


def test_chain_stalls_with_diagnostics():
    y = np.array([-3.0, -2.5, 3.0])
    cfg = config(iterations=5, burnin=0, max_attempts=40)
    with pytest.raises(StallError) as err:
        abc_mcmc_fixed(y, cfg, 1e-12, np.random.default_rng(1))
    assert err.value.iteration == 0
    assert err.value.attempts == 40
    assert err.value.epsilon == 1e-12
    assert np.isfinite(err.value.best_distance)


def test_chain_marginal_matches_rejection():
    # held-state recording keeps the kept-sample marginal on pi_eps, so the
    # gap to the rejection oracle is Monte Carlo noise set by the move count
    # (the tight version of this check lives in the acceptance suite)
    y = np.array([-3.0, -2.5, 3.0])
    cfg = config(iterations=4000, burnin=0)
    rej = rejection_abc(y, cfg, 1.0, 4000, np.random.default_rng(21))
    chain = abc_mcmc_fixed(y, cfg, 1.0, np.random.default_rng(22))
    parts = list(enumerate_partitions(3))
    fr = Counter(s.partition for s in rej.samples)
    fc = Counter(s.partition for s in chain.samples)
    tv = 0.5 * sum(
        abs(fr.get(p, 0) / 4000 - fc.get(p, 0) / 4000) for p in parts
    )
    assert tv < 0.09  # measured 0.0555 with ~160 accepted moves


def test_adaptive_holds_eps0_during_burnin():
    y = np.array([-3.0, -2.5, 3.0])
    cfg = config(iterations=30, burnin=10)
    sched = EpsilonSchedule(eps0=4.0, eps_star=3.5, mode="always")
    run = abc_mcmc_adaptive(y, cfg, sched, np.random.default_rng(14))
    burn = run.attempt_iteration < 10
    assert np.all(run.attempt_epsilon[burn] == 4.0)
    assert np.all(run.attempt_epsilon[~burn] < 4.0)


def test_adaptive_freezes_after_burnin():
    y = np.array([-3.0, -2.5, 3.0])
    cfg = config(iterations=30, burnin=10)
    sched = EpsilonSchedule(eps0=4.0, eps_star=3.5, mode="stop_after_burnin")
    run = abc_mcmc_adaptive(y, cfg, sched, np.random.default_rng(15))
    post = run.attempt_epsilon[run.attempt_iteration >= 10]
    assert np.all(post == post[0])
    pre = run.attempt_epsilon[run.attempt_iteration < 10]
    assert pre[0] > pre[-1]  # decaying from the first attempt


def test_tuner_validation():
    y = np.array([-3.0, -2.5, 3.0])
    with pytest.raises(ValueError):
        tune_eps_star(y, config(), target_rate=0.0)
    with pytest.raises(ValueError):
        tune_eps_star(y, config(), target_rate=1.5)
    with pytest.raises(ValueError):
        tune_eps_star(y, config(), pilot_attempts=100)


def test_tuner_tracks_target_rate():
    y = np.array([-3.5, -2.9, -3.2, 3.1, 2.8])
    cfg = config()
    eps_low = tune_eps_star(y, cfg, target_rate=0.05, rng=np.random.default_rng(11))
    eps_high = tune_eps_star(y, cfg, target_rate=0.3, rng=np.random.default_rng(11))
    # a laxer acceptance target needs a larger threshold
    assert eps_high > eps_low
    run = abc_mcmc_fixed(y, config(iterations=300, burnin=0), eps_high,
                         np.random.default_rng(12))
    assert 0.12 < run.acceptance_rate < 0.6
