"""Likelihood-free samplers over partitions, matched through optimal transport.

Each attempt proposes a fresh latent state through the predictive chain
rule, simulates one synthetic observation per item, and measures the
transport distance to the observed data. A cleared proposal is accepted
outright, because the chain-rule proposal makes the Metropolis-Hastings
ratio identically one; there is no accepted-then-rejected branch. The chain
records one sample per proposal: on a rejection it holds its state and the
row repeats the held acceptance record with the running rejection streak,
which keeps the kept-sample marginal exactly on the threshold-constrained
posterior instead of reweighting states by how easily they are left. The
accepted partition is carried back onto the data indices through the
optimal matching before it is recorded.

Thresholds come in two flavors: a fixed epsilon, or the adaptive schedule

    eps_l = w1 * eps_0 + w2 * g(d_1..d_{l-1}) + (1 - w1 - w2) * eps_star

over the global attempt counter l, where g is a low rolling quantile of
recently observed distances, w1 = exp(-max(0, l - l_burn)/scale) and
w2 = (1 - w1) * w1. The weights die off after burn-in, so eps_l -> eps_star
and the chain's limiting behavior matches a fixed-eps_star run.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelModel
from .partitions import Partition
from .priors import (
    LatentState,
    PartitionPrior,
    chain_rule_propose,
    sample_latent_state,
)
from .transport import apply_matching, build_cost, hungarian, sinkhorn, wasserstein_1d

__all__ = [
    "AbcConfig",
    "EpsilonSchedule",
    "ChainSample",
    "AbcRun",
    "StallError",
    "update_epsilon",
    "rejection_abc",
    "abc_mcmc_fixed",
    "abc_mcmc_adaptive",
    "tune_eps_star",
    "default_threshold",
]

_SOLVERS = ("sort", "hungarian", "sinkhorn")


class StallError(RuntimeError):
    """An acceptance loop exhausted its attempt budget."""

    def __init__(self, message: str, *, iteration: int, attempts: int,
                 epsilon: float, best_distance: float):
        super().__init__(
            f"{message} (iteration {iteration}, {attempts} attempts, "
            f"epsilon {epsilon:.6g}, best distance seen {best_distance:.6g})"
        )
        self.iteration = iteration
        self.attempts = attempts
        self.epsilon = epsilon
        self.best_distance = best_distance


@dataclass
class AbcConfig:
    """Everything an ABC run needs besides the data and the threshold."""

    prior: PartitionPrior
    kernel: KernelModel
    q: float = 2.0
    solver: str = "sort"
    iterations: int = 20000
    burnin: int = 10000
    max_attempts: int = 1_000_000
    sinkhorn_reg: float | None = None
    sinkhorn_tol: float = 1e-6
    sinkhorn_max_iters: int = 10000

    def __post_init__(self):
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {_SOLVERS}, got {self.solver!r}")
        if self.solver == "sort" and not self.kernel.is_scalar:
            raise ValueError(
                f"the sort solver needs scalar observations; "
                f"kernel {self.kernel.name!r} is not scalar"
            )
        if self.q < 1:
            raise ValueError(f"order q must be >= 1, got {self.q}")
        if self.iterations < 1 or not 0 <= self.burnin < self.iterations:
            raise ValueError(
                f"need 0 <= burnin < iterations, got burnin={self.burnin} "
                f"iterations={self.iterations}"
            )
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be positive")

    def solve(self, y, s):
        """Transport distance between data and one synthetic draw."""
        if self.solver == "sort":
            return wasserstein_1d(y, s, self.q)
        cost = build_cost(y, s, self.kernel.metric, self.q)
        if self.solver == "hungarian":
            return hungarian(cost)
        return sinkhorn(
            cost,
            reg=self.sinkhorn_reg,
            tol=self.sinkhorn_tol,
            max_iters=self.sinkhorn_max_iters,
        )


def default_threshold(n: int, q: float = 2.0, fraction: float = 1.0) -> float:
    """Stock threshold sqrt(n log n), expressed on the normalized scale.

    The rule of thumb applies to the unnormalized objective
    (sum_i c^q)^(1/q) = n^(1/q) * W_q, hence the division.
    """
    if n < 2:
        raise ValueError("threshold preset needs n >= 2")
    return fraction * math.sqrt(n * math.log(n)) / n ** (1.0 / q)


@dataclass
class EpsilonSchedule:
    """Adaptive threshold state shared by every attempt of a run.

    mode "always" keeps adapting for the whole chain; the decay clock then
    starts when burn-in ends (l_burn is the realized number of attempts the
    burn-in consumed), so burn-in runs at eps_0. mode "stop_after_burnin"
    instead starts decaying from the first attempt and freezes the threshold
    at the first post-burn-in attempt; `decay_from_start` overrides the
    per-mode default for either behavior.
    """

    eps0: float
    eps_star: float
    mode: str = "always"
    decay_scale: float = 1000.0
    quantile: float = 0.1
    window_size: int = 100
    decay_from_start: bool | None = None

    attempts: int = field(default=0, init=False)
    l_burn: int | None = field(default=None, init=False)
    frozen_eps: float | None = field(default=None, init=False)

    def __post_init__(self):
        if self.mode not in ("always", "stop_after_burnin"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.eps0 <= 0 or self.eps_star <= 0:
            raise ValueError("thresholds must be positive")
        if self.eps0 < self.eps_star:
            raise ValueError(
                f"the schedule tightens: need eps0 >= eps_star, "
                f"got eps0={self.eps0} eps_star={self.eps_star}"
            )
        if not 0 < self.quantile < 1:
            raise ValueError("quantile must lie in (0, 1)")
        if self.decay_from_start is None:
            self.decay_from_start = self.mode == "stop_after_burnin"
        self._window = deque(maxlen=self.window_size)

    def current_epsilon(self) -> float:
        """Threshold for the upcoming attempt, distances observed so far."""
        if self.frozen_eps is not None:
            return self.frozen_eps
        l = self.attempts + 1
        if self.decay_from_start:
            lag = l
        elif self.l_burn is None:
            lag = 0  # still inside burn-in: hold eps0
        else:
            lag = max(0, l - self.l_burn)
        w1 = math.exp(-lag / self.decay_scale)
        w2 = (1.0 - w1) * w1
        if self._window:
            g = float(np.quantile(np.fromiter(self._window, float), self.quantile))
            return w1 * self.eps0 + w2 * g + (1.0 - w1 - w2) * self.eps_star
        # cold start: the rolling-quantile weight falls through to eps_star
        return w1 * self.eps0 + (1.0 - w1) * self.eps_star

    def observe(self, distance: float):
        self._window.append(float(distance))
        self.attempts += 1

    def mark_burnin_complete(self):
        """Called once, when the chain finishes its burn-in iterations."""
        if self.l_burn is None:
            self.l_burn = self.attempts
        if self.mode == "stop_after_burnin" and self.frozen_eps is None:
            self.frozen_eps = self.current_epsilon()


def update_epsilon(schedule: EpsilonSchedule, new_distance: float) -> float:
    """Threshold for this attempt; the new distance then joins the window."""
    eps = schedule.current_epsilon()
    schedule.observe(new_distance)
    return eps


@dataclass(frozen=True)
class ChainSample:
    """One kept iteration: the state held at this step plus its acceptance record.

    distance, epsilon and cost describe the acceptance that produced the
    state, so they stay put while the chain holds; attempts counts proposals
    since the previous accepted move, this iteration's included.
    """

    iteration: int
    partition: Partition
    raw_partition: Partition
    distance: float
    attempts: int
    epsilon: float
    cost: float


@dataclass
class AbcRun:
    """A finished run: kept samples plus the attempt-level audit trail."""

    samples: list
    attempt_iteration: np.ndarray
    attempt_distance: np.ndarray
    attempt_epsilon: np.ndarray
    attempt_accepted: np.ndarray
    iter_seconds: np.ndarray
    burnin: int = 0

    @property
    def total_attempts(self) -> int:
        return int(self.attempt_distance.size)

    @property
    def acceptance_rate(self) -> float:
        return float(self.attempt_accepted.sum()) / max(self.total_attempts, 1)

    @property
    def mean_attempts(self) -> float:
        """Proposals per accepted move."""
        return self.total_attempts / max(int(self.attempt_accepted.sum()), 1)

    def kept(self) -> list:
        """Samples past burn-in."""
        return [s for s in self.samples if s.iteration >= self.burnin]


class _AttemptLog:
    __slots__ = ("iteration", "distance", "epsilon", "accepted")

    def __init__(self):
        self.iteration = []
        self.distance = []
        self.epsilon = []
        self.accepted = []

    def add(self, iteration, distance, epsilon, accepted):
        self.iteration.append(iteration)
        self.distance.append(distance)
        self.epsilon.append(epsilon)
        self.accepted.append(accepted)

    def arrays(self):
        return (
            np.asarray(self.iteration, dtype=np.int64),
            np.asarray(self.distance, dtype=float),
            np.asarray(self.epsilon, dtype=float),
            np.asarray(self.accepted, dtype=bool),
        )


def _permute_state(proposal: LatentState, permutation: np.ndarray) -> LatentState:
    """Carry a proposal over to data indices; atoms follow their blocks."""
    raw = proposal.partition.labels
    matched = apply_matching(raw, permutation)
    order = []
    seen = set()
    for v in matched:
        if v not in seen:
            seen.add(v)
            order.append(v)
    atoms = tuple(proposal.atoms[v] for v in order)
    return LatentState(Partition(matched), atoms)


def _check_data(y, config: AbcConfig):
    n = len(y)
    if n < 2:
        raise ValueError("need at least 2 observations")
    return n


def rejection_abc(
    y,
    config: AbcConfig,
    eps: float,
    size: int,
    rng: np.random.Generator,
) -> AbcRun:
    """Independent accept/reject draws from the prior at a fixed threshold.

    Each accepted draw records the raw prior partition and its matched
    (data-indexed) version. Used as the exactness oracle for the chains.
    """
    n = _check_data(y, config)
    log = _AttemptLog()
    samples = []
    times = np.empty(size)
    for r in range(size):
        t0 = time.perf_counter()
        attempts = 0
        best = math.inf
        while True:
            attempts += 1
            if attempts > config.max_attempts:
                raise StallError(
                    f"rejection sampler exhausted its attempt budget with "
                    f"{r} draws accepted",
                    iteration=r, attempts=attempts - 1,
                    epsilon=eps, best_distance=best,
                )
            state = sample_latent_state(
                config.prior, n, config.kernel.sample_prior, rng
            )
            s = config.kernel.synthesize(state, rng)
            res = config.solve(y, s)
            best = min(best, res.distance)
            accepted = res.distance < eps
            log.add(r, res.distance, eps, accepted)
            if accepted:
                break
        matched = _permute_state(state, res.permutation)
        samples.append(
            ChainSample(r, matched.partition, state.partition,
                        res.distance, attempts, eps, res.cost)
        )
        times[r] = time.perf_counter() - t0
    it, d, e, a = log.arrays()
    return AbcRun(samples, it, d, e, a, times, burnin=0)


def _init_state(y, config: AbcConfig, eps_init: float, n: int, rng):
    """Rejection-sample a starting state that already clears the threshold.

    Setup draws are not chain proposals: they stay out of the attempt log
    and never tick an adaptive schedule.
    """
    best = math.inf
    for _ in range(config.max_attempts):
        state = sample_latent_state(config.prior, n, config.kernel.sample_prior, rng)
        s = config.kernel.synthesize(state, rng)
        res = config.solve(y, s)
        best = min(best, res.distance)
        if res.distance < eps_init:
            matched = _permute_state(state, res.permutation)
            return ChainSample(-1, matched.partition, state.partition,
                               res.distance, 0, eps_init, res.cost), matched
    raise StallError(
        "initial-state search exhausted its attempt budget",
        iteration=0, attempts=config.max_attempts,
        epsilon=eps_init, best_distance=best,
    )


def _run_chain(y, config: AbcConfig, rng, schedule=None, eps=None) -> AbcRun:
    n = _check_data(y, config)
    eps_init = eps if eps is not None else schedule.current_epsilon()
    held, state = _init_state(y, config, eps_init, n, rng)
    log = _AttemptLog()
    samples = []
    times = np.empty(config.iterations)
    streak = 0
    best = math.inf  # best distance seen since the last accepted move
    for r in range(config.iterations):
        if schedule is not None and r == config.burnin:
            schedule.mark_burnin_complete()
        t0 = time.perf_counter()
        streak += 1
        if streak > config.max_attempts:
            eps_l = eps if eps is not None else schedule.current_epsilon()
            raise StallError(
                "acceptance loop stalled",
                iteration=r, attempts=streak - 1,
                epsilon=eps_l, best_distance=best,
            )
        proposal = chain_rule_propose(
            config.prior, state, config.kernel.sample_prior, rng
        )
        s = config.kernel.synthesize(proposal, rng)
        res = config.solve(y, s)
        best = min(best, res.distance)
        eps_l = update_epsilon(schedule, res.distance) if schedule is not None else eps
        if res.distance < eps_l:
            # no accepted-then-rejected branch: a cleared proposal always moves
            log.add(r, res.distance, eps_l, True)
            state = _permute_state(proposal, res.permutation)
            held = ChainSample(r, state.partition, proposal.partition,
                               res.distance, streak, eps_l, res.cost)
            streak = 0
            best = math.inf
        else:
            # hold: repeat the standing acceptance record at this iteration
            log.add(r, res.distance, eps_l, False)
            held = ChainSample(r, held.partition, held.raw_partition,
                               held.distance, streak, held.epsilon, held.cost)
        samples.append(held)
        times[r] = time.perf_counter() - t0
    it, d, e, a = log.arrays()
    return AbcRun(samples, it, d, e, a, times, burnin=config.burnin)


def abc_mcmc_fixed(y, config: AbcConfig, eps: float, rng: np.random.Generator) -> AbcRun:
    """Chain-rule ABC-MCMC at a fixed threshold."""
    if eps <= 0:
        raise ValueError("threshold must be positive")
    return _run_chain(y, config, rng, eps=eps)


def abc_mcmc_adaptive(
    y, config: AbcConfig, schedule: EpsilonSchedule, rng: np.random.Generator
) -> AbcRun:
    """Chain-rule ABC-MCMC under an adaptive threshold schedule."""
    return _run_chain(y, config, rng, schedule=schedule)


def tune_eps_star(
    y,
    config: AbcConfig,
    target_rate: float = 0.1,
    pilot_attempts: int = 4000,
    batch_size: int = 200,
    eta0: float = 1.0,
    rng: np.random.Generator | None = None,
) -> float:
    """Pick a threshold whose pilot acceptance rate sits near target_rate.

    Stochastic approximation: run short chain batches at the current
    threshold and nudge eps <- eps * exp(eta_t (target - observed)). The
    step size stays fixed so the search keeps tracking the root, which
    drifts upward while the pilot chain is still finding better states; it
    only grows geometrically across consecutive same-direction pegged
    batches (a quarter of the target or less, or several times it),
    since those merely say "far off" and warm starts can be tens of nats
    away for heavy-tailed kernels. The mean acceptance of
    the freshest batches must land within [target/2, 2*target]; a failed
    check retries on a fresh budget, up to three pilot rounds, before the
    search reports failure. Deliberately a much simplified stand-in for
    full acceptance-rate-controlled tuning.
    """
    if rng is None:
        rng = np.random.default_rng()
    if not 0 < target_rate <= 1:
        raise ValueError("target rate must lie in (0, 1]")
    if pilot_attempts < 500:
        raise ValueError("pilot needs at least 500 attempts")
    n = _check_data(y, config)

    state = sample_latent_state(config.prior, n, config.kernel.sample_prior, rng)

    def attempt(state):
        proposal = chain_rule_propose(
            config.prior, state, config.kernel.sample_prior, rng
        )
        s = config.kernel.synthesize(proposal, rng)
        res = config.solve(y, s)
        return proposal, res

    # seed the threshold from the pilot distance distribution
    warm = []
    best = None
    for _ in range(min(batch_size, pilot_attempts)):
        proposal, res = attempt(state)
        warm.append(res.distance)
        if best is None or res.distance < best[0]:
            best = (res.distance, proposal, res.permutation)
        state = _permute_state(proposal, res.permutation)  # free exploration
    eps = float(np.quantile(warm, min(max(target_rate, 0.01), 0.99)))
    if eps <= 0:
        eps = max(float(np.mean(warm)), 1e-12)
    # measure from the best state the walk saw: the quantile threshold is
    # only workable from a state of comparable quality, and the walk's
    # final state carries no such guarantee
    state = _permute_state(best[1], best[2])

    used = len(warm)
    eta = eta0
    prev_err = None
    tail = deque(maxlen=3)  # most recent batch acceptance rates
    for _round in range(3):
        while used < pilot_attempts:
            batch = min(batch_size, pilot_attempts - used)
            hits = 0
            for _ in range(batch):
                proposal, res = attempt(state)
                if res.distance < eps:
                    hits += 1
                    state = _permute_state(proposal, res.permutation)
            used += batch
            alpha_hat = hits / batch
            tail.append(alpha_hat)
            err = target_rate - alpha_hat
            pegged = (
                alpha_hat <= target_rate / 4.0
                or alpha_hat >= min(1.0, 4.0 * target_rate)
            )
            traveling = (
                pegged and prev_err is not None and (prev_err > 0) == (err > 0)
            )
            if not traveling:
                # near the root (or direction just flipped): calm down before
                # stepping, a leftover long stride would hurl eps past the
                # responsive band and set off an overshoot cycle
                eta = eta0
            eps *= math.exp(eta * err)
            if traveling:
                # pegged batches in a constant direction only say "still far
                # off": lengthen the stride, the warm-start quantile can sit
                # tens of nats from the usable range
                eta = min(eta * 2.0, 16.0)
            prev_err = err
        # judge by the freshest batches: acceptance at a fixed threshold keeps
        # rising while the chain is still finding better states, so a long
        # separate validation run would answer yesterday's question
        alpha_hat = float(np.mean(tail))
        if target_rate / 2 <= alpha_hat <= 2 * target_rate:
            return eps
        used = 0

    raise RuntimeError(
        f"threshold tuning failed to bracket the target: recent pilot "
        f"acceptance {alpha_hat:.3f} vs target {target_rate:.3f} "
        f"(eps={eps:.6g})"
    )
