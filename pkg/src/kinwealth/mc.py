"""Direct-simulation Monte Carlo of the binary-trade Boltzmann model.

One sweep is ``N // 2`` attempted trades and one unit of kinetic time ``t``;
scaled time is ``tau = gamma * t``. Each attempt draws two distinct agents
uniformly (with replacement across attempts), draws both returns from the
noise law and commits the trade only if neither agent ends in debt.

Random streams: run ``r`` of seed ``s`` uses
``Generator(PCG64(SeedSequence(s, spawn_key=(r,))))``. Per sweep the draws
are taken in a fixed order (first indices, second indices, ``eta``,
``eta_*``), so any sweep position is reproducible by replaying the stream.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .analytics import empirical_spread
from .estimators import Histogram, average_histograms, bin_counts, log_edges, uniform_edges
from .model import NoiseKind, NoiseModel, Population, TradeParams

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


@njit(cache=True)
def _trade_loop(w, first, second, eta, eta_star, gamma):
    keep = 1.0 - gamma
    rejected = 0
    for k in range(first.size):
        a = first[k]
        b = second[k]
        wa = w[a]
        wb = w[b]
        na = keep * wa + gamma * wb + eta[k] * wa
        nb = keep * wb + gamma * wa + eta_star[k] * wb
        if na >= 0.0 and nb >= 0.0:
            w[a] = na
            w[b] = nb
        else:
            rejected += 1
    return rejected


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run configuration.

    ``initial`` is either a positive number (all agents start equal) or an
    explicit wealth vector, in which case ``n_agents`` must match its length.
    ``sweeps`` defaults to ``burn_in + averaging_window``.
    """

    n_agents: int
    params: TradeParams
    noise: Union[NoiseKind, str] = NoiseKind.BOUNDED_UNIFORM
    initial: Union[float, Sequence[float]] = 1.0
    sweeps: int = None
    burn_in: int = 0
    averaging_window: int = 250
    seed: int = 0
    record_every: int = 1
    dump_sweeps: tuple = ()
    edges: tuple = None
    check_positivity: bool = False

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("noise", NoiseKind(self.noise.kind if isinstance(self.noise, NoiseModel) else self.noise))
        if self.n_agents < 2:
            raise ValueError(f"n_agents must be >= 2, got {self.n_agents}")
        if np.ndim(self.initial) == 0:
            if not float(self.initial) > 0.0:
                raise ValueError(f"initial wealth must be > 0, got {self.initial}")
            set_("initial", float(self.initial))
        else:
            w = tuple(float(x) for x in self.initial)
            if len(w) != self.n_agents:
                raise ValueError(f"initial wealth vector has {len(w)} entries, n_agents={self.n_agents}")
            if any(x < 0.0 for x in w):
                raise ValueError("initial wealth vector has negative entries (debts are not allowed)")
            if not sum(w) > 0.0:
                raise ValueError("initial wealth vector has zero total wealth")
            set_("initial", w)
        if self.burn_in < 0 or self.averaging_window < 0:
            raise ValueError("burn_in and averaging_window must be >= 0")
        if self.sweeps is None:
            set_("sweeps", self.burn_in + self.averaging_window)
        if self.burn_in + self.averaging_window > self.sweeps:
            raise ValueError(
                f"burn_in ({self.burn_in}) + averaging_window ({self.averaging_window}) "
                f"exceeds sweeps ({self.sweeps})"
            )
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        set_("dump_sweeps", tuple(sorted(int(s) for s in self.dump_sweeps)))
        if self.edges is not None:
            set_("edges", tuple(float(e) for e in self.edges))
        self.noise_model  # validates the noise variance against the bound

    @property
    def noise_model(self) -> NoiseModel:
        return NoiseModel.from_params(self.noise, self.params)

    def histogram_edges(self):
        return np.array(self.edges) if self.edges is not None else uniform_edges()

    def initial_wealths(self) -> np.ndarray:
        if isinstance(self.initial, float):
            return np.full(self.n_agents, self.initial)
        return np.array(self.initial)


def stream(seed: int, run_index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run_index,))))


@dataclass
class SimState:
    population: Population
    params: TradeParams
    noise: NoiseModel
    rng: np.random.Generator
    t: int = 0
    total_trades_attempted: int = 0
    total_trades_rejected: int = 0
    check_positivity: bool = False

    @property
    def tau(self) -> float:
        return self.params.gamma * self.t

    @property
    def wealths(self) -> np.ndarray:
        return self.population.wealths


def init(config: SimConfig, run_index: int = 0) -> SimState:
    return SimState(
        population=Population(config.initial_wealths()),
        params=config.params,
        noise=config.noise_model,
        rng=stream(config.seed, run_index),
        check_positivity=config.check_positivity,
    )


def sweep(state: SimState) -> SimState:
    """Perform ``N // 2`` trade attempts in place and advance ``t`` by one."""
    w = state.population.wealths
    n = w.size
    k = n // 2
    rng = state.rng
    first = rng.integers(0, n, k)
    second = rng.integers(0, n - 1, k)
    second += second >= first
    eta = state.noise.sample(rng, k)
    eta_star = state.noise.sample(rng, k)
    rejected = _trade_loop(w, first, second, eta, eta_star, state.params.gamma)
    state.t += 1
    state.total_trades_attempted += k
    state.total_trades_rejected += int(rejected)
    if state.check_positivity and np.any(w < 0.0):
        raise AssertionError(f"negative wealth after sweep {state.t}")
    return state


@dataclass
class SnapshotSeries:
    """Moment time series; ``rejected_frac`` is the rejected share since the previous row."""

    t: np.ndarray
    tau: np.ndarray
    m: np.ndarray
    A: np.ndarray
    rejected_frac: np.ndarray
    dumps: dict = field(default_factory=dict)

    COLUMNS = ("t", "tau", "m", "A", "rejected_frac")

    def columns(self):
        return np.column_stack([self.t, self.tau, self.m, self.A, self.rejected_frac])


@dataclass
class RunResult:
    series: SnapshotSeries
    histogram: Histogram
    tail_histogram: Histogram
    final_state: SimState

    def __iter__(self):
        # allows ``series, hist = run(config)``
        return iter((self.series, self.histogram))


class _Recorder:
    def __init__(self, state):
        self.rows = []
        self.last_attempted = 0
        self.last_rejected = 0
        self.record(state)

    def record(self, state):
        d_att = state.total_trades_attempted - self.last_attempted
        d_rej = state.total_trades_rejected - self.last_rejected
        self.last_attempted = state.total_trades_attempted
        self.last_rejected = state.total_trades_rejected
        w = state.population.wealths
        self.rows.append((state.t, state.tau, w.mean(), empirical_spread(w), d_rej / d_att if d_att else 0.0))

    def series(self, dumps):
        cols = np.array(self.rows, dtype=np.float64).T
        return SnapshotSeries(*cols, dumps=dumps)


def _normalized_counts(w, edges):
    counts, _ = bin_counts(w / w.mean(), edges)
    return counts


def run(config: SimConfig, run_index: int = 0) -> RunResult:
    """Simulate ``config.sweeps`` sweeps and average the normalized density.

    The histogram of ``w / m(t)`` is averaged over sweeps
    ``burn_in + 1 .. burn_in + averaging_window``; with a zero window the
    final state is used instead.
    """
    state = init(config, run_index)
    edges = config.histogram_edges()
    tail_edges = log_edges()
    if not np.isinf(edges[-1]):
        raise ValueError("histogram edges for a run must end with an overflow edge (inf)")
    rec = _Recorder(state)
    dumps = {}
    pending = set(config.dump_sweeps)
    if 0 in pending:
        dumps[0] = state.wealths.copy()
    acc = np.zeros(edges.size - 1)
    tail_acc = np.zeros(tail_edges.size - 1)
    window_end = config.burn_in + config.averaging_window
    for s in range(1, config.sweeps + 1):
        sweep(state)
        if s % config.record_every == 0 or s == config.sweeps:
            rec.record(state)
        if s in pending:
            dumps[s] = state.wealths.copy()
        if config.burn_in < s <= window_end:
            acc += _normalized_counts(state.wealths, edges)
            tail_acc += _normalized_counts(state.wealths, tail_edges)
    if config.averaging_window == 0:
        acc = _normalized_counts(state.wealths, edges)
        tail_acc = _normalized_counts(state.wealths, tail_edges)
    n_snap = max(config.averaging_window, 1)
    n = state.population.n_agents
    hist = Histogram(edges, acc / acc.sum(), n * n_snap)
    tail = Histogram(tail_edges, tail_acc / tail_acc.sum(), n * n_snap)
    return RunResult(rec.series(dumps), hist, tail, state)


@dataclass
class EnsembleResult:
    """Pointwise mean and standard error of the moment series over independent runs.

    ``histogram`` is the run-averaged normalized density; per-run histograms
    and final wealth vectors are kept alongside.
    """

    t: np.ndarray
    tau: np.ndarray
    m_mean: np.ndarray
    m_se: np.ndarray
    A_mean: np.ndarray
    A_se: np.ndarray
    rejected_frac_mean: np.ndarray
    histogram: Histogram
    tail_histogram: Histogram
    runs: list
    run_histograms: list
    final_wealths: list

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    COLUMNS = ("t", "tau", "m_mean", "m_se", "A_mean", "A_se", "rejected_frac")

    def columns(self):
        return np.column_stack([self.t, self.tau, self.m_mean, self.m_se, self.A_mean, self.A_se,
                                self.rejected_frac_mean])


def _mean_se(x):
    mean = x.mean(axis=0)
    if x.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])


def _run_detached(args):
    config, r = args
    res = run(config, r)
    return res.series, res.histogram, res.tail_histogram, res.final_state.wealths


def run_ensemble(config: SimConfig, n_runs: int, n_jobs: int = 1) -> EnsembleResult:
    """Independent runs on streams ``0 .. n_runs-1`` of ``config.seed``.

    Run 0 is identical to :func:`run`. Results do not depend on ``n_jobs``.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = [(config, r) for r in range(n_runs)]
    if n_jobs > 1 and n_runs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            out = list(pool.map(_run_detached, jobs))
    else:
        out = [_run_detached(j) for j in jobs]
    series = [o[0] for o in out]
    m_mean, m_se = _mean_se(np.array([s.m for s in series]))
    a_mean, a_se = _mean_se(np.array([s.A for s in series]))
    rej = np.mean([s.rejected_frac for s in series], axis=0)
    return EnsembleResult(
        series[0].t, series[0].tau, m_mean, m_se, a_mean, a_se, rej,
        average_histograms(o[1] for o in out), average_histograms(o[2] for o in out), series,
        [o[1] for o in out], [o[3] for o in out],
    )
