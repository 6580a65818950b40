"""Experiment driver.

Usage::

    kinwealth --config exp.json [--gamma 0.01 --sigma2 0.02 ... --out DIR]

Configuration is a flat JSON object; see ``KEYS`` for every accepted key,
its type and default. Unknown keys are rejected. Command-line flags mirror
the keys (``n_agents`` -> ``--n-agents``) and override file values. The
merged configuration is written to ``summary.json`` under ``"spec"``.

Output directory layout (``out``):

* ``summary.json``            effective spec, metadata and metrics
* ``series_run{r:03d}.csv``   ``t,tau,m,A,rejected_frac`` per run
* ``ensemble.csv``            pointwise mean and standard error over runs
* ``histogram.csv``           ``w_lo,w_hi,mass,analytic_mass`` (averaged ``w/m``)
* ``tail_histogram.csv``      same on logarithmic bins
* ``analytic.csv``            ``w_center,g`` stationary density on bin centres
* ``tail_fit.json``           Hill estimate and log-log ccdf slope
* ``population_run{r:03d}_sweep{s:06d}.txt``  one wealth per line (``dump_sweeps``)
* ``grid.csv`` / ``history.csv``  Fokker-Planck solution ``w_center,g`` and ``iter,tau,residual``
* ``spread.csv`` / ``bounds.csv``  verification tables
* ``*.png``                   figures (disable with ``--no-plots``)

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 failed check in ``verify-*`` modes.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import analytics, estimators, reports
from .fokker_planck import ConvergenceError, FpGrid, ParetoStationary, fp_solve_to_steady, l1_to_stationary, pareto_exponent
from .mc import SimConfig, init, run_ensemble, sweep
from .model import NoiseKind, NoiseModel, TradeParams

log = logging.getLogger("kinwealth")

MODES = ("mc", "fp", "compare", "verify-ode", "verify-bounds")
FORMATS = ("csv", "json")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# key: (kind, default, help). kind is one of float, int, str, bool, "floats", "ints", "strs", "number_or_floats"
KEYS = {
    "mode": (str, "compare", "one of " + ", ".join(MODES)),
    "gamma": (float, 0.01, "transaction coefficient in (0, 1)"),
    "sigma2": (float, 0.02, "noise variance >= 0"),
    "alpha": (float, 1.0, "extra finite moment order of the unit noise (bounds only)"),
    "n_agents": (int, 2000, "number of agents"),
    "noise": (str, "bounded_uniform", "normal | bounded_uniform | bounded_truncated_normal"),
    "initial": ("number_or_floats", 1.0, "common initial wealth, or one value per agent"),
    "initial_spread": ((float, None), None, "two-point start with this spread A(0) around `initial`"),
    "sweeps": ((int, None), None, "total sweeps (default burn_in + window)"),
    "burn_in": (int, 5000, "sweeps before histogram averaging"),
    "window": (int, 250, "sweeps averaged into the histogram"),
    "seed": (int, 0, "base seed"),
    "runs": (int, 1, "independent runs"),
    "jobs": (int, 1, "worker processes for ensembles"),
    "record_every": (int, 1, "moment snapshot cadence in sweeps"),
    "dump_sweeps": ("ints", [], "sweeps at which full populations are written"),
    "slope_range": ("floats", [2.5, 10.0], "w range of the log-log ccdf fit"),
    "hill_k": ((int, None), None, "order statistics for the Hill estimate (default ceil(sqrt(n)))"),
    "lambda": ((float, None), None, "Fokker-Planck lambda (default sigma2 / gamma)"),
    "w_max": (float, 20.0, "Fokker-Planck domain [0, w_max]"),
    "n_cells": (int, 2000, "Fokker-Planck cells"),
    "dt": (float, 0.05, "Fokker-Planck time step in tau"),
    "tol": (float, 1e-10, "steady-state tolerance on the L1 change per unit tau"),
    "max_iter": (int, 100000, "Fokker-Planck step budget"),
    "fp_init": ("floats", [0.0, 2.0], "uniform initial density on [lo, hi]"),
    "check_times": ("floats", [5.0, 10.0, 20.0], "verify-ode comparison times"),
    "moment_order": (float, 3.0, "verify-bounds moment order p > 2"),
    "c_p": (float, 1.0, "verify-bounds convexity constant"),
    "out": (str, "results", "output directory"),
    "formats": ("strs", ["csv", "json"], "subset of csv, json"),
    "plots": (bool, True, "render PNG figures"),
}


def _line_of(text, key):
    if text is None:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _where(key, text):
    line = _line_of(text, key)
    return f"'{key}'" + (f" (line {line})" if line else "")


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(key, value, text=None):
    kind = KEYS[key][0]
    bad = lambda expect: ConfigError(f"{_where(key, text)}: expected {expect}, got {value!r}")  # noqa: E731
    if isinstance(kind, tuple):
        if value is None:
            return None
        kind = kind[0]
    if kind is float:
        if not _is_num(value):
            raise bad("a number")
        return float(value)
    if kind is int:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise bad("an integer")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise bad("a string")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise bad("true or false")
        return value
    if kind == "number_or_floats":
        if _is_num(value):
            return float(value)
        if isinstance(value, list) and all(_is_num(v) for v in value):
            return [float(v) for v in value]
        raise bad("a number or a list of numbers")
    if kind in ("floats", "ints", "strs"):
        if not isinstance(value, list):
            raise bad("a list")
        if kind == "floats":
            if not all(_is_num(v) for v in value):
                raise bad("a list of numbers")
            return [float(v) for v in value]
        if kind == "ints":
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
                raise bad("a list of integers")
            return list(value)
        if not all(isinstance(v, str) for v in value):
            raise bad("a list of strings")
        return list(value)
    raise AssertionError(kind)


@dataclass
class ExperimentSpec:
    mode: str = "compare"
    gamma: float = 0.01
    sigma2: float = 0.02
    alpha: float = 1.0
    n_agents: int = 2000
    noise: str = "bounded_uniform"
    initial: object = 1.0
    initial_spread: float = None
    sweeps: int = None
    burn_in: int = 5000
    window: int = 250
    seed: int = 0
    runs: int = 1
    jobs: int = 1
    record_every: int = 1
    dump_sweeps: list = field(default_factory=list)
    slope_range: list = field(default_factory=lambda: [2.5, 10.0])
    hill_k: int = None
    lambda_: float = None
    w_max: float = 20.0
    n_cells: int = 2000
    dt: float = 0.05
    tol: float = 1e-10
    max_iter: int = 100000
    fp_init: list = field(default_factory=lambda: [0.0, 2.0])
    check_times: list = field(default_factory=lambda: [5.0, 10.0, 20.0])
    moment_order: float = 3.0
    c_p: float = 1.0
    out: str = "results"
    formats: list = field(default_factory=lambda: ["csv", "json"])
    plots: bool = True

    @staticmethod
    def _attr(key):
        return "lambda_" if key == "lambda" else key

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return {k: d[k] for k in KEYS}

    @classmethod
    def from_dict(cls, raw, text=None, log_defaults=False):
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = sorted(set(raw) - set(KEYS))
        if unknown:
            raise ConfigError(
                "unknown configuration key(s): " + ", ".join(_where(k, text) for k in unknown)
            )
        values = {}
        for key in KEYS:
            if key in raw:
                values[cls._attr(key)] = _coerce(key, raw[key], text)
            elif log_defaults:
                log.info("config: %s not set, using default %r", key, KEYS[key][1])
        spec = cls(**values)
        spec.validate(text)
        return spec

    # -- validation -------------------------------------------------------
    def validate(self, text=None):
        err = lambda key, msg: ConfigError(f"{_where(key, text)}: {msg}")  # noqa: E731
        if self.mode not in MODES:
            raise err("mode", f"must be one of {', '.join(MODES)}, got {self.mode!r}")
        if not 0.0 < self.gamma < 1.0:
            raise err("gamma", f"must lie in (0, 1), got {self.gamma}")
        if self.sigma2 < 0.0:
            raise err("sigma2", f"must be >= 0, got {self.sigma2}")
        if self.alpha <= 0.0:
            raise err("alpha", "must be > 0")
        try:
            NoiseKind(self.noise)
        except ValueError:
            raise err("noise", f"must be one of {', '.join(k.value for k in NoiseKind)}, got {self.noise!r}") from None
        for key in ("runs", "jobs", "record_every", "n_cells", "max_iter"):
            if getattr(self, key) < 1:
                raise err(key, "must be >= 1")
        if self.n_agents < 2:
            raise err("n_agents", "must be >= 2")
        if self.burn_in < 0 or self.window < 0:
            raise err("burn_in" if self.burn_in < 0 else "window", "must be >= 0")
        if self.initial_spread is not None and self.initial_spread < 0.0:
            raise err("initial_spread", "must be >= 0")
        if not set(self.formats) <= set(FORMATS):
            raise err("formats", f"entries must be among {', '.join(FORMATS)}")
        if len(self.slope_range) != 2 or not 0.0 < self.slope_range[0] < self.slope_range[1]:
            raise err("slope_range", "must be [lo, hi] with 0 < lo < hi")
        if len(self.fp_init) != 2 or not 0.0 <= self.fp_init[0] < self.fp_init[1] <= self.w_max:
            raise err("fp_init", "must be [lo, hi] with 0 <= lo < hi <= w_max")
        for key in ("w_max", "dt", "tol"):
            if not getattr(self, key) > 0.0:
                raise err(key, "must be > 0")
        if self.lambda_ is not None and self.lambda_ < 0.0:
            raise err("lambda", "must be >= 0")
        if self.moment_order <= 2.0:
            raise err("moment_order", "must be > 2")
        if self.c_p <= 0.0:
            raise err("c_p", "must be > 0")
        if self.mode in ("compare", "fp") and self.fp_lambda <= 0.0:
            raise err("sigma2" if self.lambda_ is None else "lambda",
                      "the stationary state needs lambda = sigma2/gamma > 0")
        if self.mode == "verify-ode":
            if self.noise == NoiseKind.NORMAL.value:
                raise err("noise", "verify-ode needs a bounded noise law (mean wealth must be conserved)")
            if self.runs < 2:
                raise err("runs", "verify-ode needs at least 2 runs for standard errors")
            horizon = self.total_sweeps
            if any(t < 0 or t > horizon for t in self.check_times):
                raise err("check_times", f"must lie within [0, {horizon}] sweeps")
        if self.mode != "fp":
            try:
                NoiseModel.from_params(self.noise, TradeParams(self.gamma, self.sigma2, self.alpha))
            except ValueError as exc:
                raise err("sigma2", str(exc)) from None
            try:
                self.sim_config()
            except ValueError as exc:
                raise ConfigError(f"invalid simulation settings: {exc}") from None

    # -- derived settings ---------------------------------------------------
    @property
    def total_sweeps(self):
        return self.sweeps if self.sweeps is not None else self.burn_in + self.window

    @property
    def fp_lambda(self):
        return self.lambda_ if self.lambda_ is not None else self.sigma2 / self.gamma

    def initial_wealths(self):
        spread = self.initial_spread
        if spread is None and self.mode == "verify-ode":
            spread = 1.0
        if spread is None or isinstance(self.initial, list):
            return self.initial
        # two-point population with mean `initial` and 2 * variance = spread
        half = math.sqrt(spread / 2.0)
        lo, hi = self.initial - half, self.initial + half
        if lo < 0.0:
            raise ConfigError(f"'initial_spread': {spread} is too large for mean wealth {self.initial}")
        if self.n_agents % 2:
            raise ConfigError("'initial_spread' needs an even n_agents")
        return np.where(np.arange(self.n_agents) % 2 == 0, lo, hi).tolist()

    def sim_config(self) -> SimConfig:
        return SimConfig(
            n_agents=self.n_agents,
            params=TradeParams(self.gamma, self.sigma2, self.alpha),
            noise=self.noise,
            initial=self.initial_wealths(),
            sweeps=self.sweeps,
            burn_in=self.burn_in,
            averaging_window=self.window,
            seed=self.seed,
            record_every=self.record_every,
            dump_sweeps=tuple(self.dump_sweeps),
        )


def parse_config(path) -> ExperimentSpec:
    """Read and validate a JSON configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return ExperimentSpec.from_dict(raw, text=text, log_defaults=True)


# -- experiment runners ------------------------------------------------------

class _Out:
    def __init__(self, spec: ExperimentSpec):
        self.dir = Path(spec.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.spec = spec
        self.meta = reports.metadata(spec.to_dict())
        self.files = []

    def table(self, name, columns, rows):
        rows = [list(r) for r in rows]
        if "csv" in self.spec.formats:
            self.files.append(reports.write_csv(self.dir / f"{name}.csv", columns, rows, self.meta).name)
        if "json" in self.spec.formats:
            record = {"meta": self.meta, "columns": list(columns), "rows": rows}
            self.files.append(reports.write_json(self.dir / f"{name}.json", record).name)

    def record(self, name, record):
        self.files.append(reports.write_json(self.dir / name, {"meta": self.meta, **record}).name)

    def figure(self, fn, name, *args, **kwargs):
        if self.spec.plots:
            fn(*args, path=self.dir / name, **kwargs)
            self.files.append(name)


def _histogram_rows(hist, ps):
    analytic = estimators.analytic_masses(hist.edges, ps.cdf) if ps is not None else np.full(hist.masses.size, np.nan)
    return zip(hist.lo, hist.hi, hist.masses, analytic)


def _simulate(spec, out):
    cfg = spec.sim_config()
    ens = run_ensemble(cfg, spec.runs, n_jobs=spec.jobs)
    for r, s in enumerate(ens.runs):
        out.table(f"series_run{r:03d}", s.COLUMNS, s.columns())
        for sw, w in sorted(s.dumps.items()):
            name = f"population_run{r:03d}_sweep{sw:06d}.txt"
            reports.write_population(out.dir / name, w)
            out.files.append(name)
    out.table("ensemble", ens.COLUMNS, ens.columns())
    return cfg, ens


def _growth_metrics(spec, ens):
    rate = analytics.growth_bound_rate(spec.gamma, math.sqrt(spec.sigma2), spec.alpha)
    t_end = ens.t[-1]
    realized = math.log(ens.m_mean[-1] / ens.m_mean[0]) / t_end if t_end > 0 and ens.m_mean[-1] > 0 else 0.0
    return {"growth_bound_rate": rate, "realized_growth_rate": realized,
            "final_mean_wealth": ens.m_mean[-1], "final_spread": ens.A_mean[-1],
            "mean_rejected_frac": float(np.mean(ens.rejected_frac_mean[1:])) if ens.t.size > 1 else 0.0}


def run_mc(spec, out):
    from . import plotting

    _, ens = _simulate(spec, out)
    lam = spec.sigma2 / spec.gamma
    ps = ParetoStationary.from_lambda(lam) if lam > 0 else None
    out.table("histogram", ("w_lo", "w_hi", "mass", "analytic_mass"), _histogram_rows(ens.histogram, ps))
    metrics = _growth_metrics(spec, ens)
    out.figure(plotting.growth_figure, "growth.png", ens.t, ens.m_mean, m_se=ens.m_se,
               bound_rate=metrics["growth_bound_rate"],
               title=f"gamma={spec.gamma:g}, sigma^2={spec.sigma2:g}, N={spec.n_agents}")
    return EXIT_OK, metrics


def run_compare(spec, out):
    from . import plotting

    _, ens = _simulate(spec, out)
    lam = spec.sigma2 / spec.gamma
    ps = ParetoStationary.from_lambda(lam)
    hist = ens.histogram
    out.table("histogram", ("w_lo", "w_hi", "mass", "analytic_mass"), _histogram_rows(hist, ps))
    out.table("tail_histogram", ("w_lo", "w_hi", "mass", "analytic_mass"), _histogram_rows(ens.tail_histogram, ps))
    fin = np.isfinite(hist.hi)
    out.table("analytic", ("w_center", "g"), zip(hist.centers[fin], ps.pdf(hist.centers[fin])))
    metrics = {
        "lambda": lam,
        "mu": ps.mu,
        "l1_distance": estimators.l1_distance(hist, ps),
    }
    tail = {}
    try:
        fit = estimators.loglog_ccdf_fit(hist, tuple(spec.slope_range))
        tail["ccdf_slope"] = {"slope": fit.slope, "r_squared": fit.r_squared, "n_points": fit.n_points,
                              "w_range": spec.slope_range, "expected": -ps.mu}
    except ValueError as exc:
        tail["ccdf_slope"] = {"error": str(exc)}
    pooled = np.concatenate([estimators.normalize(w) for w in ens.final_wealths])
    try:
        tail["hill"] = estimators.hill_estimator(pooled[pooled > 0], spec.hill_k).as_dict()
    except ValueError as exc:
        tail["hill"] = {"error": str(exc)}
    metrics["l1_distance_per_run"] = [estimators.l1_distance(h, ps) for h in ens.run_histograms]
    out.record("tail_fit.json", tail)
    metrics.update(_growth_metrics(spec, ens))
    metrics["tail"] = tail
    out.figure(plotting.density_figure, "density.png", hist, ps, tail_hist=ens.tail_histogram,
               title=f"gamma={spec.gamma:g}, sigma^2={spec.sigma2:g}, mu={ps.mu:g}")
    out.figure(plotting.growth_figure, "growth.png", ens.t, ens.m_mean, m_se=ens.m_se,
               bound_rate=metrics["growth_bound_rate"])
    return EXIT_OK, metrics


def run_fp(spec, out):
    from . import plotting

    lam = spec.fp_lambda
    ps = ParetoStationary.from_lambda(lam)
    lo, hi = spec.fp_init
    grid = FpGrid.uniform(lo, hi, spec.w_max, spec.n_cells, lam)
    res = fp_solve_to_steady(grid, spec.tol, dt=spec.dt, max_iter=spec.max_iter)
    g = res.grid
    out.table("grid", ("w_center", "g"), zip(g.centers, g.cell_averages))
    out.table("history", ("iter", "tau", "residual"), res.history)
    metrics = {
        "lambda": lam,
        "mu": ps.mu,
        "iterations": int(res.iterations[-1]),
        "tau_final": g.tau,
        "final_residual": res.residuals[-1],
        "mass": g.mass,
        "mean": g.mean,
        "variance": g.variance,
        "l1_to_stationary": l1_to_stationary(g, ps),
        "l1_to_truncated_stationary": l1_to_stationary(g, ps, renormalize=True),
        "truncated_tail_mass": float(ps.sf(spec.w_max)),
    }
    out.figure(plotting.fp_figure, "fp.png", g, ps, history=res.history)
    return EXIT_OK, metrics


def run_verify_ode(spec, out):
    from . import plotting

    _, ens = _simulate(spec, out)
    m0 = float(ens.m_mean[0])
    ode = analytics.SpreadOde(spec.gamma, spec.sigma2, m0, float(ens.A_mean[0]))
    consistent = ode.solution(ens.t, analytics.CONSISTENT)
    printed = ode.solution(ens.t, analytics.PRINTED)
    out.table("spread", ("t", "A_mean", "A_se", "A_consistent", "A_printed"),
              zip(ens.t, ens.A_mean, ens.A_se, consistent, printed))
    checks = []
    for tc in spec.check_times:
        i = int(np.argmin(np.abs(ens.t - tc)))
        se = ens.A_se[i]
        z_c = (ens.A_mean[i] - consistent[i]) / se if se > 0 else math.inf
        z_p = (ens.A_mean[i] - printed[i]) / se if se > 0 else math.inf
        checks.append({"t": float(ens.t[i]), "A_mean": ens.A_mean[i], "A_se": se,
                       "A_consistent": consistent[i], "A_printed": printed[i],
                       "z_consistent": z_c, "z_printed": z_p, "consistent_ok": abs(z_c) <= 3.0})
    printed_rejected = abs(checks[-1]["z_printed"]) > 3.0
    passed = all(c["consistent_ok"] for c in checks) and printed_rejected
    out.figure(plotting.spread_figure, "spread.png", ens.t, ens.A_mean, ens.A_se,
               {"consistent ODE": consistent, "printed ODE": printed})
    metrics = {"checks": checks, "printed_form_rejected": printed_rejected, "passed": passed,
               "fixed_point_consistent": ode.fixed_point(analytics.CONSISTENT),
               "fixed_point_printed": ode.fixed_point(analytics.PRINTED)}
    return (EXIT_OK if passed else EXIT_CHECK), metrics


def run_verify_bounds(spec, out):
    from . import plotting

    cfg = spec.sim_config()
    p = spec.moment_order
    sigma = math.sqrt(spec.sigma2)
    rate = analytics.growth_bound_rate(spec.gamma, sigma, spec.alpha)
    mp_rate = analytics.moment_bound_rate(analytics.MomentBound(p, spec.gamma, sigma, spec.alpha, spec.c_p))
    times, ms, mps = [], [], []
    for r in range(spec.runs):
        state = init(cfg, r)
        t_r, m_r, mp_r = [0], [state.wealths.mean()], [np.mean(state.wealths**p)]
        for s in range(1, cfg.sweeps + 1):
            sweep(state)
            if s % cfg.record_every == 0 or s == cfg.sweeps:
                t_r.append(s)
                m_r.append(state.wealths.mean())
                mp_r.append(np.mean(state.wealths**p))
        times = np.array(t_r, dtype=np.float64)
        ms.append(m_r)
        mps.append(mp_r)
    log_m = np.log(np.array(ms) / np.array(ms)[:, :1])
    log_mp = np.log(np.array(mps) / np.array(mps)[:, :1])
    n = spec.runs
    se = (lambda x: x.std(axis=0, ddof=1) / math.sqrt(n)) if n > 1 else (lambda x: np.zeros(x.shape[1]))
    g_mean, g_se = log_m.mean(axis=0), se(log_m)
    p_mean, p_se = log_mp.mean(axis=0), se(log_mp)
    m_mean = np.array(ms).mean(axis=0)
    out.table("bounds", ("t", "m_mean", "log_growth", "log_growth_se", "growth_bound",
                         "log_mp_growth", "log_mp_growth_se", "mp_bound"),
              zip(times, m_mean, g_mean, g_se, rate * times, p_mean, p_se, mp_rate * times))
    mean_ok = bool(np.all(g_mean <= rate * times + 3.0 * g_se + 1e-12))
    mp_ok = bool(np.all(p_mean <= mp_rate * times + 3.0 * p_se + 1e-12))
    out.figure(plotting.growth_figure, "growth.png", times, m_mean, bound_rate=rate)
    metrics = {"growth_bound_rate": rate, "moment_bound_rate": mp_rate, "moment_order": p,
               "realized_growth_rate": float(g_mean[-1] / times[-1]) if times[-1] > 0 else 0.0,
               "realized_moment_rate": float(p_mean[-1] / times[-1]) if times[-1] > 0 else 0.0,
               "mean_bound_ok": mean_ok, "moment_bound_ok": mp_ok, "passed": mean_ok and mp_ok}
    return (EXIT_OK if mean_ok and mp_ok else EXIT_CHECK), metrics


RUNNERS = {
    "mc": run_mc,
    "compare": run_compare,
    "fp": run_fp,
    "verify-ode": run_verify_ode,
    "verify-bounds": run_verify_bounds,
}


def run_experiment(spec: ExperimentSpec):
    """Run ``spec`` and write all artifacts; returns ``(exit_code, summary)``."""
    out = _Out(spec)
    code, metrics = RUNNERS[spec.mode](spec, out)
    summary = {"spec": spec.to_dict(), "meta": out.meta, "metrics": metrics, "exit_code": code,
               "files": sorted(out.files)}
    reports.write_json(out.dir / "summary.json", summary)
    return code, summary


# -- command line -------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="kinwealth", description="Kinetic wealth-exchange experiments.")
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("-v", "--verbose", action="store_true", help="log defaults and progress")
    for key, (kind, _default, help_) in KEYS.items():
        flag = "--" + key.replace("_", "-")
        dest = "opt_" + key
        base = kind[0] if isinstance(kind, tuple) else kind
        if key == "plots":
            ap.add_argument("--plots", dest=dest, action="store_true", default=None, help="render figures")
            ap.add_argument("--no-plots", dest=dest, action="store_false", help="skip figures")
        elif key == "mode":
            ap.add_argument(flag, dest=dest, choices=MODES, help=help_)
        elif base in (float, int, str):
            ap.add_argument(flag, dest=dest, type=base, help=help_)
        elif base == "number_or_floats":
            ap.add_argument(flag, dest=dest, type=float, help=help_)
        else:
            # comma separated lists
            ap.add_argument(flag, dest=dest, help=help_ + " (comma separated)")
    return ap


def _flag_value(key, value):
    kind = KEYS[key][0]
    if kind == "floats":
        return [float(v) for v in value.split(",") if v]
    if kind == "ints":
        return [int(v) for v in value.split(",") if v]
    if kind == "strs":
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        raw, text = {}, None
        if args.config:
            path = Path(args.config)
            try:
                text = path.read_text()
                raw = json.loads(text)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
            if not isinstance(raw, dict):
                raise ConfigError("configuration must be a JSON object")
        for key in KEYS:
            value = getattr(args, "opt_" + key)
            if value is not None:
                try:
                    raw[key] = _flag_value(key, value)
                except ValueError:
                    raise ConfigError(f"--{key.replace('_', '-')}: cannot parse {value!r}") from None
        spec = ExperimentSpec.from_dict(raw, text=text, log_defaults=args.verbose)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, summary = run_experiment(spec)
    except (ConvergenceError, OSError, ValueError, FloatingPointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    metrics = summary["metrics"]
    brief = {k: v for k, v in metrics.items() if not isinstance(v, (dict, list))}
    print(json.dumps(reports._jsonable(brief), sort_keys=True))
    if code == EXIT_CHECK:
        print("verification failed, see summary.json", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
