"""Distribution summaries: normalized wealth, histograms, tail fits, L1 distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Population, as_wealths

DEFAULT_BINS = 100
DEFAULT_W_MAX = 10.0
LOG_BINS_PER_DECADE = 32


def normalize(pop):
    """Divide every wealth by the population mean (the ``m(t) f(m(t) w)`` rescaling)."""
    w = as_wealths(pop)
    m = w.mean()
    if not m > 0.0:
        raise ValueError("cannot normalize a population with zero mean wealth")
    out = w / m
    # division by the mean leaves O(eps) error in the new mean; one correction pass removes it
    out /= out.mean()
    return Population(out) if isinstance(pop, Population) else out


def uniform_edges(n_bins=DEFAULT_BINS, w_max=DEFAULT_W_MAX, overflow=True):
    edges = np.linspace(0.0, w_max, n_bins + 1)
    return np.append(edges, np.inf) if overflow else edges


def log_edges(w_min=1e-2, w_max=1e3, per_decade=LOG_BINS_PER_DECADE, overflow=True):
    """0, then logarithmic edges from ``w_min`` to ``w_max``, then an optional overflow edge."""
    n = int(round(per_decade * math.log10(w_max / w_min)))
    edges = np.concatenate([[0.0], np.logspace(math.log10(w_min), math.log10(w_max), n + 1)])
    return np.append(edges, np.inf) if overflow else edges


def _check_edges(edges):
    edges = np.asarray(edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two bin edges")
    if edges[0] != 0.0:
        raise ValueError("bin edges must start at 0")
    if not np.all(np.diff(edges) > 0.0):
        raise ValueError("bin edges must be strictly increasing")
    return edges


def bin_counts(values, edges):
    """Counts per bin ``[e_i, e_{i+1})``; the last finite edge is closed. Values outside go unreported."""
    idx = np.searchsorted(edges, values, side="right") - 1
    top = edges[-1]
    if np.isfinite(top):
        idx[values == top] = edges.size - 2
    ok = (idx >= 0) & (idx < edges.size - 1)
    return np.bincount(idx[ok], minlength=edges.size - 1).astype(np.float64), int(ok.sum())


@dataclass
class Histogram:
    """Probability mass per bin. A last edge of ``inf`` marks an overflow bin."""

    edges: np.ndarray
    masses: np.ndarray
    n_samples: int

    @property
    def lo(self):
        return self.edges[:-1]

    @property
    def hi(self):
        return self.edges[1:]

    @property
    def centers(self):
        hi = self.edges[1:].copy()
        hi[~np.isfinite(hi)] = np.nan
        return 0.5 * (self.edges[:-1] + hi)

    @property
    def density(self):
        """Mass divided by bin width (zero for an overflow bin)."""
        width = np.diff(self.edges)
        with np.errstate(invalid="ignore"):
            return np.where(np.isfinite(width), self.masses / width, 0.0)

    def ccdf(self):
        """Complementary CDF evaluated at each edge (``P(W > e_i)``)."""
        tail = np.concatenate([np.cumsum(self.masses[::-1])[::-1], [0.0]])
        return np.clip(tail, 0.0, 1.0)


def histogram(pop, edges, overflow=False) -> Histogram:
    """Fraction of agents per bin.

    With ``overflow=True`` an extra bin ``[edges[-1], inf)`` is appended so
    that samples beyond the last edge are kept; otherwise they are an error.
    """
    edges = _check_edges(edges)
    if overflow and np.isfinite(edges[-1]):
        edges = np.append(edges, np.inf)
    w = as_wealths(pop)
    if w.size == 0:
        raise ValueError("cannot histogram an empty sample")
    if np.any(w < 0.0):
        raise ValueError("negative samples cannot be binned on edges starting at 0")
    counts, inside = bin_counts(w, edges)
    if inside != w.size:
        raise ValueError(
            f"{w.size - inside} samples exceed the last edge {edges[-1]:g}; enable overflow"
        )
    return Histogram(edges, counts / w.size, int(w.size))


def average_histograms(hists):
    hists = list(hists)
    if not hists:
        raise ValueError("nothing to average")
    edges = hists[0].edges
    for h in hists[1:]:
        if not np.array_equal(h.edges, edges):
            raise ValueError("histograms have different edges")
    masses = np.mean([h.masses for h in hists], axis=0)
    return Histogram(edges, masses / masses.sum(), sum(h.n_samples for h in hists))


@dataclass
class TailFit:
    exponent_estimate: float
    k_used: int
    stderr: float

    def as_dict(self):
        return {"estimate": self.exponent_estimate, "k": self.k_used, "stderr": self.stderr}


def hill_estimator(samples, k=None) -> TailFit:
    """Hill estimate of the Pareto index from the ``k`` largest order statistics.

    ``k`` defaults to ``ceil(sqrt(n))``. The standard error uses the
    asymptotic ``estimate / sqrt(k)``.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if k is None:
        k = int(math.ceil(math.sqrt(n)))
    k = int(k)
    if k < 10:
        raise ValueError(f"Hill estimator needs k >= 10, got {k}")
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the sample size {n}")
    if np.any(x <= 0.0):
        raise ValueError("Hill estimator needs positive samples")
    top = np.sort(x)[::-1][: k + 1]
    logs = np.log(top[:k]) - math.log(top[k])
    total = logs.sum()
    if not total > 0.0:
        raise ValueError("degenerate sample: top order statistics are all equal")
    est = k / total
    return TailFit(float(est), k, float(est / math.sqrt(k)))


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def _fit_loglog(w, ccdf, w_range, min_points=10):
    w = np.asarray(w, dtype=np.float64)
    ccdf = np.asarray(ccdf, dtype=np.float64)
    lo, hi = w_range
    sel = (w >= lo) & (w <= hi) & (ccdf > 0.0) & np.isfinite(w)
    if sel.sum() < min_points:
        raise ValueError(
            f"only {int(sel.sum())} tail points with positive ccdf in [{lo:g}, {hi:g}]; "
            f"need at least {min_points}"
        )
    x = np.log(w[sel])
    y = np.log(ccdf[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), float(r2), int(sel.sum()))


def loglog_ccdf_fit(data, w_range) -> SlopeFit:
    """Least-squares line through ``log ccdf`` vs ``log w`` on ``w_range``.

    ``data`` is a :class:`Histogram` (ccdf taken at its edges), a ``(w, ccdf)``
    pair of tabulated values, or a 1-d array of raw samples.
    """
    if isinstance(data, Histogram):
        return _fit_loglog(data.edges, data.ccdf(), w_range)
    if isinstance(data, tuple) and len(data) == 2:
        return _fit_loglog(data[0], data[1], w_range)
    x = np.sort(as_wealths(data))
    n = x.size
    # P(W > x_(i)) estimated as (n - i) / n for 1-based rank i
    ccdf = (n - np.arange(1, n + 1)) / n
    return _fit_loglog(x, ccdf, w_range)


def loglog_ccdf_slope(data, w_range) -> float:
    return loglog_ccdf_fit(data, w_range).slope


def analytic_masses(edges, cdf):
    """Bin masses ``cdf(e_{i+1}) - cdf(e_i)`` for a vectorized CDF."""
    edges = np.asarray(edges, dtype=np.float64)
    c = np.where(np.isfinite(edges), cdf(np.where(np.isfinite(edges), edges, 1.0)), 1.0)
    return np.diff(c)


def l1_distance(hist: Histogram, ps) -> float:
    """Sum of absolute differences between histogram and analytic bin masses.

    ``ps`` is anything with a vectorized ``cdf`` method (e.g. ParetoStationary).
    Mass outside the histogram's support counts as a discrepancy too.
    """
    target = analytic_masses(hist.edges, ps.cdf)
    outside = 1.0 - target.sum()
    return float(np.abs(hist.masses - target).sum() + abs(outside))
