"""Continuous-trading limit: inverse-gamma equilibrium and a finite-volume solver.

The transient solver works on the flux form

    dg/dtau = d/dw [ B(w) g + D(w) dg/dw ],   B = (1 + lam) w - m,   D = lam w^2 / 2

with Chang-Cooper (exponentially fitted) interface fluxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special


class ConvergenceError(RuntimeError):
    pass


def pareto_exponent(lam: float) -> float:
    """Tail index ``1 + 2/lam`` of the stationary state."""
    if not lam > 0.0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    return 1.0 + 2.0 / lam


@dataclass(frozen=True)
class ParetoStationary:
    """Inverse-gamma stationary density with tail index ``mu`` and mean ``m``.

    Equivalent to ``scipy.stats.invgamma(a=mu, scale=(mu - 1) * m)``.
    """

    mu: float
    m: float = 1.0

    def __post_init__(self):
        if not self.mu > 1.0:
            raise ValueError(f"mu must be > 1, got {self.mu}")
        if not self.m > 0.0:
            raise ValueError(f"mean m must be > 0, got {self.m}")

    @classmethod
    def from_lambda(cls, lam, m=1.0):
        return cls(pareto_exponent(lam), m)

    @property
    def scale(self) -> float:
        return (self.mu - 1.0) * self.m

    @property
    def variance(self) -> float:
        """``m^2 / (mu - 2)``; infinite for ``mu <= 2``."""
        if self.mu <= 2.0:
            return math.inf
        return self.m**2 / (self.mu - 2.0)

    @property
    def second_moment(self) -> float:
        if self.mu <= 2.0:
            return math.inf
        return self.m**2 * (self.mu - 1.0) / (self.mu - 2.0)

    @property
    def has_finite_variance(self) -> bool:
        return self.mu > 2.0

    def pdf(self, w):
        w = np.asarray(w, dtype=np.float64)
        out = np.zeros_like(w)
        pos = w > 0.0
        x = w[pos]
        c = self.scale
        logp = self.mu * math.log(c) - special.gammaln(self.mu) - c / x - (1.0 + self.mu) * np.log(x)
        out[pos] = np.exp(logp)
        return out if out.ndim else float(out)

    def cdf(self, w):
        w = np.asarray(w, dtype=np.float64)
        out = np.zeros_like(w)
        pos = w > 0.0
        out[pos] = special.gammaincc(self.mu, self.scale / w[pos])
        return out if out.ndim else float(out)

    def sf(self, w):
        """Complementary CDF, accurate far into the tail."""
        w = np.asarray(w, dtype=np.float64)
        out = np.ones_like(w)
        pos = w > 0.0
        out[pos] = special.gammainc(self.mu, self.scale / w[pos])
        return out if out.ndim else float(out)

    def ppf(self, q):
        q = np.asarray(q, dtype=np.float64)
        return self.scale / special.gammainccinv(self.mu, q)

    def sample(self, rng: np.random.Generator, size=None):
        """Reciprocal of a Gamma(mu) variate, scaled so the mean is ``m``."""
        return self.scale / rng.gamma(self.mu, 1.0, size)


def stationary_pdf(ps: ParetoStationary, w):
    return ps.pdf(w)


def stationary_cdf(ps: ParetoStationary, w):
    return ps.cdf(w)


def sample_stationary(ps: ParetoStationary, rng: np.random.Generator, size=None):
    return ps.sample(rng, size)


def _bernoulli_fn(x):
    # x / (exp(x) - 1) with the removable singularity at 0
    x = np.asarray(x, dtype=np.float64)
    out = np.ones_like(x)
    nz = x != 0.0
    with np.errstate(over="ignore"):
        out[nz] = x[nz] / np.expm1(x[nz])
    return out


@dataclass
class FpGrid:
    """Cell averages of ``g`` on a uniform grid over ``[0, w_max]``."""

    w_max: float
    n_cells: int
    cell_averages: np.ndarray
    lam: float
    m: float = 1.0
    tau: float = 0.0
    _coef: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.cell_averages = np.asarray(self.cell_averages, dtype=np.float64)
        if self.cell_averages.shape != (self.n_cells,):
            raise ValueError("cell_averages must have n_cells entries")
        if not (self.w_max > 0.0 and self.m > 0.0 and self.lam >= 0.0):
            raise ValueError("need w_max > 0, m > 0 and lambda >= 0")
        g = self.cell_averages
        # rounding in the implicit solve may leave values like -1e-300 in empty cells
        if g.size and g.min() < -1e-14 * max(g.max(), 0.0):
            raise ValueError("cell averages must be non-negative")

    @classmethod
    def from_function(cls, fn, w_max, n_cells, lam, m=1.0, normalize=True):
        """Grid initialised with ``fn`` at cell centres (renormalized to unit mass)."""
        dw = w_max / n_cells
        centers = (np.arange(n_cells) + 0.5) * dw
        g = np.asarray(fn(centers), dtype=np.float64)
        grid = cls(w_max, n_cells, g, lam, m)
        if normalize:
            grid.cell_averages /= grid.mass
        return grid

    @classmethod
    def uniform(cls, lo, hi, w_max, n_cells, lam, m=1.0):
        """Uniform density on ``[lo, hi]`` as exact cell averages."""
        dw = w_max / n_cells
        left = np.arange(n_cells) * dw
        overlap = np.clip(np.minimum(left + dw, hi) - np.maximum(left, lo), 0.0, None)
        return cls(w_max, n_cells, overlap / (dw * (hi - lo)), lam, m)

    @property
    def dw(self) -> float:
        return self.w_max / self.n_cells

    @property
    def centers(self):
        return (np.arange(self.n_cells) + 0.5) * self.dw

    @property
    def edges(self):
        return np.linspace(0.0, self.w_max, self.n_cells + 1)

    @property
    def mass(self) -> float:
        return float(self.cell_averages.sum() * self.dw)

    def moment(self, k):
        return float(np.sum(self.centers**k * self.cell_averages) * self.dw)

    @property
    def mean(self) -> float:
        return self.moment(1) / self.mass

    @property
    def variance(self) -> float:
        mean = self.mean
        return self.moment(2) / self.mass - mean * mean

    def copy(self):
        return FpGrid(self.w_max, self.n_cells, self.cell_averages.copy(), self.lam, self.m, self.tau)

    def coefficients(self):
        """Interface weights ``(a, b)``: flux ``F = a g_{i+1} - b g_i`` at interior faces.

        The drift-to-diffusion ratio is integrated exactly between neighbouring
        centres, so the discrete zero-flux state is the inverse-gamma density
        sampled at cell centres.
        """
        if self._coef is None:
            c = self.centers
            lo, hi = c[:-1], c[1:]
            face = 0.5 * (lo + hi)
            if self.lam == 0.0:
                drift = face - self.m
                a = np.maximum(drift, 0.0)
                b = np.maximum(-drift, 0.0)
            else:
                lam = self.lam
                diff = 0.5 * lam * face**2 / self.dw
                # nu = integral of B/D from lo to hi
                nu = 2.0 * (1.0 + lam) / lam * np.log(hi / lo) + 2.0 * self.m / lam * (1.0 / hi - 1.0 / lo)
                a = diff * _bernoulli_fn(-nu)
                b = diff * _bernoulli_fn(nu)
            self._coef = (a, b)
        return self._coef

    def fluxes(self):
        """Fluxes at all ``n_cells + 1`` faces, zero at both boundaries."""
        a, b = self.coefficients()
        g = self.cell_averages
        f = np.zeros(self.n_cells + 1)
        f[1:-1] = a * g[1:] - b * g[:-1]
        return f

    def max_explicit_dt(self) -> float:
        """Largest explicit Euler step keeping every update coefficient non-negative."""
        a, b = self.coefficients()
        out = np.zeros(self.n_cells)
        out[:-1] += b
        out[1:] += a
        peak = out.max()
        return math.inf if peak == 0.0 else self.dw / peak


def _implicit_matrix(grid: FpGrid, dt: float):
    # banded (1, 1) form of I - dt/dw * L
    a, b = grid.coefficients()
    r = dt / grid.dw
    n = grid.n_cells
    ab = np.zeros((3, n))
    diag = np.ones(n)
    diag[:-1] += r * b
    diag[1:] += r * a
    ab[1] = diag
    ab[0, 1:] = -r * a      # coefficient of g_{i+1} in row i
    ab[2, :-1] = -r * b     # coefficient of g_{i-1} in row i
    return ab


def fp_step(grid: FpGrid, dt: float, scheme: str = "implicit") -> FpGrid:
    """Advance one step of size ``dt`` and return the new grid.

    ``implicit`` (backward Euler) accepts any ``dt > 0`` and keeps the
    solution positive. ``explicit`` (forward Euler) is positivity-preserving
    only for ``dt <= grid.max_explicit_dt()`` and rejects larger steps.
    """
    if not dt > 0.0:
        raise ValueError(f"time step must be > 0, got {dt}")
    g = grid.cell_averages
    if scheme == "explicit":
        limit = grid.max_explicit_dt()
        if dt > limit:
            raise ValueError(
                f"explicit step dt={dt:g} exceeds the positivity limit {limit:g} "
                f"(dw={grid.dw:g}, lambda={grid.lam:g}); use a smaller dt or scheme='implicit'"
            )
        f = grid.fluxes()
        new = g + dt / grid.dw * (f[1:] - f[:-1])
    elif scheme == "implicit":
        new = linalg.solve_banded((1, 1), _implicit_matrix(grid, dt), g)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    # the implicit matrix is an M-matrix with unit column sums: no clipping needed
    out = FpGrid(grid.w_max, grid.n_cells, new, grid.lam, grid.m, grid.tau + dt)
    out._coef = grid._coef
    return out


@dataclass
class SteadyResult:
    grid: FpGrid
    iterations: np.ndarray
    taus: np.ndarray
    residuals: np.ndarray

    @property
    def history(self):
        return np.column_stack([self.iterations, self.taus, self.residuals])


def fp_solve_to_steady(grid: FpGrid, tol: float = 1e-10, dt: float = 0.05, max_iter: int = 100_000,
                       scheme: str = "implicit") -> SteadyResult:
    """Step until the L1 change per unit tau drops below ``tol``.

    The residual of step ``n`` is ``sum|g^{n+1} - g^n| dw / dt``. Raises
    :class:`ConvergenceError` if ``max_iter`` steps are not enough.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    its, taus, res = [], [], []
    current = grid
    for it in range(1, max_iter + 1):
        nxt = fp_step(current, dt, scheme)
        r = float(np.abs(nxt.cell_averages - current.cell_averages).sum() * grid.dw / dt)
        its.append(it)
        taus.append(nxt.tau)
        res.append(r)
        current = nxt
        if r < tol:
            return SteadyResult(current, np.array(its), np.array(taus), np.array(res))
    raise ConvergenceError(
        f"no steady state after {max_iter} steps of dt={dt:g}: last residual {res[-1]:.3e} > tol={tol:g}"
    )


def discretized_stationary(ps: ParetoStationary, w_max: float, n_cells: int):
    """Exact cell masses of ``ps`` on ``[0, w_max]`` divided by the cell width."""
    edges = np.linspace(0.0, w_max, n_cells + 1)
    return np.diff(ps.cdf(edges)) / (w_max / n_cells)


def l1_to_stationary(grid: FpGrid, ps: ParetoStationary, renormalize: bool = False) -> float:
    """L1 distance between the grid and exact cell masses of ``ps``.

    With ``renormalize`` the reference is ``ps`` conditioned on ``[0, w_max]``
    (the exact steady state of the truncated zero-flux problem); otherwise
    the mass of ``ps`` beyond ``w_max`` is counted as error.
    """
    ref = discretized_stationary(ps, grid.w_max, grid.n_cells) * grid.dw
    tail = 1.0 - ref.sum()
    cells = grid.cell_averages * grid.dw
    if renormalize:
        return float(np.abs(cells / cells.sum() - ref / ref.sum()).sum())
    return float(np.abs(cells - ref).sum() + tail)
