"""Closed-form moment dynamics and growth bounds for the trade model.

Spread ``A = integral (w - w*)^2 f f = 2 Var``. Two spread ODEs are kept:

* ``consistent``: ``dA/dt = -[2 gamma (1 - gamma) - sigma^2] A + 2 sigma^2 m^2``,
  obtained from the weak form with ``phi = w^2``; its fixed point is twice the
  Fokker-Planck stationary variance.
* ``printed``: the published law with decay ``-4[gamma (1 - gamma) - sigma^2 / 2]``,
  kept so Monte Carlo can tell the two apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import as_wealths

CONSISTENT = "consistent"
PRINTED = "printed"


@dataclass(frozen=True)
class SpreadOde:
    gamma: float
    sigma2: float
    m: float = 1.0
    a0: float = 0.0

    def __post_init__(self):
        if self.a0 < 0.0:
            raise ValueError("initial spread a0 must be >= 0")
        if not self.m > 0.0:
            raise ValueError("mean wealth m must be > 0")

    @property
    def lambda_(self) -> float:
        return self.sigma2 / self.gamma

    def decay(self, form: str = CONSISTENT) -> float:
        """Linear decay coefficient ``k`` in ``dA/dt = -k A + s``."""
        g, s2 = self.gamma, self.sigma2
        if form == CONSISTENT:
            return 2.0 * g * (1.0 - g) - s2
        if form == PRINTED:
            return 4.0 * (g * (1.0 - g) - 0.5 * s2)
        raise ValueError(f"unknown spread ODE form {form!r}")

    @property
    def source(self) -> float:
        return 2.0 * self.sigma2 * self.m**2

    def fixed_point(self, form: str = CONSISTENT) -> float:
        k = self.decay(form)
        return self.source / k if k > 0.0 else math.inf

    def solution(self, t, form: str = CONSISTENT):
        """Exact ``A(t)`` from ``A(0) = a0`` (vectorized over ``t``)."""
        return _relax(self.a0, self.decay(form), self.source, t)


def _relax(a0, k, s, t):
    # solution of dA/dt = -k A + s, including the k = 0 linear case
    t = np.asarray(t, dtype=np.float64)
    if k == 0.0:
        out = a0 + s * t
    else:
        out = s / k + (a0 - s / k) * np.exp(-k * t)
    return out if out.ndim else float(out)


def spread_rhs_consistent(a: float, ode: SpreadOde) -> float:
    return -ode.decay(CONSISTENT) * a + ode.source


def spread_rhs_paper(a: float, ode: SpreadOde) -> float:
    return -ode.decay(PRINTED) * a + ode.source


def spread_limit_solution(lam: float, m: float, a0: float, tau, form: str = CONSISTENT):
    """Spread in scaled time ``tau = gamma t`` in the limit ``gamma -> 0``, ``sigma^2 = lam gamma``.

    Consistent form ``dA/dtau = -(2 - lam) A + 2 lam m^2`` converges to
    ``2 lam m^2 / (2 - lam)`` for ``lam < 2`` and grows without bound otherwise;
    ``form="printed"`` uses decay ``4 - 2 lam`` instead.
    """
    if np.any(np.asarray(tau) < 0.0):
        raise ValueError("tau must be >= 0")
    if form == CONSISTENT:
        k = 2.0 - lam
    elif form == PRINTED:
        k = 4.0 - 2.0 * lam
    else:
        raise ValueError(f"unknown spread ODE form {form!r}")
    return _relax(a0, k, 2.0 * lam * m * m, tau)


def spread_limit_fixed_point(lam: float, m: float = 1.0, form: str = CONSISTENT) -> float:
    k = (2.0 - lam) if form == CONSISTENT else (4.0 - 2.0 * lam)
    return 2.0 * lam * m * m / k if k > 0.0 else math.inf


def growth_bound_rate(gamma: float, sigma: float, alpha: float = 1.0) -> float:
    """Upper bound on the exponential growth rate of the mean wealth.

    ``sigma^(2+alpha) (2 - gamma) / (1 - gamma)^(2+alpha)``, so that
    ``m(t) <= m(0) exp(rate t)``.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    return sigma ** (2.0 + alpha) * (2.0 - gamma) / (1.0 - gamma) ** (2.0 + alpha)


@dataclass(frozen=True)
class MomentBound:
    """Parameters of the p-th moment Gronwall bound.

    ``c_p`` is the generic convexity constant of the estimate; it is a bound
    parameter, not a model constant.
    """

    p: float
    gamma: float
    sigma: float
    alpha: float = 1.0
    c_p: float = 1.0

    def __post_init__(self):
        if not self.p > 2.0:
            raise ValueError(f"moment order p must be > 2, got {self.p}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.sigma < 0.0 or self.c_p <= 0.0 or self.alpha <= 0.0:
            raise ValueError("need sigma >= 0, c_p > 0 and alpha > 0")


def moment_constant(p: float, sigma: float, gamma: float) -> float:
    """``sigma^2 (1 + gamma^(p-2)) + sigma^p + 2 gamma^2 + 2 gamma^p + 2 gamma^2 sigma^(p-2)``."""
    return (
        sigma**2 * (1.0 + gamma ** (p - 2.0))
        + sigma**p
        + 2.0 * gamma**2
        + 2.0 * gamma**p
        + 2.0 * gamma**2 * sigma ** (p - 2.0)
    )


def moment_bound_rate(bound: MomentBound) -> float:
    p, g, s, a = bound.p, bound.gamma, bound.sigma, bound.alpha
    return 0.5 * p * (p - 1.0) * bound.c_p * moment_constant(p, s, g) + 2.0 * s ** (2.0 + a) / (1.0 - g) ** (2.0 + a)


def empirical_spread(pop) -> float:
    """``2 (M2 - m^2)`` with the population (biased) variance."""
    w = as_wealths(pop)
    if w.size < 2:
        raise ValueError("spread needs at least two agents")
    return float(2.0 * np.var(w))
