"""Binary trade rule, noise laws and the no-debt admissibility test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy import optimize, special


@dataclass(frozen=True)
class TradeParams:
    """Transaction coefficient ``gamma`` and noise variance ``sigma2``.

    ``lambda_`` is recomputed as ``sigma2 / gamma`` on access; ``alpha`` is
    the order of the extra moment of the unit noise assumed finite (it only
    enters the growth bounds).
    """

    gamma: float
    sigma2: float
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "sigma2", "alpha"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.sigma2 >= 0.0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def lambda_(self) -> float:
        return self.sigma2 / self.gamma


class NoiseKind(str, Enum):
    NORMAL = "normal"
    BOUNDED_UNIFORM = "bounded_uniform"
    BOUNDED_TRUNCATED_NORMAL = "bounded_truncated_normal"


def _truncnorm_variance(scale: float, bound: float) -> float:
    # variance of N(0, scale^2) conditioned on |x| < bound
    z = bound / scale
    mass = special.erf(z / math.sqrt(2.0))
    pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return scale * scale * (1.0 - 2.0 * z * pdf / mass)


@dataclass(frozen=True)
class NoiseModel:
    """Symmetric, zero-mean law of the market return ``eta`` with variance ``sigma**2``.

    Bounded kinds live on ``(-b, b)`` with ``b = 1 - gamma`` so every trade is
    admissible. For the truncated normal the parent scale is solved at
    construction so that the *truncated* variance equals ``sigma**2``.
    """

    kind: NoiseKind
    sigma: float
    gamma: float
    scale: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = NoiseKind(self.kind)
        object.__setattr__(self, "kind", kind)
        sigma = float(self.sigma)
        if not sigma >= 0.0:
            raise ValueError(f"noise sigma must be >= 0, got {sigma}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        b = self.bound
        scale = sigma
        if kind is NoiseKind.BOUNDED_UNIFORM:
            if sigma * sigma > b * b / 3.0 * (1.0 + 1e-12):
                raise ValueError(
                    f"uniform noise on (-{b:g}, {b:g}) has variance at most {b * b / 3.0:g}, "
                    f"got sigma^2={sigma * sigma:g}"
                )
            scale = min(sigma * math.sqrt(3.0), b)  # half-width
        elif kind is NoiseKind.BOUNDED_TRUNCATED_NORMAL:
            if sigma * sigma >= b * b / 3.0:
                raise ValueError(
                    f"truncated normal on (-{b:g}, {b:g}) needs sigma^2 < {b * b / 3.0:g}, "
                    f"got sigma^2={sigma * sigma:g}"
                )
            if sigma > 0.0:
                target = sigma * sigma
                hi = sigma
                while _truncnorm_variance(hi, b) < target:
                    hi *= 2.0
                scale = optimize.brentq(
                    lambda s: _truncnorm_variance(s, b) - target, sigma, hi, xtol=1e-15, rtol=1e-15
                )
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def from_params(cls, kind, params: TradeParams) -> "NoiseModel":
        return cls(kind, params.sigma, params.gamma)

    @property
    def bound(self) -> float:
        return 1.0 - self.gamma

    @property
    def is_bounded(self) -> bool:
        return self.kind is not NoiseKind.NORMAL

    def sample(self, rng: np.random.Generator, size=None):
        """Draw ``size`` values of eta (a float when ``size`` is None)."""
        n = 1 if size is None else size
        if self.sigma == 0.0:
            out = np.zeros(n)
        elif self.kind is NoiseKind.NORMAL:
            out = rng.normal(0.0, self.sigma, n)
        elif self.kind is NoiseKind.BOUNDED_UNIFORM:
            out = rng.uniform(-self.scale, self.scale, n)
        else:
            out = _sample_truncnorm(rng, self.scale, self.bound, n)
        if size is None:
            return float(out[0])
        return out


def _sample_truncnorm(rng, scale, bound, size):
    # Rejection: normal proposal when the core fits inside the bounds,
    # uniform proposal with Gaussian acceptance otherwise. Both accept >= 60%.
    out = np.empty(int(np.prod(size)))
    filled = 0
    while filled < out.size:
        need = out.size - filled
        m = int(need * 1.7) + 16
        if scale <= bound:
            x = rng.normal(0.0, scale, m)
            x = x[np.abs(x) < bound]
        else:
            x = rng.uniform(-bound, bound, m)
            u = rng.random(m)
            x = x[u < np.exp(-0.5 * (x / scale) ** 2)]
        take = min(need, x.size)
        out[filled:filled + take] = x[:take]
        filled += take
    return out.reshape(size)


def sample_noise(model: NoiseModel, rng: np.random.Generator) -> float:
    return model.sample(rng)


class WealthPair(NamedTuple):
    w: float
    w_star: float


def apply_trade(pair, eta: float, eta_star: float, gamma: float) -> WealthPair:
    """Post-trade wealths; no admissibility check (may return negatives)."""
    w, ws = pair
    return WealthPair(
        (1.0 - gamma) * w + gamma * ws + eta * w,
        (1.0 - gamma) * ws + gamma * w + eta_star * ws,
    )


def is_admissible(outcome) -> bool:
    w, ws = outcome
    return w >= 0.0 and ws >= 0.0


class Population:
    """Wealth vector of a fixed number of agents (all entries non-negative)."""

    def __init__(self, wealths):
        w = np.array(wealths, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("a population needs a 1-d wealth vector with at least 2 agents")
        if not np.all(np.isfinite(w)):
            raise ValueError("wealths must be finite")
        if np.any(w < 0.0):
            raise ValueError("negative wealth (debt) is not allowed")
        self.wealths = w

    @property
    def n_agents(self) -> int:
        return self.wealths.size

    @property
    def mean(self) -> float:
        return float(self.wealths.mean())

    def __len__(self):
        return self.wealths.size

    def __repr__(self):
        return f"Population(n_agents={self.n_agents}, mean={self.mean:.6g})"


def as_wealths(pop) -> np.ndarray:
    """Wealth array from a Population or any array-like."""
    if isinstance(pop, Population):
        return pop.wealths
    return np.asarray(pop, dtype=np.float64)
