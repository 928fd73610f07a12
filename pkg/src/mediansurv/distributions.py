"""Closed-form event and censoring time distributions for the simulations.

Each distribution exposes pdf, survival, quantile, raw moments, an exact
true median and an inverse-CDF sampler, so simulated scenarios are fully
analytic and reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np

_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class Exponential:
    rate: float

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * t), 0.0)

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, np.exp(-self.rate * t), 1.0)

    def quantile(self, p):
        return -np.log1p(-np.asarray(p, dtype=float)) / self.rate

    def true_median(self):
        return math.log(2.0) / self.rate

    def raw_moment(self, r):
        return math.factorial(r) / self.rate**r

    def sample(self, rng, size):
        return self.quantile(rng.random(size))


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        k, lam = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            body = (k / lam) * (t / lam) ** (k - 1.0) * np.exp(-((t / lam) ** k))
        return np.where(t > 0, body, 0.0)

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, np.exp(-((np.maximum(t, 0.0) / self.scale) ** self.shape)), 1.0)

    def quantile(self, p):
        return self.scale * (-np.log1p(-np.asarray(p, dtype=float))) ** (1.0 / self.shape)

    def true_median(self):
        return self.scale * math.log(2.0) ** (1.0 / self.shape)

    def raw_moment(self, r):
        return self.scale**r * math.gamma(1.0 + r / self.shape)

    def sample(self, rng, size):
        return self.quantile(rng.random(size))


@dataclass(frozen=True)
class WeibullMixture:
    """Finite mixture of Weibull components given as (weight, shape, scale)."""

    components: tuple

    def __post_init__(self):
        total = sum(w for w, _, _ in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {total!r}")

    def _parts(self):
        return [(w, Weibull(k, lam)) for w, k, lam in self.components]

    def pdf(self, t):
        return sum(w * d.pdf(t) for w, d in self._parts())

    def survival(self, t):
        return sum(w * d.survival(t) for w, d in self._parts())

    def quantile(self, p):
        # scalar bisection on the monotone survival function
        target = 1.0 - float(p)
        hi = 1.0
        while self.survival(hi) > target:
            hi *= 2.0
        lo = 0.0
        while hi - lo > _BISECT_TOL * (1.0 + hi):
            mid = 0.5 * (lo + hi)
            if self.survival(mid) > target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def true_median(self):
        return self.quantile(0.5)

    def raw_moment(self, r):
        return sum(w * d.raw_moment(r) for w, d in self._parts())

    def sample(self, rng, size):
        # categorical component draw, then the component's inverse CDF
        weights = np.array([w for w, _, _ in self.components])
        comp = np.searchsorted(np.cumsum(weights), rng.random(size), side="right")
        comp = np.minimum(comp, len(self.components) - 1)
        u = rng.random(size)
        out = np.empty(size, dtype=float)
        for j, (_, d) in enumerate(self._parts()):
            mask = comp == j
            out[mask] = d.quantile(u[mask])
        return out


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= self.lo) & (t <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip((self.hi - t) / (self.hi - self.lo), 0.0, 1.0)

    def quantile(self, p):
        return self.lo + (self.hi - self.lo) * np.asarray(p, dtype=float)

    def true_median(self):
        return 0.5 * (self.lo + self.hi)

    def raw_moment(self, r):
        return (self.hi ** (r + 1) - self.lo ** (r + 1)) / ((r + 1) * (self.hi - self.lo))

    def sample(self, rng, size):
        return self.quantile(rng.random(size))


def skewness_coefficients(dist):
    """Bowley (quartile) and Pearson moment skewness of a distribution."""
    q1, q2, q3 = (float(dist.quantile(p)) for p in (0.25, 0.5, 0.75))
    bowley = (q3 + q1 - 2.0 * q2) / (q3 - q1)
    m1 = dist.raw_moment(1)
    m2 = dist.raw_moment(2)
    m3 = dist.raw_moment(3)
    var = m2 - m1**2
    third_central = m3 - 3.0 * m1 * m2 + 2.0 * m1**3
    return bowley, third_central / var**1.5
