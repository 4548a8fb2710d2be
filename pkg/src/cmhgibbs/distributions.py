"""Full-conditional distributions with exact CDF, quantile and region masses.

Sampling follows one convention everywhere: Gaussian and uniform coordinates
are drawn by inverse CDF from ``rng.random()``, gamma variates come from
``rng.standard_gamma``. Any object exposing those two methods can stand in
for a :class:`numpy.random.Generator`, which is how tests pin stream values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from cmhgibbs import _special


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


QUANTILE_TOL = 1e-10
QUANTILE_SPAN = 12.0


@dataclass(frozen=True)
class Gaussian1D:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0.0:
            raise DomainError(f"Gaussian sd must be positive, got {self.sd}")

    dim = 1

    @property
    def variance(self) -> float:
        return self.sd * self.sd

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.sd
        return np.exp(-0.5 * z * z) / (self.sd * math.sqrt(2.0 * math.pi))

    def cdf(self, x: float) -> float:
        return _special.norm_cdf((x - self.mean) / self.sd)

    def interval_mass(self, lo: float, hi: float) -> float:
        return _special.gauss_interval_mass(self.mean, self.sd, lo, hi)

    def quantile(self, p: float) -> float:
        _check_probability(p)
        return self.mean + self.sd * _special.norm_ppf(p)

    def sample(self, rng) -> float:
        return self.mean + self.sd * _special.norm_ppf(rng.random())


@dataclass(frozen=True)
class Gamma1D:
    """Gamma law with density proportional to ``x**(shape - 1) * exp(-rate * x)``."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0.0 and self.rate > 0.0):
            raise DomainError(
                f"Gamma shape and rate must be positive, got {self.shape}, {self.rate}"
            )

    dim = 1

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def sd(self) -> float:
        return math.sqrt(self.shape) / self.rate

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = (
                self.shape * math.log(self.rate)
                + (self.shape - 1.0) * np.log(x)
                - self.rate * x
                - math.lgamma(self.shape)
            )
        return np.where(x > 0.0, np.exp(logp), 0.0)

    def cdf(self, x: float) -> float:
        return _special.gammainc_lower(self.shape, self.rate * x)

    def interval_mass(self, lo: float, hi: float) -> float:
        return _special.gamma_interval_mass(self.shape, self.rate, lo, hi)

    def quantile(self, p: float) -> float:
        _check_probability(p)
        return _bisect_cdf(self.cdf, p, 0.0, self.mean + QUANTILE_SPAN * self.sd)

    def sample(self, rng) -> float:
        return rng.standard_gamma(self.shape) / self.rate


@dataclass(frozen=True)
class Uniform01:
    dim = 1
    mean = 0.5
    sd = math.sqrt(1.0 / 12.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)

    def cdf(self, x: float) -> float:
        return min(1.0, max(0.0, float(x)))

    def interval_mass(self, lo: float, hi: float) -> float:
        return _special.unit_interval_mass(lo, hi)

    def quantile(self, p: float) -> float:
        _check_probability(p)
        return float(p)

    def sample(self, rng) -> float:
        return rng.random()


@dataclass(frozen=True)
class IsotropicGaussianBlock:
    """Independent Gaussian coordinates sharing one standard deviation."""

    mean: tuple
    sd: float

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(m) for m in np.ravel(self.mean)))
        if not self.sd > 0.0:
            raise DomainError(f"block sd must be positive, got {self.sd}")

    @property
    def dim(self) -> int:
        return len(self.mean)

    def marginal(self, k: int) -> Gaussian1D:
        return Gaussian1D(self.mean[k], self.sd)

    def sample(self, rng) -> np.ndarray:
        out = np.empty(self.dim)
        for k, m in enumerate(self.mean):
            out[k] = m + self.sd * _special.norm_ppf(rng.random())
        return out


@dataclass(frozen=True)
class GammaPair:
    """Two independent gamma coordinates, e.g. a pair of precisions."""

    first: Gamma1D
    second: Gamma1D

    dim = 2

    @property
    def marginals(self) -> tuple:
        return (self.first, self.second)

    def rectangle_mass(self, lows, highs) -> float:
        return self.first.interval_mass(lows[0], highs[0]) * self.second.interval_mass(
            lows[1], highs[1]
        )

    def sample(self, rng) -> np.ndarray:
        return np.array([self.first.sample(rng), self.second.sample(rng)])


Scalar = Union[Gaussian1D, Gamma1D, Uniform01]
ConditionalDistribution = Union[Gaussian1D, Gamma1D, Uniform01, IsotropicGaussianBlock, GammaPair]


def _check_probability(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")


def _bisect_cdf(cdf, p, lo, hi):
    # runs until the bracket collapses, which meets QUANTILE_TOL with room to spare
    while cdf(hi) < p:
        hi = 2.0 * hi + 1.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            return mid
        f = cdf(mid) - p
        if f == 0.0:
            return mid
        if f < 0.0:
            lo = mid
        else:
            hi = mid


def cdf(dist: Scalar, x: float) -> float:
    return dist.cdf(x)


def quantile(dist: Scalar, p: float) -> float:
    return dist.quantile(p)


def bisect_quantile(dist: Scalar, p: float) -> float:
    """Quantile by bracketing bisection on the CDF alone.

    Slower than :meth:`Gaussian1D.quantile` but depends on nothing except the
    CDF, which makes it a useful cross-check.
    """
    _check_probability(p)
    if isinstance(dist, Uniform01):
        lo, hi = 0.0, 1.0
    elif isinstance(dist, Gamma1D):
        lo, hi = 0.0, dist.mean + QUANTILE_SPAN * dist.sd
    else:
        lo, hi = dist.mean - QUANTILE_SPAN * dist.sd, dist.mean + QUANTILE_SPAN * dist.sd
    return _bisect_cdf(dist.cdf, p, lo, hi)


def sample(dist: ConditionalDistribution, rng):
    return dist.sample(rng)


def ball_mass(block: IsotropicGaussianBlock, center, radius: float) -> float:
    """Mass of the Euclidean ball ``{z : |z - center| < radius}`` under ``block``.

    Standardizing by the common sd turns this into a noncentral chi-square
    CDF with ``dim`` degrees of freedom evaluated at ``(radius / sd)**2``.
    """
    if radius < 0.0:
        raise DomainError(f"radius must be nonnegative, got {radius}")
    center = np.ravel(np.asarray(center, dtype=float))
    if center.shape[0] != block.dim:
        raise DomainError(f"center has dimension {center.shape[0]}, block has {block.dim}")
    if radius == 0.0:
        return 0.0
    return _ball_mass_raw(np.asarray(block.mean), block.sd, center, radius)


@_special.jit
def _ball_mass_raw(mean, sd, center, radius):
    delta = 0.0
    for k in range(mean.shape[0]):
        z = (center[k] - mean[k]) / sd
        delta += z * z
    x = (radius / sd) ** 2
    return _special.ncx2_cdf(float(mean.shape[0]), delta, x)
