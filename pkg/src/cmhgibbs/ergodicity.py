"""Sufficient conditions for geometric ergodicity of the CMH and the thresholds they imply.

All thresholds are boundaries of a *sufficient* condition built on one
particular Gibbs drift function; they are not ergodicity boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple

import numpy as np

from cmhgibbs import _special
from cmhgibbs.models import nn_conditional

ROOT_FTOL = 1e-12
ROOT_BRACKET_LO = 1e-12


@dataclass(frozen=True)
class DriftSpec:
    """Drift condition ``PV(x) <= gamma * V(x) + b`` for a registered ``V``."""

    gamma: float
    b: float
    V: Callable

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"drift rate must lie in (0, 1), got {self.gamma}")
        if not self.b < math.inf:
            raise ValueError("drift constant b must be finite")


def nn_drift_function(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0] ** 2 + 2.0 * x[..., 1] ** 2


def nn_drift_spec() -> DriftSpec:
    # holds with equality; V vanishes at the origin, and 1 + V would satisfy
    # the same condition with b = 1.25 if V >= 1 were needed
    return DriftSpec(0.75, 1.0, nn_drift_function)


@dataclass(frozen=True)
class Theorem1Inputs:
    gamma: float
    q_min: float
    q_max: float

    def __post_init__(self):
        if not 0.0 <= self.q_min <= self.q_max < 1.0:
            raise ValueError(
                f"need 0 <= q_min <= q_max < 1, got q_min={self.q_min}, q_max={self.q_max}"
            )


def theorem1_check(inputs: Theorem1Inputs = None, *, gamma=None, q_min=None, q_max=None) -> bool:
    """True iff ``q_max < 1/2`` and ``(1 - 2 q_max + q_min q_max) / (1 - q_min) > gamma``.

    Under these two strict inequalities a CMH whose neighborhood masses stay
    within ``[q_min, q_max]`` inherits geometric ergodicity from a Gibbs
    sampler with drift rate ``gamma``.
    """
    if inputs is None:
        inputs = Theorem1Inputs(gamma, q_min, q_max)
    g, lo, hi = inputs.gamma, inputs.q_min, inputs.q_max
    return hi < 0.5 and (1.0 - 2.0 * hi + lo * hi) / (1.0 - lo) > g


def _increasing_root(f: Callable[[float], float], target: float) -> float:
    """Root of ``f(x) = target`` for increasing ``f`` by bisection on ``[1e-12, hi]``."""
    lo = ROOT_BRACKET_LO
    hi = 1.0
    while f(hi) < target:
        lo = hi
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("could not bracket the root")
    if f(lo) > target:
        return lo
    while True:
        mid = 0.5 * (lo + hi)
        val = f(mid) - target
        if abs(val) <= ROOT_FTOL or mid in (lo, hi):
            return mid
        if val < 0.0:
            lo = mid
        else:
            hi = mid


def interval_mass_at_mean(c: float) -> float:
    """Gaussian mass of the mean +/- ``c`` sd, i.e. ``2 Phi(c) - 1``."""
    return _special.norm_cdf(c) - _special.norm_cdf(-c)


def mass_target(gamma: float) -> float:
    return (1.0 - gamma) / 2.0


def solve_cmh_c_threshold(gamma: float) -> float:
    """Largest ``c`` for which fixed-width ``+/- c`` sd neighborhoods pass the Theorem 1 check.

    Uses ``q_min = 0`` and ``q_max = 2 Phi(c) - 1``; with ``q_min = 0`` the
    check reduces to ``q_max < (1 - gamma) / 2``.
    """
    _check_gamma(gamma)
    return _increasing_root(interval_mass_at_mean, mass_target(gamma))


def solve_cmh_q_threshold(gamma: float) -> float:
    """Largest fixed neighborhood mass ``q`` passing the check with ``q_min = q_max = q``."""
    _check_gamma(gamma)
    return min(0.5, 1.0 - gamma)


def exp_cdf(x: float, rate: float) -> float:
    return -math.expm1(-rate * x)


def lambda_rectangle_bound(eps: float, alpha1: float, alpha2: float) -> float:
    """Over-bound of the precision-rectangle mass for half-width factor ``eps``."""
    return exp_cdf(2.0 * eps * math.sqrt(alpha1), alpha1) * exp_cdf(2.0 * eps * math.sqrt(alpha2), alpha2)


class REThresholds(NamedTuple):
    eps_theta: float
    eps_mu: float
    eps_lambda: float


def solve_re_thresholds(K: int, m: int, a1: float, a2: float, gamma: float) -> REThresholds:
    """Neighborhood-size thresholds for the random effects CMH.

    Each block's worst-case mass is bounded by an increasing function of its
    size parameter and set equal to ``(1 - gamma) / 2``: ``2 Phi(e) - 1`` for
    ``mu``, its ``K``-th power (a cube over-bounding the sphere) for
    ``theta``, and a product of exponential CDFs for the precisions.
    """
    _check_gamma(gamma)
    target = mass_target(gamma)
    alpha1 = K / 2.0 + a1
    alpha2 = K * m / 2.0 + a2
    eps_mu = _increasing_root(interval_mass_at_mean, target)
    eps_theta = _increasing_root(lambda e: interval_mass_at_mean(e) ** K, target)
    eps_lambda = _increasing_root(lambda e: lambda_rectangle_bound(e, alpha1, alpha2), target)
    return REThresholds(eps_theta, eps_mu, eps_lambda)


def re_block_bounds(eps: REThresholds, K: int, m: int, a1: float, a2: float) -> REThresholds:
    """The three worst-case mass bounds evaluated at the given sizes."""
    alpha1 = K / 2.0 + a1
    alpha2 = K * m / 2.0 + a2
    return REThresholds(
        interval_mass_at_mean(eps.eps_theta) ** K,
        interval_mass_at_mean(eps.eps_mu),
        lambda_rectangle_bound(eps.eps_lambda, alpha1, alpha2),
    )


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")


def nn_gibbs_drift_closed_form(x) -> float:
    x1, x2 = float(x[0]), float(x[1])
    return 0.5 * (3.0 * x2 * x2 + 1.0) + 0.5 * (1.5 * x1 * x1 + 1.0)


class DriftCheck(NamedTuple):
    state: tuple
    V: float
    expected: float
    estimate: float
    se: float
    z: float
    ok: bool


def verify_nn_drift(probe_states, mc_draws: int, rng, spec: DriftSpec = None, z_tol: float = 4.0) -> List[DriftCheck]:
    """Monte Carlo check of ``P_GS V = gamma V + b`` for the Normal-Normal Gibbs sampler.

    For each probe ``x``, averages ``V`` over ``mc_draws`` one-step Gibbs
    moves from ``x`` (block chosen with probability 1/2 each) and compares
    it with ``gamma * V(x) + b`` in units of the Monte Carlo standard error.
    """
    spec = spec or nn_drift_spec()
    out = []
    for x in probe_states:
        x = tuple(float(v) for v in x)
        blocks = rng.random(mc_draws) < 0.5
        z = rng.standard_normal(mc_draws)
        c0 = nn_conditional(0, x)
        c1 = nn_conditional(1, x)
        moved = np.empty((mc_draws, 2))
        moved[:, 0] = np.where(blocks, c0.mean + c0.sd * z, x[0])
        moved[:, 1] = np.where(blocks, x[1], c1.mean + c1.sd * z)
        v = spec.V(moved)
        est = float(v.mean())
        se = float(v.std(ddof=1) / math.sqrt(mc_draws))
        v0 = float(spec.V(np.array(x)))
        expected = spec.gamma * v0 + spec.b
        zscore = (est - expected) / se if se > 0.0 else (0.0 if est == expected else math.inf)
        out.append(DriftCheck(x, v0, expected, est, se, zscore, abs(zscore) <= z_tol))
    return out
