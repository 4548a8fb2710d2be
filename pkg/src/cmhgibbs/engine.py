"""Compiled chain loops for the three built-in models.

The loops replay :func:`cmhgibbs.sampler.gibbs_step` / :func:`cmhgibbs.sampler.cmh_step`
operation for operation, using the same compiled special functions and the
same stream order, so a chain run here is bit-identical to the reference
kernels under a shared seed (the test suite checks this). They only exist
because replicated experiments need tens of millions of steps.

Gibbs runs go through the same loops with every neighborhood empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from cmhgibbs import _special
from cmhgibbs._special import jit
from cmhgibbs.distributions import _ball_mass_raw
from cmhgibbs.models import NormalNormalModel, RandomEffectsModel, UnitSquareModel
from cmhgibbs.neighborhoods import (
    BALL,
    EMPTY,
    FIXED_DENSITY,
    INTERVAL,
    RECTANGLE,
    SD_UNITS,
    ConfigurationError,
    NeighborhoodSpec,
    _per_block,
)
from cmhgibbs.sampler import DEFAULT_MAX_ATTEMPTS, StuckProposalError

K_EMPTY, K_INTERVAL, K_FIXED, K_BALL, K_RECT = 0, 1, 2, 3, 4
_KIND_CODE = {EMPTY: K_EMPTY, INTERVAL: K_INTERVAL, FIXED_DENSITY: K_FIXED, BALL: K_BALL, RECTANGLE: K_RECT}

# stats layout
S_JUMP, S_FSUM, S_ACCEPT, S_MIN_ALPHA, S_ATTEMPTS = 0, 1, 2, 3, 4
# stuck layout: [block, mass, attempts]


@dataclass
class ChainResult:
    """Summary of one chain of ``n`` states (``n - 1`` transitions)."""

    n: int
    msjd: float
    beta_hat: float
    accept_count: int
    step_count: int
    min_alpha: float
    attempts: int
    block_steps: np.ndarray
    block_accepts: np.ndarray
    path: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def accept_rate(self) -> float:
        return self.accept_count / self.step_count if self.step_count else 1.0


def _encode(specs, n_blocks):
    specs = _per_block(specs if specs is not None else NeighborhoodSpec.empty(), n_blocks)
    kinds = np.zeros(n_blocks, dtype=np.int64)
    sizes = np.zeros((n_blocks, 2))
    sd_units = np.zeros(n_blocks, dtype=np.bool_)
    for i, s in enumerate(specs):
        kinds[i] = _KIND_CODE[s.kind]
        sizes[i, :] = s.size if s.kind == RECTANGLE else (s.size, s.size)
        sd_units[i] = s.scaling == SD_UNITS
    return specs, kinds, sizes, sd_units


@jit
def _pair_chain(rng, uniform_model, kinds, sizes, sd_units, x0, n, coord, max_attempts,
                path, block_steps, block_accepts, stats, stuck):
    x = x0.copy()
    record = path.shape[0] > 0
    if record:
        path[0, 0] = x[0]
        path[0, 1] = x[1]
    fsum = x[coord]
    jump = 0.0
    accepts = 0
    attempts_total = 0
    min_alpha = 1.0
    for j in range(1, n):
        i = 0 if rng.random() < 0.5 else 1
        if uniform_model:
            mean = 0.5
            sd = math.sqrt(1.0 / 12.0)
        elif i == 0:
            mean = x[1]
            sd = 1.0
        else:
            mean = 0.5 * x[0]
            sd = math.sqrt(0.5)
        xi = x[i]
        kind = kinds[i]
        lo = 0.0
        hi = 0.0
        h = 0.0
        mass_here = 0.0
        if kind == K_INTERVAL:
            h = sizes[i, 0] * sd if sd_units[i] else sizes[i, 0]
            lo = xi - h
            hi = xi + h
            if uniform_model:
                mass_here = _special.unit_interval_mass(lo, hi)
            else:
                mass_here = _special.gauss_interval_mass(mean, sd, lo, hi)
        elif kind == K_FIXED:
            h = _special.fixed_density_halfwidth(mean, sd, xi, sizes[i, 0])
            lo = xi - h
            hi = xi + h
            mass_here = sizes[i, 0]
        attempts = 0
        z = 0.0
        while True:
            attempts += 1
            if attempts > max_attempts:
                stuck[0] = i
                stuck[1] = mass_here
                stuck[2] = attempts - 1
                return 1
            if uniform_model:
                z = rng.random()
            else:
                z = mean + sd * _special.norm_ppf(rng.random())
            if kind == K_EMPTY or not (z > lo and z < hi):
                break
        attempts_total += attempts
        alpha = 1.0
        if kind == K_INTERVAL:
            if uniform_model:
                mass_there = _special.unit_interval_mass(z - h, z + h)
            else:
                mass_there = _special.gauss_interval_mass(mean, sd, z - h, z + h)
            alpha = _special.acceptance_ratio(mass_here, mass_there)
        elif kind == K_FIXED:
            alpha = _special.acceptance_ratio(mass_here, sizes[i, 0])
        if alpha < min_alpha:
            min_alpha = alpha
        block_steps[i] += 1
        if rng.random() < alpha:
            d = z - xi
            jump += d * d
            x[i] = z
            accepts += 1
            block_accepts[i] += 1
        fsum += x[coord]
        if record:
            path[j, 0] = x[0]
            path[j, 1] = x[1]
    stats[S_JUMP] = jump
    stats[S_FSUM] = fsum
    stats[S_ACCEPT] = accepts
    stats[S_MIN_ALPHA] = min_alpha
    stats[S_ATTEMPTS] = attempts_total
    return 0


@jit
def _re_chain(rng, ybar, sse, m, m0, s0, a1, b1, a2, b2, kinds, sizes, sd_units,
              theta0, mu0, lt0, le0, n, coord, max_attempts,
              path, block_steps, block_accepts, stats, stuck):
    K = ybar.shape[0]
    alpha1 = K / 2.0 + a1
    alpha2 = K * m / 2.0 + a2
    third = 1.0 / 3.0
    cum0 = third
    cum1 = third + third
    theta = theta0.copy()
    mu = mu0
    lt = lt0
    le = le0
    cur = np.empty(K + 3)
    new = np.empty(K)
    tmean = np.empty(K)
    record = path.shape[0] > 0

    for k in range(K):
        cur[k] = theta[k]
    cur[K] = mu
    cur[K + 1] = lt
    cur[K + 2] = le
    if record:
        path[0, :] = cur
    fsum = cur[coord]
    jump = 0.0
    accepts = 0
    attempts_total = 0
    min_alpha = 1.0

    for j in range(1, n):
        u = rng.random()
        if u < cum0:
            i = 0
        elif u < cum1:
            i = 1
        else:
            i = 2
        kind = kinds[i]
        alpha = 1.0
        attempts = 0
        accepted = False
        if i == 0:
            prec = lt + m * le
            sd = 1.0 / math.sqrt(prec)
            for k in range(K):
                tmean[k] = (lt * mu + m * le * ybar[k]) / prec
            r = 0.0
            mass_here = 0.0
            if kind == K_BALL:
                r = sizes[0, 0] * sd if sd_units[0] else sizes[0, 0]
                if r > 0.0:
                    mass_here = _ball_mass_raw(tmean, sd, theta, r)
            while True:
                attempts += 1
                if attempts > max_attempts:
                    stuck[0] = 0
                    stuck[1] = mass_here
                    stuck[2] = attempts - 1
                    return 1
                for k in range(K):
                    new[k] = tmean[k] + sd * _special.norm_ppf(rng.random())
                if kind == K_EMPTY:
                    break
                d2 = 0.0
                for k in range(K):
                    d2 += (new[k] - theta[k]) * (new[k] - theta[k])
                if not d2 < r * r:
                    break
            if kind == K_BALL:
                mass_there = _ball_mass_raw(tmean, sd, new, r) if r > 0.0 else 0.0
                alpha = _special.acceptance_ratio(mass_here, mass_there)
            if rng.random() < alpha:
                accepted = True
                for k in range(K):
                    d = new[k] - theta[k]
                    jump += d * d
                    theta[k] = new[k]
                    cur[k] = new[k]
        elif i == 1:
            prec = s0 + K * lt
            tbar = 0.0
            for k in range(K):
                tbar += theta[k]
            tbar = tbar / K
            mean = (s0 * m0 + K * lt * tbar) / prec
            sd = 1.0 / math.sqrt(prec)
            lo = 0.0
            hi = 0.0
            h = 0.0
            mass_here = 0.0
            if kind == K_INTERVAL:
                h = sizes[1, 0] * sd if sd_units[1] else sizes[1, 0]
                lo = mu - h
                hi = mu + h
                mass_here = _special.gauss_interval_mass(mean, sd, lo, hi)
            elif kind == K_FIXED:
                h = _special.fixed_density_halfwidth(mean, sd, mu, sizes[1, 0])
                lo = mu - h
                hi = mu + h
                mass_here = sizes[1, 0]
            z = 0.0
            while True:
                attempts += 1
                if attempts > max_attempts:
                    stuck[0] = 1
                    stuck[1] = mass_here
                    stuck[2] = attempts - 1
                    return 1
                z = mean + sd * _special.norm_ppf(rng.random())
                if kind == K_EMPTY or not (z > lo and z < hi):
                    break
            if kind == K_INTERVAL:
                alpha = _special.acceptance_ratio(
                    mass_here, _special.gauss_interval_mass(mean, sd, z - h, z + h))
            elif kind == K_FIXED:
                alpha = _special.acceptance_ratio(mass_here, sizes[1, 0])
            if rng.random() < alpha:
                accepted = True
                d = z - mu
                jump += d * d
                mu = z
                cur[K] = z
        else:
            ss1 = 0.0
            ss2 = 0.0
            for k in range(K):
                ss1 += (theta[k] - mu) * (theta[k] - mu)
            for k in range(K):
                ss2 += (theta[k] - ybar[k]) * (theta[k] - ybar[k])
            beta1 = ss1 / 2.0 + b1
            beta2 = (m * ss2 + sse) / 2.0 + b2
            lo1 = 0.0
            hi1 = 0.0
            lo2 = 0.0
            hi2 = 0.0
            w1 = 0.0
            w2 = 0.0
            mass_here = 0.0
            if kind == K_RECT:
                w1 = sizes[2, 0] * (math.sqrt(alpha1) / beta1) if sd_units[2] else sizes[2, 0]
                w2 = sizes[2, 1] * (math.sqrt(alpha2) / beta2) if sd_units[2] else sizes[2, 1]
                lo1 = max(0.0, lt - w1)
                hi1 = lt + w1
                lo2 = max(0.0, le - w2)
                hi2 = le + w2
                mass_here = 1.0
                mass_here *= _special.gamma_interval_mass(alpha1, beta1, lo1, hi1)
                mass_here *= _special.gamma_interval_mass(alpha2, beta2, lo2, hi2)
            z1 = 0.0
            z2 = 0.0
            while True:
                attempts += 1
                if attempts > max_attempts:
                    stuck[0] = 2
                    stuck[1] = mass_here
                    stuck[2] = attempts - 1
                    return 1
                z1 = rng.standard_gamma(alpha1) / beta1
                z2 = rng.standard_gamma(alpha2) / beta2
                if kind == K_EMPTY:
                    break
                if not (z1 > lo1 and z1 < hi1 and z2 > lo2 and z2 < hi2):
                    break
            if kind == K_RECT:
                mass_there = 1.0
                mass_there *= _special.gamma_interval_mass(alpha1, beta1, max(0.0, z1 - w1), z1 + w1)
                mass_there *= _special.gamma_interval_mass(alpha2, beta2, max(0.0, z2 - w2), z2 + w2)
                alpha = _special.acceptance_ratio(mass_here, mass_there)
            if rng.random() < alpha:
                accepted = True
                d1 = z1 - lt
                d2 = z2 - le
                jump += d1 * d1 + d2 * d2
                lt = z1
                le = z2
                cur[K + 1] = z1
                cur[K + 2] = z2
        attempts_total += attempts
        if alpha < min_alpha:
            min_alpha = alpha
        block_steps[i] += 1
        if accepted:
            accepts += 1
            block_accepts[i] += 1
        fsum += cur[coord]
        if record:
            path[j, :] = cur
    stats[S_JUMP] = jump
    stats[S_FSUM] = fsum
    stats[S_ACCEPT] = accepts
    stats[S_MIN_ALPHA] = min_alpha
    stats[S_ATTEMPTS] = attempts_total
    return 0


def _check_kinds(model, specs):
    allowed = {
        "pair": [{EMPTY, INTERVAL, FIXED_DENSITY}] * 2,
        "re": [{EMPTY, BALL}, {EMPTY, INTERVAL, FIXED_DENSITY}, {EMPTY, RECTANGLE}],
    }["re" if isinstance(model, RandomEffectsModel) else "pair"]
    for i, (s, ok) in enumerate(zip(specs, allowed)):
        if s.kind not in ok:
            raise ConfigurationError(f"{s.kind} neighborhood is not supported on {model.name} block {i}")
        if isinstance(model, UnitSquareModel) and s.kind == FIXED_DENSITY:
            raise ConfigurationError("fixed-density neighborhoods need Gaussian conditionals")


def run_chain(model, n: int, rng, specs=None, coord: int = 0, record_path: bool = False,
              max_attempts: int = DEFAULT_MAX_ATTEMPTS, initial=None) -> ChainResult:
    """Run one chain of ``n`` states from the model's initial state.

    ``specs=None`` (or all-empty specs) is the Gibbs sampler. ``coord``
    selects the coordinate of the flattened state averaged into ``beta_hat``.
    """
    if n < 1:
        raise ValueError("chain length must be at least 1")
    start = model.initial_state() if initial is None else initial
    d = sum(start.dims)
    if not 0 <= coord < d:
        raise ValueError(f"functional coordinate {coord} outside state of dimension {d}")
    specs, kinds, sizes, sd_units = _encode(specs, model.n_blocks)
    _check_kinds(model, specs)
    path = np.empty((n if record_path else 0, d))
    block_steps = np.zeros(model.n_blocks, dtype=np.int64)
    block_accepts = np.zeros(model.n_blocks, dtype=np.int64)
    stats = np.zeros(5)
    stuck = np.zeros(3)
    if isinstance(model, RandomEffectsModel):
        theta, mu, lam = start.blocks
        status = _re_chain(
            rng, np.ascontiguousarray(model.ybar, dtype=float), model.sse, float(model.m),
            model.m0, model.s0, model.a1, model.b1, model.a2, model.b2,
            kinds, sizes, sd_units, theta.copy(), float(mu[0]), float(lam[0]), float(lam[1]),
            n, coord, max_attempts, path, block_steps, block_accepts, stats, stuck,
        )
    elif isinstance(model, (NormalNormalModel, UnitSquareModel)):
        status = _pair_chain(
            rng, isinstance(model, UnitSquareModel), kinds, sizes, sd_units, start.flat(),
            n, coord, max_attempts, path, block_steps, block_accepts, stats, stuck,
        )
    else:
        raise TypeError(f"no compiled engine for {type(model).__name__}")
    if status != 0:
        from cmhgibbs.neighborhoods import RealizedNeighborhood

        nb = RealizedNeighborhood(int(stuck[0]), specs[int(stuck[0])].kind, np.full(1, np.nan), float(stuck[1]))
        raise StuckProposalError(nb, int(stuck[2]))
    steps = n - 1
    return ChainResult(
        n=n,
        msjd=stats[S_JUMP] / steps if steps > 0 else math.nan,
        beta_hat=stats[S_FSUM] / n,
        accept_count=int(stats[S_ACCEPT]),
        step_count=steps,
        min_alpha=float(stats[S_MIN_ALPHA]),
        attempts=int(stats[S_ATTEMPTS]),
        block_steps=block_steps,
        block_accepts=block_accepts,
        path=path if record_path else None,
    )
