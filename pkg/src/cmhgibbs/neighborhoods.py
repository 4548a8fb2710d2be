"""Neighborhoods excluded from CMH proposals and their exact conditional masses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from cmhgibbs import _special
from cmhgibbs.distributions import (
    DomainError,
    Gamma1D,
    GammaPair,
    Gaussian1D,
    IsotropicGaussianBlock,
    Uniform01,
    ball_mass,
)

EMPTY = "empty"
INTERVAL = "interval"
FIXED_DENSITY = "fixed_density"
BALL = "ball"
RECTANGLE = "rectangle"
KINDS = (EMPTY, INTERVAL, FIXED_DENSITY, BALL, RECTANGLE)

ABSOLUTE = "absolute"
SD_UNITS = "sd"
SCALINGS = (ABSOLUTE, SD_UNITS)

ADMISSIBILITY_MARGIN = 1e-9


class ConfigurationError(ValueError):
    """A neighborhood spec does not fit the block it is applied to."""


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Shape of the region ``B_i`` around the current block value.

    ``size`` is a half-width (interval), a radius (ball), a pair of
    half-widths (rectangle) or a target mass ``q`` (fixed density). With
    ``scaling="sd"`` lengths are multiplied by the conditional standard
    deviation; for gamma coordinates that is ``sqrt(shape) / rate``.
    """

    kind: str = EMPTY
    size: object = 0.0
    scaling: str = ABSOLUTE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown neighborhood kind {self.kind!r}")
        if self.scaling not in SCALINGS:
            raise ConfigurationError(f"unknown scaling {self.scaling!r}")
        if self.kind == RECTANGLE:
            size = tuple(float(s) for s in np.ravel(self.size))
            if len(size) == 1:
                size = size * 2
            if len(size) != 2:
                raise ConfigurationError("rectangle needs two half-widths")
            object.__setattr__(self, "size", size)
            if min(size) < 0.0:
                raise ConfigurationError("rectangle half-widths must be nonnegative")
        else:
            object.__setattr__(self, "size", float(self.size))
            if self.kind == FIXED_DENSITY and not 0.0 < self.size < 1.0:
                raise ConfigurationError(f"fixed-density q must lie in (0, 1), got {self.size}")
            if self.size < 0.0:
                raise ConfigurationError(f"neighborhood size must be nonnegative, got {self.size}")

    @classmethod
    def empty(cls) -> "NeighborhoodSpec":
        return cls()

    @classmethod
    def interval(cls, halfwidth: float, scaling: str = ABSOLUTE) -> "NeighborhoodSpec":
        return cls(INTERVAL, halfwidth, scaling)

    @classmethod
    def fixed_density(cls, q: float) -> "NeighborhoodSpec":
        return cls(FIXED_DENSITY, q)

    @classmethod
    def ball(cls, radius: float, scaling: str = ABSOLUTE) -> "NeighborhoodSpec":
        return cls(BALL, radius, scaling)

    @classmethod
    def rectangle(cls, halfwidths, scaling: str = ABSOLUTE) -> "NeighborhoodSpec":
        return cls(RECTANGLE, halfwidths, scaling)

    @property
    def is_empty(self) -> bool:
        return self.kind == EMPTY


@dataclass(frozen=True)
class RealizedNeighborhood:
    """A neighborhood placed at a concrete block value.

    The region is the open box ``lows < z < highs`` for interval and
    rectangle kinds and the open ball ``|z - center| < radius`` for balls.
    """

    block_index: int
    kind: str
    center: np.ndarray
    mass: float
    lows: np.ndarray = field(default=None)
    highs: np.ndarray = field(default=None)
    radius: float = 0.0

    def contains(self, z) -> bool:
        if self.kind == EMPTY:
            return False
        z = np.ravel(np.asarray(z, dtype=float))
        if self.kind == BALL:
            d2 = 0.0
            for zk, ck in zip(z, self.center):
                d2 += (zk - ck) * (zk - ck)
            return d2 < self.radius * self.radius
        return bool(np.all((z > self.lows) & (z < self.highs)))


def _scale(spec: NeighborhoodSpec, sd: float) -> float:
    return spec.size * sd if spec.scaling == SD_UNITS else spec.size


def realize(spec: NeighborhoodSpec, conditional, current_block, block_index: int = 0) -> RealizedNeighborhood:
    """Place ``spec`` around ``current_block`` and compute its exact conditional mass."""
    center = np.ravel(np.asarray(current_block, dtype=float))
    kind = spec.kind
    if kind == EMPTY:
        return RealizedNeighborhood(block_index, EMPTY, center, 0.0)

    if kind in (INTERVAL, FIXED_DENSITY):
        if not isinstance(conditional, (Gaussian1D, Gamma1D, Uniform01)) or center.size != 1:
            raise ConfigurationError(f"{kind} neighborhoods need a scalar block, got {conditional!r}")
        x = center[0]
        if kind == FIXED_DENSITY:
            if not isinstance(conditional, Gaussian1D):
                raise ConfigurationError("fixed-density neighborhoods need a Gaussian conditional")
            d = _special.fixed_density_halfwidth(conditional.mean, conditional.sd, x, spec.size)
            # mass is q by construction; the half-width solves it to ~1e-13
            mass = spec.size
        else:
            d = _scale(spec, conditional.sd)
            lo = x - d
            if isinstance(conditional, Gamma1D):
                lo = max(0.0, lo)
            mass = conditional.interval_mass(lo, x + d)
            return RealizedNeighborhood(
                block_index, kind, center, mass, np.array([lo]), np.array([x + d])
            )
        return RealizedNeighborhood(
            block_index, kind, center, mass, np.array([x - d]), np.array([x + d])
        )

    if kind == BALL:
        if not isinstance(conditional, IsotropicGaussianBlock):
            raise ConfigurationError("ball neighborhoods need an isotropic Gaussian block")
        if center.size != conditional.dim:
            raise ConfigurationError("ball center does not match block dimension")
        r = _scale(spec, conditional.sd)
        return RealizedNeighborhood(
            block_index, BALL, center, ball_mass(conditional, center, r), radius=r
        )

    if kind == RECTANGLE:
        if not isinstance(conditional, GammaPair) or center.size != 2:
            raise ConfigurationError("rectangle neighborhoods need a pair of gamma coordinates")
        lows = np.empty(2)
        highs = np.empty(2)
        mass = 1.0
        for k, marg in enumerate(conditional.marginals):
            w = spec.size[k] * marg.sd if spec.scaling == SD_UNITS else spec.size[k]
            lows[k] = max(0.0, center[k] - w)
            highs[k] = center[k] + w
            mass *= marg.interval_mass(lows[k], highs[k])
        return RealizedNeighborhood(block_index, RECTANGLE, center, mass, lows, highs)

    raise ConfigurationError(f"unsupported neighborhood kind {kind!r}")


def fixed_density_halfwidth(conditional: Gaussian1D, center: float, q: float) -> float:
    """Half-width ``d`` such that ``[center - d, center + d]`` has conditional mass ``q``."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    return _special.fixed_density_halfwidth(conditional.mean, conditional.sd, float(center), q)


class Admissibility(NamedTuple):
    q_min: float
    q_max: float
    violated: bool


def check_admissibility(specs, model, probe_states) -> Admissibility:
    """Audit neighborhood masses over a set of probe states.

    ``specs`` is one spec per block or a single spec for all blocks. Returns
    the smallest and largest realized mass seen, flagging any mass within
    ``ADMISSIBILITY_MARGIN`` of one.
    """
    probe_states = list(probe_states)
    if not probe_states:
        raise ValueError("need at least one probe state")
    specs = _per_block(specs, model.n_blocks)
    q_min, q_max = math.inf, -math.inf
    for state in probe_states:
        for i, spec in enumerate(specs):
            cond = model.conditional(i, state)
            mass = realize(spec, cond, state.blocks[i], i).mass
            q_min = min(q_min, mass)
            q_max = max(q_max, mass)
    return Admissibility(q_min, q_max, q_max >= 1.0 - ADMISSIBILITY_MARGIN)


def _per_block(specs, n_blocks: int) -> Sequence[NeighborhoodSpec]:
    if isinstance(specs, NeighborhoodSpec):
        return [specs] * n_blocks
    specs = list(specs)
    if len(specs) != n_blocks:
        raise ConfigurationError(f"expected {n_blocks} neighborhood specs, got {len(specs)}")
    return specs
