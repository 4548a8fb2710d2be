"""Random-scan Gibbs and conditional Metropolis-Hastings (CMH) transition kernels.

These are the reference, step-at-a-time kernels. They are written for clarity
and are what the compiled loops in :mod:`cmhgibbs.engine` are checked against.

Every step consumes the random stream in the same order: one uniform to pick
the block (skipped when the block is forced), the conditional draws for the
proposal (repeated until a draw lands outside the neighborhood), then one
uniform for the accept/reject decision. The Gibbs step draws and discards
that last uniform too, so a CMH chain with empty neighborhoods reproduces the
Gibbs chain draw for draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from cmhgibbs import _special
from cmhgibbs.distributions import DomainError
from cmhgibbs.neighborhoods import (
    EMPTY,
    NeighborhoodSpec,
    RealizedNeighborhood,
    _per_block,
    realize,
)

DEFAULT_MAX_ATTEMPTS = 1_000_000


class StuckProposalError(RuntimeError):
    """Accept-reject for a restricted proposal exceeded its attempt budget."""

    def __init__(self, neighborhood: RealizedNeighborhood, attempts: int):
        self.neighborhood = neighborhood
        self.attempts = attempts
        super().__init__(
            f"no proposal outside the block {neighborhood.block_index} neighborhood "
            f"centered at {neighborhood.center.tolist()} after {attempts} attempts "
            f"(neighborhood mass {neighborhood.mass:.12g})"
        )


@dataclass(frozen=True)
class StateVector:
    """Ordered blocks of real coordinates, one block per Gibbs component."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(np.array(np.ravel(b), dtype=float) for b in self.blocks)
        for b in blocks:
            if not np.all(np.isfinite(b)):
                raise DomainError(f"state coordinates must be finite, got {b}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def of(cls, *blocks) -> "StateVector":
        return cls(tuple(blocks))

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def dims(self) -> tuple:
        return tuple(b.size for b in self.blocks)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    def replace(self, i: int, value) -> "StateVector":
        blocks = list(self.blocks)
        new = np.array(np.ravel(value), dtype=float)
        if new.shape != blocks[i].shape:
            raise DomainError(f"block {i} has shape {blocks[i].shape}, got {new.shape}")
        blocks[i] = new
        return StateVector(tuple(blocks))

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateVector) or len(other) != len(self):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks))

    __hash__ = None


@dataclass(frozen=True)
class ScanProbabilities:
    p: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        object.__setattr__(self, "p", p)
        if len(p) == 1:
            if p[0] != 1.0:
                raise DomainError("a single block must be selected with probability 1")
        elif not all(0.0 < x < 1.0 for x in p):
            raise DomainError(f"scan probabilities must lie in (0, 1), got {p}")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise DomainError(f"scan probabilities must sum to 1, got {math.fsum(p)}")

    @classmethod
    def uniform(cls, m: int) -> "ScanProbabilities":
        return cls((1.0 / m,) * m)

    def cumulative(self) -> np.ndarray:
        cum = np.cumsum(self.p)
        cum[-1] = 1.0
        return cum


@dataclass(frozen=True)
class KernelStepRecord:
    selected_block: int
    proposal: Optional[np.ndarray]
    accepted: bool
    alpha: float
    proposal_attempts: int


def select_block(p: ScanProbabilities, rng) -> int:
    """Pick a block index with probability ``p_i`` by inverting the cumulative ``p``."""
    u = rng.random()
    cum = p.cumulative()
    for i, c in enumerate(cum):
        if u < c:
            return i
    return len(cum) - 1


def acceptance_probability(mass_at_current: float, mass_at_proposal: float) -> float:
    """``min(1, (1 - mass_at_current) / (1 - mass_at_proposal))``."""
    for m in (mass_at_current, mass_at_proposal):
        if not 0.0 <= m < 1.0:
            raise DomainError(f"neighborhood mass must lie in [0, 1), got {m}")
    return _special.acceptance_ratio(mass_at_current, mass_at_proposal)


def restricted_proposal(
    conditional, neighborhood: RealizedNeighborhood, rng, max_attempts: int = DEFAULT_MAX_ATTEMPTS
):
    """Draw from ``conditional`` restricted to the complement of ``neighborhood``.

    Plain accept-reject: draw until the value falls outside the region.
    Returns ``(proposal, attempts)``.
    """
    for attempts in range(1, max_attempts + 1):
        z = conditional.sample(rng)
        if not neighborhood.contains(z):
            return np.ravel(np.asarray(z, dtype=float)), attempts
    raise StuckProposalError(neighborhood, max_attempts)


def gibbs_step(state: StateVector, model, p: Optional[ScanProbabilities] = None, rng=None, block: Optional[int] = None):
    """One random-scan Gibbs update; returns ``(new_state, record)``."""
    p = model.scan if p is None else p
    i = select_block(p, rng) if block is None else block
    draw = model.conditional(i, state).sample(rng)
    rng.random()  # keeps the stream aligned with cmh_step
    draw = np.ravel(np.asarray(draw, dtype=float))
    return state.replace(i, draw), KernelStepRecord(i, draw, True, 1.0, 1)


def cmh_step(
    state: StateVector,
    model,
    p: Optional[ScanProbabilities] = None,
    specs=None,
    rng=None,
    block: Optional[int] = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
):
    """One CMH update; returns ``(new_state, record)``.

    The proposal comes from the selected block's full conditional restricted
    outside the neighborhood of the current value, and is accepted with the
    ratio of complement masses at the current and proposed values. The
    neighborhood shape depends only on the other blocks, so the mass at the
    proposal is the same spec realized around the proposed value.
    """
    p = model.scan if p is None else p
    specs = _per_block(specs if specs is not None else NeighborhoodSpec.empty(), model.n_blocks)
    i = select_block(p, rng) if block is None else block
    spec = specs[i]
    cond = model.conditional(i, state)
    here = realize(spec, cond, state.blocks[i], i)
    proposal, attempts = restricted_proposal(cond, here, rng, max_attempts)
    if spec.kind == EMPTY:
        alpha = 1.0
    else:
        there = realize(spec, cond, proposal, i)
        alpha = acceptance_probability(here.mass, there.mass)
    u = rng.random()
    accepted = u < alpha
    new_state = state.replace(i, proposal) if accepted else state
    return new_state, KernelStepRecord(i, proposal, bool(accepted), alpha, attempts)


def run_chain(model, n: int, rng, specs=None, initial: Optional[StateVector] = None, max_attempts: int = DEFAULT_MAX_ATTEMPTS):
    """Run ``n - 1`` steps from the initial state.

    ``specs=None`` runs the Gibbs sampler. Returns the ``(n, d)`` path of
    flattened states (initial state first) and the list of step records.
    """
    state = model.initial_state() if initial is None else initial
    path = np.empty((n, sum(state.dims)))
    path[0] = state.flat()
    records = []
    for j in range(1, n):
        if specs is None:
            state, rec = gibbs_step(state, model, model.scan, rng)
        else:
            state, rec = cmh_step(state, model, model.scan, specs, rng, max_attempts=max_attempts)
        path[j] = state.flat()
        records.append(rec)
    return path, records


def gs_move_mass(conditional, lo: float, hi: float) -> float:
    """Probability that a Gibbs update of a scalar block lands in ``(lo, hi)``."""
    return conditional.interval_mass(lo, hi)


def cmh_move_mass(spec: NeighborhoodSpec, conditional, current: float, lo: float, hi: float) -> float:
    """Probability that a CMH update of a scalar block moves into ``(lo, hi)``.

    Integrates ``q(z) * alpha(z)`` over ``(lo, hi)`` minus the current
    neighborhood, which equals the conditional density times
    ``min(1 / (1 - m(current)), 1 / (1 - m(z)))``.
    """
    here = realize(spec, conditional, current)
    inv_here = 1.0 / (1.0 - here.mass)

    def integrand(z):
        there = realize(spec, conditional, z).mass
        return float(conditional.pdf(z)) * min(inv_here, 1.0 / (1.0 - there))

    pieces = [(lo, hi)]
    if spec.kind != EMPTY:
        b_lo, b_hi = here.lows[0], here.highs[0]
        pieces = [(lo, min(hi, b_lo)), (max(lo, b_hi), hi)]
    total = 0.0
    for a, b in pieces:
        if b > a:
            val, _ = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
            total += val
    return total
