"""Efficiency estimators: jump distances, mean squared error, ratios and acceptance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

Estimate = Tuple[float, float]


@dataclass(frozen=True)
class ChainSummary:
    msjd: float
    beta_hat: float
    accept_count: int
    step_count: int

    def __post_init__(self):
        if self.msjd < 0.0:
            raise ValueError("msjd must be nonnegative")
        if not 0 <= self.accept_count <= self.step_count:
            raise ValueError("accept_count must lie in [0, step_count]")


@dataclass(frozen=True)
class ExperimentReport:
    """One row of a GS-versus-CMH comparison table.

    ``esjd_hat``/``mse_hat`` belong to the configured sampler, the ``*_gs``
    fields to the Gibbs baseline it is compared against.
    """

    config_id: str
    esjd_hat: float
    se_esjd: float
    mse_hat: float
    se_mse: float
    esjd_gs: float
    se_esjd_gs: float
    mse_gs: float
    se_mse_gs: float
    esjdr: float
    se_esjdr: float
    mser: float
    se_mser: float
    accept_rate: float
    beta_ref: float
    N: int
    n: int
    sampler: str = "gs"

    def as_row(self) -> dict:
        return asdict(self)


def _flatten(chain) -> np.ndarray:
    rows = []
    for x in chain:
        rows.append(x.flat() if hasattr(x, "flat") and callable(x.flat) else np.ravel(x))
    return np.asarray(rows, dtype=float)


def msjd(chain) -> float:
    """Mean squared Euclidean jump between consecutive states.

    ``chain`` is an ``(n, d)`` array or a sequence of states; states are
    flattened over all blocks.
    """
    path = np.asarray(chain, dtype=float) if isinstance(chain, np.ndarray) else _flatten(chain)
    if path.ndim == 1:
        path = path[:, None]
    n = path.shape[0]
    if n < 2:
        raise ValueError(f"need a chain of length at least 2, got {n}")
    diffs = np.diff(path, axis=0)
    return float(np.sum(diffs * diffs)) / (n - 1)


def beta_hat(values) -> float:
    """Monte Carlo average over every iterate, starting from the initial state."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("need at least one iterate")
    return float(values.mean())


def _mean_se(values) -> Estimate:
    values = np.asarray(values, dtype=float)
    N = values.size
    if N < 2:
        raise ValueError(f"need at least 2 replicates, got {N}")
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(N))


def esjd(summaries: Iterable) -> Estimate:
    """Mean of per-chain MSJD values and its standard error."""
    return _mean_se([s.msjd if isinstance(s, ChainSummary) else s for s in summaries])


def mse(beta_hats: Sequence[float], beta_ref: float) -> Estimate:
    """Mean squared deviation of replicate estimates from ``beta_ref``, with its SE."""
    dev = np.asarray(beta_hats, dtype=float) - beta_ref
    return _mean_se(dev * dev)


def ratio_with_se(num: Estimate, den: Estimate) -> Estimate:
    """Ratio of two independent estimates with a first-order delta-method SE."""
    n_est, n_se = num
    d_est, d_se = den
    if not d_est > 0.0:
        raise ValueError(f"denominator must be positive, got {d_est}")
    ratio = n_est / d_est
    if n_est == 0.0:
        return ratio, n_se / d_est
    return ratio, abs(ratio) * math.sqrt((n_se / n_est) ** 2 + (d_se / d_est) ** 2)


def acceptance_rate(records) -> float:
    records = list(records)
    if not records:
        raise ValueError("need at least one step record")
    return sum(1 for r in records if r.accepted) / len(records)
