"""Target models: the bivariate Normal toy, the unit square, and Bayesian random effects."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from cmhgibbs.distributions import (
    DomainError,
    Gamma1D,
    GammaPair,
    Gaussian1D,
    IsotropicGaussianBlock,
    Uniform01,
)
from cmhgibbs.sampler import ScanProbabilities, StateVector

NN_SD2 = math.sqrt(0.5)


class NormalNormalModel:
    """Bivariate normal with mean 0 and covariance ``[[2, 1], [1, 1]]``.

    ``X1 | X2 ~ N(X2, 1)`` and ``X2 | X1 ~ N(X1 / 2, 1/2)``; both chains start
    at the origin.
    """

    name = "normal-normal"
    n_blocks = 2
    scan = ScanProbabilities((0.5, 0.5))
    mean = np.zeros(2)
    cov = np.array([[2.0, 1.0], [1.0, 1.0]])

    def initial_state(self) -> StateVector:
        return StateVector.of(0.0, 0.0)

    def conditional(self, block_index: int, state: StateVector) -> Gaussian1D:
        return nn_conditional(block_index, state)

    def drift_function(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return x[..., 0] ** 2 + 2.0 * x[..., 1] ** 2


def nn_conditional(block_index: int, state) -> Gaussian1D:
    x1, x2 = _pair(state)
    if block_index == 0:
        return Gaussian1D(x2, 1.0)
    if block_index == 1:
        return Gaussian1D(0.5 * x1, NN_SD2)
    raise IndexError(f"Normal-Normal model has blocks 0 and 1, got {block_index}")


def _pair(state):
    if isinstance(state, StateVector):
        return float(state.blocks[0][0]), float(state.blocks[1][0])
    x1, x2 = state
    return float(x1), float(x2)


class UnitSquareModel:
    """Uniform distribution on ``[0, 1]^2``; both conditionals are Uniform(0, 1)."""

    name = "unit-square"
    n_blocks = 2
    scan = ScanProbabilities((0.5, 0.5))

    def __init__(self, start=(0.5, 0.5)):
        self.start = tuple(float(s) for s in start)

    def initial_state(self) -> StateVector:
        return StateVector.of(*self.start)

    def conditional(self, block_index: int, state) -> Uniform01:
        if block_index not in (0, 1):
            raise IndexError(f"unit-square model has blocks 0 and 1, got {block_index}")
        return Uniform01()


@dataclass(frozen=True)
class REData:
    """Balanced one-way data ``y[i, j]`` for subject ``i`` and replicate ``j``."""

    y: np.ndarray
    seed: Optional[int] = None
    generating: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.y.shape[1]

    @property
    def ybar(self) -> np.ndarray:
        return self.y.mean(axis=1)

    @property
    def sse(self) -> float:
        return float(((self.y - self.ybar[:, None]) ** 2).sum())

    @property
    def yybar(self) -> float:
        return float(self.ybar.mean())

    def write(self, directory) -> tuple:
        """Write ``dataset.csv`` and ``dataset.meta`` into ``directory``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / "dataset.csv"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["subject", "replicate", "y"])
            for i in range(self.K):
                for j in range(self.m):
                    w.writerow([i + 1, j + 1, repr(float(self.y[i, j]))])
        meta_path = directory / "dataset.meta"
        meta = {"K": self.K, "m": self.m, "seed": self.seed, "generating": self.generating}
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return csv_path, meta_path

    @classmethod
    def read(cls, csv_path) -> "REData":
        csv_path = Path(csv_path)
        rows = []
        with open(csv_path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append((int(row["subject"]), int(row["replicate"]), float(row["y"])))
        if not rows:
            raise ValueError(f"{csv_path} holds no observations")
        K = max(r[0] for r in rows)
        m = max(r[1] for r in rows)
        if len(rows) != K * m:
            raise ValueError(f"{csv_path} is not a balanced K x m design")
        y = np.full((K, m), np.nan)
        for i, j, v in rows:
            y[i - 1, j - 1] = v
        if np.isnan(y).any():
            raise ValueError(f"{csv_path} has missing (subject, replicate) cells")
        meta_path = csv_path.with_suffix(".meta")
        seed, generating = None, {}
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
            seed, generating = meta.get("seed"), meta.get("generating", {})
        return cls(y, seed, generating)


def simulate_re_data(K: int, m: int, gen_hyper: Optional[dict] = None, seed: int = 0, lambda_e: Optional[float] = None) -> REData:
    """Simulate balanced data from the random effects model.

    Draws ``lambda_theta, lambda_e ~ Gamma(a, b)``, ``mu ~ N(m0, 1/s0)``,
    ``theta_i ~ N(mu, 1/lambda_theta)`` and ``y_ij ~ N(theta_i, 1/lambda_e)``.
    Passing ``lambda_e`` overrides the drawn error precision.
    """
    if K < 1 or m < 1:
        raise DomainError("K and m must be at least 1")
    hyper = {"m0": 0.0, "s0": 1.0, "a": 2.0, "b": 2.0}
    hyper.update(gen_hyper or {})
    rng = np.random.default_rng(seed)
    lam_theta = rng.gamma(hyper["a"], 1.0 / hyper["b"])
    lam_e = rng.gamma(hyper["a"], 1.0 / hyper["b"])
    if lambda_e is not None:
        lam_e = float(lambda_e)
    mu = rng.normal(hyper["m0"], 1.0 / math.sqrt(hyper["s0"]))
    theta = rng.normal(mu, 1.0 / math.sqrt(lam_theta), size=K)
    y = rng.normal(theta[:, None], 1.0 / math.sqrt(lam_e), size=(K, m))
    generating = dict(hyper)
    if lambda_e is not None:
        generating["lambda_e"] = lam_e
    return REData(y, seed, generating)


@dataclass(frozen=True)
class REState:
    theta: np.ndarray
    mu: float
    lambda_theta: float
    lambda_e: float

    def __post_init__(self):
        object.__setattr__(self, "theta", np.array(np.ravel(self.theta), dtype=float))
        if not (self.lambda_theta > 0.0 and self.lambda_e > 0.0):
            raise DomainError("precisions must be strictly positive")

    @property
    def theta_bar(self) -> float:
        total = 0.0
        for t in self.theta:
            total += t
        return total / self.theta.size

    def to_vector(self) -> StateVector:
        return StateVector.of(self.theta, self.mu, (self.lambda_theta, self.lambda_e))

    @classmethod
    def from_vector(cls, state: StateVector) -> "REState":
        theta, mu, lam = state.blocks
        return cls(theta, float(mu[0]), float(lam[0]), float(lam[1]))


class RandomEffectsModel:
    """Posterior of the balanced Bayesian one-way random effects model.

    Blocks are ``theta`` (length K), ``mu`` and ``lambda = (lambda_theta,
    lambda_e)``, scanned with equal probability.
    """

    name = "random-effects"
    n_blocks = 3
    scan = ScanProbabilities((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))

    def __init__(self, data: REData, m0=0.0, s0=1.0, a1=30.0, b1=30.0, a2=30.0, b2=30.0):
        if not s0 > 0.0:
            raise DomainError("s0 must be positive")
        if min(a1, b1, a2, b2) <= 0.0:
            raise DomainError("gamma hyperparameters must be positive")
        self.data = data
        self.K, self.m = data.K, data.m
        self.m0, self.s0 = float(m0), float(s0)
        self.a1, self.b1, self.a2, self.b2 = float(a1), float(b1), float(a2), float(b2)
        self.ybar = data.ybar
        self.sse = data.sse
        self.yybar = data.yybar
        self.alpha1 = self.K / 2.0 + self.a1
        self.alpha2 = self.K * self.m / 2.0 + self.a2

    @property
    def hyper(self) -> dict:
        return {"m0": self.m0, "s0": self.s0, "a1": self.a1, "b1": self.b1, "a2": self.a2, "b2": self.b2}

    def initial_state(self) -> StateVector:
        return re_initial_state(self).to_vector()

    # sums run left to right so the compiled engine reproduces them bit for bit
    def beta1(self, theta, mu) -> float:
        ss = 0.0
        for t in np.ravel(theta):
            ss += (t - mu) * (t - mu)
        return ss / 2.0 + self.b1

    def beta2(self, theta) -> float:
        ss = 0.0
        for t, yb in zip(np.ravel(theta), self.ybar):
            ss += (t - yb) * (t - yb)
        return (self.m * ss + self.sse) / 2.0 + self.b2

    def conditional(self, block_index: int, state):
        s = REState.from_vector(state) if isinstance(state, StateVector) else state
        if block_index == 0:
            return self.theta_conditional(s)
        if block_index == 1:
            return self.mu_conditional(s)
        if block_index == 2:
            return self.lambda_conditional(s)
        raise IndexError(f"random effects model has blocks 0..2, got {block_index}")

    def theta_conditional(self, s: REState) -> IsotropicGaussianBlock:
        prec = s.lambda_theta + self.m * s.lambda_e
        mean = (s.lambda_theta * s.mu + self.m * s.lambda_e * self.ybar) / prec
        return IsotropicGaussianBlock(mean, 1.0 / math.sqrt(prec))

    def mu_conditional(self, s: REState) -> Gaussian1D:
        prec = self.s0 + self.K * s.lambda_theta
        mean = (self.s0 * self.m0 + self.K * s.lambda_theta * s.theta_bar) / prec
        return Gaussian1D(mean, 1.0 / math.sqrt(prec))

    def lambda_conditional(self, s: REState) -> GammaPair:
        return GammaPair(
            Gamma1D(self.alpha1, self.beta1(s.theta, s.mu)),
            Gamma1D(self.alpha2, self.beta2(s.theta)),
        )


def re_conditionals(state: REState, model: RandomEffectsModel) -> tuple:
    """Full conditionals ``(theta block, mu, lambda pair)`` at ``state``."""
    return (model.theta_conditional(state), model.mu_conditional(state), model.lambda_conditional(state))


def re_initial_state(model: RandomEffectsModel) -> REState:
    return REState(model.ybar.copy(), 0.0, 1.0, 1.0)


def model_from_dict(spec: dict, base_dir=None):
    """Build a model from its config entry (see :mod:`cmhgibbs.harness`)."""
    name = spec.get("name")
    if name == NormalNormalModel.name:
        return NormalNormalModel()
    if name == UnitSquareModel.name:
        return UnitSquareModel(spec.get("start", (0.5, 0.5)))
    if name == RandomEffectsModel.name:
        path = Path(spec["dataset"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        data = REData.read(path)
        return RandomEffectsModel(data, **spec.get("hyper", {}))
    raise ValueError(f"unknown model {name!r}")


def describe(model) -> dict:
    out = {"name": model.name}
    if isinstance(model, RandomEffectsModel):
        out.update(K=model.K, m=model.m, **model.hyper)
    return out


__all__ = [
    "NormalNormalModel",
    "UnitSquareModel",
    "RandomEffectsModel",
    "REData",
    "REState",
    "nn_conditional",
    "re_conditionals",
    "re_initial_state",
    "simulate_re_data",
    "model_from_dict",
]
