"""Config-driven GS-versus-CMH experiments, reference runs and traces.

Config files are JSON::

    {
      "master_seed": 2013,
      "experiments": [
        {
          "id": "nn-c1.5",
          "model": {"name": "normal-normal"},
          "sampler": {"kind": "cmh",
                      "neighborhoods": {"kind": "interval", "size": 1.5, "scaling": "sd"}},
          "n": 1000, "N": 1000,
          "functional": 0,
          "beta_ref": {"value": 0.0},
          "accept_run": 1000000
        }
      ]
    }

``neighborhoods`` is one spec for every block or a list with one per block.
``beta_ref`` is either ``{"value": x}`` or ``{"reference_run": length}``.
Random effects models take ``{"name": "random-effects", "dataset":
"data/dataset.csv", "hyper": {...}}`` with the dataset path resolved against
the config file's directory.

Every chain gets its own stream seeded from ``(master_seed, arm, chain)``.
The Gibbs baseline is arm 0 and the configured sampler arm 1, so the two
arms are independent, while a config whose sampler is plain Gibbs (or CMH
with empty neighborhoods) reproduces the same numbers for either spelling.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from cmhgibbs import diagnostics, engine
from cmhgibbs.models import NormalNormalModel, RandomEffectsModel, UnitSquareModel, model_from_dict
from cmhgibbs.neighborhoods import (
    ConfigurationError,
    NeighborhoodSpec,
    _per_block,
    check_admissibility,
)

log = logging.getLogger("cmhgibbs")

ARM_GS = 0
ARM_SAMPLER = 1
ARM_REFERENCE = 2
ARM_ACCEPT = 3
ARM_TRACE = 4

DEFAULT_SEED = 20130901
CSV_DIGITS = 6

REPORT_COLUMNS = [
    "config_id", "sampler", "N", "n", "beta_ref",
    "esjd_gs", "se_esjd_gs", "mse_gs", "se_mse_gs",
    "esjd_hat", "se_esjd", "mse_hat", "se_mse",
    "esjdr", "se_esjdr", "mser", "se_mser", "accept_rate",
]


class ConfigError(ValueError):
    """The experiment configuration is missing, malformed or inconsistent."""


@dataclass
class ExperimentConfig:
    id: str
    model: dict
    sampler: dict = field(default_factory=lambda: {"kind": "gs"})
    n: int = 1000
    N: int = 1000
    functional: Optional[int] = None
    beta_ref: dict = field(default_factory=dict)
    accept_run: Optional[int] = None
    base_dir: Path = field(default=Path("."), repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"{self.id}: chain length n must be at least 2")
        if self.N < 1:
            raise ConfigError(f"{self.id}: replicate count N must be at least 1")
        if self.sampler.get("kind") not in ("gs", "cmh"):
            raise ConfigError(f"{self.id}: sampler kind must be 'gs' or 'cmh'")

    def build_model(self):
        try:
            return model_from_dict(self.model, self.base_dir)
        except KeyError as exc:
            raise ConfigError(f"{self.id}: model entry lacks {exc}") from None

    def specs(self, model) -> Optional[List[NeighborhoodSpec]]:
        if self.sampler.get("kind") == "gs":
            return None
        raw = self.sampler.get("neighborhoods", {"kind": "empty"})
        try:
            if isinstance(raw, list):
                specs = [parse_neighborhood(r) for r in raw]
            else:
                specs = parse_neighborhood(raw)
            return list(_per_block(specs, model.n_blocks))
        except (ConfigurationError, TypeError, ValueError) as exc:
            raise ConfigError(f"{self.id}: {exc}") from None

    def coordinate(self, model) -> int:
        if self.functional is not None:
            return int(self.functional)
        return model.K if isinstance(model, RandomEffectsModel) else 0

    def sampler_label(self) -> str:
        if self.sampler.get("kind") == "gs":
            return "gs"
        raw = self.sampler.get("neighborhoods", {"kind": "empty"})
        raw = raw if isinstance(raw, list) else [raw]
        parts = []
        for r in raw:
            size = r.get("size", 0.0)
            size = "x".join(f"{s:g}" for s in size) if isinstance(size, list) else f"{size:g}"
            parts.append(f"{r.get('kind', 'empty')}:{size}")
        return "cmh " + " ".join(parts)


def parse_neighborhood(raw: dict) -> NeighborhoodSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"neighborhood must be an object, got {raw!r}")
    return NeighborhoodSpec(raw.get("kind", "empty"), raw.get("size", 0.0), raw.get("scaling", "absolute"))


def load_config(path) -> tuple:
    """Read a config file; returns ``(master_seed, [ExperimentConfig, ...])``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("experiments"), list):
        raise ConfigError(f"{path}: expected an object with an 'experiments' list")
    seed = doc.get("master_seed", DEFAULT_SEED)
    known = set(ExperimentConfig.__dataclass_fields__) - {"base_dir"}
    out = []
    ids = set()
    for i, entry in enumerate(doc["experiments"]):
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: experiment {i} is not an object")
        unknown = set(entry) - known
        if unknown:
            raise ConfigError(f"{path}: experiment {i} has unknown keys {sorted(unknown)}")
        if "model" not in entry:
            raise ConfigError(f"{path}: experiment {i} has no model")
        entry = dict(entry)
        entry.setdefault("id", f"exp{i}")
        if entry["id"] in ids:
            raise ConfigError(f"{path}: duplicate experiment id {entry['id']!r}")
        ids.add(entry["id"])
        try:
            out.append(ExperimentConfig(base_dir=path.parent, **entry))
        except TypeError as exc:
            raise ConfigError(f"{path}: experiment {i}: {exc}") from None
    return int(seed), out


def chain_rng(master_seed: int, arm: int, chain: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed) & (2**64 - 1), arm, chain]))


def run_arm(model, specs, n: int, N: int, master_seed: int, arm: int, coord: int, workers: int = 1) -> List[engine.ChainResult]:
    """Run ``N`` independent chains; results come back in chain-index order."""

    def one(k):
        return engine.run_chain(model, n, chain_rng(master_seed, arm, k), specs, coord)

    if workers <= 1:
        return [one(k) for k in range(N)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(N)))


def summaries(results: Sequence[engine.ChainResult]) -> List[diagnostics.ChainSummary]:
    return [diagnostics.ChainSummary(r.msjd, r.beta_hat, r.accept_count, r.step_count) for r in results]


def run_reference(model, length: int, master_seed: int, coord: int) -> float:
    """Long-run Gibbs estimate of the functional on its own stream."""
    if length < 1:
        raise ValueError("reference run length must be at least 1")
    return engine.run_chain(model, length, chain_rng(master_seed, ARM_REFERENCE, 0), None, coord).beta_hat


def analytic_beta(model, coord: int) -> Optional[float]:
    if isinstance(model, NormalNormalModel):
        return 0.0
    if isinstance(model, UnitSquareModel):
        return 0.5
    return None


def resolve_beta_ref(cfg: ExperimentConfig, model, master_seed: int, coord: int) -> float:
    ref = cfg.beta_ref or {}
    if "value" in ref:
        return float(ref["value"])
    if "reference_run" in ref:
        return run_reference(model, int(ref["reference_run"]), master_seed, coord)
    beta = analytic_beta(model, coord)
    if beta is None:
        raise ConfigError(f"{cfg.id}: beta_ref needs a value or a reference_run length")
    return beta


AUDIT_WARMUP = 200


def audit_admissibility(model, specs, master_seed: int = DEFAULT_SEED, warmup: int = AUDIT_WARMUP):
    """Check neighborhood masses at the initial state and along a short Gibbs warm-up.

    Raises :class:`ConfigurationError` when any realized mass is numerically one.
    """
    if specs is None:
        return None
    start = model.initial_state()
    path = engine.run_chain(model, warmup, chain_rng(master_seed, ARM_REFERENCE, 1), None, record_path=True).path
    probes = [start] + [_unflatten(row, start.dims) for row in path]
    adm = check_admissibility(specs, model, probes)
    if adm.violated:
        raise ConfigurationError(f"neighborhood mass {adm.q_max:.12g} is numerically 1")
    return adm


def _unflatten(row, dims):
    from cmhgibbs.sampler import StateVector

    blocks, k = [], 0
    for d in dims:
        blocks.append(row[k:k + d])
        k += d
    return StateVector(tuple(blocks))


class Runner:
    """Runs experiments, caching Gibbs baselines shared across config rows."""

    def __init__(self, master_seed: int = DEFAULT_SEED, workers: int = 1):
        self.master_seed = master_seed
        self.workers = workers
        self._gs_cache: Dict[tuple, list] = {}
        self._ref_cache: Dict[tuple, float] = {}

    def _model_key(self, cfg: ExperimentConfig) -> str:
        return json.dumps({"model": cfg.model, "base": str(cfg.base_dir.resolve())}, sort_keys=True)

    def gs_arm(self, cfg, model, coord):
        key = (self._model_key(cfg), cfg.n, cfg.N, coord)
        if key not in self._gs_cache:
            log.info("%s: running %d Gibbs chains of length %d", cfg.id, cfg.N, cfg.n)
            self._gs_cache[key] = run_arm(model, None, cfg.n, cfg.N, self.master_seed, ARM_GS, coord, self.workers)
        return self._gs_cache[key]

    def beta_ref(self, cfg, model, coord):
        key = (self._model_key(cfg), coord, json.dumps(cfg.beta_ref, sort_keys=True))
        if key not in self._ref_cache:
            self._ref_cache[key] = resolve_beta_ref(cfg, model, self.master_seed, coord)
        return self._ref_cache[key]

    def run(self, cfg: ExperimentConfig) -> diagnostics.ExperimentReport:
        model = cfg.build_model()
        specs = cfg.specs(model)
        coord = cfg.coordinate(model)
        audit_admissibility(model, specs, self.master_seed)
        beta_ref = self.beta_ref(cfg, model, coord)
        gs = self.gs_arm(cfg, model, coord)
        log.info("%s: running %d %s chains of length %d", cfg.id, cfg.N, cfg.sampler_label(), cfg.n)
        arm = run_arm(model, specs, cfg.n, cfg.N, self.master_seed, ARM_SAMPLER, coord, self.workers)
        if cfg.accept_run:
            long = engine.run_chain(model, int(cfg.accept_run) + 1, chain_rng(self.master_seed, ARM_ACCEPT, 0), specs, coord)
            accept = long.accept_rate
        else:
            accept = sum(r.accept_count for r in arm) / sum(r.step_count for r in arm)
        return build_report(cfg.id, cfg.sampler_label(), gs, arm, beta_ref, accept, cfg.n)


def build_report(config_id, label, gs, arm, beta_ref, accept_rate, n) -> diagnostics.ExperimentReport:
    gs_sum = summaries(gs)
    arm_sum = summaries(arm)
    N = len(arm_sum)
    if N >= 2:
        e_gs = diagnostics.esjd(gs_sum)
        e_arm = diagnostics.esjd(arm_sum)
        m_gs = diagnostics.mse([s.beta_hat for s in gs_sum], beta_ref)
        m_arm = diagnostics.mse([s.beta_hat for s in arm_sum], beta_ref)
    else:
        e_gs = (gs_sum[0].msjd, math.nan)
        e_arm = (arm_sum[0].msjd, math.nan)
        m_gs = ((gs_sum[0].beta_hat - beta_ref) ** 2, math.nan)
        m_arm = ((arm_sum[0].beta_hat - beta_ref) ** 2, math.nan)
    esjdr = diagnostics.ratio_with_se(e_arm, e_gs) if e_gs[0] > 0 else (math.nan, math.nan)
    mser = diagnostics.ratio_with_se(m_arm, m_gs) if m_gs[0] > 0 else (math.nan, math.nan)
    return diagnostics.ExperimentReport(
        config_id=config_id,
        esjd_hat=e_arm[0], se_esjd=e_arm[1],
        mse_hat=m_arm[0], se_mse=m_arm[1],
        esjd_gs=e_gs[0], se_esjd_gs=e_gs[1],
        mse_gs=m_gs[0], se_mse_gs=m_gs[1],
        esjdr=esjdr[0], se_esjdr=esjdr[1],
        mser=mser[0], se_mser=mser[1],
        accept_rate=accept_rate, beta_ref=beta_ref, N=N, n=n,
        sampler=label,
    )


def run_experiment(cfg: ExperimentConfig, master_seed: int = DEFAULT_SEED, workers: int = 1) -> diagnostics.ExperimentReport:
    return Runner(master_seed, workers).run(cfg)


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.{CSV_DIGITS}g}"
    return str(value)


def report_csv(reports: Sequence[diagnostics.ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        row = r.as_row()
        w.writerow([fmt(row[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def acceptance_run(model, specs, length: int, master_seed: int, coord: int = 0) -> engine.ChainResult:
    """Single long run of ``length`` steps for acceptance-rate estimates."""
    return engine.run_chain(model, length + 1, chain_rng(master_seed, ARM_ACCEPT, 0), specs, coord)


@dataclass(frozen=True)
class TraceRequest:
    run_length: int
    start: int
    end: int
    coordinate: int = 0

    def __post_init__(self):
        if not 0 <= self.start < self.end <= self.run_length:
            raise ValueError(
                f"trace window [{self.start}, {self.end}) must satisfy 0 <= start < end <= {self.run_length}"
            )


def trace_values(model, specs, req: TraceRequest, master_seed: int) -> np.ndarray:
    res = engine.run_chain(
        model, req.run_length, chain_rng(master_seed, ARM_TRACE, 0), specs, req.coordinate, record_path=True
    )
    return res.path[req.start:req.end, req.coordinate]


def trace_csv(values: np.ndarray, start: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "value"])
    for j, v in enumerate(values):
        w.writerow([start + j, fmt(float(v))])
    return buf.getvalue()


def emit_trace(cfg: ExperimentConfig, req: TraceRequest, master_seed: int, out_path=None) -> str:
    """Trace of one coordinate over iterations ``[start, end)``; returns the CSV text."""
    model = cfg.build_model()
    text = trace_csv(trace_values(model, cfg.specs(model), req, master_seed), req.start)
    if out_path is not None:
        Path(out_path).write_text(text)
    return text


def tune_block_sizes(model, base_specs, target_rate: float, master_seed: int, length: int = 20000,
                     lo: float = 0.0, hi: float = 6.0, iters: int = 20) -> List[float]:
    """Grid-free bisection helper choosing one size per block for a target acceptance rate.

    A convenience for picking neighborhood sizes that give each block a
    similar acceptance rate. It is a heuristic of this package, not a
    published procedure: each block's size is bisected on ``[lo, hi]``
    against its own acceptance rate from a fixed-seed run of ``length``
    steps, with the other blocks' neighborhoods left empty.
    """
    base_specs = list(_per_block(base_specs, model.n_blocks))
    sizes = []
    for i, spec in enumerate(base_specs):
        a, b = lo, hi
        for _ in range(iters):
            mid = 0.5 * (a + b)
            trial = [NeighborhoodSpec.empty()] * model.n_blocks
            size = (mid, mid) if spec.kind == "rectangle" else mid
            trial[i] = NeighborhoodSpec(spec.kind, size, spec.scaling)
            res = engine.run_chain(model, length, chain_rng(master_seed, ARM_ACCEPT, i), trial)
            rate = res.block_accepts[i] / max(res.block_steps[i], 1)
            if rate > target_rate:
                a = mid
            else:
                b = mid
        sizes.append(0.5 * (a + b))
    return sizes
