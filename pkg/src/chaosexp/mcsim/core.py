"""Monte Carlo driver: configuration, path batches and parallel block execution."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..covmodel import CovarianceModel, d_constant
from ..cumulant import variance_vn
from ..expand import hermite
from .rng import BLOCK_SIZE, PATH, PATH_SECOND, PERTURBATION, block_generator, block_ranges
from .sampling import CHUNK_ELEMENTS, pair_sampler, stationary_sampler

WORKERS_ENV = "CHAOSEXP_WORKERS"


@dataclass(frozen=True)
class PairModel:
    h1: float
    h2: float

    def describe(self) -> dict:
        return {"kind": "pair", "h1": self.h1, "h2": self.h2, "d": d_constant(self.h1, self.h2)}


@dataclass(frozen=True)
class Perturbation:
    q: int = 3
    beta: float = 1.0

    def __post_init__(self):
        if self.q < 3:
            raise ValueError("perturbation order q must be >= 3")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class McConfig:
    seed: int
    replications: int
    n: int
    model: CovarianceModel | PairModel
    workers: int = 1
    perturbation: Perturbation | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def is_pair(self) -> bool:
        return isinstance(self.model, PairModel)

    def model_descriptor(self) -> dict:
        return self.model.describe()

    def model_hash(self) -> str:
        payload = json.dumps({"model": self.model_descriptor(), "n": self.n}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()

    def effective_workers(self) -> int:
        env = os.environ.get(WORKERS_ENV)
        return max(1, int(env)) if env else max(1, self.workers)

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "replications": self.replications,
            "n": self.n,
            "model": self.model_descriptor(),
            "workers": self.workers,
        }
        out["perturbation"] = asdict(self.perturbation) if self.perturbation else None
        return out


@dataclass(frozen=True)
class PathBatch:
    """Per-replication statistics.

    Single model columns: ``f`` and ``bracket`` (plus ``g`` when perturbed).
    Pair columns: ``f1, f2, bracket11, bracket22, bracket12``.
    """

    n: int
    model_hash: str
    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError("all columns must have the same length")
        for name, col in self.columns.items():
            if not np.all(np.isfinite(col)):
                raise ValueError(f"column {name} has non-finite values")

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def f(self) -> np.ndarray:
        return self.columns["f"]

    @property
    def bracket(self) -> np.ndarray:
        return self.columns["bracket"]

    def perturbed_f(self) -> np.ndarray:
        return self.columns["f"] + self.columns["g"]

    def head(self, count: int) -> "PathBatch":
        return PathBatch(self.n, self.model_hash, {k: v[:count] for k, v in self.columns.items()})

    @staticmethod
    def concat(batches) -> "PathBatch":
        batches = list(batches)
        if not batches:
            raise ValueError("nothing to concatenate")
        first = batches[0]
        for b in batches[1:]:
            if (b.n, b.model_hash, sorted(b.columns)) != (first.n, first.model_hash, sorted(first.columns)):
                raise ValueError("batches come from different configurations")
        cols = {k: np.concatenate([b.columns[k] for b in batches]) for k in first.columns}
        return PathBatch(first.n, first.model_hash, cols)


def statistic_qv(path, v_n: float, quad_form=None):
    """``F_N`` and the bracket ``2 x'Rx / (N v_N)`` for one path or a stack of paths.

    ``quad_form`` maps paths to ``x'Rx``; without it the bracket is not computed.
    """
    x = np.atleast_2d(np.asarray(path, dtype=float))
    n = x.shape[1]
    scale = n * v_n
    f = (np.einsum("ij,ij->i", x, x) - n) / math.sqrt(scale)
    bracket = None if quad_form is None else 2.0 * quad_form(x) / scale
    if np.ndim(path) == 1:
        return float(f[0]), None if bracket is None else float(bracket[0])
    return f, bracket


def perturbation_term(zeta, q: int, beta: float, n: int):
    """``N^(-(1+beta)/2) He_q(zeta)``."""
    return n ** (-(1.0 + beta) / 2.0) * hermite(q, zeta)


def perturbed_statistic(f_value, extra_noise, q: int, beta: float, n: int):
    if q < 3 or not beta > 0:
        raise ValueError("need q >= 3 and beta > 0")
    return np.asarray(f_value) + perturbation_term(extra_noise, q, beta, n)


def _sub_batch(n: int) -> int:
    size = max(2, CHUNK_ELEMENTS // (4 * n))
    return size - size % 2


def _run_block(cfg: McConfig, block: int, start: int, stop: int) -> dict:
    count = stop - start
    n = cfg.n
    gen = block_generator(cfg.seed, PATH, block)
    sub = _sub_batch(n)
    out: dict = {}
    if cfg.is_pair:
        h1, h2 = cfg.model.h1, cfg.model.h2
        sampler = pair_sampler(h1, h2, n)
        gen_b = block_generator(cfg.seed, PATH_SECOND, block)
        a1, a2 = n * variance_vn(CovarianceModel.fgn(h1), n), n * variance_vn(CovarianceModel.fgn(h2), n)
        parts = []
        for s in range(0, count, sub):
            x1, x2 = sampler.paths(gen, gen_b, min(sub, count - s))
            parts.append({
                "f1": (np.einsum("ij,ij->i", x1, x1) - n) / math.sqrt(a1),
                "f2": (np.einsum("ij,ij->i", x2, x2) - n) / math.sqrt(a2),
                "bracket11": 2.0 * sampler.marg1.quadratic_form(x1) / a1,
                "bracket22": 2.0 * sampler.marg2.quadratic_form(x2) / a2,
                "bracket12": 2.0 * sampler.cross_form(x1, x2) / math.sqrt(a1 * a2),
            })
    else:
        sampler = stationary_sampler(cfg.model, n)
        v_n = variance_vn(cfg.model, n)
        parts = []
        for s in range(0, count, sub):
            x = sampler.paths(gen, min(sub, count - s))
            f, b = statistic_qv(x, v_n, sampler.quadratic_form)
            parts.append({"f": f, "bracket": b})
    for key in parts[0]:
        out[key] = np.concatenate([p[key] for p in parts])
    if cfg.perturbation is not None:
        zeta = block_generator(cfg.seed, PERTURBATION, block).standard_normal(count)
        out["g"] = perturbation_term(zeta, cfg.perturbation.q, cfg.perturbation.beta, n)
    return out


def _run_block_args(args):
    return _run_block(*args)


def simulate(cfg: McConfig) -> PathBatch:
    """Run all replications; output is identical for any worker count."""
    tasks = [(cfg, b, s, e) for b, s, e in block_ranges(cfg.replications, BLOCK_SIZE)]
    workers = min(cfg.effective_workers(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block_args, tasks))
    else:
        results = [_run_block(*t) for t in tasks]
    cols = {k: np.concatenate([r[k] for r in results]) for k in results[0]}
    return PathBatch(cfg.n, cfg.model_hash(), cols)


def sample_stationary(model: CovarianceModel, cfg: McConfig) -> np.ndarray:
    """Raw paths, replication ``i`` in row ``i``. Intended for small runs."""
    sampler = stationary_sampler(model, cfg.n)
    sub = _sub_batch(cfg.n)
    rows = []
    for b, s, e in block_ranges(cfg.replications, BLOCK_SIZE):
        gen = block_generator(cfg.seed, PATH, b)
        for t in range(s, e, sub):
            rows.append(sampler.paths(gen, min(sub, e - t)))
    return np.concatenate(rows)


def sample_pair(h1: float, h2: float, cfg: McConfig) -> tuple[np.ndarray, np.ndarray]:
    sampler = pair_sampler(float(h1), float(h2), cfg.n)
    sub = _sub_batch(cfg.n)
    xs, ys = [], []
    for b, s, e in block_ranges(cfg.replications, BLOCK_SIZE):
        gen_a = block_generator(cfg.seed, PATH, b)
        gen_b = block_generator(cfg.seed, PATH_SECOND, b)
        for t in range(s, e, sub):
            x1, x2 = sampler.paths(gen_a, gen_b, min(sub, e - t))
            xs.append(x1)
            ys.append(x2)
    return np.concatenate(xs), np.concatenate(ys)


def sample_covariance(model: CovarianceModel, cfg: McConfig) -> tuple[np.ndarray, np.ndarray]:
    """Streaming sample covariance of paths and the entrywise standard error."""
    sampler = stationary_sampler(model, cfg.n)
    sub = _sub_batch(cfg.n)
    n = cfg.n
    s1 = np.zeros((n, n))
    s2 = np.zeros((n, n))
    for b, s, e in block_ranges(cfg.replications, BLOCK_SIZE):
        gen = block_generator(cfg.seed, PATH, b)
        for t in range(s, e, sub):
            x = sampler.paths(gen, min(sub, e - t))
            s1 += x.T @ x
            s2 += (x * x).T @ (x * x)
    m = cfg.replications
    mean = s1 / m
    var = s2 / m - mean**2
    return mean, np.sqrt(np.clip(var, 0.0, None) / m)
