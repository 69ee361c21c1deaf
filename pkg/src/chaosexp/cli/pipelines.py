"""One pipeline per command. Each returns a ``Report`` whose ``data`` depends
only on the config, so reruns reproduce it exactly; timing lives in the header."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .. import __version__
from ..covmodel import CovarianceModel, read_table_csv
from ..cumulant import cumulants_qv
from ..errors import ConfigError
from ..expand import ExpansionModel, correction_1d, density_multi, gauss_pdf, pair_model
from ..mcsim import McConfig, PairModel, Perturbation, density_report, joint_clt_check, kolmogorov_gaps, simulate
from ..mcsim.batchio import write_batch
from ..mcsim.stats import expansion_moment, functional_gap
from ..seqcalc import cv_limit, limit_constants
from . import acceptance
from .config import DEFAULT_REPLICATIONS, TOLERANCES, AcceptanceSettings, ExperimentConfig
from .rates import exact_rate_rows, fit_rows, mc_rate_rows

PAIR_GRID_LIMIT = 101  # per-axis points for 2-D density grids


@dataclass
class Report:
    config: ExperimentConfig
    data: dict
    rows: list = field(default_factory=list)  # tabular payload for CSV output
    passed: bool | None = None  # set in --check mode
    runtime: float = 0.0
    lines: list = field(default_factory=list)  # human-readable check results

    def header(self) -> dict:
        return {
            "command": self.config.command,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "version": __version__,
            "runtime_seconds": self.runtime,
        }

    def to_json(self) -> str:
        out = {"header": self.header(), "data": self.data}
        if self.rows:
            out["rows"] = self.rows
        if self.passed is not None:
            out["passed"] = self.passed
        return json.dumps(out, indent=2, default=_jsonable)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.header().items():
            buf.write(f"# {key}: {json.dumps(value, default=_jsonable)}\n")
        scalars = {k: v for k, v in self.data.items() if not isinstance(v, (list, dict))}
        for key, value in scalars.items():
            buf.write(f"# {key}: {json.dumps(value, default=_jsonable)}\n")
        if self.rows:
            writer = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _require(cfg: ExperimentConfig, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise ConfigError("; ".join(f"{n}: required for {cfg.command}" for n in missing))


def _model(cfg: ExperimentConfig) -> CovarianceModel:
    if cfg.table is not None:
        return read_table_csv(cfg.table, cfg.decay_exponent)
    _require(cfg, "h")
    return CovarianceModel.fgn(cfg.h)


def _grid(cfg: ExperimentConfig) -> np.ndarray:
    return np.linspace(cfg.x_min, cfg.x_max, cfg.points)


def _sizes(cfg: ExperimentConfig) -> tuple:
    if cfg.n_grid is not None:
        return cfg.n_grid
    _require(cfg, "n")
    return (cfg.n,)


def _replications(cfg: ExperimentConfig) -> int:
    return cfg.replications if cfg.replications is not None else DEFAULT_REPLICATIONS


def _is_pair(cfg: ExperimentConfig) -> bool:
    return cfg.h1 is not None or cfg.h2 is not None


def _mc_config(cfg: ExperimentConfig, n: int) -> McConfig:
    pert = Perturbation(cfg.perturb_q, cfg.perturb_beta) if cfg.perturb_q is not None else None
    model = PairModel(cfg.h1, cfg.h2) if _is_pair(cfg) else _model(cfg)
    return McConfig(seed=cfg.seed, replications=_replications(cfg), n=n, model=model,
                    workers=cfg.workers, perturbation=pert)


# ---------------------------------------------------------------------------


def run_constants(cfg: ExperimentConfig) -> Report:
    if cfg.h is not None and not _is_pair(cfg):
        data = {"h": cfg.h, "c_v": cv_limit(cfg.h)}
        return Report(cfg, data)
    _require(cfg, "h1", "h2")
    lim = limit_constants(cfg.h1, cfg.h2, tol=TOLERANCES.limit_constants)
    data = lim.to_dict()
    data["covariance_matrix"] = lim.covariance_matrix().tolist()
    report = Report(cfg, data)
    if cfg.check:
        report.passed = bool(lim.error <= TOLERANCES.limit_constants)
    return report


def run_cumulants(cfg: ExperimentConfig) -> Report:
    model = _model(cfg)
    reps = [cumulants_qv(model, n) for n in _sizes(cfg)]
    rows = [r.to_dict() for r in reps]
    report = Report(cfg, {"model": model.describe()}, rows)
    if cfg.check:
        worst = max(abs(r.kappa4 - 6 * r.gamma_n**2) / r.kappa4 for r in reps)
        report.data["sandwich_max_rel"] = worst
        report.passed = bool(worst <= TOLERANCES.sandwich_rel)
    return report


def run_expand(cfg: ExperimentConfig) -> Report:
    if _is_pair(cfg):
        _require(cfg, "h1", "h2", "n")
        model = pair_model(limit_constants(cfg.h1, cfg.h2), cfg.n)
        axis = np.linspace(cfg.x_min, cfg.x_max, min(cfg.points, PAIR_GRID_LIMIT))
        pts = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)
        dens = density_multi(model, pts)
        rows = [{"x1": float(a), "x2": float(b), "p_N": float(dens[i, j])}
                for i, a in enumerate(axis) for j, b in enumerate(axis)]
        return Report(cfg, {"model": model.to_dict()}, rows)
    if cfg.rho is not None or cfg.gamma is not None:
        _require(cfg, "rho", "gamma")
        model = ExpansionModel.one_dim(cfg.rho, cfg.gamma)
        source = {"rho": cfg.rho, "gamma": cfg.gamma}
    else:
        _require(cfg, "n")
        rep = cumulants_qv(_model(cfg), cfg.n)
        model = ExpansionModel.one_dim(rep.rho_n, rep.gamma_n)
        source = rep.to_dict()
    x = _grid(cfg)
    base, corr = gauss_pdf(x), correction_1d(model, x)
    rows = [{"x": float(a), "p": float(b), "p_N": float(b + c), "correction": float(c)}
            for a, b, c in zip(x, base, corr)]
    return Report(cfg, {"model": model.to_dict(), "source": source}, rows)


def run_simulate(cfg: ExperimentConfig) -> Report:
    _require(cfg, "n", "output")
    mc = _mc_config(cfg, cfg.n)
    batch = simulate(mc)
    summary = {name: {"mean": float(np.mean(col)), "var": float(np.var(col, ddof=1))}
               for name, col in batch.columns.items()}
    data = {"mc": mc.to_dict(), "model_hash": batch.model_hash, "batch_file": cfg.output, "columns": summary}
    write_batch(cfg.output, batch, {"config": cfg.to_dict(), "version": __version__})
    return Report(cfg, data)


def run_validate(cfg: ExperimentConfig) -> Report:
    if cfg.check:
        return _run_acceptance(cfg)
    _require(cfg, "n")
    cov = _model(cfg)
    rep = cumulants_qv(cov, cfg.n)
    model = ExpansionModel.one_dim(rep.rho_n, rep.gamma_n)
    batch = simulate(_mc_config(cfg, cfg.n))
    f = batch.perturbed_f() if "g" in batch.columns else batch.f
    x = _grid(cfg)
    dens = density_report(f, model, x, alphas=cfg.alphas)
    kol = kolmogorov_gaps(f, model, np.linspace(cfg.x_min, cfg.x_max, 61))
    functionals = [
        functional_gap(f, np.square, 1.0, "x^2 vs p"),
        functional_gap(f, np.square, expansion_moment(model, 2), "x^2 vs p_N"),
        functional_gap(f, lambda v: v**3, 0.0, "x^3 vs p"),
        functional_gap(f, lambda v: v**3, expansion_moment(model, 3), "x^3 vs p_N"),
    ]
    data = {
        "cumulants": rep.to_dict(),
        "bandwidth": dens.bandwidth,
        "samples": dens.samples,
        "density_gaps": [dataclasses.asdict(g) | {"z_score": g.z_score} for g in dens.gaps],
        "kolmogorov": {k: dataclasses.asdict(v) | {"z_score": v.z_score} for k, v in kol.items()},
        "functionals": [dataclasses.asdict(g) | {"gap": g.gap} for g in functionals],
        "joint_clt": joint_clt_check(batch.f, batch.bracket, rep),
    }
    rows = [{"x": float(a), "density_hat": float(d), "se": float(s)}
            for a, d, s in zip(dens.grid, dens.density, dens.se)]
    return Report(cfg, data, rows)


def acceptance_settings(cfg: ExperimentConfig) -> AcceptanceSettings:
    settings = AcceptanceSettings(seed=cfg.seed, workers=cfg.workers)
    if cfg.replications is not None:
        settings = replace(settings, replications=cfg.replications,
                           clt_replications=min(settings.clt_replications, cfg.replications))
    if cfg.method != settings.rate_method:
        settings = replace(settings, rate_method=cfg.method)
    return settings


def _run_acceptance(cfg: ExperimentConfig) -> Report:
    settings = acceptance_settings(cfg)
    results = acceptance.run_criteria(settings, only=cfg.criteria)
    data = acceptance.summary(results)
    data["settings"] = settings.to_dict()
    report = Report(cfg, data)
    report.passed = data["all_passed"]
    report.lines = [r.line() for r in results]
    return report


def run_rates(cfg: ExperimentConfig) -> Report:
    _require(cfg, "h", "n_grid")
    x = _grid(cfg)
    if cfg.method == "exact":
        rows = exact_rate_rows(cfg.h, cfg.n_grid, x)
    else:
        rows = mc_rate_rows(cfg.h, cfg.n_grid, x, _replications(cfg), cfg.seed, cfg.workers)
    fits = fit_rows(rows)
    data = {f"slope_{k}": v.slope for k, v in fits.items()}
    data["fits"] = {k: v.to_dict() for k, v in fits.items()}
    report = Report(cfg, data, rows)
    if cfg.check:
        t = TOLERANCES
        gs, es = fits["gauss"].slope, fits["expansion"].slope
        report.passed = bool(abs(gs - t.rate_slope) <= t.rate_slope_tol and es < gs)
    return report


PIPELINES = {
    "constants": run_constants,
    "cumulants": run_cumulants,
    "expand": run_expand,
    "simulate": run_simulate,
    "validate": run_validate,
    "rates": run_rates,
}


def run(cfg: ExperimentConfig) -> Report:
    start = time.perf_counter()
    report = PIPELINES[cfg.command](cfg)
    report.runtime = round(time.perf_counter() - start, 3)
    return report
