"""Log-log rate fits of density errors against sample size."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from ..covmodel import CovarianceModel
from ..cumulant import cumulants_qv, exact_density, toeplitz_eigenvalues
from ..errors import DegenerateGridError
from ..expand import ExpansionModel, density_1d, gauss_pdf

MIN_POINTS = 4


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float  # root mean square of log residuals
    max_residual: float
    points: int

    def to_dict(self) -> dict:
        return asdict(self)


def rate_fit(errors) -> RateFit:
    """Least-squares fit of ``log e`` on ``log n`` for rows ``(n, e_n)``."""
    rows = [(float(n), float(e)) for n, e in errors]
    if len(rows) < MIN_POINTS:
        raise DegenerateGridError(f"need at least {MIN_POINTS} grid points, got {len(rows)}")
    ns, es = np.array(rows).T
    if np.any(es <= 0) or np.any(ns <= 0):
        raise DegenerateGridError("sizes and errors must be positive")
    if np.unique(ns).size < 2:
        raise DegenerateGridError("grid needs at least two distinct sizes")
    lx, ly = np.log(ns), np.log(es)
    design = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    return RateFit(float(slope), float(intercept), float(math.sqrt(np.mean(resid**2))),
                   float(np.max(np.abs(resid))), len(rows))


@lru_cache(maxsize=16)
def _eigs(h: float, n: int) -> np.ndarray:
    return toeplitz_eigenvalues(CovarianceModel.fgn(h), n)


def exact_rate_rows(h: float, grid, x) -> list[dict]:
    """Sup errors of ``p`` and ``p_N`` against the exact density of ``F_N``."""
    x = np.asarray(x, dtype=float)
    rows = []
    for n in grid:
        rep = cumulants_qv(CovarianceModel.fgn(h), int(n))
        model = ExpansionModel.one_dim(rep.rho_n, rep.gamma_n)
        truth = exact_density(None, int(n), x, lam_eigs=_eigs(float(h), int(n)))
        rows.append({
            "n": int(n),
            "gamma_n": rep.gamma_n,
            "rho_n": rep.rho_n,
            "err_gauss": float(np.max(np.abs(truth - gauss_pdf(x)))),
            "err_expansion": float(np.max(np.abs(truth - density_1d(model, x)))),
        })
    return rows


def mc_rate_rows(h: float, grid, x, replications: int, seed: int, workers: int = 1) -> list[dict]:
    """Same sweep with the kernel density estimate of simulated ``F_N`` as truth."""
    from ..mcsim import McConfig, density_report, simulate

    rows = []
    for n in grid:
        model_cov = CovarianceModel.fgn(h)
        rep = cumulants_qv(model_cov, int(n))
        model = ExpansionModel.one_dim(rep.rho_n, rep.gamma_n)
        batch = simulate(McConfig(seed=seed, replications=replications, n=int(n), model=model_cov, workers=workers))
        report = density_report(batch.f, model, x, alphas=(0,))
        g, e = report.gap("gauss"), report.gap("expansion")
        rows.append({
            "n": int(n),
            "gamma_n": rep.gamma_n,
            "rho_n": rep.rho_n,
            "err_gauss": g.value,
            "err_expansion": e.value,
            "se_gauss": g.se_at_argmax,
            "se_expansion": e.se_at_argmax,
            "bandwidth": report.bandwidth,
        })
    return rows


def fit_rows(rows) -> dict:
    return {
        "gauss": rate_fit([(r["n"], r["err_gauss"]) for r in rows]),
        "expansion": rate_fit([(r["n"], r["err_expansion"]) for r in rows]),
    }
