"""Estimators on simulated statistics: kernel density, empirical CDF and
characteristic function, error reports with batch-split standard errors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from ..errors import InsufficientSampleError
from ..expand import ExpansionModel, cdf_1d, density_1d, gauss_pdf, hermite

MIN_SAMPLES = 1_000
DEFAULT_FOLDS = 10
BIN_FRACTION = 100  # bins per bandwidth in the linear-binning KDE


def silverman_bandwidth(samples: np.ndarray) -> float:
    x = np.asarray(samples, dtype=float)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(float(np.std(x, ddof=1)), (q75 - q25) / 1.34)
    return 0.9 * spread * x.size ** (-0.2)


def _kde_binned(samples: np.ndarray, grid: np.ndarray, bandwidth: float, lo: float, hi: float) -> np.ndarray:
    """Gaussian KDE after linear binning onto a mesh of spacing ``bandwidth / BIN_FRACTION``."""
    step = bandwidth / BIN_FRACTION
    nbins = int(math.ceil((hi - lo) / step)) + 2
    pos = (samples - lo) / step
    left = np.floor(pos).astype(np.int64)
    frac = pos - left
    mass = np.bincount(left, weights=1.0 - frac, minlength=nbins + 1)
    mass += np.bincount(left + 1, weights=frac, minlength=nbins + 1)
    centres = lo + step * np.arange(mass.size)
    keep = mass > 0
    centres, mass = centres[keep], mass[keep]
    out = np.empty(grid.size)
    for s in range(0, grid.size, 64):
        u = (grid[s : s + 64, None] - centres[None, :]) / bandwidth
        out[s : s + 64] = np.exp(-0.5 * u * u) @ mass
    return out / (samples.size * bandwidth * math.sqrt(2 * math.pi))


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    se: np.ndarray
    bandwidth: float
    samples: int
    folds: int


def empirical_density(samples, grid, bandwidth: float | None = None, folds: int = DEFAULT_FOLDS) -> DensityEstimate:
    """KDE on ``grid``; the standard error comes from ``folds`` contiguous batches."""
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_SAMPLES:
        raise InsufficientSampleError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    grid = np.asarray(grid, dtype=float)
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    lo, hi = float(x.min()), float(x.max())
    chunks = np.array_split(x, folds)
    per_fold = np.array([_kde_binned(c, grid, h, lo, hi) for c in chunks])
    sizes = np.array([c.size for c in chunks], dtype=float)
    density = sizes @ per_fold / sizes.sum()
    se = np.std(per_fold, axis=0, ddof=1) / math.sqrt(folds)
    return DensityEstimate(grid, density, se, h, x.size, folds)


def smoothed_gauss(x, bandwidth: float):
    """``p * K_h``: the N(0, 1 + h^2) density."""
    s = math.sqrt(1.0 + bandwidth**2)
    return gauss_pdf(np.asarray(x) / s) / s


def smoothed_expansion(model: ExpansionModel, x, bandwidth: float):
    """``p_N * K_h`` in closed form, so KDE bias cancels in the comparison."""
    s = math.sqrt(1.0 + bandwidth**2)
    x = np.asarray(x, dtype=float)
    base = gauss_pdf(x / s) / s
    return base * (1.0 + model.rho * model.gamma / 3.0 * hermite(3, x / s) / s**3)


@dataclass
class SupGap:
    name: str
    alpha: int
    value: float
    argmax: float
    se_at_argmax: float

    @property
    def z_score(self) -> float:
        return self.value / self.se_at_argmax if self.se_at_argmax > 0 else math.inf


@dataclass
class ErrorReport:
    grid: list
    bandwidth: float
    samples: int
    density: list
    se: list
    gaps: list = field(default_factory=list)
    kolmogorov: list = field(default_factory=list)
    functionals: list = field(default_factory=list)

    def gap(self, name: str, alpha: int = 0) -> SupGap:
        for g in self.gaps:
            if g.name == name and g.alpha == alpha:
                return g
        raise KeyError((name, alpha))

    def to_dict(self) -> dict:
        return asdict(self)


def sup_gap(est: DensityEstimate, target, name: str, alpha: int = 0) -> SupGap:
    weight = np.abs(est.grid) ** alpha
    diff = weight * np.abs(est.density - np.asarray(target))
    i = int(np.argmax(diff))
    return SupGap(name, alpha, float(diff[i]), float(est.grid[i]), float(weight[i] * est.se[i]))


def density_report(samples, model: ExpansionModel, grid, bandwidth: float | None = None,
                   alphas=(0, 1, 2)) -> ErrorReport:
    """Weighted sup gaps of the KDE against ``p``, ``p_N`` and their kernel-smoothed versions."""
    est = empirical_density(samples, grid, bandwidth)
    h = est.bandwidth
    targets = {
        "gauss": gauss_pdf(est.grid),
        "expansion": density_1d(model, est.grid),
        "gauss_smoothed": smoothed_gauss(est.grid, h),
        "expansion_smoothed": smoothed_expansion(model, est.grid, h),
    }
    report = ErrorReport(est.grid.tolist(), h, est.samples, est.density.tolist(), est.se.tolist())
    for name, target in targets.items():
        for a in alphas:
            report.gaps.append(sup_gap(est, target, name, a))
    return report


# ---------------------------------------------------------------------------
# Distribution functions and functionals


@dataclass
class FunctionalGap:
    name: str
    estimate: float
    target: float
    se: float

    @property
    def gap(self) -> float:
        return abs(self.estimate - self.target)


def kolmogorov_gaps(samples, model: ExpansionModel, points, folds: int = DEFAULT_FOLDS) -> dict:
    """Sup over ``points`` of ``|P_hat(F <= x) - target(x)|`` for ``p`` and ``p_N``."""
    x = np.asarray(samples, dtype=float)
    points = np.asarray(points, dtype=float)
    chunks = np.array_split(x, folds)
    per_fold = np.array([np.searchsorted(np.sort(c), points, side="right") / c.size for c in chunks])
    sizes = np.array([c.size for c in chunks], dtype=float)
    ecdf = sizes @ per_fold / sizes.sum()
    se = np.std(per_fold, axis=0, ddof=1) / math.sqrt(folds)
    out = {}
    for name, target in (("gauss", ndtr(points)), ("expansion", cdf_1d(model, points))):
        diff = np.abs(ecdf - target)
        i = int(np.argmax(diff))
        out[name] = SupGap(name, 0, float(diff[i]), float(points[i]), float(se[i]))
    return out


def functional_gap(samples, func, target: float, name: str = "") -> FunctionalGap:
    vals = func(np.asarray(samples, dtype=float))
    return FunctionalGap(name, float(np.mean(vals)), float(target), float(np.std(vals, ddof=1) / math.sqrt(vals.size)))


def expansion_moment(model: ExpansionModel, power: int) -> float:
    """``int x^power p_N(x) dx`` (Gaussian moment plus ``rho gamma / 3 * E[Z^power H_3(Z)]``)."""
    gauss = 0.0 if power % 2 else float(math.prod(range(power - 1, 0, -2)))
    # E[Z^k H_3(Z)] = k (k-1) (k-2) E[Z^(k-3)]
    if power >= 3 and (power - 3) % 2 == 0:
        lower = float(math.prod(range(power - 4, 0, -2)))
        extra = power * (power - 1) * (power - 2) * lower
    else:
        extra = 0.0
    return gauss + model.rho * model.gamma / 3.0 * extra


# ---------------------------------------------------------------------------
# Characteristic function and joint diagnostics


@dataclass(frozen=True)
class CharfunEstimate:
    lam: np.ndarray
    value: np.ndarray
    se: np.ndarray
    weight_mean: float


def empirical_charfun(samples, lam, weights=None) -> CharfunEstimate:
    """Mean of ``weight * exp(i lam F)``; ``weights`` default to 1 (no truncation)."""
    x = np.asarray(samples, dtype=float)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    vals = np.empty(lam.size, dtype=complex)
    se = np.empty(lam.size)
    for j, l in enumerate(lam):
        phase = l * x
        re, im = w * np.cos(phase), w * np.sin(phase)
        vals[j] = complex(re.mean(), im.mean())
        se[j] = math.sqrt((re.var(ddof=1) + im.var(ddof=1)) / x.size)
    return CharfunEstimate(lam, vals, se, float(w.mean()))


def _corr_se(a: np.ndarray, b: np.ndarray, folds: int = DEFAULT_FOLDS) -> tuple[float, float]:
    corr = float(np.corrcoef(a, b)[0, 1])
    parts = [float(np.corrcoef(x, y)[0, 1]) for x, y in zip(np.array_split(a, folds), np.array_split(b, folds))]
    return corr, float(np.std(parts, ddof=1) / math.sqrt(folds))


def joint_clt_check(f_values, bracket_values, report) -> dict:
    """Empirical ``Corr(F, (bracket - 1)/gamma)`` and standardization checks."""
    f = np.asarray(f_values, dtype=float)
    z2 = (np.asarray(bracket_values, dtype=float) - 1.0) / report.gamma_n
    corr, corr_se = _corr_se(f, z2)
    m = f.size
    var_z2 = float(np.var(z2, ddof=1))
    fourth = float(np.mean((z2 - z2.mean()) ** 4))
    var_se = math.sqrt(max(fourth - var_z2**2, 0.0) / m)
    skew = float(np.mean(((f - f.mean()) / f.std()) ** 3))
    return {
        "correlation": corr,
        "correlation_se": corr_se,
        "rho_n": report.rho_n,
        "correlation_gap": abs(corr - report.rho_n),
        "bracket_mean": float(np.mean(np.asarray(bracket_values))),
        "bracket_mean_se": float(np.std(bracket_values, ddof=1) / math.sqrt(m)) if m > 1 else math.nan,
        "standardized_bracket_var": var_z2,
        "standardized_bracket_var_se": var_se,
        "f_mean": float(f.mean()),
        "f_var": float(f.var(ddof=1)),
        "f_skewness": skew,
        "kappa3_exact": report.kappa3,
        "samples": m,
    }
