"""Stationary covariance sequences: fractional Gaussian noise, the correlated
fBm pair, and user-supplied tables.

The cross model for two Hurst indices is the symmetric one,
``D(h1, h2) * fgn_rho((h1 + h2) / 2, k)``, with ``D`` the correlation at lag
zero of the Mandelbrot-Van Ness increment kernels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .errors import PSDError, QuadratureError

# Above this the squared sequence is no longer summable.
L2_THRESHOLD = 0.75
# Below this the fourth-order constants of the quadratic variation are finite.
EXPANSION_THRESHOLD = 0.625


@dataclass(frozen=True)
class HurstParam:
    h: float

    def __post_init__(self):
        if not (0.0 < float(self.h) < 1.0) or math.isnan(self.h):
            raise ValueError(f"Hurst index must lie in (0, 1), got {self.h}")

    @property
    def square_summable(self) -> bool:
        return self.h < L2_THRESHOLD

    @property
    def expansion_regime(self) -> bool:
        return self.h < EXPANSION_THRESHOLD


def _hurst(h) -> float:
    return HurstParam(float(h.h if isinstance(h, HurstParam) else h)).h


def fgn_rho(h, k):
    """Autocovariance of unit-variance fractional Gaussian noise at lag ``k``.

    Vectorized over ``k``; exact at h = 1/2 (Kronecker delta).
    """
    h = _hurst(h)
    k = np.abs(np.asarray(k, dtype=float))
    two_h = 2.0 * h
    out = 0.5 * ((k + 1.0) ** two_h + np.abs(k - 1.0) ** two_h - 2.0 * k**two_h)
    if h == 0.5:
        out = np.where(k == 0, 1.0, 0.0)
    return out if out.ndim else float(out)


def fgn_asymptote(h, k):
    """Leading power law ``h (2h - 1) |k|^(2h - 2)`` of ``fgn_rho``."""
    h = _hurst(h)
    k = np.abs(np.asarray(k, dtype=float))
    return h * (2 * h - 1) * k ** (2 * h - 2)


def mvn_normalizer_sq(h) -> float:
    """Closed-form square of the Mandelbrot-Van Ness constant making Var B_1 = 1."""
    h = _hurst(h)
    return 2 * h * math.sin(math.pi * h) * special.gamma(2 * h) / special.gamma(h + 0.5) ** 2


def _expm1_pow_over_t(a: float, t):
    """((1 + t)^a - 1) / t, stable as t -> 0."""
    t = np.asarray(t, dtype=float)
    small = t < 1e-8
    safe = np.where(small, 1.0, t)
    out = np.expm1(a * np.log1p(safe)) / safe
    return np.where(small, a + 0.5 * a * (a - 1) * t, out)


def _quad(func, a, b, rtol, **kw):
    val, err = integrate.quad(func, a, b, epsabs=0.0, epsrel=max(rtol * 0.1, 1e-13), limit=400, **kw)
    return val, err


@lru_cache(maxsize=256)
def kernel_inner(h1: float, h2: float, rtol: float = 1e-8) -> float:
    """Inner product over the real line of the unnormalized increment kernels
    ``(1 - u)_+^a - (-u)_+^a`` with ``a = h - 1/2``.
    """
    a1, a2 = h1 - 0.5, h2 - 0.5
    b = a1 + a2 + 1.0
    # u in (0, 1): only the first power is active.
    total = 1.0 / b
    errors = []
    # u < 0, s = -u in (0, 1): expand the product into four monomial pieces.
    near = (2.0**b - 1.0) / b + 1.0 / b
    for x, y in ((a1, a2), (a2, a1)):
        val, err = _quad(lambda s, x=x: (1.0 + s) ** x, 0.0, 1.0, rtol, weight="alg", wvar=(y, 0.0))
        near -= val
        errors.append(err)
    total += near
    # s in (1, inf), substitute t = 1/s; integrand is t^-(a1+a2) times a smooth factor.
    def far(t):
        return _expm1_pow_over_t(a1, t) * _expm1_pow_over_t(a2, t)

    val, err = _quad(far, 0.0, 1.0, rtol, weight="alg", wvar=(-(a1 + a2), 0.0))
    total += val
    errors.append(err)
    if sum(errors) > rtol * abs(total):
        raise QuadratureError(
            f"kernel inner product ({h1}, {h2}) reached error {sum(errors):.3g}, "
            f"above relative tolerance {rtol:.1g}"
        )
    return total


def d_constant(h1, h2, rtol: float = 1e-8) -> float:
    """Lag-zero correlation of the two Mandelbrot-Van Ness increment kernels."""
    h1, h2 = _hurst(h1), _hurst(h2)
    if h1 == h2:
        return 1.0
    lo, hi = sorted((h1, h2))
    cross = kernel_inner(lo, hi, rtol)
    return cross / math.sqrt(kernel_inner(lo, lo, rtol) * kernel_inner(hi, hi, rtol))


def cross_rho(h1, h2, k, d: float | None = None):
    """Cross-covariance of the correlated increment pair at lag ``k``."""
    h1, h2 = _hurst(h1), _hurst(h2)
    if d is None:
        d = d_constant(h1, h2)
    return d * fgn_rho(0.5 * (h1 + h2), k)


@dataclass(frozen=True)
class CovarianceModel:
    """Immutable stationary covariance sequence.

    ``kind`` is one of ``"fgn"``, ``"cross"`` or ``"table"``. Tables store
    lags ``0..K`` and extrapolate beyond ``K`` with the power law
    ``rho(K) (k / K)^decay_exponent``.
    """

    kind: str
    h: float | None = None
    h1: float | None = None
    h2: float | None = None
    d: float | None = None
    values: tuple[float, ...] | None = None
    decay_exponent: float | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def fgn(cls, h) -> "CovarianceModel":
        return cls(kind="fgn", h=_hurst(h))

    @classmethod
    def cross(cls, h1, h2, d: float | None = None) -> "CovarianceModel":
        h1, h2 = _hurst(h1), _hurst(h2)
        return cls(kind="cross", h1=h1, h2=h2, d=d_constant(h1, h2) if d is None else float(d))

    @classmethod
    def table(cls, values, decay_exponent: float) -> "CovarianceModel":
        vals = tuple(float(v) for v in np.asarray(values, dtype=float).ravel())
        if not vals:
            raise ValueError("table must contain at least lag 0")
        if any(abs(v) > vals[0] * (1 + 1e-12) for v in vals):
            raise ValueError("table entries must satisfy |rho(k)| <= rho(0)")
        if decay_exponent is None or not math.isfinite(decay_exponent) or decay_exponent >= 0:
            raise ValueError("table kind needs a negative finite decay_exponent")
        return cls(kind="table", values=vals, decay_exponent=float(decay_exponent))

    def __post_init__(self):
        if self.kind not in ("fgn", "cross", "table"):
            raise ValueError(f"unknown covariance kind {self.kind!r}")

    @property
    def tail_exponent(self) -> float:
        if self.kind == "fgn":
            return 2 * self.h - 2
        if self.kind == "cross":
            return self.h1 + self.h2 - 2
        return self.decay_exponent

    def rho(self, k):
        if self.kind == "fgn":
            return fgn_rho(self.h, k)
        if self.kind == "cross":
            return cross_rho(self.h1, self.h2, k, d=self.d)
        k = np.abs(np.asarray(k, dtype=np.int64))
        vals = np.asarray(self.values)
        big = len(vals) - 1
        inside = vals[np.minimum(k, big)]
        with np.errstate(divide="ignore"):
            tail = vals[big] * (np.maximum(k, 1) / max(big, 1)) ** self.decay_exponent
        out = np.where(k <= big, inside, tail)
        return out if out.ndim else float(out)

    def lags(self, n: int) -> np.ndarray:
        """First row ``rho(0), ..., rho(n - 1)`` of the Toeplitz matrix."""
        key = ("lags", n)
        if key not in self._cache:
            arr = np.asarray(self.rho(np.arange(n)), dtype=float)
            arr.setflags(write=False)
            self._cache[key] = arr
        return self._cache[key]

    def toeplitz(self, n: int) -> np.ndarray:
        from scipy.linalg import toeplitz

        return toeplitz(self.lags(n))

    def check_psd(self, n: int, tol: float = 1e-10) -> float:
        """Smallest eigenvalue of the ``n x n`` Toeplitz matrix; raises if below ``-tol``."""
        low = float(np.linalg.eigvalsh(self.toeplitz(n))[0])
        if low < -tol:
            raise PSDError(f"Toeplitz matrix of size {n} has eigenvalue {low:.3g}")
        return low

    def describe(self) -> dict:
        if self.kind == "fgn":
            return {"kind": "fgn", "h": self.h}
        if self.kind == "cross":
            return {"kind": "cross", "h1": self.h1, "h2": self.h2, "d": self.d}
        return {"kind": "table", "len": len(self.values), "decay_exponent": self.decay_exponent}


def write_table_csv(path, model: CovarianceModel, halfwidth: int) -> None:
    """Export lags ``0..halfwidth`` as CSV with columns ``k, rho``."""
    ks = np.arange(halfwidth + 1)
    vals = model.rho(ks)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "rho"])
        for k, v in zip(ks, vals):
            writer.writerow([int(k), repr(float(v))])


def read_table_csv(path, decay_exponent: float) -> CovarianceModel:
    """Import a ``k, rho`` CSV; lags must be ``0..K`` without gaps."""
    rows = list(csv.DictReader(Path(path).read_text().splitlines()))
    ks = [int(r["k"]) for r in rows]
    if ks != list(range(len(ks))):
        raise ValueError("table CSV must list lags 0..K in order")
    return CovarianceModel.table([float(r["rho"]) for r in rows], decay_exponent)
