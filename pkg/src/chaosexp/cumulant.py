"""Exact finite-N moments of the normalized quadratic variation

    F_N = (sum_k X_k^2 - N) / sqrt(N v_N),     bracket = 2 X'RX / (N v_N),

for a stationary Gaussian vector X with Toeplitz covariance R, plus the
correlated-pair analogue. Two disjoint routes: traces of Toeplitz products
streamed row by row (O(N^2) time, O(N) memory), and dense eigenvalues.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .covmodel import CovarianceModel, _hurst, d_constant, fgn_rho
from .errors import PSDError, RegimeError, SingularMatrixError, SizeLimitError

EIGEN_LIMIT = 4096
# exact-density Fourier grid
CHARFUN_HALFWIDTH = 60.0
CHARFUN_STEP = 0.01


@dataclass(frozen=True)
class CumulantReport:
    n: int
    v_n: float
    kappa3: float
    kappa4: float
    gamma_n: float
    rho_n: float
    method: str

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _model(model) -> CovarianceModel:
    if isinstance(model, CovarianceModel):
        return model
    return CovarianceModel.fgn(model)


def variance_vn(model, n: int) -> float:
    """``v_N = 2 sum_{|l| < N} (1 - |l|/N) rho(l)^2``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    r = _model(model).lags(n)
    weights = 1.0 - np.arange(n) / n
    terms = weights * r * r
    return 2.0 * (terms[0] + 2.0 * math.fsum(terms[1:]))


def _full(r: np.ndarray) -> np.ndarray:
    """Symmetric extension: ``out[m + n - 1] = r(|m|)`` for ``|m| < n``."""
    return np.concatenate([r[:0:-1], r])


def toeplitz_product_rows(pairs, n: int):
    """Yield, for ``i = 0..n-1``, the list of row ``i`` of ``P Q`` for each
    ``(p, q)`` pair of symmetric Toeplitz first rows.

    Uses ``(PQ)[i, k] = (PQ)[i-1, k-1] + p(i) q(k) - p(n-i) q(n-k)``.
    """
    prepared = []
    for p, q in pairs:
        p = np.asarray(p, dtype=float)[:n]
        q = np.asarray(q, dtype=float)[:n]
        row0 = np.correlate(_full(q), p, "valid")[::-1]
        col0 = np.correlate(_full(p), q, "valid")[::-1]
        prepared.append((p, q, q[1:], q[:0:-1], row0, col0))
    rows = [item[4].copy() for item in prepared]
    yield rows
    for i in range(1, n):
        nxt = []
        for (p, q, q_fwd, q_rev, _, col0), prev in zip(prepared, rows):
            row = np.empty(n)
            row[0] = col0[i]
            row[1:] = prev[:-1] + p[i] * q_fwd - p[n - i] * q_rev
            nxt.append(row)
        rows = nxt
        yield rows


def _lag_row(full: np.ndarray, i: int, n: int) -> np.ndarray:
    """``r(i - k)`` for ``k = 0..n-1``."""
    return full[i : i + n][::-1]


def toeplitz_traces(r: np.ndarray) -> tuple[float, float, float]:
    """``tr R^2, tr R^3, tr R^4`` for the symmetric Toeplitz matrix with first row ``r``."""
    n = len(r)
    full = _full(r)
    t3, t4 = [], []
    for (m,) in toeplitz_product_rows([(r, r)], n):
        t3.append(float(m @ _lag_row(full, len(t3), n)))
        t4.append(float(m @ m))
    t2 = n * (r[0] ** 2) + 2.0 * math.fsum((n - np.arange(1, n)) * r[1:] ** 2)
    return t2, math.fsum(t3), math.fsum(t4)


def _report_from_traces(n, t2, t3, t4, method, cov_fb=None, var_b=None) -> CumulantReport:
    v = 2.0 * t2 / n
    scale = n * v
    kappa3 = 8.0 * t3 / scale**1.5
    kappa4 = 48.0 * t4 / scale**2
    if var_b is None:
        var_b = 8.0 * t4 / scale**2
    gamma = math.sqrt(var_b)
    if cov_fb is None:
        # kappa3 / (2 gamma) without fractional powers, so R = I gives exactly 1
        rho = t3 / math.sqrt(t2 * t4)
    else:
        rho = cov_fb / gamma
    rho = float(np.clip(rho, -1.0, 1.0))
    return CumulantReport(
        n=n, v_n=float(v), kappa3=float(kappa3), kappa4=float(kappa4),
        gamma_n=float(gamma), rho_n=rho, method=method,
    )


def cumulants_qv(model, n: int) -> CumulantReport:
    """Cumulants of F_N and the bracket moments by streamed Toeplitz traces."""
    if n < 1:
        raise ValueError("n must be >= 1")
    model = _model(model)
    r = np.array(model.lags(n))
    t2, t3, t4 = toeplitz_traces(r)
    if t3 < 0 or t4 <= 0:
        raise PSDError("negative trace of a covariance power; model is not PSD at this size")
    t2 = variance_vn(model, n) * n / 2.0
    return _report_from_traces(n, t2, t3, t4, "toeplitz_sums")


def eigen_oracle(model, n: int) -> CumulantReport:
    """Same report from the spectrum of the dense Toeplitz matrix.

    ``kappa_m = 2^(m-1) (m-1)! sum lambda^m / (N v)^(m/2)``; the bracket
    moments use ``Cov(X'AX, X'BX) = 2 tr(A R B R)`` in the eigenbasis.
    """
    if n > EIGEN_LIMIT:
        raise SizeLimitError(f"eigen oracle is limited to n <= {EIGEN_LIMIT}")
    lam = toeplitz_eigenvalues(_model(model), n)
    if lam[0] < -1e-10:
        raise PSDError(f"Toeplitz matrix has eigenvalue {lam[0]:.3g}")
    p2, p3, p4 = (math.fsum(lam**m) for m in (2, 3, 4))
    v = 2.0 * p2 / n
    scale = n * v
    cov_fb = 4.0 * p3 / scale**1.5
    var_b = 8.0 * p4 / scale**2
    return _report_from_traces(n, p2, p3, p4, "eigen_oracle", cov_fb=cov_fb, var_b=var_b)


def toeplitz_eigenvalues(model, n: int) -> np.ndarray:
    from scipy.linalg import eigvalsh

    return eigvalsh(_model(model).toeplitz(n), overwrite_a=True, check_finite=False)


def cumulant_sweep(model, ns) -> list[CumulantReport]:
    return [cumulants_qv(model, int(n)) for n in ns]


# ---------------------------------------------------------------------------
# Exact law of F_N


def exact_charfun(lam_eigs: np.ndarray, t) -> np.ndarray:
    """Characteristic function of ``(X'X - N)/sqrt(N v_N)`` given the covariance spectrum."""
    lam_eigs = np.asarray(lam_eigs, dtype=float)
    n = lam_eigs.size
    scale = math.sqrt(2.0 * math.fsum(lam_eigs**2))  # sqrt(N v_N)
    a = lam_eigs / scale
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape, dtype=complex)
    for start in range(0, t.size, 256):
        tt = t[start : start + 256, None]
        z = 1.0 - 2j * tt * a[None, :]
        out[start : start + 256] = np.exp(np.sum(-0.5 * np.log(z) - 1j * tt * a[None, :], axis=1))
    # the statistic is centred: sum a = N / scale only when all lambda = 1;
    # restore the centring by the actual trace
    shift = (math.fsum(lam_eigs) - n) / scale
    return out * np.exp(1j * t * shift)


def exact_density(model, n: int, x, lam_eigs: np.ndarray | None = None,
                  halfwidth: float = CHARFUN_HALFWIDTH, step: float = CHARFUN_STEP) -> np.ndarray:
    """Density of F_N by trapezoidal Fourier inversion of the exact characteristic function."""
    if lam_eigs is None:
        lam_eigs = toeplitz_eigenvalues(model, n)
    t = np.arange(0.0, halfwidth + step / 2, step)
    phi = exact_charfun(lam_eigs, t)
    weights = np.full(t.size, step)
    weights[0] = step / 2
    x = np.atleast_1d(np.asarray(x, dtype=float))
    # real part of (1/pi) int_0^inf e^{-itx} phi(t) dt
    return (np.cos(np.outer(x, t)) @ (weights * phi.real) + np.sin(np.outer(x, t)) @ (weights * phi.imag)) / np.pi


# ---------------------------------------------------------------------------
# Correlated pair


@dataclass(frozen=True)
class CrossMoments2D:
    """Finite-N covariances of ``(F1, F2, B11, B22, Y)``.

    ``B_ii = sqrt(N)(Lambda_ii - 1)``, ``Y = sqrt(N)(Lambda_12 - E Lambda_12)``.
    Labels follow :class:`chaosexp.seqcalc.LimitConstants`.
    """

    h1: float
    h2: float
    n: int
    d: float
    v1: float
    v2: float
    ef1f2: float
    mean_bracket12: float
    cross_moments: dict
    y_moments: dict
    var_y: float

    def covariance_matrix(self) -> np.ndarray:
        m, y = self.cross_moments, self.y_moments
        return np.array(
            [
                [1.0, self.ef1f2, m["g11"], m["g12"], y["fy1"]],
                [self.ef1f2, 1.0, m["g21"], m["g22"], y["fy2"]],
                [m["g11"], m["g21"], m["b11"], m["b12"], y["by1"]],
                [m["g12"], m["g22"], m["b12"], m["b22"], y["by2"]],
                [y["fy1"], y["fy2"], y["by1"], y["by2"], self.var_y],
            ]
        )

    def to_dict(self) -> dict:
        return asdict(self)


def cross_cumulants_2d(h1, h2, n: int, d: float | None = None) -> CrossMoments2D:
    """Exact finite-N moments for the pair driven by fGn(h1), fGn(h2) with
    cross-covariance ``D rho_{(h1+h2)/2}``."""
    h1, h2 = _hurst(h1), _hurst(h2)
    if h1 + h2 >= 1.5:
        raise RegimeError("pair moments need h1 + h2 < 3/2")
    if d is None:
        d = d_constant(h1, h2)
    hm = 0.5 * (h1 + h2)
    ks = np.arange(n)
    r1, r2, rm = (np.asarray(fgn_rho(h, ks), dtype=float) for h in (h1, h2, hm))
    f1, f2, fm = _full(r1), _full(r2), _full(rm)
    acc = {key: [] for key in ("t1_3", "t2_3", "t_m2_2", "t_m2_1", "t1_4", "t2_4", "t_1m2m", "t_1m_m2", "t_2m_m2", "t_m_4")}
    # row i of A B dotted with row i of C D is tr(A B (C D)^T), so the mixed
    # trace pairs rows of R1 Rm with rows of Rm R2
    pairs = [(r1, r1), (r2, r2), (rm, rm), (r1, rm), (rm, r2)]
    for i, (s11, s22, smm, s1m, sm2) in enumerate(toeplitz_product_rows(pairs, n)):
        acc["t1_3"].append(float(s11 @ _lag_row(f1, i, n)))
        acc["t2_3"].append(float(s22 @ _lag_row(f2, i, n)))
        acc["t_m2_1"].append(float(smm @ _lag_row(f1, i, n)))  # tr(R1 Rm^2)
        acc["t_m2_2"].append(float(smm @ _lag_row(f2, i, n)))  # tr(R2 Rm^2)
        acc["t1_4"].append(float(s11 @ s11))
        acc["t2_4"].append(float(s22 @ s22))
        acc["t_1m2m"].append(float(s1m @ sm2))  # tr(R1 Rm R2 Rm)
        acc["t_1m_m2"].append(float(s11 @ smm))  # tr(R1^2 Rm^2)
        acc["t_2m_m2"].append(float(s22 @ smm))  # tr(R2^2 Rm^2)
        acc["t_m_4"].append(float(smm @ smm))  # tr(Rm^4)
    t = {key: math.fsum(vals) for key, vals in acc.items()}
    lag_w = n - np.arange(1, n)

    def tr2(a, b):
        return n * a[0] * b[0] + 2.0 * math.fsum(lag_w * a[1:] * b[1:])

    a1, a2 = 2.0 * tr2(r1, r1), 2.0 * tr2(r2, r2)  # N v_i
    s1, s2 = math.sqrt(a1), math.sqrt(a2)
    d2 = d * d
    rn = math.sqrt(n)
    ef1f2 = 2.0 * d2 * tr2(rm, rm) / (s1 * s2)
    cross = {
        "g11": 4.0 * rn * t["t1_3"] / a1**1.5,
        "g22": 4.0 * rn * t["t2_3"] / a2**1.5,
        "g12": 4.0 * rn * d2 * t["t_m2_2"] / (s1 * a2),
        "g21": 4.0 * rn * d2 * t["t_m2_1"] / (s2 * a1),
        "b11": 8.0 * n * t["t1_4"] / a1**2,
        "b22": 8.0 * n * t["t2_4"] / a2**2,
        "b12": 8.0 * n * d2 * t["t_1m2m"] / (a1 * a2),
    }
    ys = {
        "fy1": 4.0 * rn * d2 * t["t_m2_1"] / (a1 * s2),
        "fy2": 4.0 * rn * d2 * t["t_m2_2"] / (a2 * s1),
        "by1": 8.0 * n * d2 * t["t_1m_m2"] / (a1**1.5 * s2),
        "by2": 8.0 * n * d2 * t["t_2m_m2"] / (a2**1.5 * s1),
    }
    var_y = 4.0 * n * d2 * (t["t_1m2m"] + d2 * t["t_m_4"]) / (a1 * a2)
    return CrossMoments2D(
        h1=h1, h2=h2, n=n, d=d, v1=a1 / n, v2=a2 / n, ef1f2=ef1f2,
        mean_bracket12=ef1f2, cross_moments=cross, y_moments=ys, var_y=var_y,
    )


def regression_coeffs(c, cross) -> np.ndarray:
    """Solve ``C rho[:, j, k] = cross[:, j, k]``.

    ``cross[a, j, k] = E(Z2^(j,k) Z1^a)``; the result is indexed ``[a, j, k]``.
    A scalar ``c`` and ``cross`` are accepted for the one-dimensional case.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    cross = np.asarray(cross, dtype=float)
    dim = c.shape[0]
    if c.shape != (dim, dim) or not np.allclose(c, c.T, rtol=0, atol=1e-14):
        raise ValueError("c must be a symmetric square matrix")
    if cross.ndim == 0:
        cross = cross.reshape(1, 1, 1)
    if cross.shape != (dim, dim, dim):
        raise ValueError(f"cross must have shape {(dim, dim, dim)}")
    try:
        chol = np.linalg.cholesky(c)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("c is not positive definite") from exc
    if np.linalg.cond(c) > 1e12:
        raise SingularMatrixError("c is numerically singular")
    from scipy.linalg import cho_solve

    flat = cross.reshape(dim, dim * dim)
    return cho_solve((chol, True), flat).reshape(dim, dim, dim)
