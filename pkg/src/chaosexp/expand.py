"""First-order expansion of the law of a chaos statistic around its Gaussian limit.

The dominant characteristic function is

    phi_N(lam) = exp(-lam'C lam / 2) (1 - i gamma/3 sum_{ijka} lam_i lam_j lam_k rho^a_jk C_ia)

and its inverse Fourier transform, the approximate density, is

    p_N(x) = phi_C(x) + gamma/3 sum_{ijka} rho^a_jk C_ia h_ijk(x; C) phi_C(x)

with ``h_ijk phi_C = -d^3 phi_C / dx_i dx_j dx_k``. In one dimension with C = 1
this is ``p(x) (1 + rho gamma H_3(x) / 3)``.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PSDError

SQRT_2PI = math.sqrt(2.0 * math.pi)


def hermite(k: int, x):
    """Probabilists' Hermite polynomial ``H_k`` by the three-term recurrence."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for j in range(k):
        prev, cur = cur, x * cur - j * prev
    return cur if cur.ndim else float(cur)


def gauss_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


@dataclass(frozen=True)
class ExpansionModel:
    """Data ``(C, rho^a_jk, gamma)`` of the expansion.

    ``rho_coeffs`` is indexed ``[a, j, k]`` and symmetric in ``(j, k)``.
    """

    c: np.ndarray
    rho_coeffs: np.ndarray
    gamma: float
    dim: int = field(init=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        dim = c.shape[0]
        rho = np.asarray(self.rho_coeffs, dtype=float).reshape(dim, dim, dim)
        if c.shape != (dim, dim) or not np.allclose(c, c.T, rtol=0, atol=1e-13):
            raise ValueError("c must be a symmetric square matrix")
        try:
            np.linalg.cholesky(c)
        except np.linalg.LinAlgError as exc:
            raise PSDError("c must be positive definite") from exc
        if not np.allclose(rho, rho.transpose(0, 2, 1), rtol=0, atol=1e-13):
            raise ValueError("rho_coeffs must be symmetric in the last two indices")
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")
        if dim == 1 and abs(rho[0, 0, 0]) > 1 + 1e-12:
            raise ValueError("one-dimensional rho must lie in [-1, 1]")
        for arr in (c, rho):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "rho_coeffs", rho)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "dim", dim)

    @classmethod
    def one_dim(cls, rho: float, gamma: float) -> "ExpansionModel":
        return cls(c=[[1.0]], rho_coeffs=[[[rho]]], gamma=gamma)

    @property
    def rho(self) -> float:
        if self.dim != 1:
            raise AttributeError("rho shortcut exists only for dim = 1")
        return float(self.rho_coeffs[0, 0, 0])

    def third_order_tensor(self) -> np.ndarray:
        """``T_ijk = sum_a C_ia rho^a_jk``, symmetrized over all three indices."""
        t = np.einsum("ia,ajk->ijk", self.c, self.rho_coeffs)
        perms = itertools.permutations(range(3))
        return sum(t.transpose(p) for p in perms) / 6.0

    def to_dict(self) -> dict:
        return {"dim": self.dim, "c": self.c.tolist(), "rho_coeffs": self.rho_coeffs.tolist(), "gamma": self.gamma}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ExpansionModel":
        return cls(c=data["c"], rho_coeffs=data["rho_coeffs"], gamma=data["gamma"])


def pair_model(limits, n: int) -> ExpansionModel:
    """Two-dimensional model from pair limit constants with ``gamma = n^(-1/2)``."""
    from .cumulant import regression_coeffs

    c = limits.c_matrix()
    return ExpansionModel(c=c, rho_coeffs=regression_coeffs(c, limits.bracket_cross()), gamma=n**-0.5)


# ---------------------------------------------------------------------------
# One dimension


def _check_dim(model: ExpansionModel, dim: int):
    if model.dim != dim:
        raise ValueError(f"model has dim {model.dim}, expected {dim}")


def charfun_1d(model: ExpansionModel, lam):
    _check_dim(model, 1)
    lam = np.asarray(lam, dtype=float)
    out = np.exp(-0.5 * lam * lam) * (1.0 - 1j * (model.rho / 3.0) * model.gamma * lam**3)
    return out if out.ndim else complex(out)


def correction_1d(model: ExpansionModel, x):
    """``p_N - p``, the first-order term."""
    _check_dim(model, 1)
    x = np.asarray(x, dtype=float)
    return (model.rho / 3.0) * model.gamma * hermite(3, x) * gauss_pdf(x)


def density_1d(model: ExpansionModel, x):
    _check_dim(model, 1)
    x = np.asarray(x, dtype=float)
    out = gauss_pdf(x) + correction_1d(model, x)
    return out if out.ndim else float(out)


def cdf_1d(model: ExpansionModel, x):
    """``int_{-inf}^x p_N``, using ``int H_3 p = -H_2 p``."""
    from scipy.special import ndtr

    _check_dim(model, 1)
    x = np.asarray(x, dtype=float)
    out = ndtr(x) - (model.rho / 3.0) * model.gamma * hermite(2, x) * gauss_pdf(x)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Several dimensions


def charfun_multi(model: ExpansionModel, lam):
    """Dominant characteristic function at points ``lam`` of shape ``(..., dim)``."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != model.dim:
        raise ValueError("last axis of lam must equal model.dim")
    quad = np.einsum("...i,ij,...j->...", lam, model.c, lam)
    cubic = np.einsum("...i,...j,...k,ijk->...", lam, lam, lam, model.third_order_tensor())
    out = np.exp(-0.5 * quad) * (1.0 - 1j * model.gamma / 3.0 * cubic)
    return out if out.ndim else complex(out)


def gauss_pdf_multi(x, c):
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    prec = np.linalg.inv(c)
    dim = c.shape[0]
    quad = np.einsum("...i,ij,...j->...", x, prec, x)
    return np.exp(-0.5 * quad) / math.sqrt((2 * math.pi) ** dim * np.linalg.det(c))


def hermite3_multi(x, c):
    """Tensor ``h_ijk(x; C)`` with ``h_ijk phi_C = -d^3 phi_C / dx_i dx_j dx_k``."""
    prec = np.linalg.inv(np.asarray(c, dtype=float))
    y = np.einsum("ij,...j->...i", prec, np.asarray(x, dtype=float))
    out = np.einsum("...i,...j,...k->...ijk", y, y, y)
    out -= np.einsum("ij,...k->...ijk", prec, y)
    out -= np.einsum("ik,...j->...ijk", prec, y)
    out -= np.einsum("jk,...i->...ijk", prec, y)
    return out


def density_multi(model: ExpansionModel, x):
    """Approximate density at points ``x`` of shape ``(..., dim)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.dim:
        raise ValueError("last axis of x must equal model.dim")
    base = gauss_pdf_multi(x, model.c)
    t = model.third_order_tensor()
    corr = np.einsum("...ijk,ijk->...", hermite3_multi(x, model.c), t)
    out = base * (1.0 + model.gamma / 3.0 * corr)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Polynomials of the derivative bounds


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return out


def _poly_diff(a: dict, i: int) -> dict:
    out: dict = {}
    for e, coef in a.items():
        if e[i]:
            f = list(e)
            f[i] -= 1
            out[tuple(f)] = out.get(tuple(f), 0.0) + coef * e[i]
    return out


def _poly_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for e, coef in b.items():
        out[e] = out.get(e, 0.0) + coef
    return out


def _poly_eval(a: dict, u: np.ndarray) -> float:
    return math.fsum(coef * float(np.prod(u ** np.array(e))) for e, coef in a.items())


def s_beta_poly(beta, c) -> dict:
    """``S_beta(., C)`` as a polynomial ``{exponent tuple: coefficient}`` in ``u``."""
    beta = tuple(int(b) for b in beta)
    if sum(beta) > 6 or min(beta, default=0) < 0:
        raise ValueError("multi-index must be non-negative with |beta| <= 6")
    c = np.atleast_2d(np.asarray(c, dtype=float))
    dim = len(beta)
    zero = (0,) * dim
    poly = {zero: 1.0}
    for i, count in enumerate(beta):
        cu_i = {tuple(int(m == j) for m in range(dim)): c[i, j] for j in range(dim)}
        for _ in range(count):
            poly = _poly_add(_poly_mul(cu_i, poly), _poly_diff(poly, i))
    return poly


def s_beta(beta, u, c) -> float:
    """``S_beta(u, C) = exp(-u'Cu/2) d^beta exp(u'Cu/2)``."""
    return _poly_eval(s_beta_poly(beta, c), np.asarray(u, dtype=float))


def s_beta_bound(beta, u, c) -> float:
    """Explicit right-hand side of ``|S_beta| <= sum_j c_j |u|^j |C|^((j + |beta|)/2)``.

    Every term of ``S_beta`` is a product of ``j`` factors ``(Cu)_i`` and
    ``(|beta| - j)/2`` entries of ``C``; ``c_j`` counts them (partial matchings).
    Norms: Euclidean for ``u``, spectral for ``C``.
    """
    order = int(sum(beta))
    unorm = float(np.linalg.norm(u))
    cnorm = float(np.linalg.norm(np.atleast_2d(c), 2))
    total = 0.0
    for j in range(order % 2, order + 1, 2):
        pairs = (order - j) // 2
        count = math.factorial(order) / (math.factorial(j) * math.factorial(pairs) * 2**pairs)
        total += count * unorm**j * cnorm ** ((j + order) / 2)
    return total


def p_alpha(alpha, u, z, c) -> complex:
    """``P_alpha(u, z, C) = sum_{beta <= alpha} binom(alpha, beta) (-i)^|beta| z^(alpha - beta) S_beta(u, C)``."""
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) > 6:
        raise ValueError("|alpha| must be <= 6")
    z = np.asarray(z, dtype=float)
    total = 0j
    for beta in itertools.product(*(range(a + 1) for a in alpha)):
        binom = math.prod(math.comb(a, b) for a, b in zip(alpha, beta))
        zpow = float(np.prod(z ** (np.array(alpha) - np.array(beta))))
        total += binom * (-1j) ** sum(beta) * zpow * s_beta(beta, u, c)
    return total


# ---------------------------------------------------------------------------
# Truncation


def _smooth_step_core(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, np.exp(-1.0 / safe), 0.0)


def psi_profile(x):
    """C-infinity cutoff: 1 on ``|x| <= 1/2``, 0 on ``|x| >= 1``, monotone between."""
    ax = np.abs(np.asarray(x, dtype=float))
    up = _smooth_step_core(1.0 - ax)
    down = _smooth_step_core(ax - 0.5)
    out = up / (up + down)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TruncationSpec:
    k_const: float = 1.0
    delta: float = 0.5

    def __post_init__(self):
        if not self.k_const > 0:
            raise ValueError("k_const must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    def psi(self, x):
        return psi_profile(x)


def truncation_weight(spec: TruncationSpec, bracket_dev, gamma: float):
    """``psi((K |bracket_dev| / gamma^delta)^2)``; ``bracket_dev`` may be a matrix
    norm already reduced to a scalar per sample."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    arg = (spec.k_const * np.abs(np.asarray(bracket_dev, dtype=float)) / gamma**spec.delta) ** 2
    return spec.psi(arg)


def write_grid_csv(path, model: ExpansionModel, x) -> None:
    """CSV with columns ``x, p, p_N, correction`` for a one-dimensional model."""
    x = np.asarray(x, dtype=float)
    base, corr = gauss_pdf(x), correction_1d(model, x)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "p", "p_N", "correction"])
        for row in zip(x, base, base + corr, corr):
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# Numeric Fourier inversion (independent of the closed forms above)


def invert_charfun_1d(charfun, x, lam_max: float = 40.0, step: float = 0.02):
    """``(1/2pi) int e^{-i lam x} charfun(lam) d lam`` by the trapezoidal rule.

    ``charfun`` must be Hermitian (``charfun(-lam) = conj charfun(lam)``) and
    negligible beyond ``lam_max``; aliasing images sit ``2pi/step`` apart.
    """
    lam = np.arange(0.0, lam_max + step / 2, step)
    w = np.full(lam.size, step)
    w[0] = step / 2
    phi = np.asarray(charfun(lam), dtype=complex) * w
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.size)
    for s in range(0, x.size, 512):
        arg = np.outer(x[s : s + 512], lam)
        out[s : s + 512] = np.cos(arg) @ phi.real + np.sin(arg) @ phi.imag
    return out / np.pi


def invert_charfun_2d(charfun, x1, x2, lam_max: float = 70.0, step: float = 0.25):
    """Two-dimensional trapezoidal inversion on the tensor grid ``x1 x x2``.

    ``charfun`` takes an array of shape ``(m, m, 2)``. Returns shape ``(len(x1), len(x2))``.
    """
    lam = np.arange(-lam_max, lam_max + step / 2, step)
    grid = np.stack(np.meshgrid(lam, lam, indexing="ij"), axis=-1)
    phi = np.asarray(charfun(grid), dtype=complex)
    e1 = np.exp(-1j * np.outer(np.asarray(x1, dtype=float), lam))
    e2 = np.exp(-1j * np.outer(np.asarray(x2, dtype=float), lam))
    return (e1 @ phi @ e2.T).real * step**2 / (2 * np.pi) ** 2
