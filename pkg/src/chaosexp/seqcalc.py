"""Calculus on symmetric summable sequences indexed by the integers, and the
limit constants of the quadratic-variation examples.

Two independent routes are available:

* lag domain: :class:`SummableSeq` tables with a power-law tail envelope,
  truncated convolutions and norms that carry explicit tail bounds;
* frequency domain: every constant is an integral over ``[-pi, pi]`` of a
  product of fGn spectral densities (Parseval), evaluated by quadrature with
  an algebraic weight at the origin. This is what :func:`limit_constants`
  uses, because lag sums near h = 5/8 converge like ``K^(8h - 5)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special

from .covmodel import EXPANSION_THRESHOLD, L2_THRESHOLD, _hurst, d_constant, fgn_rho
from .errors import DivergenceError, QuadratureError, RegimeError, ToleranceError

DEFAULT_HALFWIDTH = 100_000
CONSTANT_TOL = 1e-8


@dataclass(frozen=True)
class SummableSeq:
    """Symmetric sequence stored on lags ``0..K``.

    Beyond ``K`` the magnitude is bounded by ``tail_amplitude * k^tail_exponent``.
    When ``tail_amplitude`` is omitted it is anchored at the last stored lag,
    which is an upper envelope for sequences whose ratio to the power law
    decreases (true for fGn).
    """

    values: np.ndarray
    tail_exponent: float
    tail_amplitude: float | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("values must be a non-empty 1-d table of lags 0..K")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.tail_amplitude is None:
            big = vals.size - 1
            amp = abs(vals[big]) / big**self.tail_exponent if big > 0 else 0.0
            object.__setattr__(self, "tail_amplitude", float(amp))

    @property
    def halfwidth(self) -> int:
        return self.values.size - 1

    def full(self) -> np.ndarray:
        """Values on ``-K..K``."""
        return np.concatenate([self.values[:0:-1], self.values])

    def __call__(self, k):
        k = np.abs(np.asarray(k, dtype=np.int64))
        inside = self.values[np.minimum(k, self.halfwidth)]
        return np.where(k <= self.halfwidth, inside, 0.0)

    def tail_power_sum(self, p: float) -> float:
        """Envelope bound on ``sum_{|k| > K} |u(k)|^p``."""
        if self.tail_amplitude == 0.0:
            return 0.0
        s = -self.tail_exponent * p
        if s <= 1.0:
            raise DivergenceError(
                f"tail exponent {self.tail_exponent} is not {p}-summable"
            )
        return float(2.0 * self.tail_amplitude**p * special.zeta(s, self.halfwidth + 1))

    def power_sum(self, p: float) -> float:
        """``sum_{|k| <= K} |u(k)|^p``."""
        mags = np.abs(self.values) ** p
        return float(mags[0] + 2.0 * math.fsum(mags[1:]))


def delta_seq(halfwidth: int = 0) -> SummableSeq:
    vals = np.zeros(halfwidth + 1)
    vals[0] = 1.0
    return SummableSeq(vals, tail_exponent=-2.0, tail_amplitude=0.0)


def fgn_seq(h, halfwidth: int = DEFAULT_HALFWIDTH) -> SummableSeq:
    h = _hurst(h)
    if h == 0.5:
        return delta_seq(halfwidth)
    return SummableSeq(fgn_rho(h, np.arange(halfwidth + 1)), tail_exponent=2 * h - 2)


def lp_norm(u: SummableSeq, p: float, tol: float = math.inf) -> float:
    """``(sum |u(k)|^p)^(1/p)``; the envelope tail sum is added and its size
    is the reported error, which must not exceed ``tol``."""
    value, err = lp_norm_with_error(u, p)
    if err > tol:
        raise ToleranceError(f"l^{p} tail error {err:.3g} exceeds tolerance {tol:.3g}")
    return value


def lp_norm_with_error(u: SummableSeq, p: float) -> tuple[float, float]:
    if p < 1:
        raise ValueError("p must be >= 1")
    head = u.power_sum(p)
    tail = u.tail_power_sum(p)
    value = (head + tail) ** (1.0 / p)
    return value, value - head ** (1.0 / p)


def inner(u: SummableSeq, v: SummableSeq) -> tuple[float, float]:
    """``sum_k u(k) v(k)`` over the common support, with a Cauchy-Schwarz tail bound."""
    k = min(u.halfwidth, v.halfwidth)
    prod = u.values[: k + 1] * v.values[: k + 1]
    head = float(prod[0] + 2.0 * math.fsum(prod[1:]))
    uu = SummableSeq(u.values[: k + 1], u.tail_exponent, u.tail_amplitude)
    vv = SummableSeq(v.values[: k + 1], v.tail_exponent, v.tail_amplitude)
    err = math.sqrt(uu.tail_power_sum(2) * vv.tail_power_sum(2))
    return head, err


def _linear_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    size = a.size + b.size - 1
    nfft = 1 << (size - 1).bit_length()
    return np.fft.irfft(np.fft.rfft(a, nfft) * np.fft.rfft(b, nfft), nfft)[:size]


def convolve(u: SummableSeq, v: SummableSeq, out_halfwidth: int | None = None) -> tuple[SummableSeq, float]:
    """Truncated convolution ``(u * v)(j) = sum_n u(n) v(j - n)`` for ``|j| <= out_halfwidth``.

    Terms with an index outside either table are dropped; the returned error
    bounds their total uniformly in ``j`` by Cauchy-Schwarz on the l^2 tails.
    """
    if out_halfwidth is None:
        out_halfwidth = min(u.halfwidth, v.halfwidth)
    full = _linear_convolve(u.full(), v.full())
    centre = u.halfwidth + v.halfwidth
    vals = full[centre : centre + out_halfwidth + 1]
    if out_halfwidth > centre:
        vals = np.concatenate([vals, np.zeros(out_halfwidth - centre)])
    u2 = u.power_sum(2) + u.tail_power_sum(2)
    v2 = v.power_sum(2) + v.tail_power_sum(2)
    err = math.sqrt(u.tail_power_sum(2) * v2) + math.sqrt(v.tail_power_sum(2) * u2)
    exponent = max(u.tail_exponent, v.tail_exponent, u.tail_exponent + v.tail_exponent + 1)
    return SummableSeq(vals, tail_exponent=exponent), err


# ---------------------------------------------------------------------------
# Frequency-domain route


def _aliased_factor(h: float, w):
    """Smooth factor ``g`` with spectral density ``f_h(w) = g(w) |w|^(1 - 2h)``.

    The periodized power series is summed with Hurwitz zeta functions.
    """
    s = 2 * h + 1
    w = np.asarray(w, dtype=float)
    two_pi = 2 * np.pi
    aliased = two_pi ** (-s) * (special.zeta(s, 1 + w / two_pi) + special.zeta(s, 1 - w / two_pi))
    # (1 - cos w) / w^2 written through sinc to avoid cancellation
    bump = 0.5 * np.sinc(w / two_pi) ** 2
    return 2 * math.sin(math.pi * h) * special.gamma(2 * h + 1) * bump * (1 + w**s * aliased)


def spectral_density(h, w):
    """fGn spectral density normalized so ``rho(k) = (1/2pi) int f(w) e^{ikw} dw``."""
    h = _hurst(h)
    w = np.abs(np.asarray(w, dtype=float))
    return _aliased_factor(h, w) * w ** (1 - 2 * h)


def spectral_product_sum(hs, rtol: float = 1e-12) -> tuple[float, float]:
    """``(1/2pi) int prod_i f_{h_i}`` over one period, with its quadrature error.

    For two factors this is ``<rho_a, rho_b>``; for three ``<rho_a * rho_b, rho_c>``;
    for four ``<rho_a * rho_b, rho_c * rho_d>`` (``*`` = convolution).
    """
    hs = [_hurst(h) for h in hs]
    power = sum(1 - 2 * h for h in hs)
    if power <= -1:
        raise DivergenceError(f"product of spectral densities for {hs} is not integrable")
    if all(h == 0.5 for h in hs):
        return 1.0, 0.0

    def smooth(w):
        out = 1.0
        for h in hs:
            out = out * _aliased_factor(h, w)
        return out

    val, err = integrate.quad(
        smooth, 0.0, np.pi, weight="alg", wvar=(power, 0.0), epsabs=0.0, epsrel=rtol, limit=400
    )
    return val / np.pi, err / np.pi


# ---------------------------------------------------------------------------
# Limit constants


CROSS_LABELS = ("g11", "g22", "g12", "g21", "b11", "b22", "b12")
Y_LABELS = ("fy1", "fy2", "by1", "by2")


@dataclass(frozen=True)
class LimitConstants:
    """Large-N limits for the pair statistic ``(F1, F2)`` and its brackets.

    Labels: ``g_ij = lim Cov(F_i, B_jj)``, ``b_ij = lim Cov(B_ii, B_jj)`` where
    ``B_ii = sqrt(N)(Lambda_ii - 1)``; ``fy_i = lim Cov(F_i, Y)``,
    ``by_i = lim Cov(B_ii, Y)`` and ``c0 = lim Var Y`` with
    ``Y = sqrt(N)(Lambda_12 - E Lambda_12)``.
    """

    h1: float
    h2: float
    d: float
    c_v1: float
    c_v2: float
    c12: float
    c0: float
    cross_moments: dict
    y_moments: dict
    error: float
    c0_unscaled: float = field(default=math.nan)

    def covariance_matrix(self) -> np.ndarray:
        """5x5 limit covariance of ``(F1, F2, B11, B22, Y)``."""
        m = self.cross_moments
        y = self.y_moments
        return np.array(
            [
                [1.0, self.c12, m["g11"], m["g12"], y["fy1"]],
                [self.c12, 1.0, m["g21"], m["g22"], y["fy2"]],
                [m["g11"], m["g21"], m["b11"], m["b12"], y["by1"]],
                [m["g12"], m["g22"], m["b12"], m["b22"], y["by2"]],
                [y["fy1"], y["fy2"], y["by1"], y["by2"], self.c0],
            ]
        )

    def bracket_cross(self) -> np.ndarray:
        """``E[Z2^(j,k) Z1^a]`` indexed ``[a, j, k]`` for the expansion model."""
        m, y = self.cross_moments, self.y_moments
        out = np.empty((2, 2, 2))
        out[0] = [[m["g11"], y["fy1"]], [y["fy1"], m["g12"]]]
        out[1] = [[m["g21"], y["fy2"]], [y["fy2"], m["g22"]]]
        return out

    def c_matrix(self) -> np.ndarray:
        return np.array([[1.0, self.c12], [self.c12, 1.0]])

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def cv_limit(h) -> float:
    """``2 sum_k rho_h(k)^2``, finite for h < 3/4."""
    h = _hurst(h)
    if h >= L2_THRESHOLD:
        raise DivergenceError(f"sum of squared fGn covariances diverges for h={h}")
    val, _ = spectral_product_sum([h, h])
    return 2.0 * val


def limit_constants(h1, h2, tol: float = CONSTANT_TOL) -> LimitConstants:
    """All limit constants for the pair ``(h1, h2)``, each to absolute error ``tol``."""
    h1, h2 = _hurst(h1), _hurst(h2)
    if h1 + h2 >= 1.5:
        raise RegimeError("cross constant needs h1 + h2 < 3/2")
    if max(h1, h2) >= EXPANSION_THRESHOLD:
        raise DivergenceError("fourth-order constants need h1, h2 < 5/8")
    hm = 0.5 * (h1 + h2)
    d = d_constant(h1, h2)
    errs = []

    def s(*hs):
        val, err = spectral_product_sum(hs)
        errs.append(err)
        return val

    cv1, cv2 = 2 * s(h1, h1), 2 * s(h2, h2)
    r1, r2 = math.sqrt(cv1), math.sqrt(cv2)
    d2 = d * d
    c12 = 2 * d2 * s(hm, hm) / math.sqrt(cv1 * cv2)  # exact 1 on the diagonal
    four_mixed = s(h1, hm, h2, hm)
    four_m = s(hm, hm, hm, hm)
    cross = {
        "g11": 4 * s(h1, h1, h1) / cv1**1.5,
        "g22": 4 * s(h2, h2, h2) / cv2**1.5,
        "g12": 4 * d2 * s(hm, h2, hm) / (r1 * cv2),
        "g21": 4 * d2 * s(hm, h1, hm) / (r2 * cv1),
        "b11": 8 * s(h1, h1, h1, h1) / cv1**2,
        "b22": 8 * s(h2, h2, h2, h2) / cv2**2,
        "b12": 8 * d2 * four_mixed / (cv1 * cv2),
    }
    ys = {
        "fy1": 4 * d2 * s(h1, hm, hm) / (cv1 * r2),
        "fy2": 4 * d2 * s(h2, hm, hm) / (cv2 * r1),
        "by1": 8 * d2 * s(h1, h1, hm, hm) / (cv1**1.5 * r2),
        "by2": 8 * d2 * s(h2, h2, hm, hm) / (cv2**1.5 * r1),
    }
    inner_sum = four_mixed + d2 * four_m
    c0 = 4 * d2 * inner_sum / (cv1 * cv2)
    # magnitudes are O(1) after normalization; scale raw errors conservatively
    error = 16.0 * sum(errs) / min(cv1, cv2) ** 2
    if error > tol:
        raise QuadratureError(f"limit constants reached error {error:.3g} > {tol:.1g}")
    return LimitConstants(
        h1=h1, h2=h2, d=d, c_v1=cv1, c_v2=cv2, c12=c12, c0=c0,
        cross_moments=cross, y_moments=ys, error=error,
        c0_unscaled=d2 * 0.5 * inner_sum / (cv1 * cv2),
    )
