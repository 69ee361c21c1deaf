"""Exact Gaussian sampling of stationary sequences and of the correlated pair.

Circulant embedding of size 2N: the first row ``rho(0..N), rho(N-1..1)`` is
diagonalized by the FFT. One complex standard normal vector yields two
independent paths (real and imaginary parts). When the embedding spectrum
has a negative entry the sampler falls back to a dense factorization.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..covmodel import CovarianceModel, d_constant, fgn_rho
from ..errors import PSDError, SizeLimitError

DENSE_LIMIT = 4096
SPECTRUM_TOL = 1e-10
# complex draws per inner chunk; bounds peak memory for long paths
CHUNK_ELEMENTS = 1 << 22


def embedding_spectrum(lags_0_to_n: np.ndarray) -> np.ndarray:
    """Eigenvalues of the 2N circulant whose first row extends ``rho(0..N)``."""
    r = np.asarray(lags_0_to_n, dtype=float)
    row = np.concatenate([r, r[-2:0:-1]])
    return np.fft.fft(row).real


def _nonneg(spec: np.ndarray) -> np.ndarray | None:
    floor = -SPECTRUM_TOL * max(1.0, float(np.max(np.abs(spec))))
    if spec.min() < floor:
        return None
    return np.clip(spec, 0.0, None)


@dataclass(frozen=True)
class StationarySampler:
    n: int
    lags: np.ndarray  # rho(0..n)
    spectrum: np.ndarray | None  # embedding eigenvalues, None when dense
    dense_factor: np.ndarray | None

    @classmethod
    def build(cls, model: CovarianceModel, n: int) -> "StationarySampler":
        lags = np.asarray(model.rho(np.arange(n + 1)), dtype=float)
        spec = _nonneg(embedding_spectrum(lags))
        if spec is not None:
            return cls(n, lags, spec, None)
        if n > DENSE_LIMIT:
            raise SizeLimitError(f"embedding not PSD and n={n} exceeds dense limit {DENSE_LIMIT}")
        return cls(n, lags, None, _dense_factor(model.toeplitz(n)))

    @property
    def method(self) -> str:
        return "circulant" if self.spectrum is not None else "dense"

    def paths(self, gen: np.random.Generator, count: int) -> np.ndarray:
        """``count`` paths of length ``n`` drawn sequentially from ``gen``."""
        n = self.n
        if self.spectrum is None:
            return gen.standard_normal((count, n)) @ self.dense_factor.T
        size = 2 * n
        scale = np.sqrt(self.spectrum / size)
        pairs = (count + 1) // 2
        out = np.empty((2 * pairs, n))
        step = max(1, CHUNK_ELEMENTS // size)
        for s in range(0, pairs, step):
            e = min(s + step, pairs)
            w = gen.standard_normal((e - s, 2 * size)).view(np.complex128)
            z = np.fft.fft(w * scale, axis=1)
            out[2 * s : 2 * e : 2] = z.real[:, :n]
            out[2 * s + 1 : 2 * e : 2] = z.imag[:, :n]
        return out[:count]

    def quadratic_form(self, x: np.ndarray) -> np.ndarray:
        """``x' R x`` per row, exact, through the embedding (O(N log N) per path)."""
        if self.spectrum is None:
            from scipy.linalg import toeplitz

            r = toeplitz(self.lags[: self.n])
            return np.einsum("ij,jk,ik->i", x, r, x)
        size = 2 * self.n
        weights = self.spectrum[: self.n + 1].copy()
        weights[1 : self.n] *= 2.0
        xf = np.fft.rfft(x, n=size, axis=1)
        return (np.abs(xf) ** 2 @ weights) / size


def _dense_factor(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] < -SPECTRUM_TOL * max(1.0, vals[-1]):
        raise PSDError(f"covariance has eigenvalue {vals[0]:.3g}")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


@lru_cache(maxsize=32)
def stationary_sampler(model: CovarianceModel, n: int) -> StationarySampler:
    return StationarySampler.build(model, n)


@dataclass(frozen=True)
class PairSampler:
    """Joint sampler for fGn(h1), fGn(h2) with cross-covariance ``D rho_{(h1+h2)/2}``.

    Per embedding frequency the 2x2 spectral matrix is factored as
    ``[[s1, 0], [r s2, sqrt(1 - r^2) s2]]``; equal indices give ``r = 1`` and
    identical channels.
    """

    n: int
    h1: float
    h2: float
    d: float
    s1: np.ndarray
    s2: np.ndarray
    corr: np.ndarray
    marg1: StationarySampler
    marg2: StationarySampler

    @classmethod
    def build(cls, h1: float, h2: float, n: int, d: float | None = None) -> "PairSampler":
        if d is None:
            d = d_constant(h1, h2)
        ks = np.arange(n + 1)
        spec1 = _nonneg(embedding_spectrum(fgn_rho(h1, ks)))
        spec2 = _nonneg(embedding_spectrum(fgn_rho(h2, ks)))
        spec12 = embedding_spectrum(d * np.asarray(fgn_rho(0.5 * (h1 + h2), ks)))
        if spec1 is None or spec2 is None:
            raise PSDError("marginal embedding spectrum is not PSD")
        denom = np.sqrt(spec1 * spec2)
        excess = np.abs(spec12) - denom
        if np.any(excess > SPECTRUM_TOL * max(1.0, float(denom.max()))):
            raise PSDError("joint embedding spectrum is not PSD for this pair")
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.where(denom > 0, spec12 / denom, 0.0)
        corr = np.clip(corr, -1.0, 1.0)
        m1 = StationarySampler(n, np.asarray(fgn_rho(h1, ks), float), spec1, None)
        m2 = StationarySampler(n, np.asarray(fgn_rho(h2, ks), float), spec2, None)
        return cls(n, h1, h2, d, np.sqrt(spec1 / (2 * n)), np.sqrt(spec2 / (2 * n)), corr, m1, m2)

    def paths(self, gen_a: np.random.Generator, gen_b: np.random.Generator, count: int):
        n, size = self.n, 2 * self.n
        pairs = (count + 1) // 2
        out1 = np.empty((2 * pairs, n))
        out2 = np.empty((2 * pairs, n))
        comp = np.sqrt(np.clip(1.0 - self.corr**2, 0.0, None))
        step = max(1, CHUNK_ELEMENTS // size)
        for s in range(0, pairs, step):
            e = min(s + step, pairs)
            wa = gen_a.standard_normal((e - s, 2 * size)).view(np.complex128)
            wb = gen_b.standard_normal((e - s, 2 * size)).view(np.complex128)
            z1 = np.fft.fft(self.s1 * wa, axis=1)
            z2 = np.fft.fft(self.s2 * (self.corr * wa + comp * wb), axis=1)
            for out, z in ((out1, z1), (out2, z2)):
                out[2 * s : 2 * e : 2] = z.real[:, :n]
                out[2 * s + 1 : 2 * e : 2] = z.imag[:, :n]
        return out1[:count], out2[:count]

    def cross_form(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """``x1' R12 x2`` per row with ``R12 = D T(rho_{(h1+h2)/2})``."""
        size = 2 * self.n
        ks = np.arange(self.n + 1)
        spec = embedding_spectrum(self.d * np.asarray(fgn_rho(0.5 * (self.h1 + self.h2), ks)))
        f1 = np.fft.fft(x1, n=size, axis=1)
        f2 = np.fft.fft(x2, n=size, axis=1)
        return (np.real(np.conj(f1) * f2) @ spec) / size


@lru_cache(maxsize=16)
def pair_sampler(h1: float, h2: float, n: int, d: float | None = None) -> PairSampler:
    return PairSampler.build(h1, h2, n, d)
