import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chaosexp.covmodel import d_constant, fgn_rho
from chaosexp.errors import DivergenceError, RegimeError, ToleranceError
from chaosexp.seqcalc import (
    SummableSeq,
    convolve,
    cv_limit,
    delta_seq,
    fgn_seq,
    inner,
    limit_constants,
    lp_norm,
    lp_norm_with_error,
    spectral_product_sum,
)

# Frozen from scripts/oracle_limit_constants.py (mpmath: term-by-term spectral
# series, tanh-sinh quadrature, direct kernel integrals).
ORACLE_055_06 = {
    "d": 0.994399222211049,
    "c_v1": 2.03165283802727,
    "c_v2": 2.16426164136549,
    "c12": 0.981000416037134,
    "g11": 1.45361115534838,
    "g22": 1.68805431535499,
    "g12": 1.52999195235753,
    "g21": 1.46199561542811,
    "b11": 2.16687841356692,
    "b22": 3.90170684647787,
    "b12": 2.47029700560441,
    "by1": 2.25302767698319,
    "by2": 2.90718297105215,
    "c0": 2.46209248721853,
}


def _fft_conv(a, b):
    size = a.size + b.size - 1
    nfft = 1 << (size - 1).bit_length()
    return np.fft.irfft(np.fft.rfft(a, nfft) * np.fft.rfft(b, nfft), nfft)[:size]


def lag_domain_constants(h1, h2, halfwidth):
    """Brute-force truncated lag sums, independent of the spectral route."""
    k = halfwidth
    ks = np.arange(-k, k + 1)
    hm = 0.5 * (h1 + h2)
    r = {h: fgn_rho(h, ks) for h in {h1, h2, hm}}

    def conv(a, b):
        return _fft_conv(r[a], r[b])[k : 3 * k + 1]

    def s2(a, b):
        return float(np.dot(r[a], r[b]))

    def s3(a, b, c):
        return float(np.dot(conv(a, b), r[c]))

    def s4(a, b, c, d):
        return float(np.dot(conv(a, b), conv(c, d)))

    d2 = d_constant(h1, h2) ** 2
    cv1, cv2 = 2 * s2(h1, h1), 2 * s2(h2, h2)
    r1, r2 = math.sqrt(cv1), math.sqrt(cv2)
    mixed = s4(h1, hm, h2, hm)
    return {
        "c_v1": cv1,
        "c_v2": cv2,
        "c12": 2 * d2 * s2(hm, hm) / (r1 * r2),
        "g11": 4 * s3(h1, h1, h1) / cv1**1.5,
        "g12": 4 * d2 * s3(hm, h2, hm) / (r1 * cv2),
        "g21": 4 * d2 * s3(hm, h1, hm) / (r2 * cv1),
        "b11": 8 * s4(h1, h1, h1, h1) / cv1**2,
        "b12": 8 * d2 * mixed / (cv1 * cv2),
        "by1": 8 * d2 * s4(h1, h1, hm, hm) / (cv1**1.5 * r2),
        "c0": 4 * d2 * (mixed + d2 * s4(hm, hm, hm, hm)) / (cv1 * cv2),
    }


def _flat(lim):
    return {**lim.to_dict(), **lim.cross_moments, **lim.y_moments}


# ---------------------------------------------------------------------------
# sequences


def test_delta_is_convolution_identity():
    u = fgn_seq(0.6, 500)
    out, _ = convolve(delta_seq(500), u)
    assert np.allclose(out.values, u.values, atol=1e-14)


def test_convolution_commutes():
    u, v = fgn_seq(0.55, 300), fgn_seq(0.3, 400)
    a, ea = convolve(u, v, 200)
    b, eb = convolve(v, u, 200)
    assert np.allclose(a.values, b.values, atol=1e-14)
    assert ea == pytest.approx(eb)


def test_autoconvolution_at_zero_is_sum_of_squares():
    u = fgn_seq(0.6, 20_000)
    out, _ = convolve(u, u, 0)
    direct = u.values[0] ** 2 + 2 * math.fsum(u.values[1:] ** 2)
    assert out.values[0] == pytest.approx(direct, rel=1e-10)


def test_convolution_error_bound_covers_truncation():
    small, big = fgn_seq(0.6, 2_000), fgn_seq(0.6, 200_000)
    a, err = convolve(small, small, 50)
    b, _ = convolve(big, big, 50)
    assert np.max(np.abs(a.values - b.values)) <= err


def test_lp_norm_trivial_cases():
    for p in (1, 4 / 3, 2, 3.5):
        assert lp_norm(delta_seq(10), p) == 1.0
    assert lp_norm(fgn_seq(0.5, 1000), 2) == 1.0


def test_lp_norm_tolerance_and_divergence():
    u = fgn_seq(0.6, 100)
    with pytest.raises(ToleranceError):
        lp_norm(u, 2, tol=1e-12)
    with pytest.raises(DivergenceError):
        lp_norm(fgn_seq(0.7, 100), 4 / 3)


def test_lp_error_bound_is_sound():
    """Halving the halfwidth moves the value by less than the reported bound."""
    for h, p in ((0.6, 2.0), (0.55, 4 / 3), (0.3, 1.0)):
        coarse, err = lp_norm_with_error(fgn_seq(h, 5_000), p)
        fine, _ = lp_norm_with_error(fgn_seq(h, 10_000), p)
        assert abs(coarse - fine) <= err


def test_inner_product_bound():
    u, v = fgn_seq(0.55, 1_000), fgn_seq(0.6, 1_000)
    val, err = inner(u, v)
    ref, _ = inner(fgn_seq(0.55, 200_000), fgn_seq(0.6, 200_000))
    assert abs(val - ref) <= err


def test_young_on_fgn_pair():
    u, v = fgn_seq(0.55, 50_000), fgn_seq(0.6, 50_000)
    w, _ = convolve(u, v)
    assert lp_norm(w, 4) <= lp_norm(u, 4 / 3) * lp_norm(v, 2)


@st.composite
def young_exponents(draw):
    p = draw(st.floats(1.0, 3.0))
    q = draw(st.floats(1.0, 3.0))
    inv_s = 1 / p + 1 / q - 1
    if inv_s <= 0:
        q = p / (p - 1) if p > 1 else 1.0
        inv_s = 1 / p + 1 / q - 1
    return p, q, 1 / inv_s if inv_s > 0 else math.inf


positive_tables = arrays(np.float64, st.integers(1, 40), elements=st.floats(0.0, 10.0))


@given(positive_tables, positive_tables, young_exponents())
def test_young_inequality_random(a, b, exps):
    p, q, s = exps
    u = SummableSeq(a, tail_exponent=-2.0, tail_amplitude=0.0)
    v = SummableSeq(b, tail_exponent=-2.0, tail_amplitude=0.0)
    w, _ = convolve(u, v, u.halfwidth + v.halfwidth)
    full = w.full()
    lhs = np.max(np.abs(full)) if math.isinf(s) else np.sum(np.abs(full) ** s) ** (1 / s)
    rhs = lp_norm(u, p) * lp_norm(v, q)
    assert lhs <= rhs * (1 + 1e-9) + 1e-12


# ---------------------------------------------------------------------------
# spectral route and limit constants


def test_spectral_sum_reproduces_lag_sum():
    for hs in ((0.3, 0.3), (0.55, 0.6), (0.2, 0.4, 0.3)):
        val, err = spectral_product_sum(hs)
        assert err < 1e-10
    val, _ = spectral_product_sum((0.3, 0.3))
    r = fgn_rho(0.3, np.arange(2_000_000))
    assert val == pytest.approx(r[0] ** 2 + 2 * math.fsum(r[1:] ** 2), rel=1e-10)


def test_spectral_sum_divergence():
    with pytest.raises(DivergenceError):
        spectral_product_sum((0.8, 0.8))
    with pytest.raises(DivergenceError):
        spectral_product_sum((0.65,) * 4)


def test_brownian_constants():
    lim = limit_constants(0.5, 0.5)
    assert lim.c_v1 == 2.0 and lim.c_v2 == 2.0
    assert lim.c12 == 1.0
    assert spectral_product_sum((0.5,) * 4)[0] == 1.0
    assert cv_limit(0.5) == 2.0


@given(st.floats(0.05, 0.62))
def test_diagonal_c12_is_one(h):
    assert limit_constants(h, h).c12 == pytest.approx(1.0, abs=1e-8)


def test_constants_match_mpmath_oracle():
    got = _flat(limit_constants(0.55, 0.6))
    for key, ref in ORACLE_055_06.items():
        assert got[key] == pytest.approx(ref, abs=1e-8), key
    assert got["fy1"] == pytest.approx(got["g21"], abs=1e-12)
    assert got["fy2"] == pytest.approx(got["g12"], abs=1e-12)


def test_constants_match_lag_sums_where_they_converge():
    got = _flat(limit_constants(0.3, 0.4))
    lag = lag_domain_constants(0.3, 0.4, 2**17)
    for key, val in lag.items():
        assert got[key] == pytest.approx(val, abs=1e-8), key


def test_lag_sums_approach_constants_at_the_power_rate():
    """Near h = 5/8 lag sums converge like K^(8 hbar - 5); check the gap ratio."""
    got = _flat(limit_constants(0.55, 0.6))
    gaps = [abs(lag_domain_constants(0.55, 0.6, k)["b12"] - got["b12"]) for k in (2**12, 2**15)]
    predicted = 8.0 ** (8 * 0.575 - 5)
    assert gaps[1] / gaps[0] == pytest.approx(predicted, rel=0.1)
    small = lag_domain_constants(0.55, 0.6, 2**17)
    for key in ("c_v1", "c12", "g11"):
        assert small[key] == pytest.approx(got[key], abs=1e-4)


def test_swap_symmetry():
    a, b = limit_constants(0.55, 0.6), limit_constants(0.6, 0.55)
    assert a.c_v1 == pytest.approx(b.c_v2, rel=1e-12)
    assert a.c12 == pytest.approx(b.c12, rel=1e-12)
    assert a.c0 == pytest.approx(b.c0, rel=1e-12)
    pairs = {"g11": "g22", "g12": "g21", "b11": "b22", "b12": "b12"}
    for x, y in pairs.items():
        assert a.cross_moments[x] == pytest.approx(b.cross_moments[y], rel=1e-12)
    assert a.y_moments["by1"] == pytest.approx(b.y_moments["by2"], rel=1e-12)


def test_limit_covariance_is_positive_definite():
    cov = limit_constants(0.55, 0.6).covariance_matrix()
    assert np.allclose(cov, cov.T)
    assert np.linalg.eigvalsh(cov)[0] > 0


def test_regime_errors():
    with pytest.raises(RegimeError):
        limit_constants(0.74, 0.76)
    with pytest.raises(DivergenceError):
        limit_constants(0.55, 0.63)
    with pytest.raises(DivergenceError):
        cv_limit(0.75)


def test_json_round_trip():
    import json

    lim = limit_constants(0.55, 0.6)
    data = json.loads(lim.to_json())
    assert data["c12"] == lim.c12
    assert set(data["cross_moments"]) == {"g11", "g22", "g12", "g21", "b11", "b22", "b12"}
