import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaosexp.covmodel import (
    CovarianceModel,
    HurstParam,
    cross_rho,
    d_constant,
    fgn_asymptote,
    fgn_rho,
    kernel_inner,
    mvn_normalizer_sq,
    read_table_csv,
    write_table_csv,
)
from chaosexp.errors import PSDError, QuadratureError
from chaosexp.mcsim import McConfig, PairModel, sample_pair

hurst = st.floats(min_value=0.05, max_value=0.95)

# mpmath quadrature of the kernel inner products (scripts/oracle_limit_constants.py)
D_03_06 = 0.816350158936392


def _mp_kernel_inner(h1, h2):
    a1, a2 = mp.mpf(h1) - 0.5, mp.mpf(h2) - 0.5
    inside = mp.quad(lambda u: (1 - u) ** (a1 + a2), [0, 1])
    outside = mp.quad(lambda s: ((1 + s) ** a1 - s**a1) * ((1 + s) ** a2 - s**a2), [0, 1, 10, mp.inf])
    return float(inside + outside)


def test_hurst_param_validation():
    assert HurstParam(0.6).square_summable
    assert not HurstParam(0.8).square_summable
    assert HurstParam(0.6).expansion_regime
    assert not HurstParam(0.7).expansion_regime
    for bad in (0.0, 1.0, -0.2, float("nan")):
        with pytest.raises(ValueError):
            HurstParam(bad)


def test_fgn_rho_brownian_values():
    assert fgn_rho(0.5, 0) == 1.0
    assert fgn_rho(0.5, 2) == 0.0
    assert np.all(fgn_rho(0.5, np.arange(1, 50)) == 0.0)


def test_fgn_rho_lag_one_at_three_quarters():
    assert fgn_rho(0.75, 1) == pytest.approx(math.sqrt(2) - 1, abs=1e-15)


def test_fgn_rho_high_precision_points():
    for h, k in ((0.3, 7), (0.6, 1), (0.6, 1000), (0.9, 3)):
        hh = mp.mpf(h)
        ref = 0.5 * ((k + 1) ** (2 * hh) - 2 * mp.mpf(k) ** (2 * hh) + (k - 1) ** (2 * hh))
        assert fgn_rho(h, k) == pytest.approx(float(ref), rel=1e-9)


def test_fgn_rho_matches_asymptote_far_out():
    k = 10_000
    assert fgn_rho(0.3, k) / fgn_asymptote(0.3, k) == pytest.approx(1.0, abs=1e-3)


@given(hurst, st.integers(min_value=0, max_value=10_000))
def test_fgn_rho_symmetric_and_bounded(h, k):
    assert fgn_rho(h, k) == fgn_rho(h, -k)
    assert abs(fgn_rho(h, k)) <= 1.0
    assert fgn_rho(h, 0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("h", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_toeplitz_psd(h):
    model = CovarianceModel.fgn(h)
    for n in (2, 17, 64, 256):
        assert model.check_psd(n) >= -1e-10


def test_check_psd_rejects_indefinite_table():
    model = CovarianceModel.table([1.0, 0.9, -0.9, 0.9], decay_exponent=-1.5)
    with pytest.raises(PSDError):
        model.check_psd(4)


@pytest.mark.parametrize("h, power, exponent", [(0.6, 2, 4 * 0.6 - 4), (0.7, 2, 4 * 0.7 - 4), (0.6, 4 / 3, (4 / 3) * (2 * 0.6 - 2))])
def test_lp_tail_blocks_shrink_at_power_rate(h, power, exponent):
    """Block sums of |rho|^p over [K, 2K) scale like K^(exponent + 1)."""
    blocks = []
    for k in (10**3, 10**4, 10**5):
        ks = np.arange(k, 2 * k)
        blocks.append(float(np.sum(np.abs(fgn_rho(h, ks)) ** power)))
    ratios = [blocks[i + 1] / blocks[i] for i in range(2)]
    for r in ratios:
        assert r == pytest.approx(10 ** (exponent + 1), rel=1e-2)
    assert exponent + 1 < 0


def test_mvn_normalizer_matches_kernel_norm():
    for h in (0.2, 0.45, 0.6, 0.85):
        assert mvn_normalizer_sq(h) * kernel_inner(h, h) == pytest.approx(1.0, abs=1e-9)


def test_kernel_inner_against_mpmath():
    for h1, h2 in ((0.3, 0.6), (0.55, 0.6), (0.2, 0.9)):
        assert kernel_inner(h1, h2) == pytest.approx(_mp_kernel_inner(h1, h2), rel=1e-8)


def test_kernel_inner_tolerance_error():
    with pytest.raises(QuadratureError):
        kernel_inner(0.05, 0.95, rtol=1e-16)


def test_d_constant_diagonal_and_symmetric():
    for h in (0.2, 0.5, 0.6):
        assert d_constant(h, h) == 1.0
    assert d_constant(0.3, 0.6) == d_constant(0.6, 0.3)
    assert d_constant(0.3, 0.6) == pytest.approx(D_03_06, rel=1e-9)


@given(hurst, hurst)
def test_d_constant_is_a_correlation(h1, h2):
    assert 0.0 < d_constant(h1, h2) <= 1.0 + 1e-12


def test_cross_rho_reductions():
    assert cross_rho(0.6, 0.6, 5) == fgn_rho(0.6, 5)
    assert cross_rho(0.55, 0.6, 0) == pytest.approx(d_constant(0.55, 0.6), abs=1e-15)


@pytest.mark.parametrize("h1, h2, lag", [(0.3, 0.6, 0), (0.55, 0.6, 3)])
def test_cross_covariance_monte_carlo(h1, h2, lag):
    cfg = McConfig(seed=11, replications=200_000, n=8, model=PairModel(h1, h2))
    x1, x2 = sample_pair(h1, h2, cfg)
    prod = x1[:, lag] * x2[:, 0]
    se = prod.std(ddof=1) / math.sqrt(prod.size)
    assert abs(prod.mean() - cross_rho(h1, h2, lag)) < 3 * se


def test_table_model_extrapolates_and_round_trips(tmp_path):
    fgn = CovarianceModel.fgn(0.6)
    path = tmp_path / "cov.csv"
    write_table_csv(path, fgn, 200)
    table = read_table_csv(path, decay_exponent=fgn.tail_exponent)
    assert np.array_equal(table.lags(201), fgn.lags(201))
    far = table.rho(np.array([400, 800]))
    assert far[1] / far[0] == pytest.approx(2.0**fgn.tail_exponent, rel=1e-12)
    assert table.rho(-7) == table.rho(7)


def test_table_validation():
    with pytest.raises(ValueError):
        CovarianceModel.table([1.0, 1.2], decay_exponent=-1.0)
    with pytest.raises(ValueError):
        CovarianceModel.table([1.0, 0.5], decay_exponent=0.5)


def test_lags_are_read_only_and_cached():
    model = CovarianceModel.fgn(0.6)
    a = model.lags(32)
    assert a is model.lags(32)
    with pytest.raises(ValueError):
        a[0] = 2.0
