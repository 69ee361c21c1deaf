import csv
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import hermite_e
from scipy import integrate
from scipy.stats import multivariate_normal

from chaosexp.cumulant import cumulants_qv, exact_density
from chaosexp.covmodel import CovarianceModel
from chaosexp.errors import PSDError
from chaosexp.expand import (
    ExpansionModel,
    TruncationSpec,
    cdf_1d,
    charfun_1d,
    charfun_multi,
    correction_1d,
    density_1d,
    density_multi,
    gauss_pdf,
    hermite,
    invert_charfun_1d,
    invert_charfun_2d,
    p_alpha,
    pair_model,
    psi_profile,
    s_beta,
    s_beta_bound,
    truncation_weight,
    write_grid_csv,
)
from chaosexp.mcsim.stats import expansion_moment
from chaosexp.seqcalc import limit_constants

unit_rho = st.floats(-1.0, 1.0)
small_gamma = st.floats(0.0, 0.5)


def _spd(draw_values, dim):
    a = np.array(draw_values, dtype=float).reshape(dim, dim)
    return a @ a.T + 0.1 * np.eye(dim)


# ---------------------------------------------------------------------------
# Hermite polynomials


def test_hermite_examples():
    assert hermite(0, 1.7) == 1.0
    assert hermite(3, 0.0) == 0.0
    assert hermite(3, 2.0) == 2.0


@given(st.integers(0, 10), st.floats(-6, 6))
def test_hermite_matches_numpy_basis(k, x):
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    assert hermite(k, x) == pytest.approx(hermite_e.hermeval(x, coeffs), rel=1e-10, abs=1e-10)


def test_hermite_inversion_identity():
    x = np.linspace(-5, 5, 101)
    for k in range(6):
        inv = invert_charfun_1d(lambda lam, k=k: (1j * lam) ** k * np.exp(-0.5 * lam * lam), x)
        assert np.max(np.abs(inv - hermite(k, x) * gauss_pdf(x))) < 1e-12


# ---------------------------------------------------------------------------
# one dimension


def test_charfun_basic():
    model = ExpansionModel.one_dim(0.6, 0.1)
    assert charfun_1d(model, 0.0) == 1.0
    lam = np.linspace(0, 5, 11)
    assert np.allclose(charfun_1d(model, -lam), np.conj(charfun_1d(model, lam)))


def test_density_examples():
    x = np.linspace(-4, 4, 9)
    assert np.array_equal(density_1d(ExpansionModel.one_dim(0.9, 0.0), x), gauss_pdf(x))
    for rho, gamma in ((0.6, 0.1), (-1.0, 0.4)):
        assert density_1d(ExpansionModel.one_dim(rho, gamma), 0.0) == pytest.approx(0.3989422804014327)


def test_density_sign_at_one():
    """Positive skewness puts the correction at x = 1 below the Gaussian: p(1) (1 - 0.04)."""
    got = density_1d(ExpansionModel.one_dim(0.6, 0.1), 1.0)
    assert got == pytest.approx(gauss_pdf(1.0) * 0.96, abs=1e-15)
    assert got == pytest.approx(0.2322918955, abs=1e-10)


def test_third_moment_is_the_skewness():
    model = ExpansionModel.one_dim(0.7, 0.2)
    third = integrate.quad(lambda x: x**3 * density_1d(model, x), -np.inf, np.inf, epsabs=1e-13)[0]
    assert third == pytest.approx(2 * 0.7 * 0.2, abs=1e-10)
    assert expansion_moment(model, 3) == pytest.approx(third, abs=1e-10)
    assert expansion_moment(model, 2) == 1.0
    assert expansion_moment(model, 4) == 3.0


def test_sign_matches_exact_law():
    """At N = 256 the exact density of F_N sits much closer to p_N than to the mirrored correction."""
    rep = cumulants_qv(0.6, 256)
    x = np.linspace(-3, 3, 121)
    truth = exact_density(CovarianceModel.fgn(0.6), 256, x)
    good = np.max(np.abs(truth - density_1d(ExpansionModel.one_dim(rep.rho_n, rep.gamma_n), x)))
    mirrored = np.max(np.abs(truth - density_1d(ExpansionModel.one_dim(-rep.rho_n, rep.gamma_n), x)))
    assert good < 0.1 * mirrored


@given(unit_rho, small_gamma)
def test_inversion_duality_1d(rho, gamma):
    model = ExpansionModel.one_dim(rho, gamma)
    x = np.linspace(-5, 5, 257)
    inv = invert_charfun_1d(lambda lam: charfun_1d(model, lam), x)
    assert np.max(np.abs(inv - density_1d(model, x))) < 1e-8


@given(unit_rho, small_gamma)
def test_normalization_and_cdf(rho, gamma):
    model = ExpansionModel.one_dim(rho, gamma)
    kw = dict(epsabs=1e-13, epsrel=1e-13, limit=200)
    assert integrate.quad(lambda x: density_1d(model, x), -np.inf, np.inf, **kw)[0] == pytest.approx(1.0, abs=1e-9)
    assert abs(integrate.quad(lambda x: correction_1d(model, x), -np.inf, np.inf, **kw)[0]) < 1e-9
    for x in (-1.3, 0.4, 2.2):
        ref = integrate.quad(lambda t: density_1d(model, t), -np.inf, x, **kw)[0]
        assert cdf_1d(model, x) == pytest.approx(ref, abs=1e-10)


def test_density_goes_negative_without_clamping():
    model = ExpansionModel.one_dim(1.0, 0.5)
    assert density_1d(model, -3.0) < 0


# ---------------------------------------------------------------------------
# several dimensions


def test_charfun_multi_reductions():
    one = ExpansionModel.one_dim(0.4, 0.2)
    lam = np.linspace(-3, 3, 7)
    assert np.allclose(charfun_multi(one, lam[:, None]), charfun_1d(one, lam))
    assert charfun_multi(pair_model(limit_constants(0.55, 0.6), 512), np.zeros(2)) == pytest.approx(1.0)


def test_separable_case():
    rho = np.zeros((2, 2, 2))
    rho[0, 0, 0] = 0.8
    model = ExpansionModel(c=np.diag([1.0, 2.0]), rho_coeffs=rho, gamma=0.3)
    lam = np.array([[0.7, -1.1], [2.0, 0.3]])
    expected = charfun_1d(ExpansionModel.one_dim(0.8, 0.3), lam[:, 0]) * np.exp(-lam[:, 1] ** 2)
    assert np.allclose(charfun_multi(model, lam), expected)
    g = np.linspace(-4, 4, 41)
    inv = invert_charfun_2d(lambda l: charfun_multi(model, l), g, g)
    tensor = np.outer(density_1d(ExpansionModel.one_dim(0.8, 0.3), g), gauss_pdf(g / math.sqrt(2)) / math.sqrt(2))
    assert np.max(np.abs(inv - tensor)) < 1e-10


def test_density_multi_reductions():
    c = np.array([[1.0, 0.3], [0.3, 2.0]])
    model = ExpansionModel(c=c, rho_coeffs=np.zeros((2, 2, 2)), gamma=0.0)
    pts = np.array([[0.1, -0.4], [1.5, 2.0]])
    assert np.allclose(density_multi(model, pts), multivariate_normal(cov=c).pdf(pts))
    one = ExpansionModel.one_dim(0.5, 0.3)
    x = np.linspace(-3, 3, 13)
    assert np.allclose(density_multi(one, x[:, None]), density_1d(one, x))


def test_pair_density_inversion_and_mass():
    model = pair_model(limit_constants(0.55, 0.6), 512)
    g = np.linspace(-5, 5, 64)
    inv = invert_charfun_2d(lambda l: charfun_multi(model, l), g, g)
    closed = density_multi(model, np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1))
    assert np.max(np.abs(inv - closed)) < 1e-6
    mass = integrate.dblquad(lambda y, x: density_multi(model, np.array([x, y])), -9, 9, -9, 9, epsabs=1e-11)[0]
    assert mass == pytest.approx(1.0, abs=1e-9)


def test_model_validation_and_round_trip():
    with pytest.raises(PSDError):
        ExpansionModel(c=[[1.0, 2.0], [2.0, 1.0]], rho_coeffs=np.zeros((2, 2, 2)), gamma=0.1)
    bad = np.zeros((2, 2, 2))
    bad[0, 0, 1] = 1.0
    with pytest.raises(ValueError):
        ExpansionModel(c=np.eye(2), rho_coeffs=bad, gamma=0.1)
    with pytest.raises(ValueError):
        ExpansionModel.one_dim(0.5, -0.1)
    with pytest.raises(ValueError):
        ExpansionModel.one_dim(1.5, 0.1)
    model = pair_model(limit_constants(0.55, 0.6), 100)
    back = ExpansionModel.from_dict(model.to_dict())
    assert np.array_equal(back.rho_coeffs, model.rho_coeffs) and back.gamma == model.gamma


def test_grid_csv(tmp_path):
    path = tmp_path / "grid.csv"
    model = ExpansionModel.one_dim(0.9, 0.08)
    write_grid_csv(path, model, np.linspace(-1, 1, 5))
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["x", "p", "p_N", "correction"]
    for row in rows:
        assert float(row["p_N"]) == pytest.approx(float(row["p"]) + float(row["correction"]), abs=1e-16)


# ---------------------------------------------------------------------------
# derivative polynomials


def _mp_s_beta(beta, u, c):
    dim = len(beta)
    cm = mp.matrix(c.tolist())

    def quad_form(*v):
        vec = mp.matrix(list(v))
        return (vec.T * cm * vec)[0] / 2

    val = mp.diff(lambda *v: mp.exp(quad_form(*v)), tuple(u), tuple(beta))
    return float(val / mp.exp(quad_form(*u)))


def _mp_p_alpha(alpha, u, z, c):
    cm = mp.matrix(c.tolist())

    def expo(*v):
        vec = mp.matrix(list(v))
        return 1j * mp.fsum(a * b for a, b in zip(v, z)) + (vec.T * cm * vec)[0] / 2

    deriv = mp.diff(lambda *v: mp.exp(expo(*v)), tuple(u), tuple(alpha))
    return complex((-1j) ** sum(alpha) * deriv / mp.exp(expo(*u)))


def test_s_beta_simple_cases():
    c = np.array([[2.0, 0.5], [0.5, 1.0]])
    u = np.array([0.3, -1.2])
    assert s_beta((0, 0), u, c) == 1.0
    assert s_beta((1, 0), u, c) == pytest.approx((c @ u)[0])
    assert s_beta((0, 1), u, c) == pytest.approx((c @ u)[1])
    assert s_beta((2, 0), u, c) == pytest.approx((c @ u)[0] ** 2 + c[0, 0])


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.lists(st.floats(-2, 2), min_size=2, max_size=2),
       st.tuples(st.integers(0, 3), st.integers(0, 3)))
def test_s_beta_against_mpmath(cvals, u, beta):
    c = _spd(cvals, 2)
    ref = _mp_s_beta(beta, u, c)
    assert s_beta(beta, u, c) == pytest.approx(ref, rel=1e-8, abs=1e-8)


@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9), st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2)))
def test_s_beta_bound(cvals, u, beta):
    c = _spd(cvals, 3)
    assert abs(s_beta(beta, u, c)) <= s_beta_bound(beta, u, c) * (1 + 1e-12) + 1e-12


def test_p_alpha_simple_cases():
    c = np.array([[1.0, 0.2], [0.2, 0.5]])
    assert p_alpha((0, 0), [0.4, 0.1], [1.0, 2.0], c) == 1.0
    z = np.array([1.3, -0.7])
    for alpha in ((1, 0), (2, 1), (0, 3)):
        assert p_alpha(alpha, [0.4, 0.1], z, np.zeros((2, 2))) == pytest.approx(z[0] ** alpha[0] * z[1] ** alpha[1])


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=2),
       st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.tuples(st.integers(0, 2), st.integers(0, 2)))
def test_p_alpha_against_mpmath(cvals, u, z, alpha):
    c = _spd(cvals, 2)
    ref = _mp_p_alpha(alpha, u, z, c)
    got = p_alpha(alpha, u, z, c)
    assert abs(got - ref) <= 1e-8 * max(1.0, abs(ref))


def test_multi_index_limit():
    with pytest.raises(ValueError):
        s_beta((4, 3), [0.0, 0.0], np.eye(2))


# ---------------------------------------------------------------------------
# truncation


def test_psi_plateau_support_and_range():
    x = np.linspace(-2, 2, 4001)
    vals = psi_profile(x)
    assert np.all(vals[np.abs(x) <= 0.5] == 1.0)
    assert np.all(vals[np.abs(x) >= 1.0] == 0.0)
    assert np.all((vals >= 0) & (vals <= 1))
    right = vals[x >= 0]
    assert np.all(np.diff(right) <= 0)


def test_truncation_weight_thresholds():
    spec = TruncationSpec(k_const=2.0, delta=0.5)
    gamma = 0.04
    keep = gamma**spec.delta / (spec.k_const * math.sqrt(2))
    drop = gamma**spec.delta / spec.k_const
    assert truncation_weight(spec, 0.0, gamma) == 1.0
    assert truncation_weight(spec, 0.999 * keep, gamma) == 1.0
    assert truncation_weight(spec, drop, gamma) == 0.0
    assert truncation_weight(spec, 50.0, gamma) == 0.0
    devs = np.linspace(0, 2 * drop, 200)
    assert np.all(np.diff(truncation_weight(spec, devs, gamma)) <= 0)
    with pytest.raises(ValueError):
        TruncationSpec(delta=1.0)
