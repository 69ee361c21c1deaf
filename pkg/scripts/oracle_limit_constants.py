"""Independent high-precision values for the pair limit constants and D.

Spectral densities are summed term by term (explicit head plus an
Euler-Maclaurin tail, no Hurwitz zeta), products are integrated with
tanh-sinh quadrature, and the kernel inner products are integrated directly
in the lag variable. The printed
numbers are frozen into tests/test_seqcalc.py and tests/test_covmodel.py.

Usage: python3 scripts/oracle_limit_constants.py [h1 h2]
"""

import sys

import mpmath as mp

mp.mp.dps = 20


HEAD = 40


def _tail(s, c):
    """sum_{k >= HEAD} (2 pi k + c)^(-s) by Euler-Maclaurin with three Bernoulli terms."""
    two_pi = 2 * mp.pi
    x = two_pi * HEAD + c
    integral = x ** (1 - s) / ((s - 1) * two_pi)
    d1 = -s * two_pi * x ** (-s - 1)
    d3 = -s * (s + 1) * (s + 2) * two_pi**3 * x ** (-s - 3)
    d5 = -s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * two_pi**5 * x ** (-s - 5)
    return integral + x ** (-s) / 2 - d1 / 12 + d3 / 720 - d5 / 30240


def density(h):
    h = mp.mpf(h)
    s = 2 * h + 1
    pref = 2 * mp.sin(mp.pi * h) * mp.gamma(2 * h + 1)

    def f(w):
        head = w ** (-s) + mp.fsum((2 * mp.pi * k + w) ** (-s) + (2 * mp.pi * k - w) ** (-s) for k in range(1, HEAD))
        return pref * 2 * mp.sin(w / 2) ** 2 * (head + _tail(s, w) + _tail(s, -w))

    return f


def product_sum(hs):
    fs = [density(h) for h in hs]
    # w = t^m with m = 1 / (power + 1) turns the w^power singularity into a constant
    power = sum(1 - 2 * mp.mpf(h) for h in hs)
    m = 1 / (power + 1)

    def integrand(t):
        w = t**m
        return m * t ** (m - 1) * mp.fprod(f(w) for f in fs)

    top = mp.pi ** (1 / m)
    points = [0] + [top * mp.mpf(10) ** -k for k in (6, 3, 2, 1)] + [top / 2, top]
    val, err = mp.quad(integrand, points, error=True)
    if err > mp.mpf("1e-12"):
        print(f"warning: quadrature error {mp.nstr(err, 3)} for {[float(h) for h in hs]}", file=sys.stderr)
    return val / mp.pi


def kernel_inner(h1, h2):
    a1, a2 = mp.mpf(h1) - 0.5, mp.mpf(h2) - 0.5
    inside = mp.quad(lambda u: (1 - u) ** (a1 + a2), [0, 1])
    outside = mp.quad(lambda s: ((1 + s) ** a1 - s**a1) * ((1 + s) ** a2 - s**a2), [0, 1, 10, mp.inf])
    return inside + outside


def d_constant(h1, h2):
    return kernel_inner(h1, h2) / mp.sqrt(kernel_inner(h1, h1) * kernel_inner(h2, h2))


def constants(h1, h2):
    h1, h2 = mp.mpf(h1), mp.mpf(h2)
    hm = (h1 + h2) / 2
    d2 = d_constant(h1, h2) ** 2
    cv1, cv2 = 2 * product_sum([h1, h1]), 2 * product_sum([h2, h2])
    r1, r2 = mp.sqrt(cv1), mp.sqrt(cv2)
    four_mixed = product_sum([h1, hm, h2, hm])
    out = {
        "d": mp.sqrt(d2),
        "c_v1": cv1,
        "c_v2": cv2,
        "c12": 2 * d2 * product_sum([hm, hm]) / (r1 * r2),
        "g11": 4 * product_sum([h1, h1, h1]) / cv1**1.5,
        "g22": 4 * product_sum([h2, h2, h2]) / cv2**1.5,
        "g12": 4 * d2 * product_sum([hm, h2, hm]) / (r1 * cv2),
        "g21": 4 * d2 * product_sum([hm, h1, hm]) / (r2 * cv1),
        "b11": 8 * product_sum([h1] * 4) / cv1**2,
        "b22": 8 * product_sum([h2] * 4) / cv2**2,
        "b12": 8 * d2 * four_mixed / (cv1 * cv2),
        "by1": 8 * d2 * product_sum([h1, h1, hm, hm]) / (cv1**1.5 * r2),
        "by2": 8 * d2 * product_sum([h2, h2, hm, hm]) / (cv2**1.5 * r1),
        "c0": 4 * d2 * (four_mixed + d2 * product_sum([hm] * 4)) / (cv1 * cv2),
    }
    return out


if __name__ == "__main__":
    h1, h2 = (sys.argv[1], sys.argv[2]) if len(sys.argv) == 3 else ("0.55", "0.6")
    for key, val in constants(h1, h2).items():
        print(f"{key} = {mp.nstr(val, 15)}")
    print(f"d(0.3, 0.6) = {mp.nstr(d_constant('0.3', '0.6'), 15)}")
