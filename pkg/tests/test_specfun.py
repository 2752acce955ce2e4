import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from noma_esg.specfun import (
    EULER_GAMMA,
    digamma_int,
    exp_integral_e1,
    expn_scaled,
    ln_moment_gamma,
    lower_incomplete_gamma,
    scaled_exp_integral_e1,
)


def e1_quad(x):
    val, _ = integrate.quad(lambda t: math.exp(-x * t) / t, 1.0, math.inf, epsabs=0, epsrel=1e-13)
    return val


def test_e1_at_one_matches_quadrature():
    assert exp_integral_e1(1.0) == pytest.approx(0.2193839344, abs=1e-10)
    assert exp_integral_e1(1.0) == pytest.approx(e1_quad(1.0), rel=1e-12)


def test_e1_small_argument_law():
    x = 1e-6
    assert exp_integral_e1(x) == pytest.approx(-math.log(x) - EULER_GAMMA, rel=1e-4)


@pytest.mark.parametrize("x", np.logspace(-8, math.log10(700), 60))
def test_e1_matches_mpmath(x):
    assert exp_integral_e1(x) == pytest.approx(float(mpmath.e1(x)), rel=1e-12)


@pytest.mark.parametrize("x", [1e-8, 1e-4, 1e-3])
def test_e1_small_x_bound(x):
    e1 = exp_integral_e1(x)
    # the sum cancels down to about x, so allow rounding of e1 itself
    assert abs(e1 + math.log(x) + EULER_GAMMA) <= x + 8 * np.spacing(e1)


def test_e1_decreasing_and_positive():
    xs = np.logspace(-8, math.log10(50), 400)
    vals = np.array([exp_integral_e1(x) for x in xs])
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) < 0)
    assert exp_integral_e1(2.0) < exp_integral_e1(1.0)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_e1_domain(bad):
    with pytest.raises(ValueError):
        exp_integral_e1(bad)


def test_e1_underflows_to_zero():
    assert exp_integral_e1(800.0) == 0.0


@pytest.mark.parametrize("x", [1e-3, 0.5, 1.0, 30.0, 700.0, 1e4, 1e6])
def test_scaled_e1_avoids_overflow(x):
    expected = float(mpmath.exp(x) * mpmath.e1(x))
    assert scaled_exp_integral_e1(x) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
@pytest.mark.parametrize("x", [1e-3, 0.3, 0.99, 1.0, 4.0, 60.0])
def test_expn_scaled_matches_mpmath(n, x):
    expected = float(mpmath.exp(x) * mpmath.expint(n, x))
    assert expn_scaled(n, x) == pytest.approx(expected, rel=1e-12)


def test_expn_scaled_vectorized():
    x = np.array([[0.5, 1.5], [3.0, 20.0]])
    out = expn_scaled(1, x)
    assert out.shape == (2, 2)
    assert out[1, 1] == pytest.approx(scaled_exp_integral_e1(20.0))


def test_lower_incomplete_gamma_values():
    assert lower_incomplete_gamma(1, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-14)
    assert lower_incomplete_gamma(2, 1.0) == pytest.approx(0.2642411177, rel=1e-9)
    assert lower_incomplete_gamma(3, 0.0) == 0.0


@pytest.mark.parametrize("m", range(1, 9))
@pytest.mark.parametrize("x", [0.1, 1.0, 7.5, 40.0])
def test_lower_incomplete_gamma_series_oracle(m, x):
    series = math.gamma(m) * math.fsum(
        math.exp(-x + k * math.log(x) - math.lgamma(k + 1)) for k in range(m, m + 400)
    )
    assert lower_incomplete_gamma(m, x) == pytest.approx(series, rel=1e-10)


@pytest.mark.parametrize("m", [1, 2, 5, 8])
def test_lower_incomplete_gamma_saturates(m):
    assert lower_incomplete_gamma(m, 50.0 * m) == pytest.approx(math.gamma(m), rel=1e-8)


@given(st.integers(1, 10), st.floats(0, 60), st.floats(0, 10))
def test_lower_incomplete_gamma_nondecreasing(m, x, dx):
    assert lower_incomplete_gamma(m, x + dx) >= lower_incomplete_gamma(m, x)


def test_lower_incomplete_gamma_domain():
    with pytest.raises(ValueError):
        lower_incomplete_gamma(0, 1.0)
    with pytest.raises(ValueError):
        lower_incomplete_gamma(2, -1.0)


def test_digamma_values():
    assert digamma_int(1) == pytest.approx(-0.5772157, abs=1e-7)
    assert digamma_int(2) == pytest.approx(0.4227843, abs=1e-7)
    assert digamma_int(10) == pytest.approx(2.2517526, abs=1e-7)
    for m in range(1, 30):
        assert digamma_int(m) == pytest.approx(special.digamma(m), rel=1e-14)
    with pytest.raises(ValueError):
        digamma_int(0)


def test_ln_moment_gamma_exponential_case():
    # integration by parts: int ln(1+t) e^-t dt = e E1(1)
    assert ln_moment_gamma(1, 1.0) == pytest.approx(math.e * exp_integral_e1(1.0), rel=1e-14)
    assert ln_moment_gamma(1, 1.0) == pytest.approx(0.5963473623231929, rel=1e-13)


def test_ln_moment_gamma_frozen_values():
    assert ln_moment_gamma(2, 1.0) == pytest.approx(1.0, rel=1e-13)
    assert ln_moment_gamma(4, 1.0) == pytest.approx(1.5321157874410622, rel=1e-13)


def test_ln_moment_gamma_large_rate():
    lam = 1e6
    assert ln_moment_gamma(1, lam) == pytest.approx(1 / lam, rel=1e-5)


def test_ln_moment_gamma_m4_half():
    assert ln_moment_gamma(4, 0.5) == pytest.approx(ln_moment_gamma(4, 0.5, method="quad"), rel=1e-10)


def meijer_form(m, lam):
    # lam^M / Gamma(M) * G^{3,1}_{2,3}(lam | -M, -M+1 ; -M, -M, 0)
    g = mpmath.meijerg([[-m], [-m + 1]], [[-m, -m, 0], []], lam)
    return float(lam ** m / mpmath.gamma(m) * g)


@pytest.mark.parametrize("m", [1, 2, 4, 8])
@pytest.mark.parametrize("lam", [1e-3, 1.0, 1e3])
def test_ln_moment_gamma_paths_agree(m, lam):
    closed = ln_moment_gamma(m, lam)
    assert closed == pytest.approx(ln_moment_gamma(m, lam, method="quad"), rel=1e-8)
    mpmath.mp.dps = 30
    assert closed == pytest.approx(meijer_form(m, lam), rel=1e-8)


@given(st.integers(1, 12), st.floats(1e-3, 1e3))
def test_ln_moment_gamma_jensen(m, lam):
    # 0 < E ln(1+X) <= ln(1 + E X)
    val = ln_moment_gamma(m, lam)
    assert 0 < val <= math.log1p(m / lam) * (1 + 1e-12)


@given(st.integers(1, 10), st.floats(1e-2, 1e2))
def test_ln_moment_gamma_increases_with_shape(m, lam):
    assert ln_moment_gamma(m + 1, lam) > ln_moment_gamma(m, lam)


def test_ln_moment_gamma_domain():
    with pytest.raises(ValueError):
        ln_moment_gamma(0, 1.0)
    with pytest.raises(ValueError):
        ln_moment_gamma(2, 0.0)
    with pytest.raises(ValueError):
        ln_moment_gamma(2, 1.0, method="other")
