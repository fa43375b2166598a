import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from polar_rsma.specialfn import (GammaParams, exp_e1_scaled, exp_integral_ei, gamma_cdf, gamma_pdf,
                                  lower_incomplete_gamma, trunc_exp_taylor)


def test_ei_reference_values():
    assert exp_integral_ei(1.0) == pytest.approx(1.895117816355937, rel=1e-14)
    assert exp_integral_ei(-1.0) == pytest.approx(-0.219383934395520, rel=1e-14)


def test_ei_rejects_zero():
    with pytest.raises(ValueError):
        exp_integral_ei(0.0)


@pytest.mark.parametrize("x", np.concatenate([-np.geomspace(1e-6, 50, 60), np.geomspace(1e-6, 50, 60)]))
def test_ei_matches_arbitrary_precision(x):
    ref = float(mpmath.ei(mpmath.mpf(float(x))))
    assert exp_integral_ei(x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("x", [-10.0, -2.0, -0.5, 0.5, 2.0, 10.0])
def test_ei_derivative(x):
    h = 1e-5 * abs(x)
    deriv = (exp_integral_ei(x + h) - exp_integral_ei(x - h)) / (2 * h)
    assert deriv == pytest.approx(math.exp(x) / x, rel=1e-6)


def test_ei_beyond_series_range():
    for x in (60.0, 200.0, 600.0):
        assert exp_integral_ei(x) == pytest.approx(float(mpmath.ei(x)), rel=1e-12)
    assert exp_integral_ei(-700.0) == pytest.approx(float(mpmath.ei(-700)), rel=1e-12)


@pytest.mark.parametrize("x", [1e-8, 0.3, 1.0, 1.5, 7.0, 80.0, 1e4])
def test_scaled_e1(x):
    ref = float(mpmath.exp(x) * mpmath.e1(x))
    assert exp_e1_scaled(x) == pytest.approx(ref, rel=1e-13)


def test_scaled_e1_limits():
    assert exp_e1_scaled(math.inf) == 0.0
    with pytest.raises(ValueError):
        exp_e1_scaled(0.0)


def test_trunc_taylor_examples():
    assert trunc_exp_taylor(7, 0.0) == 1.0
    assert trunc_exp_taylor(2, 1.0) == 2.5
    assert abs(trunc_exp_taylor(30, 1.0) - math.e) < 1e-12
    with pytest.raises(ValueError):
        trunc_exp_taylor(-1, 1.0)


def test_trunc_taylor_monotone_towards_exp():
    x = 2.3
    partial = [trunc_exp_taylor(n, x) for n in range(40)]
    assert np.all(np.diff(partial) >= 0)
    assert partial[-1] == pytest.approx(math.exp(x), rel=1e-15)


def test_trunc_taylor_accepts_mpf():
    with mpmath.workprec(200):
        v = trunc_exp_taylor(80, mpmath.mpf(3))
        assert abs(v - mpmath.exp(3)) < mpmath.mpf(10) ** -50


def test_lower_incomplete_gamma():
    assert lower_incomplete_gamma(2, 1) == pytest.approx(0.264241117657115, rel=1e-14)
    assert lower_incomplete_gamma(3.7, 0) == 0.0
    for x in (0.1, 1.0, 4.0):
        assert lower_incomplete_gamma(1, x) == pytest.approx(1 - math.exp(-x), rel=1e-14)


def test_gamma_cdf_examples():
    assert gamma_cdf(GammaParams(3, 1), 3) == pytest.approx(0.576809918873156, rel=1e-14)
    assert gamma_cdf(GammaParams(2.5, 4), 0) == 0.0
    assert gamma_cdf(GammaParams(1, 0.7), 2.0) == pytest.approx(1 - math.exp(-1.4), rel=1e-14)


def test_gamma_cdf_against_pdf_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = GammaParams(rng.uniform(0.3, 9), rng.uniform(0.1, 5))
        x = rng.uniform(0.01, 3) * p.mean
        ref, _ = integrate.quad(lambda t: gamma_pdf(p, t), 0, x, epsabs=1e-14, epsrel=1e-13, limit=200)
        assert gamma_cdf(p, x) == pytest.approx(ref, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(shape=st.floats(0.2, 20), rate=st.floats(0.05, 20), a=st.floats(0, 50), b=st.floats(0, 50))
def test_gamma_cdf_monotone(shape, rate, a, b):
    p = GammaParams(shape, rate)
    lo, hi = sorted((a, b))
    assert 0.0 <= gamma_cdf(p, lo) <= gamma_cdf(p, hi) <= 1.0


def test_gamma_params_validation():
    with pytest.raises(ValueError):
        GammaParams(0, 1)
    with pytest.raises(ValueError):
        GammaParams(1, -2)
    assert GammaParams(3, 2).mean == 1.5
