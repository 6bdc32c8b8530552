import mpmath
import numpy as np
import pytest
from scipy import integrate

from qsync.bath import (
    BathSpec,
    DegenerateBath,
    correlation_function,
    matsubara_coefficients,
    matsubara_frequencies,
    spectral_density,
    terminator_coefficient,
)


def test_frequencies():
    np.testing.assert_allclose(matsubara_frequencies(2, 0.3, 2), [2, 20.943951023931955, 41.88790204786391])
    np.testing.assert_allclose(matsubara_frequencies(0.2, 0.3, 0), [0.2])
    np.testing.assert_allclose(matsubara_frequencies(4, 0.3, 1), [4, 20.943951023931955])


@pytest.mark.parametrize("gamma,beta", [(0, 0.3), (-1, 0.3), (1, 0), (1, -2)])
def test_frequencies_reject(gamma, beta):
    with pytest.raises(ValueError):
        matsubara_frequencies(gamma, beta, 2)


def _mp_coefficients(lam, gamma, beta, m_cut):
    mpmath.mp.dps = 40
    lam, gamma, beta = mpmath.mpf(lam), mpmath.mpf(gamma), mpmath.mpf(beta)
    out = [gamma * lam * (mpmath.cot(gamma * beta / 2) - 1j)]
    for k in range(1, m_cut + 1):
        nu = 2 * mpmath.pi * k / beta
        out.append(4 * gamma * lam * nu / (beta * (nu**2 - gamma**2)))
    return np.array([complex(z) for z in out])


def test_coefficients_against_arbitrary_precision():
    c = matsubara_coefficients(0.05, 0.2, 0.3, 1)
    assert c[0] == pytest.approx(0.333233 - 0.01j, abs=5e-7)
    # 0.0063662 is the large-nu approximation 4 gamma lam / (beta nu_1)
    assert c[1].real == pytest.approx(0.0063662, rel=2e-4)
    assert c[1].real == pytest.approx(0.00636677830423821, rel=1e-13)
    for args in [(0.05, 0.2, 0.3, 6), (0.02, 2.0, 0.3, 4), (0.05, 4.0, 1.0, 5)]:
        np.testing.assert_allclose(matsubara_coefficients(*args), _mp_coefficients(*args), rtol=1e-13)


def test_coefficient_structure():
    c = matsubara_coefficients(0.05, 2.0, 0.3, 5)
    assert c[0].imag == pytest.approx(-2.0 * 0.05)
    assert np.all(c[1:].imag == 0)
    assert np.all(matsubara_coefficients(0.0, 2.0, 0.3, 3) == 0)
    with pytest.raises(ValueError):
        matsubara_coefficients(-0.1, 2.0, 0.3, 3)


def test_high_temperature_limit():
    for beta in (1e-2, 1e-3, 1e-4):
        c0 = matsubara_coefficients(0.05, 2.0, beta, 0)[0]
        assert c0.real == pytest.approx(2 * 0.05 / beta, rel=beta)


def test_degenerate_parameters():
    beta = 0.3
    nu1 = 2 * np.pi / beta
    # gamma on nu_1: also the cot pole since gamma beta / 2 = pi
    with pytest.raises(DegenerateBath):
        matsubara_coefficients(0.05, nu1, beta, 2)
    with pytest.raises(DegenerateBath):
        matsubara_coefficients(0.05, 2 * nu1 * (1 + 1e-12), beta, 1)
    with pytest.raises(DegenerateBath):
        BathSpec(0.05, nu1, beta)
    matsubara_coefficients(0.05, nu1 * (1 + 1e-6), beta, 2)


def test_terminator():
    b0 = BathSpec(0.05, 0.2, 0.3, 0)
    assert b0.terminator.real == pytest.approx(0.000500030002571660, rel=1e-9)
    assert abs(b0.terminator.imag) < 1e-15
    assert terminator_coefficient(BathSpec(0.0, 0.2, 0.3, 3)) == 0
    mags = [abs(BathSpec(0.05, 0.2, 0.3, m).terminator) for m in range(0, 12)]
    assert np.all(np.diff(mags) < 0)
    assert abs(BathSpec(0.05, 0.2, 0.3, 6).terminator) < abs(BathSpec(0.05, 0.2, 0.3, 2).terminator)


def test_spectral_density():
    assert spectral_density(0.05, 2.0, 0.0) == 0.0
    assert spectral_density(0.05, 2.0, 2.0) == pytest.approx(0.05 / np.pi)
    w = np.random.default_rng(1).normal(size=20) * 5
    np.testing.assert_allclose(spectral_density(0.05, 2.0, -w), -spectral_density(0.05, 2.0, w))


def test_correlation_function_basics():
    b = BathSpec(0.05, 2.0, 0.3, 4)
    assert correlation_function(BathSpec(0.0, 2.0, 0.3, 2), 0.0) == 0
    t = np.linspace(0, 3, 13)
    np.testing.assert_allclose(correlation_function(b, t).imag, -2.0 * 0.05 * np.exp(-2.0 * t), atol=1e-16)
    assert correlation_function(b, t).shape == t.shape
    with pytest.raises(ValueError):
        correlation_function(b, -1.0)


def _quad_re(lam, gamma, beta, t):
    # the density J already carries its 1/pi, so no extra prefactor here
    def f(w):
        if w == 0.0:
            return 4.0 * lam / (np.pi * gamma * beta)
        return spectral_density(lam, gamma, w) / np.tanh(beta * w / 2)

    head, _ = integrate.quad(f, 0, 1.0, weight="cos", wvar=t, limit=400)
    tail, _ = integrate.quad(f, 1.0, np.inf, weight="cos", wvar=t, limlst=200)
    return head + tail


def _quad_im(lam, gamma, t):
    f = lambda w: spectral_density(lam, gamma, w)  # noqa: E731
    return -integrate.quad(f, 0, np.inf, weight="sin", wvar=t)[0]


@pytest.mark.parametrize("lam,gamma,beta", [(0.05, 2.0, 0.3), (0.05, 0.2, 0.3), (0.02, 4.0, 1.0)])
def test_correlation_against_quadrature(lam, gamma, beta):
    # Re C(0) diverges logarithmically for this density, so the grid starts just above 0
    spec = BathSpec(lam, gamma, beta, 400)
    for t in np.linspace(0.05, 5.0 / gamma, 8):
        c = correlation_function(spec, t)
        assert c.real == pytest.approx(_quad_re(lam, gamma, beta, t), rel=1e-4)
        assert c.imag == pytest.approx(_quad_im(lam, gamma, t), rel=1e-6)


def test_bath_spec_read_only():
    b = BathSpec(0.05, 2.0, 0.3)
    with pytest.raises(ValueError):
        b.c[0] = 0
    assert b.with_cutoff(4).nu.size == 5
