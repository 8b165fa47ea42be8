import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dipole_vacuum.errors import DomainError, RegularizationError
from dipole_vacuum.spectral import (
    ComplexPermittivitySqrt, QuadratureSpec, g0_coupling_coefficients, g0_dyadic, g0_par, g0_perp, g0_realspace,
    omega_from_wavenumber, passive_sqrt, phi0_par, phi0_perp, phi0_perp_lorentzian, radial_integral,
    wavenumber_from_omega,
)

finite = dict(allow_nan=False, allow_infinity=False)


def test_g0_perp_light_cone_pole_needs_eta():
    with pytest.raises(DomainError):
        g0_perp(1.0, 1.0, eta=0.0)
    assert np.isfinite(g0_perp(1.0, 1.0))


def test_g0_perp_imag_integral_is_minus_k_over_4pi():
    val = radial_integral(lambda q, kc: 1.0 / (kc * kc - q * q), QuadratureSpec(), 1.0, poles=(1.0,), part="imag")
    assert val == pytest.approx(-1.0 / (4 * math.pi), rel=1e-9)


@pytest.mark.parametrize("eps", [1.0, 1.7689, 2.25, 4.0])
def test_effective_medium_contour_value(eps):
    k = 1.3
    n = math.sqrt(eps)
    val = radial_integral(lambda q, kc: 1.0 / (eps * kc * kc - q * q), QuadratureSpec(), k, poles=(n * k,),
                          part="imag")
    assert val == pytest.approx(-n * k / (4 * math.pi), rel=1e-8)


def test_radial_integral_finite_cutoff_matches_closed_form():
    # (1/2 pi^2) int_0^Q q^2 e^{-q} dq
    Q = 3.0
    exact = (2.0 - math.exp(-Q) * (Q * Q + 2 * Q + 2)) / (2 * math.pi**2)
    val = radial_integral(lambda q, kc: math.exp(-q), QuadratureSpec(q_max=Q), 1.0, part="real")
    assert val == pytest.approx(exact, rel=1e-12)


def test_radial_integral_flags_divergence():
    with pytest.raises(RegularizationError):
        radial_integral(lambda q, kc: 1.0 + 0j, QuadratureSpec(), 1.0, part="real")


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0.5)
    with pytest.raises(DomainError):
        QuadratureSpec(q_max=-1.0)
    with pytest.raises(DomainError):
        QuadratureSpec(eta=-1e-6)
    assert QuadratureSpec().with_(eta=1e-4).eta == 1e-4


def test_g0_par():
    assert g0_par(2.0) == 0.25
    with pytest.raises(DomainError):
        g0_par(0.0)


def _curl_curl(fun, x, h):
    """Finite-difference curl curl of a 3x3 field acting on constant vectors (columns)."""
    def d(i, j, x):
        e = np.zeros(3)
        e[j] = h
        return (fun(x + e)[i] - fun(x - e)[i]) / (2 * h)

    def dd(i, j, x):
        ei = np.zeros(3)
        ej = np.zeros(3)
        ei[i] = h
        ej[j] = h
        return (fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)) / (4 * h * h)

    lap = sum(dd(i, i, x) for i in range(3))
    grad_div = np.array([sum(dd(i, j, x)[j] for j in range(3)) for i in range(3)])
    return grad_div - lap


def test_dyadic_solves_vector_helmholtz_away_from_origin():
    k = 1.1
    x = np.array([0.7, -0.4, 0.9])
    G = lambda r: g0_dyadic(r, k)
    residual = k * k * G(x) - _curl_curl(G, x, 1e-3)
    assert np.max(np.abs(residual)) < 1e-4 * np.max(np.abs(k * k * G(x)))


def test_dyadic_static_and_far_limits():
    r = 1.3
    rhat = np.array([0.0, 0.6, 0.8])
    k = 1e-4
    stat = -(3 * np.outer(rhat, rhat) - np.eye(3)) / (4 * math.pi * r**3)
    assert np.allclose(k * k * g0_realspace(r, k, rhat), stat, rtol=1e-6)
    k, r = 1.0, 4000.0
    far = -np.exp(1j * k * r) / (4 * math.pi * r) * (np.eye(3) - np.outer(rhat, rhat))
    assert np.allclose(g0_realspace(r, k, rhat), far, atol=1e-3 / r)


@given(st.floats(0.05, 20, **finite), st.floats(0.05, 5, **finite))
def test_dyadic_structure(r, k):
    A, B = g0_coupling_coefficients(r, k)
    G = g0_realspace(r, k, (1.0, 2.0, -2.0))
    rhat = np.array([1.0, 2.0, -2.0]) / 3.0
    assert np.allclose(G, G.T)
    assert np.allclose(G @ rhat, B * rhat)
    perp = np.array([2.0, -1.0, 0.0]) / math.sqrt(5)
    assert np.allclose(G @ perp, A * perp)
    assert np.allclose(g0_realspace(r, k, -rhat), G)


def test_dyadic_rejects_zero_separation():
    with pytest.raises(DomainError):
        g0_realspace(0.0, 1.0)
    with pytest.raises(DomainError):
        g0_dyadic(np.zeros(3), 1.0)


def test_free_self_energies():
    assert phi0_perp(2.0) == pytest.approx(-2j / (4 * math.pi))
    assert phi0_perp_lorentzian(1.0, 1.0, 3.0).real == pytest.approx(-0.5)
    assert phi0_par(0.1, 1.0) == pytest.approx(1.0 / ((4 * math.pi / 3) * 1e-3))
    with pytest.warns(UserWarning):
        phi0_par(1.0, 1.0)


@given(st.floats(-50, 50, **finite), st.floats(0, 50, **finite))
def test_passive_branch(re, im):
    s = passive_sqrt(complex(re, im))
    assert s.imag >= 0
    assert abs(s * s - complex(re, im)) <= 1e-12 * max(1.0, abs(complex(re, im)))


def test_passive_branch_negative_real_eps():
    c = ComplexPermittivitySqrt.from_eps(-4.0)
    assert c.sqrt_eps == pytest.approx(2j)
    assert c.kappa == pytest.approx(2.0) and c.n == pytest.approx(0.0)


def test_unit_conversion_roundtrip():
    L0 = 1e-7
    w = 3.0e15
    assert omega_from_wavenumber(wavenumber_from_omega(w, L0), L0) == pytest.approx(w, rel=1e-14)
