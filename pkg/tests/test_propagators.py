import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dipole_vacuum.errors import DomainError, EmptyMediumError, RegularizationError
from dipole_vacuum.media import ConstantModel, MaxwellGarnettMedium, VacuumModel, constant_mg_susceptibility, windowed_mg_susceptibility
from dipole_vacuum.propagators import (
    PhiFactors, dispersion_roots, dyson_par, dyson_perp, gvc, kernel_xi, phi_factors, phi_par_mg_longwave,
)
from dipole_vacuum.spectral import phi0_perp, retarded

finite = dict(allow_nan=False, allow_infinity=False)
ks = st.floats(0.1, 10, **finite)
qs = st.floats(0, 20, **finite)
chis = st.builds(complex, st.floats(-0.9, 3, **finite), st.floats(0, 1, **finite))
ras = st.builds(complex, st.floats(0.01, 0.5, **finite), st.floats(0, 0.2, **finite))


def backward(lhs, terms):
    """|lhs - sum(terms)| relative to the summed magnitudes."""
    return abs(lhs - sum(terms)) / (abs(lhs) + sum(abs(t) for t in terms))


@given(qs, ks, chis)
def test_dyson_identity(q, k, chi):
    m = ConstantModel(chi)
    kc = retarded(k)
    g0 = 1 / (kc * kc - q * q)
    g = dyson_perp(q, k, m)
    assert backward(g, [g0, -g0 * kc * kc * chi * g]) < 1e-13
    gl = dyson_par(q, k, m)
    assert backward(gl, [1 / k**2, -(1 / k**2) * k * k * chi * gl]) < 1e-13


@given(qs, ks, chis, ras)
def test_three_routes_agree(q, k, chi, ra):
    m = ConstantModel(chi, rho_alpha=ra)
    a = np.array(gvc(q, k, m, "lff"))
    kc = retarded(k)
    g0 = np.array([1 / (kc * kc - q * q), 1 / k**2])
    g = np.array([dyson_perp(q, k, m), dyson_par(q, k, m)])
    scale = np.abs(a) + (1 + np.abs(g / g0)) / np.abs(np.array([kc * kc, k * k]) * ra)
    for path in ("dyson", "tmatrix"):
        b = np.array(gvc(q, k, m, path))
        assert np.all(np.abs(a - b) / scale < 1e-13)


@given(qs, ks, chis, ras)
def test_kernel_reconstructs_polarization_propagator(q, k, chi, ra):
    m = ConstantModel(chi, rho_alpha=ra)
    if abs(chi) < 1e-6:
        return
    kc = retarded(k)
    gv = gvc(q, k, m)
    xi = kernel_xi(q, k, m)
    for g, x, g0 in zip(gv, xi, (1 / (kc * kc - q * q), 1 / k**2)):
        assert backward(g, [g0, g0 * x * g]) < 1e-13


def test_uncorrelated_medium_has_free_local_field():
    # chi = rho alpha: polarization propagator equals the Dyson propagator
    m = ConstantModel(0.3 + 0.1j)
    t, l = gvc(0.7, 1.0, m)
    assert t == pytest.approx(dyson_perp(0.7, 1.0, m))
    assert l == pytest.approx(dyson_par(0.7, 1.0, m))


def test_empty_medium_errors():
    with pytest.raises(EmptyMediumError):
        gvc(1.0, 1.0, ConstantModel(0.2, rho_alpha=0.0))
    with pytest.raises(EmptyMediumError):
        kernel_xi(1.0, 1.0, ConstantModel(0.0))
    with pytest.raises(DomainError):
        gvc(1.0, 1.0, ConstantModel(0.2), path="bogus")
    with pytest.raises(DomainError):
        dyson_perp(1.0, 1.0, VacuumModel(), eta=0.0)


# -- windowed Maxwell-Garnett self-energies against closed forms ---------------


def _F(b, Q):
    """int_0^Q q^2/(b^2 - q^2) dq for Im b > 0."""
    return -Q + (b / 2) * (np.log(b + Q) - np.log(b - Q))


def _F_inf(b):
    return -1j * math.pi * b / 2


def windowed_reference(k, ra, xi, qc):
    chi = ra / (1 - ra / 3)
    eps = 1 + chi
    L = chi / ra
    be = k * np.sqrt(eps + 0j)
    b1 = k * np.sqrt(1 + ra + 0j)
    kk = k + 1e-15j
    perp = L * _F(be, qc) - _F(kk, qc) + (_F_inf(b1) - _F(b1, qc)) - (_F_inf(kk) - _F(kk, qc))
    par = (L / eps - 1) / k**2 * qc**3 / 3
    return perp / (2 * math.pi**2), par / (2 * math.pi**2)


@pytest.mark.parametrize("ra,xi,k", [(0.05 + 2.6e-5j, 0.2, 1.0), (0.3 + 0.01j, 0.5, 0.8), (0.6 + 0.0j, 0.3, 1.5)])
def test_windowed_phi_matches_closed_form(ra, xi, k):
    m = MaxwellGarnettMedium(1.0, ra, xi)
    model = windowed_mg_susceptibility(m)
    phi = phi_factors(model, k)
    perp, par = windowed_reference(k, ra, xi, model.q_c)
    assert phi.phi_sc_perp == pytest.approx(perp, rel=1e-8)
    assert phi.phi_sc_par == pytest.approx(par, rel=1e-8)
    assert phi.phi0_perp == phi0_perp(k)
    assert phi.provenance["model"]["xi"] == xi


def test_vacuum_phi_is_free():
    phi = phi_factors(VacuumModel(), 2.0)
    assert phi.sc_sum == 0 and phi.total_sum == pytest.approx(2 * phi0_perp(2.0))
    assert PhiFactors.free(2.0) == phi


def test_constant_model_needs_imag_only():
    m = constant_mg_susceptibility(MaxwellGarnettMedium.from_eps(2.25))
    with pytest.raises(RegularizationError):
        phi_factors(m, 1.0)
    phi = phi_factors(m, 1.0, imag_only=True)
    assert math.isnan(phi.phi_sc_perp.real)
    L = (2.25 + 2) / 3
    # Im(phi0 + phi_sc_perp) = L * (-n k / 4 pi)
    assert phi.phi0_perp.imag + phi.phi_sc_perp.imag == pytest.approx(-L * 1.5 / (4 * math.pi), rel=1e-8)
    assert phi.provenance["re_cutoff_sensitive"]


def test_phi_par_longwave_value():
    m = MaxwellGarnettMedium.from_eps(2.25)
    L = 4.25 / 3
    exact = -2 * L * (L - 1) * 1.5 / (4 * math.pi)
    assert phi_par_mg_longwave(m, 1.0).imag == pytest.approx(exact, rel=1e-14)
    assert phi_par_mg_longwave(m, 1.0).imag == pytest.approx(-0.1409184392, abs=1e-10)
    with pytest.warns(UserWarning):
        phi_par_mg_longwave(MaxwellGarnettMedium.from_eps(2.25, xi=1.0), 1.0)


def test_dispersion_roots_constant_medium():
    eps = 2.25 + 0.1j
    m = ConstantModel(eps - 1)
    r = dispersion_roots(m, 1.0, (0.5, 2.5, -0.5, 0.5))
    n = np.sqrt(eps)
    assert len(r.k_nor_perp) == 1 and r.k_nor_perp[0] == pytest.approx(n, abs=1e-10)
    assert r.k_nor_par == []
