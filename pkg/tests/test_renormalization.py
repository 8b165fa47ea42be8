import math

import pytest
from hypothesis import given, strategies as st

from dipole_vacuum.errors import ConfigError, FixedPointError, NoResonanceError, ResonanceSingularityError
from dipole_vacuum.media import MaxwellGarnettMedium, windowed_mg_susceptibility
from dipole_vacuum.propagators import PhiFactors, phi_factors
from dipole_vacuum.renormalization import (
    free_linewidth, renormalize_alpha, self_consistent_medium, solve_kres, stimulated_power,
)
from dipole_vacuum.spectral import phi0_perp

finite = dict(allow_nan=False, allow_infinity=False)


@given(st.floats(1e-3, 100, **finite), st.floats(0.05, 5, **finite))
def test_free_space_unitarity(alpha0, k):
    at = renormalize_alpha(alpha0, PhiFactors.free(k), k)
    assert at.imag == pytest.approx(k**3 / (6 * math.pi) * abs(at) ** 2, rel=1e-12)


@given(st.floats(1e-3, 10, **finite), st.floats(0, 5, **finite), st.floats(0.05, 5, **finite),
       st.floats(-0.3, 0.3, **finite), st.floats(-0.3, 0, **finite))
def test_stimulated_power_two_routes(re, im, k, s_re, s_im):
    phi = PhiFactors(phi0_perp(k), complex(s_re, s_im), complex(s_re / 2, s_im), k)
    a0 = complex(re, im)
    try:
        sp = stimulated_power(a0, phi, k, 2.0)
    except ResonanceSingularityError:
        return
    assert sp.total == pytest.approx(sp.radiated + sp.absorbed, rel=1e-12, abs=1e-300)
    assert sp.radiated >= 0 and sp.absorbed >= 0


def test_stimulated_power_edge_cases():
    assert stimulated_power(0.0, PhiFactors.free(1.0), 1.0, 1.0) == (0.0, 0.0, 0.0)
    with pytest.raises(ConfigError):
        stimulated_power(1.0, PhiFactors.free(1.0), 1.0, -1.0)


@pytest.mark.parametrize("alpha0,k0", [(0.01, 1.0), (0.5, 2.0), (3.0, 0.3)])
def test_free_resonance_closed_form(alpha0, k0):
    r = solve_kres(alpha0, k0)
    assert r.k_res == k0
    assert r.gamma == pytest.approx(alpha0 * k0**4 / (6 * math.pi), rel=1e-14)
    assert r.gamma == pytest.approx(free_linewidth(alpha0, k0), rel=1e-14)


def test_resonance_shift_with_constant_self_energy():
    alpha0, k0, c = 0.2, 1.0, -0.4
    phi_of_k = lambda k: PhiFactors(phi0_perp(k), complex(c, -0.01), 0j, k)
    r = solve_kres(alpha0, k0, phi_of_k)
    # (k/k0)^2 - 1 = alpha0 k^2 (2c)/3
    expected = 1.0 / math.sqrt(1 / k0**2 - alpha0 * 2 * c / 3)
    assert r.k_res == pytest.approx(expected, rel=1e-10)
    assert r.alpha0_tilde == pytest.approx(alpha0 * (k0 / r.k_res) ** 2)
    S_im = 2 * phi0_perp(r.k_res).imag - 0.02
    assert r.gamma == pytest.approx(-r.alpha0_tilde * r.k_res**3 * S_im / 3, rel=1e-12)


def test_no_resonance_in_bracket():
    phi_of_k = lambda k: PhiFactors(phi0_perp(k), complex(-100.0, 0.0), 0j, k)
    with pytest.raises(NoResonanceError):
        solve_kres(0.2, 1.0, phi_of_k, bracket=(0.9, 1.1))


def test_self_consistent_free_limit():
    medium, r = self_consistent_medium(0.0, 0.01, 1.0, 0.2)
    assert medium is None
    assert r.alpha_tilde == renormalize_alpha(0.01, PhiFactors.free(1.0), 1.0)


def test_self_consistent_fixed_point():
    rho, a0, k, xi = 5.0, 0.01, 1.0, 0.2
    medium, r = self_consistent_medium(rho, a0, k, xi)
    phi = phi_factors(windowed_mg_susceptibility(MaxwellGarnettMedium(rho, r.alpha_tilde, xi)), k)
    assert renormalize_alpha(a0, phi, k) == pytest.approx(r.alpha_tilde, rel=1e-9)
    assert r.iterations > 0 and medium.alpha_tilde == r.alpha_tilde


def test_self_consistent_reports_non_convergence():
    with pytest.raises(FixedPointError) as info:
        self_consistent_medium(5.0, 0.01, 1.0, 0.2, max_iter=2, tol=1e-15)
    assert len(info.value.history) >= 2
    with pytest.raises(ConfigError):
        self_consistent_medium(5.0, 1.0, 1.0, 0.2)
