import math

import pytest

from dipole_vacuum.emission import (
    beer_lambert_farfield, emission_decomposition, ldos_coherent_mg, ldos_coherent_mg_quadrature, ldos_emission, ldos_emission_mg_farfield,
    ldos_emission_mg_farfield_quadrature, ldos_from_power, ldos_light, n_free, renormalization_residues,
)
from dipole_vacuum.errors import DomainError
from dipole_vacuum.media import ConstantModel, MaxwellGarnettMedium, VacuumModel, constant_mg_susceptibility, windowed_mg_susceptibility
from dipole_vacuum.propagators import dispersion_roots, phi_factors
from dipole_vacuum.spectral import QuadratureSpec

NS = [1.0, 1.33, 1.5, 2.0]


@pytest.mark.parametrize("n", NS)
def test_light_ldos_is_n_times_free(n):
    m = ConstantModel(n * n - 1)
    assert ldos_light(m, 0.8) == pytest.approx(n * n_free(0.8), rel=1e-8)


@pytest.mark.parametrize("n", NS)
def test_coherent_ldos_quadrature_vs_closed_form(n):
    m = MaxwellGarnettMedium.from_eps(n * n)
    k = 1.0
    assert ldos_coherent_mg_quadrature(m, k) == pytest.approx(ldos_coherent_mg(m, k), rel=1e-8)
    if n > 1:
        b = emission_decomposition(constant_mg_susceptibility(m), k)
        assert ldos_from_power(b.w_coh, k) == pytest.approx(ldos_coherent_mg(m, k), rel=1e-8)
    assert ldos_coherent_mg(m, k) == pytest.approx((n * n + 2) / 3 * n * n_free(k), rel=1e-14)


@pytest.mark.parametrize("n", NS)
def test_far_field_emission_ldos(n):
    m = MaxwellGarnettMedium.from_eps(n * n)
    closed = (n**5 + 4 * n**3 + 4 * n) / 9 * n_free(1.0)
    assert ldos_emission_mg_farfield(m, 1.0) == pytest.approx(closed, rel=1e-12)
    assert ldos_emission_mg_farfield_quadrature(m, 1.0) == pytest.approx(closed, rel=1e-8)


def test_ob_variant():
    m = MaxwellGarnettMedium.from_eps(2.25)
    assert ldos_coherent_mg(m, 1.0, "ob") == pytest.approx(3 * 2.25 / 5.5 * 1.5 * n_free(1.0))
    with pytest.raises(DomainError):
        ldos_coherent_mg(m, 1.0, "xx")


def test_vacuum_emission_ldos_is_free():
    phi = phi_factors(VacuumModel(), 0.7)
    assert ldos_emission(phi, 0.7) == pytest.approx(n_free(0.7), rel=1e-14)
    assert ldos_light(VacuumModel(), 0.7) == pytest.approx(n_free(0.7), rel=1e-9)


@pytest.fixture(scope="module")
def windowed():
    return windowed_mg_susceptibility(MaxwellGarnettMedium(5.0, 0.01 + 5e-6j, 0.2))


def test_windowed_emission_total_matches_self_energy_route(windowed):
    k = 1.0
    b = emission_decomposition(windowed, k)
    # the decomposition stops at the window edge; compare with the same cutoff
    phi = phi_factors(windowed, k, QuadratureSpec(q_max=windowed.q_c))
    assert ldos_from_power(b.w_total, k) == pytest.approx(ldos_emission(phi, k), rel=1e-8)
    assert b.w_coh + b.w_ext == pytest.approx(b.w_total, rel=1e-8)
    assert b.w_indirect == pytest.approx(b.w_coh - b.w_direct)
    assert b.q_max == windowed.q_c


def test_lossless_decomposition_has_no_extinction():
    b = emission_decomposition(constant_mg_susceptibility(MaxwellGarnettMedium.from_eps(2.25)), 1.0)
    assert b.w_ext == 0
    assert b.w_total > 0 and b.w_direct > 0


def test_decomposition_needs_dipoles():
    with pytest.raises(DomainError):
        emission_decomposition(VacuumModel(), 1.0)


def test_residues_equal_local_field_factor_for_constant_medium():
    eps = 2.25 + 0.05j
    m = MaxwellGarnettMedium.from_eps(eps)
    model = constant_mg_susceptibility(m)
    roots = dispersion_roots(model, 1.0, (0.5, 2.5, -0.5, 0.5))
    res = renormalization_residues(model, 1.0, roots)
    assert res.perp == pytest.approx([((eps + 2) / 3).real])


def test_beer_lambert():
    assert beer_lambert_farfield(2.0, 1.5, 0.0, 1.0, 10.0) == 2.0
    assert beer_lambert_farfield(1.0, 1.5, 0.1, 2.0, 3.0) == pytest.approx(math.exp(-1.2))
    with pytest.raises(DomainError):
        beer_lambert_farfield(1.0, 1.5, 0.1, 2.0, 0.0)
    assert ldos_from_power(1.0, math.pi) == 2.0
