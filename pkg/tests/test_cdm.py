import json
import math

import numpy as np
import pytest

from dipole_vacuum import cdm
from dipole_vacuum.cdm import (
    CdmParams, DipoleConfiguration, EnsembleEstimate, benchmark_params, ensemble_average, free_space_alpha,
    generate_configuration, record_to_json, run_configuration, self_propagator_scattering, solve_coupled_dipoles,
    two_body_reference, validate_against_analytic,
)
from dipole_vacuum.errors import (
    ComparisonInvalidError, ConfigError, DensityTooHighError, EnsembleQualityError, ResonantClusterError,
)
from dipole_vacuum.media import MaxwellGarnettMedium, windowed_mg_susceptibility
from dipole_vacuum.propagators import phi_factors
from dipole_vacuum.spectral import g0_coupling_coefficients


def pair_config(r, axis=2):
    pos = np.zeros((2, 3))
    pos[1, axis] = r
    return DipoleConfiguration(pos, xi=0.1, box_side=2 * r, seed=0)


def test_single_emitter_at_centre():
    cfg = generate_configuration(2.0, 0.1, 1, seed=3)
    assert cfg.n_dipoles == 1
    assert np.allclose(cfg.positions[0], cfg.box_side / 2)
    assert cfg.box_side == pytest.approx(0.5 ** (1 / 3))


def test_exclusion_and_count():
    cfg = generate_configuration(20.0, 0.3, 300, seed=11)
    assert cfg.n_dipoles == 300
    assert cfg.min_distance() >= 0.3
    assert round(20.0 * cfg.box_side**3) == 300
    assert np.all((cfg.positions >= 0) & (cfg.positions <= cfg.box_side))


def test_configuration_is_deterministic():
    a = generate_configuration(5.0, 0.2, 200, seed=42)
    b = generate_configuration(5.0, 0.2, 200, seed=42)
    c = generate_configuration(5.0, 0.2, 200, seed=43)
    assert a.positions.tobytes() == b.positions.tobytes()
    assert a.positions.tobytes() != c.positions.tobytes()


def test_density_guards():
    with pytest.raises(DensityTooHighError):
        generate_configuration(100.0, 0.2, 50, seed=0)  # packing 0.42
    with pytest.raises(DensityTooHighError):
        generate_configuration(70.0, 0.2, 400, seed=0, max_rejections=10)
    with pytest.raises(ConfigError):
        generate_configuration(1.0, 0.1, 0, seed=0)


def test_lone_emitter_moment():
    cfg = generate_configuration(1.0, 0.1, 1, seed=0)
    a = free_space_alpha(0.2, 1.0)
    p = solve_coupled_dipoles(cfg, a, 1.0, [1.0, 2.0, 0.5])
    assert np.allclose(p[0], a * np.array([1.0, 2.0, 0.5]), rtol=1e-15)
    assert np.all(self_propagator_scattering(cfg, solve_coupled_dipoles(cfg, a, 1.0, np.eye(3)), a, 1.0) == 0)


@pytest.mark.parametrize("r,k,alpha0", [(0.3, 1.0, 0.05), (1.7, 1.0, 0.3), (2.5, 2.0, 1.0), (0.25, 0.5, 0.01)])
def test_two_body_recurrent_series(r, k, alpha0):
    a = free_space_alpha(alpha0, k)
    cfg = pair_config(r)
    p = solve_coupled_dipoles(cfg, a, k, np.eye(3))
    g = self_propagator_scattering(cfg, p, a, k)
    ref = two_body_reference(r, a, k)
    A, B = g0_coupling_coefficients(r, k)
    # independent scalar geometric series for the emitter moment
    series = sum(a * (k * k * a * A) ** (2 * j) for j in range(400))
    if abs(k * k * a * A) < 0.9:
        assert p[0, 0, 0] == pytest.approx(series, rel=1e-10)
    assert p[0, 0, 0] == pytest.approx(ref["p0_xx"], rel=1e-10)
    assert p[0, 2, 2] == pytest.approx(ref["p0_zz"], rel=1e-10)
    assert g[0, 0] == pytest.approx(ref["g_xx"], rel=1e-10)
    assert g[1, 1] == pytest.approx(ref["g_xx"], rel=1e-10)
    assert g[2, 2] == pytest.approx(ref["g_zz"], rel=1e-10)
    assert np.max(np.abs(g - np.diag(np.diag(g)))) < 1e-15


def test_reciprocity():
    rng = np.random.default_rng(5)
    pos = rng.uniform(0, 2, (4, 3))
    a, k = free_space_alpha(0.2, 1.3), 1.3
    cfg = DipoleConfiguration(pos, 0.1, 2.0, 0)
    swapped = DipoleConfiguration(pos[[1, 0, 2, 3]], 0.1, 2.0, 0)
    x10 = solve_coupled_dipoles(cfg, a, k, np.eye(3))[1]
    x01 = solve_coupled_dipoles(swapped, a, k, np.eye(3))[1]
    assert np.allclose(x01, x10.T, rtol=1e-12, atol=0)


def test_resonant_cluster_is_rejected():
    k, r = 1.0, 0.5
    A, _ = g0_coupling_coefficients(r, k)
    with pytest.raises(ResonantClusterError):
        solve_coupled_dipoles(pair_config(r), 1.0 / (k * k * A), k, np.eye(3))


def test_extinction_is_non_negative_for_passive_alpha():
    p = benchmark_params(n_dipoles=150)
    for seed in range(3):
        rec = run_configuration(p, seed)
        assert rec["ok"]
        assert rec["residual"] < 1e-10
        assert min(rec["extinction"]) >= 0


def test_ensemble_determinism_across_parallelism():
    p = benchmark_params(n_dipoles=60)
    a = ensemble_average(p, 6, base_seed=7, parallelism=1)
    b = ensemble_average(p, 6, base_seed=7, parallelism=2)
    rows_a = [json.dumps(record_to_json(r), sort_keys=True) for r in a.records]
    rows_b = [json.dumps(record_to_json(r), sort_keys=True) for r in b.records]
    assert rows_a == rows_b
    assert a.mean.tobytes() == b.mean.tobytes()
    assert [r["seed"] for r in a.records] == list(range(7, 13))


def test_ensemble_isotropy():
    est = ensemble_average(benchmark_params(n_dipoles=120), 40, base_seed=100)
    off = ~np.eye(3, dtype=bool)
    assert np.all(np.abs(est.mean[off]) <= 3 * est.stderr[off])
    assert np.all(np.abs(est.mean - est.mean.T) <= 3 * np.sqrt(2) * est.stderr)


def test_stderr_scaling_on_synthetic_resampling():
    rng = np.random.default_rng(0)
    draws = rng.normal(size=(8000, 3, 3)) + 1j * rng.normal(size=(8000, 3, 3))
    s1 = cdm._complex_stderr(draws[:4000])
    s2 = cdm._complex_stderr(draws)
    assert np.all(np.abs(s1 / s2 / math.sqrt(2) - 1) < 0.2)


def test_dilute_limit():
    p = CdmParams(rho=1e-6, xi=0.2, n_dipoles=2, alpha_tilde=free_space_alpha(0.01, 1.0), k=1.0)
    est = ensemble_average(p, 20, base_seed=0)
    # scale of a single far host: k^2 alpha A^2 with A ~ 1/(4 pi L), L ~ 126
    assert np.all(np.abs(est.mean) < 1e-7)
    assert abs(est.trace_mean) <= 3 * est.trace_stderr + 1e-12


def test_failed_configurations_are_counted(monkeypatch):
    real = cdm.run_configuration
    p = benchmark_params(n_dipoles=20)

    def flaky(params, seed, every):
        if seed % every == 0:
            return {"seed": seed, "n_dipoles": params.n_dipoles, "ok": False, "error": "ResonantClusterError: test"}
        return real(params, seed)

    monkeypatch.setattr(cdm, "run_configuration", lambda params, seed: flaky(params, seed, 40))
    est = ensemble_average(p, 40, base_seed=1)
    assert est.n_configs == 39 and len(est.failures) == 1
    monkeypatch.setattr(cdm, "run_configuration", lambda params, seed: flaky(params, seed, 10))
    with pytest.raises(EnsembleQualityError):
        ensemble_average(p, 40, base_seed=1)
    with pytest.raises(ConfigError):
        ensemble_average(p, 1)


def _synthetic_estimate(phi, params):
    mean = phi.sc_sum / 3 * np.eye(3)
    return EnsembleEstimate(mean=mean, stderr=np.full((3, 3), 0.01), trace_mean=complex(np.trace(mean)),
                            trace_stderr=0.01, n_configs=10, n_dipoles=params.n_dipoles, k=params.k,
                            params=params, base_seed=0)


def test_validation_guards_and_synthetic_pass():
    p = benchmark_params()
    medium = MaxwellGarnettMedium(p.rho, p.alpha_tilde, p.xi)
    phi = phi_factors(windowed_mg_susceptibility(medium), p.k)
    rep = validate_against_analytic(_synthetic_estimate(phi, p), phi)
    assert rep.passed and np.all(rep.z_scores == 0) and rep.rel_deviation == 0
    other = phi_factors(windowed_mg_susceptibility(MaxwellGarnettMedium(p.rho, p.alpha_tilde, 0.25)), p.k)
    with pytest.raises(ComparisonInvalidError):
        validate_against_analytic(_synthetic_estimate(phi, p), other)
    with pytest.raises(ComparisonInvalidError):
        validate_against_analytic(_synthetic_estimate(phi, p), phi_factors(windowed_mg_susceptibility(medium), 1.1))


@pytest.mark.slow
def test_finite_size_control():
    small = ensemble_average(benchmark_params(n_dipoles=100), 30, base_seed=0)
    large = ensemble_average(benchmark_params(n_dipoles=338), 30, base_seed=1000)  # box side x 1.5
    diff = abs(small.trace_over_3 - large.trace_over_3)
    sigma = math.hypot(small.trace_stderr, large.trace_stderr) / 3
    assert diff <= 3 * sigma


def test_benchmark_params():
    p = benchmark_params()
    assert abs(p.rho * p.alpha_tilde) == pytest.approx(0.05, rel=1e-12)
    assert p.k * p.xi == pytest.approx(0.2)
    assert p.alpha_tilde.imag == pytest.approx(p.k**3 / (6 * math.pi) * abs(p.alpha_tilde) ** 2, rel=1e-12)
