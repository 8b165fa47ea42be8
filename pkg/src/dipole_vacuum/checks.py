"""Fast built-in property checks run by ``dipole-vacuum selftest``."""

from __future__ import annotations

import math
from typing import Dict, List, NamedTuple

import numpy as np

from .media import ConstantModel, MaxwellGarnettMedium
from .propagators import PhiFactors, gvc, kernel_xi
from .renormalization import renormalize_alpha, solve_kres, stimulated_power
from .spectral import retarded


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_models(rng, n):
    for _ in range(n):
        k = rng.uniform(0.1, 10.0)
        q = rng.uniform(0.0, 20.0)
        ra = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.0, 0.2))
        chi = complex(rng.uniform(-0.9, 3.0), rng.uniform(0.0, 1.0))
        yield q, k, ConstantModel(chi, rho_alpha=ra)


def identity_residuals(n_samples: int = 1000, seed: int = 0) -> Dict[str, float]:
    """Max residuals of the Dyson, three-route and kernel identities.

    Each residual is ``|lhs - rhs|`` divided by the summed magnitudes of the
    terms that are added or subtracted, i.e. a backward error. Near the
    light cone the individual terms exceed the result by the pole
    enhancement, so a plain relative error would measure cancellation.
    """
    rng = np.random.default_rng(seed)
    worst = {"dyson": 0.0, "routes": 0.0, "kernel": 0.0}
    for q, k, model in _random_models(rng, n_samples):
        kc = retarded(k)
        ra = model.rho_alpha(k)
        chi = model.chi_perp(q, k)
        g0 = 1.0 / (kc * kc - q * q)
        g = 1.0 / (kc * kc * (1.0 + chi) - q * q)
        # G = G0 + G0 (-k^2 chi) G
        corr = g0 * kc * kc * chi * g
        worst["dyson"] = max(worst["dyson"], abs(g - (g0 - corr)) / (abs(g) + abs(g0) + abs(corr)))
        routes = [np.array(gvc(q, k, model, path=p)) for p in ("lff", "dyson", "tmatrix")]
        g0s = np.array([g0, 1.0 / (k * k)])
        gs = np.array([g, 1.0 / (k * k * (1.0 + chi))])
        k2 = np.array([kc * kc, k * k])
        scale = np.abs(routes[0]) + (1.0 + np.abs(gs / g0s)) / np.abs(k2 * ra)
        for r in routes[1:]:
            worst["routes"] = max(worst["routes"], float(np.max(np.abs(r - routes[0]) / scale)))
        xi = kernel_xi(q, k, model)
        for gv, x, g0c in zip(routes[0], xi, g0s):
            term = g0c * x * gv
            worst["kernel"] = max(worst["kernel"], abs(gv - (g0c + term)) / (abs(gv) + abs(g0c) + abs(term)))
    return worst


def optical_theorem_residuals(n_samples: int = 200, seed: int = 1) -> Dict[str, float]:
    """Free-space unitarity of alpha_tilde and the two stimulated-power routes."""
    rng = np.random.default_rng(seed)
    worst = {"unitarity": 0.0, "power": 0.0}
    for _ in range(n_samples):
        k = rng.uniform(0.1, 5.0)
        a0 = rng.uniform(1e-3, 10.0)
        phi = PhiFactors.free(k)
        at = renormalize_alpha(a0, phi, k)
        lhs, rhs = at.imag, k**3 / (6 * math.pi) * abs(at) ** 2
        worst["unitarity"] = max(worst["unitarity"], abs(lhs - rhs) / abs(rhs))
        lossy = complex(a0, rng.uniform(0.0, a0))
        sp = stimulated_power(lossy, phi, k, 1.0)
        worst["power"] = max(worst["power"], abs(sp.total - sp.radiated - sp.absorbed) / abs(sp.total))
    return worst


def free_renormalization_residual() -> float:
    """Relative mismatch of k_res and gamma against the free-space closed form."""
    worst = 0.0
    for a0, k0 in ((0.01, 1.0), (0.5, 2.0), (3.0, 0.3)):
        r = solve_kres(a0, k0)
        worst = max(worst, abs(r.k_res - k0) / k0, abs(r.gamma - a0 * k0**4 / (6 * math.pi)) / r.gamma)
    return worst


def mg_ldos_residual() -> float:
    """Far-field emission LDOS of a lossless MG medium, quadrature vs closed form."""
    from .emission import ldos_emission_mg_farfield, ldos_emission_mg_farfield_quadrature

    m = MaxwellGarnettMedium.from_eps(1.5**2)
    a = ldos_emission_mg_farfield(m, 1.0)
    b = ldos_emission_mg_farfield_quadrature(m, 1.0)
    return abs(a - b) / abs(a)


def run_all() -> List[CheckResult]:
    out = []
    for name, val in identity_residuals().items():
        out.append(CheckResult(f"identity.{name}", val < 1e-12, f"max residual {val:.3g}"))
    for name, val in optical_theorem_residuals().items():
        out.append(CheckResult(f"optical.{name}", val < 1e-12, f"max residual {val:.3g}"))
    val = free_renormalization_residual()
    out.append(CheckResult("renorm.free", val < 1e-12, f"max residual {val:.3g}"))
    val = mg_ldos_residual()
    out.append(CheckResult("ldos.mg_farfield", val < 1e-6, f"relative error {val:.3g}"))
    return out
