"""Local densities of states and emitted-power decompositions.

LDOS values are in units of omega^2 / (pi^2 c^3) when ``normalized`` and
raw otherwise (with c = 1 the raw free value is k^2 / pi^2). Powers are in
units of |W_o|, the free-space scale (omega^3/6)|p0|^2, so that passive media
give non-negative emission.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

from .errors import DomainError, InternalConsistencyError
from .media import MaxwellGarnettMedium, SusceptibilityModel, lff_ll, lff_ob
from .propagators import DispersionRoots, PhiFactors, dyson_par
from .spectral import QuadratureSpec, passive_sqrt, radial_integral

ADDITIVITY_TOL = 1e-8


def n_free(k):
    """Free-space LDOS k^2 / pi^2."""
    return k * k / math.pi**2


@dataclass(frozen=True)
class LdosReport:
    """Raw LDOS values at one wavenumber."""

    k: float
    n_free: float
    n_light: float = math.nan
    n_emis: float = math.nan
    n_coh: float = math.nan
    components: dict = field(default_factory=dict, compare=False)

    def normalized(self) -> dict:
        return {
            "n_light": self.n_light / self.n_free,
            "n_emis": self.n_emis / self.n_free,
            "n_coh": self.n_coh / self.n_free,
        }


def ldos_light(model: SusceptibilityModel, k, spec: Optional[QuadratureSpec] = None) -> float:
    """LDOS seen by external light, ``-(4k/pi) Im int d^3q/(2pi)^3 G_perp``."""
    spec = spec or QuadratureSpec()

    def f(q, kc):
        return 1.0 / (kc * kc * (1.0 + model.chi_perp(q, k)) - q * q)

    im = radial_integral(f, spec, k, poles=model.pole_hints(k), breakpoints=model.breakpoints(k), part="imag")
    return -(4.0 * k / math.pi) * im


def ldos_emission(phi: PhiFactors, k) -> float:
    """Emission LDOS ``-(2k/pi) Im(2 phi0_perp + 2 phi_sc_perp + phi_sc_par)``."""
    return -(2.0 * k / math.pi) * phi.total_sum.imag


def ldos_coherent_mg(m: MaxwellGarnettMedium, k, variant: str = "ll") -> float:
    """Coherent emission LDOS of a Maxwell-Garnett medium at long wavelength.

    ``variant="ll"`` uses the Lorentz-Lorenz factor, giving
    ``((Re eps + 2)/3) Re sqrt(eps) k^2/pi^2``; ``"ob"`` uses Onsager-Boettcher.
    """
    eps = m.eps
    if variant == "ll":
        L = lff_ll(eps)
    elif variant == "ob":
        L = lff_ob(eps)
    else:
        raise DomainError(f"unknown local-field variant {variant!r}")
    return float(L.real * passive_sqrt(eps).real * n_free(k))


def ldos_coherent_mg_quadrature(m: MaxwellGarnettMedium, k, spec: Optional[QuadratureSpec] = None,
                                variant: str = "ll") -> float:
    """Quadrature route to `ldos_coherent_mg`: ``-(4k/pi) Re(L) Im int G_eff_perp``.

    Uses the local field factor directly, so the empty medium (L = 1) is
    covered as well.
    """
    spec = spec or QuadratureSpec()
    eps = m.eps
    L = lff_ll(eps) if variant == "ll" else lff_ob(eps)

    def f(q, kc):
        return 1.0 / (kc * kc * eps - q * q)

    im = radial_integral(f, spec, k, poles=(passive_sqrt(eps).real * k,), part="imag")
    return float(-(4.0 * k / math.pi) * L.real * im)


def ldos_emission_mg_farfield(m: MaxwellGarnettMedium, k) -> float:
    """Far-field total emission LDOS ``L^2 n k^2 / pi^2`` of a lossless MG medium.

    Assembled from the transverse contour value ``2 L (-i sqrt(eps) k/4 pi)``
    and the long-wavelength longitudinal self-energy.
    """
    from .propagators import phi_par_mg_longwave

    L = m.lff
    perp = 2.0 * L * (-1j * m.sqrt_eps * k / (4.0 * math.pi))
    return float(-(2.0 * k / math.pi) * (perp + phi_par_mg_longwave(m, k)).imag)


def ldos_emission_mg_farfield_quadrature(m: MaxwellGarnettMedium, k, spec: Optional[QuadratureSpec] = None) -> float:
    """Quadrature route to `ldos_emission_mg_farfield`.

    Integrates ``Im int 2 L^2 / (eps k^2 - q^2)``, i.e. the transverse term
    ``2 L G_eff`` plus the long-wavelength longitudinal term
    ``2 L (L - 1) G_eff`` with the momentum integral done numerically.
    """
    spec = spec or QuadratureSpec()
    L = m.lff
    eps = m.eps

    def f(q, kc):
        return 2.0 * L * L / (kc * kc * eps - q * q)

    im = radial_integral(f, spec, k, poles=(passive_sqrt(eps).real * k,), part="imag")
    return -(2.0 * k / math.pi) * im


# ---------------------------------------------------------------------------
# power decomposition


@dataclass(frozen=True)
class EmissionBreakdown:
    """Emitted power split by polarization channel and coherence (units of |W_o|)."""

    w_coh_perp: float
    w_ext_perp: float
    w_coh_par: float
    w_ext_par: float
    w_direct: float
    w_indirect: float
    w_total: float
    k: float
    q_max: float = math.inf
    records: dict = field(default_factory=dict, compare=False)

    @property
    def w_coh(self) -> float:
        return self.w_coh_perp + self.w_coh_par

    @property
    def w_ext(self) -> float:
        return self.w_ext_perp + self.w_ext_par


def emission_decomposition(model: SusceptibilityModel, k, spec: Optional[QuadratureSpec] = None) -> EmissionBreakdown:
    """Coherent/extinguished and direct/indirect decomposition of emitted power.

    Transverse channels carry a factor 2. Coherent terms pair Re(chi/rho alpha)
    with Im G, extinguished terms pair Im(chi/rho alpha) with Re G; the
    direct term is ``-Tr Im G(r, r)`` and the indirect one is the coherent
    remainder.

    Every integral runs over q <= q_max. With ``spec.q_max`` infinite,
    windowed models are cut at their window edge, beyond which the split is a
    model artefact; q-independent models integrate to infinity and fail with
    `RegularizationError` if a term diverges.

    Raises
    ------
    InternalConsistencyError
        If the four buckets do not add up to the separately integrated total.
    """
    spec = spec or QuadratureSpec()
    ra = model.rho_alpha(k)
    if ra == 0:
        raise DomainError("rho*alpha = 0: decomposition undefined")
    bps = model.breakpoints(k)
    if math.isinf(spec.q_max) and bps:
        spec = spec.with_(q_max=max(bps))
    bps = tuple(b for b in bps if b < spec.q_max)
    poles = model.pole_hints(k)
    par_spec = spec.with_(eta=0.0, richardson=False)

    def ratio_t(q):
        return model.chi_perp(q, k) / ra

    def ratio_l(q):
        return model.chi_par(q, k) / ra

    def gt(q, kc):
        return 1.0 / (kc * kc * (1.0 + model.chi_perp(q, k)) - q * q)

    def gl(q):
        return dyson_par(q, k, model)

    def integ_t(fun):
        return radial_integral(lambda q, kc: fun(q, kc), spec, k, poles=poles, breakpoints=bps, part="real")

    def integ_l(fun):
        return radial_integral(lambda q, kc: fun(q), par_spec, k, breakpoints=bps, part="real")

    coh_t = -integ_t(lambda q, kc: 2.0 * ratio_t(q).real * gt(q, kc).imag)
    ext_t = -integ_t(lambda q, kc: 2.0 * ratio_t(q).imag * gt(q, kc).real)
    coh_l = -integ_l(lambda q: ratio_l(q).real * gl(q).imag)
    ext_l = -integ_l(lambda q: ratio_l(q).imag * gl(q).real)
    tot_t = -integ_t(lambda q, kc: 2.0 * (ratio_t(q) * gt(q, kc)).imag)
    tot_l = -integ_l(lambda q: (ratio_l(q) * gl(q)).imag)
    direct = -integ_t(lambda q, kc: 2.0 * gt(q, kc).imag) - integ_l(lambda q: gl(q).imag)

    total = tot_t + tot_l
    parts = coh_t + ext_t + coh_l + ext_l
    scale = max(abs(coh_t) + abs(ext_t) + abs(coh_l) + abs(ext_l), abs(total), 1e-300)
    if abs(parts - total) > ADDITIVITY_TOL * scale:
        raise InternalConsistencyError(
            f"emission buckets sum to {parts:.12g} but the total integral is {total:.12g}"
        )
    coh = coh_t + coh_l
    return EmissionBreakdown(
        w_coh_perp=coh_t, w_ext_perp=ext_t, w_coh_par=coh_l, w_ext_par=ext_l,
        w_direct=direct, w_indirect=coh - direct, w_total=total, k=k, q_max=spec.q_max,
        records={"total_perp": tot_t, "total_par": tot_l, "additivity_residual": parts - total},
    )


def ldos_from_power(w, k) -> float:
    """Convert a power in units of |W_o| to an LDOS: N = (2k/pi) w."""
    return 2.0 * k / math.pi * w


# ---------------------------------------------------------------------------
# residues and far field


class Residues(NamedTuple):
    perp: List[float]
    par: List[float]


def renormalization_residues(model: SusceptibilityModel, k, roots: DispersionRoots) -> Residues:
    """Field-renormalization weights Z = Re(chi(k_nor)/rho alpha) on each root."""
    ra = model.rho_alpha(k)
    if ra == 0:
        raise DomainError("rho*alpha = 0")
    perp = [float((model.chi_perp(q, k) / ra).real) for q in roots.k_nor_perp]
    par = [float((model.chi_par(q, k) / ra).real) for q in roots.k_nor_par]
    return Residues(perp, par)


def beer_lambert_farfield(w_coh_perp, n, kappa, k, r_prime):
    """Coherent power surviving to radius r': ``w exp(-2 kappa k r')``.

    ``n`` is accepted for a uniform call signature with the index pair
    (n, kappa); attenuation depends on kappa only.
    """
    if not r_prime > 0:
        raise DomainError("r' must be positive")
    if kappa < 0:
        raise DomainError("kappa must be non-negative")
    return w_coh_perp * math.exp(-2.0 * kappa * k * r_prime)
