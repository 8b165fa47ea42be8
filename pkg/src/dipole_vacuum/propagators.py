"""Dyson and polarization propagators, the stochastic kernel and self-energies.

Transverse quantities use the pole-shifted wavenumber kc = k (1 + i eta);
longitudinal ones carry no light-cone pole and use k itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

from .contour import find_roots
from .errors import DomainError, EmptyMediumError, IncompleteRootsError
from .media import MaxwellGarnettMedium, SusceptibilityModel, lff_ll
from .spectral import DEFAULT_ETA, FOUR_PI, QuadratureSpec, phi0_perp, radial_integral, retarded

GVC_PATHS = ("lff", "dyson", "tmatrix")


def _rho_alpha(model, k):
    ra = model.rho_alpha(k)
    if ra == 0:
        raise EmptyMediumError("rho*alpha = 0: polarization propagator undefined for an empty medium")
    return ra


def dyson_perp(q, k, model: SusceptibilityModel, eta=DEFAULT_ETA):
    """Transverse Dyson propagator 1/(k^2 (1 + chi_perp) - q^2)."""
    kc = retarded(k, eta)
    den = kc * kc * (1.0 + model.chi_perp(q, k)) - q * q
    if den == 0:
        raise DomainError("dyson_perp evaluated exactly on a pole; use eta > 0")
    return 1.0 / den


def dyson_par(q, k, model: SusceptibilityModel):
    """Longitudinal Dyson propagator 1/(k^2 (1 + chi_par))."""
    den = k * k * (1.0 + model.chi_par(q, k))
    if den == 0:
        raise DomainError("dyson_par pole: eps_par = 0")
    return 1.0 / den


def _channels(q, k, model, eta):
    kc = retarded(k, eta)
    chi_t = model.chi_perp(q, k)
    chi_l = model.chi_par(q, k)
    g0_t = 1.0 / (kc * kc - q * q)
    g0_l = 1.0 / (k * k)
    g_t = dyson_perp(q, k, model, eta)
    g_l = dyson_par(q, k, model)
    return (chi_t, g0_t, g_t, kc * kc), (chi_l, g0_l, g_l, k * k)


def gvc(q, k, model: SusceptibilityModel, path: str = "lff", eta=DEFAULT_ETA):
    """Polarization propagator (perp, par) at momentum q.

    Parameters
    ----------
    path : {"lff", "dyson", "tmatrix"}
        ``lff``: (chi / rho alpha) G. ``dyson``: (1 - G/G0)/(k^2 rho alpha).
        ``tmatrix``: -T G0 /(k^2 rho alpha) with T = (G - G0)/G0^2.
        All three are algebraically identical.
    """
    ra = _rho_alpha(model, k)
    out = []
    for chi, g0, g, k2 in _channels(q, k, model, eta):
        if path == "lff":
            out.append(chi / ra * g)
        elif path == "dyson":
            out.append((1.0 - g / g0) / (k2 * ra))
        elif path == "tmatrix":
            t = (g - g0) / (g0 * g0)
            out.append(-t * g0 / (k2 * ra))
        else:
            raise DomainError(f"unknown gvc path {path!r}; choose from {GVC_PATHS}")
    return out[0], out[1]


def kernel_xi(q, k, model: SusceptibilityModel, eta=DEFAULT_ETA):
    """Stochastic kernel Xi = (-rho alpha/(chi G0)) [1 - chi/rho alpha + k^2 chi G0].

    It satisfies the reconstruction ``Gvc = G0 + G0 Xi Gvc``.
    """
    ra = _rho_alpha(model, k)
    out = []
    for chi, g0, _g, k2 in _channels(q, k, model, eta):
        if chi == 0:
            raise EmptyMediumError("chi = 0: kernel undefined")
        out.append((-ra / (chi * g0)) * (1.0 - chi / ra + k2 * chi * g0))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# self-energy integrals


@dataclass(frozen=True)
class PhiFactors:
    """Self-energy integrals at wavenumber ``k``.

    ``phi0_perp`` is the regularized free part; the scattering parts come from
    radial quadrature (or are exactly zero for vacuum).
    """

    phi0_perp: complex
    phi_sc_perp: complex
    phi_sc_par: complex
    k: complex
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def sc_sum(self) -> complex:
        """2 phi_sc_perp + phi_sc_par."""
        return 2.0 * self.phi_sc_perp + self.phi_sc_par

    @property
    def total_sum(self) -> complex:
        """2 phi0_perp + 2 phi_sc_perp + phi_sc_par."""
        return 2.0 * self.phi0_perp + self.sc_sum

    @classmethod
    def free(cls, k, phi0=None):
        return cls(phi0_perp=phi0_perp(k) if phi0 is None else phi0, phi_sc_perp=0j, phi_sc_par=0j,
                   k=k, provenance={"path": "closed_form", "model": "vacuum"})


def phi_factors(model: SusceptibilityModel, k, spec: Optional[QuadratureSpec] = None, *, imag_only: bool = False) -> PhiFactors:
    """Free and scattering self-energies of ``model`` at wavenumber ``k``.

    Parameters
    ----------
    model : SusceptibilityModel
    k : float or complex
        Complex values continue the integrals off the real axis.
    spec : QuadratureSpec, optional
    imag_only : bool
        Integrate imaginary parts only; real parts are returned as NaN. This
        is the only option for q-independent models with infinite q_max.

    Raises
    ------
    RegularizationError
        If a requested part diverges at large q.
    """
    spec = spec or QuadratureSpec()
    if model.is_vacuum:
        return PhiFactors.free(k)
    ra = _rho_alpha(model, k)

    def f_perp(q, kc):
        chi = model.chi_perp(q, k)
        return (chi / ra) / (kc * kc * (1.0 + chi) - q * q) - 1.0 / (kc * kc - q * q)

    def f_par(q, kc):
        chi = model.chi_par(q, k)
        return (chi / ra) / (k * k * (1.0 + chi)) - 1.0 / (k * k)

    part = "imag" if imag_only else "complex"
    bps = model.breakpoints(k)
    perp, rec_t = radial_integral(f_perp, spec, k, poles=model.pole_hints(k), breakpoints=bps,
                                  part=part, full_output=True)
    par_spec = spec.with_(eta=0.0, richardson=False, q_max=min(spec.q_max, model.par_support(k)))
    par, rec_l = radial_integral(f_par, par_spec, k, breakpoints=bps, part=part, full_output=True)
    if imag_only:
        perp = complex(math.nan, perp)
        par = complex(math.nan, par)
    prov = {
        "path": "quadrature",
        "model": model.describe(),
        "q_max": spec.q_max,
        "eta": spec.eta,
        "richardson": spec.richardson,
        "error_perp": rec_t.error,
        "error_par": rec_l.error,
        "re_cutoff_sensitive": not model.decorrelates,
        "imag_only": imag_only,
    }
    return PhiFactors(phi0_perp=phi0_perp(k), phi_sc_perp=complex(perp), phi_sc_par=complex(par), k=k, provenance=prov)


def phi_par_mg_longwave(m: MaxwellGarnettMedium, k) -> complex:
    """Long-wavelength longitudinal self-energy of a Maxwell-Garnett medium.

    Evaluates ``2 int d^3q/(2 pi)^3 L (L - 1) G_eff_perp`` with the contour
    value ``-i sqrt(eps) k / 4 pi`` for the momentum integral; the
    cutoff-dependent real part of that integral is dropped.
    """
    if k * m.xi > 0.3:
        warnings.warn(f"long-wavelength formula used at k xi = {k * m.xi:.3g}", stacklevel=2)
    L = lff_ll(m.eps)
    return 2.0 * L * (L - 1.0) * (-1j * m.sqrt_eps * k / FOUR_PI)


# ---------------------------------------------------------------------------
# dispersion relations


@dataclass(frozen=True)
class DispersionRoots:
    """Complex on-shell momenta of the transverse and longitudinal channels."""

    k_nor_perp: List[complex]
    k_nor_par: List[complex]
    k: float
    residual_perp: List[float] = field(default_factory=list)
    residual_par: List[float] = field(default_factory=list)


def dispersion_roots(model: SusceptibilityModel, k, search_box, tol: float = 1e-10) -> DispersionRoots:
    """Roots of k^2 eps_perp(q) - q^2 = 0 and eps_par(q) = 0 in a box of the complex q plane.

    Parameters
    ----------
    search_box : tuple
        (Re q min, Re q max, Im q min, Im q max). The model must be analytic
        inside; for windowed models keep the box within one window.

    Raises
    ------
    IncompleteRootsError
        If the argument-principle count differs from the number of roots
        that converge below ``tol``.
    """

    def h_perp(q):
        return k * k * (1.0 + model.chi_perp(q, k)) - q * q

    def h_par(q):
        return 1.0 + model.chi_par(q, k)

    out = {}
    for name, h, norm in (("perp", h_perp, k * k), ("par", h_par, 1.0)):
        roots, expected = find_roots(h, search_box, tol=tol)
        good = [z for z in roots if abs(h(z)) < tol * abs(norm)]
        if len(good) != expected:
            raise IncompleteRootsError(
                f"{name}: argument principle counts {expected} root(s), {len(good)} converged",
                expected=expected, found=roots,
            )
        out[name] = good
        out[name + "_res"] = [abs(h(z)) / abs(norm) for z in good]
    return DispersionRoots(out["perp"], out["par"], k, out["perp_res"], out["par_res"])


def epsilon_zeros(eps_fn, search_box, tol: float = 1e-10) -> List[complex]:
    """Complex frequencies where eps(omega) = 0 (longitudinal modes).

    Poles of ``eps_fn`` must lie outside the box.
    """
    roots, expected = find_roots(eps_fn, search_box, tol=tol)
    good = [z for z in roots if abs(eps_fn(z)) < tol]
    if len(good) != expected:
        raise IncompleteRootsError(
            f"eps zeros: argument principle counts {expected}, {len(good)} converged",
            expected=expected, found=roots,
        )
    return good
