"""Susceptibility, permittivity, polarizability and local-field-factor models.

All models are immutable; a `SusceptibilityModel` exposes ``chi_perp(q, k)``
and ``chi_par(q, k)`` together with the quadrature hints (pole locations and
discontinuities) that the propagator integrals need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ConfigError, DomainError, ResonanceSingularityError, SingularMediumError
from .spectral import passive_sqrt

MG_POLE_TOL = 1e-12
RSA_MAX_PACKING = 0.64

Scalar = Union[complex, float]


# ---------------------------------------------------------------------------
# closed-form relations


def chi_mg(rho_alpha):
    """Maxwell-Garnett susceptibility ``rho_alpha / (1 - rho_alpha / 3)``."""
    den = 1.0 - rho_alpha / 3.0
    if abs(den) < MG_POLE_TOL:
        raise SingularMediumError(f"Maxwell-Garnett pole: 1 - rho*alpha/3 = {den!r}")
    return rho_alpha / den


def rho_alpha_from_eps(eps):
    """Invert the Maxwell-Garnett relation: rho*alpha = 3 (eps - 1)/(eps + 2)."""
    if abs(eps + 2.0) < MG_POLE_TOL:
        raise SingularMediumError("eps = -2 has no Maxwell-Garnett preimage")
    return 3.0 * (eps - 1.0) / (eps + 2.0)


def lff_ll(eps):
    """Lorentz-Lorenz local field factor (eps + 2)/3."""
    return (eps + 2.0) / 3.0


def lff_ob(eps):
    """Onsager-Boettcher local field factor 3 eps/(2 eps + 1)."""
    den = 2.0 * eps + 1.0
    if abs(den) < 1e-14:
        raise DomainError("lff_ob pole at eps = -1/2")
    return 3.0 * eps / den


# ---------------------------------------------------------------------------
# Lorentzian dielectric and polarizability


@dataclass(frozen=True)
class LorentzianDielectric:
    """eps(w) = 1 + f w_res^2 / (w_res^2 - w^2 - i w gamma)."""

    f: float
    omega_res: float
    gamma: float

    def __post_init__(self):
        if not (0.0 <= self.f < 1.0):
            raise ConfigError("oscillator strength f must lie in [0, 1)")
        if not self.omega_res > 0:
            raise ConfigError("omega_res must be positive")
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")

    def eps(self, omega):
        return eps_lorentzian(omega, self)


def eps_lorentzian(omega, d: LorentzianDielectric):
    """Lorentzian permittivity; complex ``omega`` is accepted for continuation."""
    if np.isscalar(omega) and not np.iscomplexobj(omega):
        if omega < 0:
            raise DomainError("omega must be non-negative")
        if math.isinf(omega):
            return 1.0 + 0j
    w2 = d.omega_res**2
    return 1.0 + d.f * w2 / (w2 - omega * omega - 1j * omega * d.gamma)


@dataclass(frozen=True)
class LorentzianPolarizability:
    """alpha(k) = (1/3) alpha0_tilde k_res^2 / (k_res^2 - k^2 - i gamma k^3 / k_res^2)."""

    alpha0_tilde: complex
    k_res: float
    gamma: float

    def __post_init__(self):
        if not self.k_res > 0:
            raise ConfigError("k_res must be positive")
        if self.gamma < 0:
            raise ConfigError("gamma must be non-negative")

    def __call__(self, k):
        return alpha_lorentzian(k, self)


def alpha_lorentzian(k, p: LorentzianPolarizability):
    """Renormalized Lorentzian polarizability; complex ``k`` is accepted."""
    kr2 = p.k_res**2
    return (p.alpha0_tilde * kr2 / 3.0) / (kr2 - k * k - 1j * p.gamma * k**3 / kr2)


def alpha0_nanoparticle(eps_e, a):
    """Electrostatic polarizability of a sphere, 4 pi a^3 (eps_e - 1)/(eps_e + 2)."""
    if not a > 0:
        raise DomainError("radius must be positive")
    if np.isinf(eps_e):
        return 4.0 * math.pi * a**3
    if abs(eps_e + 2.0) < 1e-14:
        raise DomainError("Froehlich pole eps_e = -2")
    return 4.0 * math.pi * a**3 * (eps_e - 1.0) / (eps_e + 2.0)


def bare_alpha0(mu2, omega0):
    """Static two-level polarizability scale alpha0 = 2 |mu|^2 / omega0."""
    if not mu2 > 0 or not omega0 > 0:
        raise DomainError("mu2 and omega0 must be positive")
    return 2.0 * mu2 / omega0


def alpha_bare_atom(omega, mu2, omega0):
    """Isotropic bare two-level polarizability (1/3) alpha0 w0^2/(w0^2 - w^2).

    Raises
    ------
    ResonanceSingularityError
        At the bare pole ``omega == omega0``; use the renormalized form there.
    """
    a0 = bare_alpha0(mu2, omega0)
    if np.isscalar(omega) and math.isinf(abs(omega)):
        return -0.0
    den = omega0**2 - omega * omega
    if den == 0:
        raise ResonanceSingularityError("bare polarizability evaluated at omega = omega0")
    return a0 * omega0**2 / (3.0 * den)


# ---------------------------------------------------------------------------
# media


@dataclass(frozen=True)
class MaxwellGarnettMedium:
    """Dilute medium of hard-excluded point dipoles.

    Attributes
    ----------
    rho : float
        Number density.
    alpha_tilde : complex
        Renormalized polarizability (volume units).
    xi : float
        Exclusion radius (minimum pair distance).
    """

    rho: float
    alpha_tilde: complex
    xi: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if not self.xi > 0:
            raise ConfigError("xi must be positive")
        if abs(1.0 - self.rho_alpha / 3.0) < MG_POLE_TOL:
            raise SingularMediumError("rho*alpha/3 = 1: Maxwell-Garnett pole")
        packing = self.rho * math.pi * self.xi**3 / 6.0
        if packing >= RSA_MAX_PACKING:
            raise ConfigError(f"packing fraction {packing:.3g} exceeds the random-packing limit")

    @classmethod
    def from_eps(cls, eps, rho=1.0, xi=0.1):
        """Medium whose Maxwell-Garnett permittivity equals ``eps``."""
        return cls(rho=rho, alpha_tilde=complex(rho_alpha_from_eps(eps)) / rho, xi=xi)

    @property
    def rho_alpha(self) -> complex:
        return complex(self.rho * self.alpha_tilde)

    @property
    def chi(self) -> complex:
        return complex(chi_mg(self.rho_alpha))

    @property
    def eps(self) -> complex:
        return 1.0 + self.chi

    @property
    def sqrt_eps(self) -> complex:
        return passive_sqrt(self.eps)

    @property
    def lff(self) -> complex:
        return lff_ll(self.eps)

    @property
    def packing_fraction(self) -> float:
        return self.rho * math.pi * self.xi**3 / 6.0

    def default_q_c(self) -> float:
        return default_window_cutoff(self.xi)


def default_window_cutoff(xi):
    """Window edge q_c with int_{q<q_c} d^3q/(2 pi)^3 equal to 1/((4 pi/3) xi^3).

    That is q_c = (9 pi / 2)^{1/3} / xi, which makes the window carry the
    same static exclusion integral as a hard hole of radius xi.
    """
    return (4.5 * math.pi) ** (1.0 / 3.0) / xi


class SusceptibilityModel:
    """Interface: isotropic susceptibilities chi_perp(q, k), chi_par(q, k).

    Subclasses also report ``rho_alpha(k)`` (needed by the local-field
    ratio chi / rho alpha), the transverse pole locations for the quadrature
    engine, and any discontinuities in q.
    """

    #: chi/rho_alpha -> 1 and G_par -> G0_par fast enough at large q
    decorrelates: bool = False
    #: chi independent of q
    q_independent: bool = True
    is_vacuum: bool = False

    def chi_perp(self, q, k):
        raise NotImplementedError

    def chi_par(self, q, k):
        raise NotImplementedError

    def rho_alpha(self, k):
        raise NotImplementedError

    def breakpoints(self, k) -> tuple:
        return ()

    def pole_hints(self, k) -> tuple:
        """Real parts of the transverse on-shell momenta."""
        return ()

    def par_support(self, k) -> float:
        """Momentum beyond which the longitudinal self-energy integrand vanishes identically."""
        return math.inf

    def describe(self) -> dict:
        return {"model": type(self).__name__}


class VacuumModel(SusceptibilityModel):
    """Empty space: chi = 0."""

    decorrelates = True
    is_vacuum = True

    def chi_perp(self, q, k):
        return 0j

    def chi_par(self, q, k):
        return 0j

    def rho_alpha(self, k):
        return 0j

    def pole_hints(self, k):
        return (abs(k),)


def _value(x, k):
    return complex(x(k)) if callable(x) else complex(x)


class ConstantModel(SusceptibilityModel):
    """q-independent susceptibility (an effective medium).

    Parameters
    ----------
    chi : complex or callable
        Susceptibility, or a function ``k -> chi`` for dispersive media.
    rho_alpha : complex or callable, optional
        Dipole strength per volume. Defaults to ``chi`` (uncorrelated dilute
        medium, unit local-field ratio).
    rho : float, optional
        Number density, needed only where q-integrals are saturated to rho.
    """

    def __init__(self, chi: Union[Scalar, Callable], rho_alpha=None, rho=None):
        self._chi = chi
        self._rho_alpha = chi if rho_alpha is None else rho_alpha
        self.rho = rho

    def chi_perp(self, q, k):
        return _value(self._chi, k)

    def chi_par(self, q, k):
        return _value(self._chi, k)

    def rho_alpha(self, k):
        return _value(self._rho_alpha, k)

    def eps(self, k):
        return 1.0 + self.chi_perp(0.0, k)

    def pole_hints(self, k):
        return (abs(k), (passive_sqrt(self.eps(k)) * k).real)

    def describe(self):
        d = {"model": "constant"}
        if not callable(self._chi):
            d["chi"] = complex(self._chi)
        return d


def constant_mg_susceptibility(m: MaxwellGarnettMedium) -> ConstantModel:
    """Long-wavelength Maxwell-Garnett model: chi = chi_MG for every q."""
    return ConstantModel(chi=m.chi, rho_alpha=m.rho_alpha, rho=m.rho)


def lorentzian_mg_model(d: LorentzianDielectric, rho=None) -> ConstantModel:
    """Dispersive effective medium with eps(k) Lorentzian and MG local fields."""

    def chi(k):
        return eps_lorentzian(k, d) - 1.0

    def rho_alpha(k):
        return rho_alpha_from_eps(eps_lorentzian(k, d))

    return ConstantModel(chi=chi, rho_alpha=rho_alpha, rho=rho)


class WindowedMGModel(SusceptibilityModel):
    """Maxwell-Garnett medium with a sharp correlation window at q_c.

    For q <= q_c both channels carry chi_MG. Beyond the window the dipoles
    are decorrelated: the transverse channel reverts to rho*alpha, and the
    longitudinal channel takes rho*alpha/(1 - rho*alpha), the value at which
    the polarization propagator equals the free one (chi_par/rho alpha times
    G_par = 1/k^2). This keeps both self-energy integrals finite.
    """

    decorrelates = True
    q_independent = False

    def __init__(self, medium: MaxwellGarnettMedium, q_c=None):
        self.medium = medium
        self.q_c = medium.default_q_c() if q_c is None else float(q_c)
        if not self.q_c > 0:
            raise ConfigError("q_c must be positive")
        ra = medium.rho_alpha
        if abs(1.0 - ra) < MG_POLE_TOL:
            raise SingularMediumError("rho*alpha = 1 makes the decorrelated longitudinal channel singular")
        self._ra = ra
        self._chi_in = medium.chi
        self._chi_par_out = ra / (1.0 - ra)

    @property
    def rho(self):
        return self.medium.rho

    def _inside(self, q):
        return np.real(q) <= self.q_c

    def chi_perp(self, q, k):
        return self._chi_in if self._inside(q) else self._ra

    def chi_par(self, q, k):
        return self._chi_in if self._inside(q) else self._chi_par_out

    def rho_alpha(self, k):
        return self._ra

    def breakpoints(self, k):
        return (self.q_c,)

    def par_support(self, k):
        return self.q_c

    def pole_hints(self, k):
        return (
            abs(k),
            (passive_sqrt(self.medium.eps) * k).real,
            (passive_sqrt(1.0 + self._ra) * k).real,
        )

    def describe(self):
        return {
            "model": "windowed_mg",
            "rho": self.medium.rho,
            "alpha_tilde": self.medium.alpha_tilde,
            "xi": self.medium.xi,
            "q_c": self.q_c,
        }


def windowed_mg_susceptibility(m: MaxwellGarnettMedium, q_c=None) -> WindowedMGModel:
    """Windowed Maxwell-Garnett model with edge ``q_c`` (default (9 pi/2)^{1/3}/xi)."""
    return WindowedMGModel(m, q_c=q_c)
