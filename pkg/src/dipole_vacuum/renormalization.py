"""Radiative renormalization of the single-dipole polarizability.

alpha_tilde = alpha0 / (1 + (k^2 alpha0 / 3) S),  S = 2 phi0_perp + 2 phi_sc_perp + phi_sc_par
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, FixedPointError, NoResonanceError, ResonanceSingularityError
from .media import MaxwellGarnettMedium, windowed_mg_susceptibility
from .propagators import PhiFactors, phi_factors
from .spectral import QuadratureSpec


def renormalize_alpha(alpha0, phi: PhiFactors, k):
    """Renormalized polarizability from the bare one and the self-energies."""
    den = 1.0 + (2.0 / 3.0) * k * k * alpha0 * phi.phi0_perp + (1.0 / 3.0) * k * k * alpha0 * phi.sc_sum
    if abs(den) < 1e-12:
        raise ResonanceSingularityError(f"renormalization denominator vanishes ({den!r})")
    return alpha0 / den


class StimulatedPower(NamedTuple):
    """Power drawn from a driving field; ``total`` uses the Im(alpha_tilde) route."""

    total: float
    radiated: float
    absorbed: float


def stimulated_power(alpha0, phi: PhiFactors, k, E0_mag2) -> StimulatedPower:
    """Optical theorem in a medium.

    ``total = (k/2) |E0|^2 Im(alpha_tilde)``; ``radiated`` is the self-energy
    term ``-(k^3/6) |alpha_tilde E0|^2 Im S`` and ``absorbed`` the material
    loss ``(k/2) |alpha_tilde E0|^2 Im(alpha0)/|alpha0|^2``. The identity
    total = radiated + absorbed is exact algebra.
    """
    if E0_mag2 < 0:
        raise ConfigError("|E0|^2 must be non-negative")
    if alpha0 == 0:
        return StimulatedPower(0.0, 0.0, 0.0)
    at = renormalize_alpha(alpha0, phi, k)
    a2 = abs(at) ** 2
    total = 0.5 * k * E0_mag2 * at.imag
    radiated = -(k**3 / 6.0) * a2 * E0_mag2 * phi.total_sum.imag
    absorbed = 0.5 * k * a2 * E0_mag2 * complex(alpha0).imag / abs(alpha0) ** 2
    return StimulatedPower(float(total), float(radiated), float(absorbed))


@dataclass(frozen=True)
class RenormalizedPolarizability:
    """Outcome of a renormalization solve.

    Resonance fields (``k_res``, ``gamma``, ``gamma0``) are ``None`` for
    off-resonant fixed-point solutions.
    """

    alpha_tilde: complex
    k_res: Optional[float]
    gamma: Optional[float]
    alpha0_tilde: complex
    k0: float
    gamma0: Optional[float]
    iterations: int
    residual: float
    roots: Tuple[float, ...] = ()
    history: Tuple[complex, ...] = field(default=(), compare=False, repr=False)


def free_linewidth(alpha0, k0):
    """Free-space decay rate alpha0 k0^4 / 6 pi."""
    return alpha0 * k0**4 / (6.0 * math.pi)


def _width(alpha0_tilde, k, phi: PhiFactors):
    return -(1.0 / 3.0) * alpha0_tilde * k**3 * phi.total_sum.imag


def solve_kres(alpha0, k0, phi_of_k: Optional[Callable] = None, *, bracket=(0.5, 2.0), n_scan: int = 64,
               tol: float = 1e-10) -> RenormalizedPolarizability:
    """Resonance wavenumber, width and rescaled strength.

    Solves ``(k/k0)^2 - 1 = (alpha0 k^2 / 3) Re(2 phi_sc_perp + phi_sc_par)``
    for k in ``[bracket[0] k0, bracket[1] k0]``, then evaluates

    ``gamma = -(1/3) alpha0_tilde k^3 Im S`` and ``alpha0_tilde = alpha0 (k0/k_res)^2``

    at the smallest root.

    Parameters
    ----------
    alpha0, k0 : float
        Bare strength and resonance.
    phi_of_k : callable, optional
        ``k -> PhiFactors``. ``None`` means free space and takes the
        closed-form path.
    """
    if not alpha0 > 0 or not k0 > 0:
        raise ConfigError("alpha0 and k0 must be positive")
    gamma0 = free_linewidth(alpha0, k0)
    if phi_of_k is None:
        phi = PhiFactors.free(k0)
        return RenormalizedPolarizability(
            alpha_tilde=renormalize_alpha(alpha0, phi, k0), k_res=k0, gamma=_width(alpha0, k0, phi),
            alpha0_tilde=alpha0, k0=k0, gamma0=gamma0, iterations=0, residual=0.0, roots=(k0,),
        )

    cache = {}
    count = [0]

    def phi_at(k):
        if k not in cache:
            count[0] += 1
            cache[k] = phi_of_k(k)
        return cache[k]

    def h(k):
        return (k / k0) ** 2 - 1.0 - (alpha0 * k * k / 3.0) * phi_at(k).sc_sum.real

    roots: List[float] = []
    if h(k0) == 0.0:
        roots.append(k0)
    else:
        grid = k0 * np.geomspace(bracket[0], bracket[1], n_scan)
        vals = [h(k) for k in grid]
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if fa == 0.0:
                roots.append(float(a))
            elif fa * fb < 0:
                r = brentq(h, a, b, xtol=1e-15 * k0, rtol=4 * np.finfo(float).eps, maxiter=200)
                roots.append(_polish(h, r, k0, tol))
        if vals[-1] == 0.0:
            roots.append(float(grid[-1]))
    if not roots:
        raise NoResonanceError(f"no resonance in [{bracket[0] * k0:.6g}, {bracket[1] * k0:.6g}]")
    roots = sorted(set(roots))
    k_res = roots[0]
    phi = phi_at(k_res)
    a0t = alpha0 * (k0 / k_res) ** 2
    return RenormalizedPolarizability(
        alpha_tilde=renormalize_alpha(alpha0, phi, k_res), k_res=k_res, gamma=_width(a0t, k_res, phi),
        alpha0_tilde=a0t, k0=k0, gamma0=gamma0, iterations=count[0], residual=abs(h(k_res)), roots=tuple(roots),
    )


def _polish(h, r, scale, tol, max_iter=8):
    """Secant refinement of a bracketed root (no-op once |h| < tol/100)."""
    x0, f0 = r, h(r)
    if abs(f0) < 1e-2 * tol:
        return r
    step = 1e-7 * scale
    x1, f1 = r + step, h(r + step)
    for _ in range(max_iter):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x0, f0, x1, f1 = x1, f1, x2, h(x2)
        if abs(f1) < 1e-2 * tol:
            break
    return x1 if abs(f1) <= abs(h(r)) else r


def self_consistent_medium(rho, alpha0, k, xi, *, q_c=None, spec: Optional[QuadratureSpec] = None,
                           damping: float = 0.5, tol: float = 1e-10, max_iter: int = 200,
                           initial=None):
    """Self-consistent polarizability of a windowed Maxwell-Garnett medium.

    Iterates ``a <- (1 - damping) a + damping * renormalize(alpha0, phi(model(a)), k)``
    starting from the free-space value (or ``initial``).

    Returns
    -------
    medium : MaxwellGarnettMedium or None
        ``None`` for ``rho == 0``.
    result : RenormalizedPolarizability
    """
    if rho < 0:
        raise ConfigError("rho must be non-negative")
    if abs(rho * alpha0) >= 1.0:
        raise ConfigError("self-consistent solve requires |rho alpha0| < 1")
    if not 0 < damping <= 1:
        raise ConfigError("damping must lie in (0, 1]")
    a_free = renormalize_alpha(alpha0, PhiFactors.free(k), k)
    if rho == 0:
        return None, RenormalizedPolarizability(
            alpha_tilde=a_free, k_res=None, gamma=None, alpha0_tilde=alpha0, k0=k, gamma0=None,
            iterations=0, residual=0.0,
        )
    a = complex(a_free if initial is None else initial)
    history = [a]
    for it in range(1, max_iter + 1):
        model = windowed_mg_susceptibility(MaxwellGarnettMedium(rho, a, xi), q_c=q_c)
        new = renormalize_alpha(alpha0, phi_factors(model, k, spec), k)
        a_next = (1.0 - damping) * a + damping * new
        history.append(a_next)
        if not np.isfinite(a_next) or abs(a_next) > 1e6 * abs(a_free):
            raise FixedPointError("self-consistent iteration diverged", history=history)
        delta = abs(a_next - a)
        if delta < tol * abs(a):
            medium = MaxwellGarnettMedium(rho, a_next, xi)
            return medium, RenormalizedPolarizability(
                alpha_tilde=a_next, k_res=None, gamma=None, alpha0_tilde=alpha0, k0=k, gamma0=None,
                iterations=it, residual=delta / abs(a), history=tuple(history),
            )
        a = a_next
    raise FixedPointError(f"no convergence after {max_iter} iterations", history=history)
