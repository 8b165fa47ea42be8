"""Schwinger variational vacuum energy of dipolar media.

Frequency integrals use the retarded branch: the symmetric form
``-(1/2) Im int_{-inf}^{inf} dw/2pi (...)`` is evaluated as
``-Im int_0^inf dw/2pi (...)``. Logarithms of products are split into sums of
principal logarithms of factors that stay in the upper (or lower) half plane,
so their phases are continuous along the frequency axis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import BranchError, ConfigError, ContinuationError, CutoffError, QuadratureError, RegularizationError
from .media import LorentzianDielectric, LorentzianPolarizability, SusceptibilityModel, alpha_lorentzian, eps_lorentzian, lff_ll
from .propagators import PhiFactors
from .spectral import DEFAULT_ETA, QuadratureSpec, passive_sqrt, radial_integral

MAX_JUMP = math.pi / 8


def _quad(fun, a, b, points=(), rel_tol=1e-10, limit=400):
    pts = sorted(p for p in set(points) if a < p < b)
    edges = [a] + pts + [b]
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            res = quad(fun, lo, hi, epsabs=1e-15, epsrel=rel_tol, limit=limit, full_output=1)
        total += res[0]
        err += res[1]
        if len(res) > 3 and res[1] > 1e3 * rel_tol * max(abs(res[0]), 1e-300):
            raise QuadratureError(f"frequency quadrature failed on [{lo:.6g}, {hi:.6g}]", estimate=total, error=err)
    return total, err


# ---------------------------------------------------------------------------
# Schwinger bulk


def n_sch_bulk(omega, eps):
    """Bulk mode density (w^2 / 3 pi^2) n^3 with n = Re sqrt(eps)."""
    n = passive_sqrt(eps).real
    return omega**2 * n**3 / (3.0 * math.pi**2)


def schwinger_bulk(eps_of_omega: Callable, omega_max, spec: Optional[QuadratureSpec] = None, *,
                   breakpoints=(), check_decay: bool = True, decay_tol: float = 1e-8, form: str = "n3") -> float:
    """Bulk energy density ``(1/6 pi^2) int_0^w_max w^3 [1 - n^3(w)] dw``.

    Parameters
    ----------
    eps_of_omega : callable
    omega_max : float
        Spectral cutoff.
    breakpoints : sequence
        Frequencies (resonances) where the integrand is sharply structured.
    check_decay : bool
        Require ``|1 - n^3| < decay_tol`` at ``omega_max``.
    form : {"n3", "eps32"}
        ``eps32`` integrates ``Re(1 - eps^{3/2})`` instead of ``1 - n^3``.

    Raises
    ------
    CutoffError
        If the integrand has not decayed at ``omega_max``; the truncated value
        is attached as ``partial``.
    """
    spec = spec or QuadratureSpec()
    if form not in ("n3", "eps32"):
        raise ConfigError(f"unknown form {form!r}")

    def g(w):
        eps = complex(eps_of_omega(w))
        s = passive_sqrt(eps)
        cube = (s**3).real if form == "eps32" else s.real**3
        return w**3 * (1.0 - cube)

    val, _ = _quad(g, 0.0, omega_max, breakpoints, spec.rel_tol, spec.max_subdivisions)
    val /= 6.0 * math.pi**2
    if check_decay:
        tail = abs(1.0 - passive_sqrt(complex(eps_of_omega(omega_max))).real ** 3)
        if tail >= decay_tol:
            raise CutoffError(f"|1 - n^3| = {tail:.3g} at omega_max = {omega_max:.6g}; integrand not decayed",
                              partial=val)
    return float(val)


# ---------------------------------------------------------------------------
# local-field energies of a Lorentzian Maxwell-Garnett medium


class LffEnergy(NamedTuple):
    """Sign-fixed numeric value, the narrow-line estimate, and the raw integral."""

    numeric: float
    closed_form_estimate: float
    raw: float


def _lorentz_points(d: LorentzianDielectric):
    wr, g, f = d.omega_res, d.gamma, d.f
    centres = [wr, math.sqrt(wr**2 + f * wr**2 / 3.0), math.sqrt(wr**2 + f * wr**2)]
    pts = []
    for c in centres:
        pts.append(c)
        for j in (0.5, 2.0, 8.0, 32.0, 128.0):
            pts.extend((c - j * g, c + j * g))
    return [p for p in pts if p > 0]


def _phase_check(phase_fn, grid):
    """Max jump of a phase along a grid, refining up to four times."""
    for _ in range(5):
        ph = np.array([phase_fn(w) for w in grid])
        jump = float(np.max(np.abs(np.diff(ph)))) if len(ph) > 1 else 0.0
        if jump < MAX_JUMP:
            return jump, len(grid)
        mid = 0.5 * (grid[:-1] + grid[1:])
        grid = np.sort(np.concatenate([grid, mid]))
    if jump > math.pi:
        raise BranchError(f"phase jumps by {jump:.3g} between adjacent grid points")
    return jump, len(grid)


def _diag_grid(d: LorentzianDielectric, w_hi):
    base = np.linspace(0.0, w_hi, 801)[1:]
    pts = np.array([p for p in _lorentz_points(d) if p < w_hi])
    return np.sort(np.concatenate([base, pts]))


def _lff_integral(d: LorentzianDielectric, rho, integrand, spec):
    pts = _lorentz_points(d)
    w_split = 4.0 * (d.omega_res * math.sqrt(1 + d.f) + 128 * d.gamma)
    a, _ = _quad(integrand, 0.0, w_split, pts, spec.rel_tol, spec.max_subdivisions)
    b, _ = _quad(integrand, w_split, math.inf, (), spec.rel_tol, spec.max_subdivisions)
    jump, npts = _phase_check(integrand, _diag_grid(d, w_split))
    return -(rho / (2.0 * math.pi)) * (a + b), {"max_phase_jump": jump, "grid_points": npts}


def _check_lorentz(d):
    if d.f > 0.1:
        warnings.warn("narrow-line estimates assume f << 1", stacklevel=3)
    if d.gamma >= d.omega_res:
        raise ConfigError("gamma must be below omega_res")


def f_lff_mg(d: LorentzianDielectric, rho, spec: Optional[QuadratureSpec] = None) -> LffEnergy:
    """Isolated local-field energy ``-rho int_0^inf dw/2pi Im ln L^3``.

    ``numeric`` flips the sign of the raw integral so that it is positive for
    a passive medium; the estimate is ``(rho f / 2)(w_res/2 + gamma/2 pi)``.
    """
    _check_lorentz(d)
    spec = spec or QuadratureSpec()

    def integrand(w):
        return 3.0 * np.angle(lff_ll(eps_lorentzian(w, d)))

    raw, _ = _lff_integral(d, rho, integrand, spec)
    est = 0.5 * rho * d.f * (0.5 * d.omega_res + d.gamma / (2.0 * math.pi))
    return LffEnergy(-raw, est, raw)


def delta_f_mg(d: LorentzianDielectric, rho, spec: Optional[QuadratureSpec] = None) -> LffEnergy:
    """Maxwell-Garnett correction ``-rho int_0^inf dw/2pi Im ln(L^3/eps)``.

    The estimate is ``(rho f^2 / 12)(w_res/2 + gamma/2 pi)``.
    """
    _check_lorentz(d)
    spec = spec or QuadratureSpec()

    def integrand(w):
        eps = eps_lorentzian(w, d)
        return 3.0 * np.angle(lff_ll(eps)) - np.angle(eps)

    raw, _ = _lff_integral(d, rho, integrand, spec)
    est = rho * d.f**2 / 12.0 * (0.5 * d.omega_res + d.gamma / (2.0 * math.pi))
    return LffEnergy(-raw, est, raw)


# ---------------------------------------------------------------------------
# full decomposition


@dataclass
class VacuumEnergyReport:
    """Energy densities (hbar c / L0^4 units) with their cutoffs and branch records.

    ``delta_f_mg`` and ``f_lff_mg`` are sign-fixed (positive for passive
    media); raw signed term values sit in ``terms``.
    """

    f_sch_bulk: float = 0.0
    delta_f_mg: float = 0.0
    f_lff_mg: float = 0.0
    lamb_res: float = 0.0
    lamb_off: float = 0.0
    omega_max: float = 0.0
    terms: dict = field(default_factory=dict)
    records: dict = field(default_factory=dict)


def _log1p_minus(z):
    """ln(1 + z) - z for |z| < 0.1 by its Taylor series."""
    term = z
    acc = 0j
    for n in range(2, 40):
        term = -term * z
        acc += term / n
        if abs(term) < 1e-18 * abs(acc):
            break
    return acc


def dimreg_log_integral(eps, k, spec: Optional[QuadratureSpec] = None) -> complex:
    """``int d^3q/(2 pi)^3 ln[(q^2 - k^2)/(q^2 - eps k^2)]`` in dimensional regularization.

    The scaleless large-q constant of ``q^2 ln(...)`` is subtracted before the
    radial quadrature.
    """
    spec = spec or QuadratureSpec()
    eps = complex(eps)
    n = passive_sqrt(eps)

    def f(q, kc):
        if q == 0:
            return 0.0
        k2 = kc * kc
        q2 = q * q
        z = (eps - 1.0) * k2 / (q2 - eps * k2)
        # ln(1 + z) - c/q^2 = [ln(1 + z) - z] + [z - c/q^2], second bracket in closed form
        exact = (eps - 1.0) * eps * k2 * k2 / (q2 * (q2 - eps * k2))
        if abs(z) < 0.1:
            return _log1p_minus(z) + exact
        return np.log(q2 - k2) - np.log(q2 - eps * k2) - (eps - 1.0) * k2 / q2

    return radial_integral(f, spec, k, poles=(abs(k), (n * k).real))


def vacuum_energy_decomposition(model: SusceptibilityModel, p: LorentzianPolarizability, alpha_prime_fn: Callable,
                                omega_max, spec: Optional[QuadratureSpec] = None, *, rho=None,
                                eta=DEFAULT_ETA, breakpoints=(), phi_fn: Optional[Callable] = None,
                                mu2=None) -> VacuumEnergyReport:
    """Three-term vacuum-energy split for a q-independent (effective) medium.

    Terms, each ``-Im int_0^{w_max} dw/2pi int d^3q/(2pi)^3 (...)``:

    * ``lamb``: ``ln[(alpha'/alpha_tilde)^3]``, q-integral saturated to rho;
    * ``bulk``: ``ln[G_perp^2/G0_perp^2]`` in dimensional regularization
      (the Schwinger-bulk energy);
    * ``medium``: ``ln[chi_perp^2 chi_par G_par]``, saturated to rho.

    Frequency-dependent factors are evaluated at ``w (1 + i eta)``.
    """
    spec = spec or QuadratureSpec()
    if not model.q_independent:
        raise ConfigError("vacuum_energy_decomposition needs a q-independent model")
    rho = getattr(model, "rho", None) if rho is None else rho
    rep = VacuumEnergyReport(omega_max=float(omega_max))
    if model.is_vacuum or rho == 0:
        rep.terms = {"lamb": 0.0, "bulk": 0.0, "medium": 0.0}
        return rep
    if rho is None:
        raise ConfigError("number density rho is required to saturate momentum integrals")
    pts = tuple(breakpoints) + (p.k_res,)

    def wc(w):
        return w * (1.0 + 1j * eta)

    def lamb_phase(w):
        z = wc(w)
        return 3.0 * (np.angle(complex(alpha_prime_fn(z))) - np.angle(alpha_lorentzian(z, p)))

    def medium_phase(w):
        z = wc(w)
        chi_t = complex(model.chi_perp(0.0, z))
        chi_l = complex(model.chi_par(0.0, z))
        return 2.0 * np.angle(chi_t) + np.angle(chi_l) - np.angle(1.0 + chi_l)

    inner = spec.with_(rel_tol=max(spec.rel_tol, 1e-9))

    def bulk_im(w):
        if w == 0:
            return 0.0
        eps = 1.0 + complex(model.chi_perp(0.0, w))
        return 2.0 * dimreg_log_integral(eps, w, inner).imag

    pref = -1.0 / (2.0 * math.pi)
    lamb, _ = _quad(lamb_phase, 0.0, omega_max, pts, spec.rel_tol, spec.max_subdivisions)
    medium, _ = _quad(medium_phase, 0.0, omega_max, pts, spec.rel_tol, spec.max_subdivisions)
    bulk, _ = _quad(bulk_im, 0.0, omega_max, pts, max(spec.rel_tol, 1e-8), spec.max_subdivisions)
    grid = np.sort(np.concatenate([np.linspace(0.0, omega_max, 801)[1:], [x for x in pts if 0 < x < omega_max]]))
    jumps = {name: _phase_check(fn, grid)[0] for name, fn in (("lamb", lamb_phase), ("medium", medium_phase))}

    def lff_phase(w):
        eps = 1.0 + complex(model.chi_perp(0.0, wc(w)))
        return 3.0 * np.angle(lff_ll(eps))

    def eps_phase(w):
        return np.angle(1.0 + complex(model.chi_perp(0.0, wc(w))))

    lff, _ = _quad(lff_phase, 0.0, omega_max, pts, spec.rel_tol, spec.max_subdivisions)
    epsi, _ = _quad(eps_phase, 0.0, omega_max, pts, spec.rel_tol, spec.max_subdivisions)

    rep.terms = {"lamb": rho * pref * lamb, "bulk": pref * bulk, "medium": rho * pref * medium}
    rep.f_sch_bulk = rep.terms["bulk"]
    rep.f_lff_mg = -rho * pref * lff
    rep.delta_f_mg = -rho * pref * (lff - epsi)
    rep.records = {"max_phase_jump": jumps, "eta": eta, "rho": rho}
    if phi_fn is not None and mu2 is not None:
        rep.lamb_res = lamb_shift_res(phi_fn, mu2, p.k_res, p.gamma)
        rep.lamb_off = lamb_shift_off(phi_fn, p)
    else:
        rep.lamb_res = math.nan
        rep.lamb_off = math.nan
    return rep


# ---------------------------------------------------------------------------
# Lamb shifts


def _continued_phi(phi_fn, k) -> PhiFactors:
    try:
        return phi_fn(k)
    except (QuadratureError, RegularizationError) as exc:
        raise ContinuationError(f"self-energy continuation failed at k = {k!r}: {exc}") from exc


def lamb_shift_res(phi_fn: Callable, mu2, k_res, gamma) -> float:
    """Resonant level shift ``(mu^2/3) Re{k^2 (2 phi_sc_perp + phi_sc_par)}`` at k = k_res + i gamma."""
    k = complex(k_res, gamma)
    phi = _continued_phi(phi_fn, k)
    return float((mu2 / 3.0) * (k * k * phi.sc_sum).real)


def _pole_on_imaginary_axis(p: LorentzianPolarizability):
    if p.gamma == 0:
        return math.inf
    kr2 = p.k_res**2
    r = np.roots([p.gamma / kr2, -1.0, 0.0, -kr2])
    real = [x.real for x in r if abs(x.imag) < 1e-9 * abs(x) and x.real > 0]
    return min(real) if real else math.inf


def lamb_shift_off(phi_fn: Callable, p: LorentzianPolarizability, u_max=None, rel_tol=1e-10) -> float:
    """Off-resonant level shift over imaginary wavenumbers k = i u.

    ``-(1/4 pi) int_0^u_max u^2 S(iu) [alpha(iu) + alpha(-iu)] du`` with
    ``S = 2 phi_sc_perp + phi_sc_par``. Without ``u_max`` the integral is
    truncated where the integrand falls below 1e-10 of its peak.
    """
    def alpha_sum(u):
        return alpha_lorentzian(1j * u, p) + alpha_lorentzian(-1j * u, p)

    def g(u):
        if u == 0:
            return 0.0
        return (u * u * _continued_phi(phi_fn, 1j * u).sc_sum * alpha_sum(u)).real

    u_pole = _pole_on_imaginary_axis(p)
    if u_max is None:
        hi = min(0.5 * u_pole, 1e8 * p.k_res)
        grid = np.geomspace(1e-4 * p.k_res, hi, 241)
        vals = np.abs([g(u) for u in grid])
        ipk = int(np.argmax(vals))
        peak = vals[ipk]
        if peak == 0:
            return 0.0
        below = np.nonzero(vals[ipk:] < 1e-10 * peak)[0]
        if below.size == 0:
            raise ContinuationError("off-resonant integrand does not decay before the continuation limit")
        u_max = float(grid[ipk + below[0]])
    elif u_max >= u_pole:
        raise ContinuationError("u_max beyond the pole of the continued polarizability")
    pts = [p.k_res * x for x in (0.1, 1.0, 10.0, 100.0) if p.k_res * x < u_max]
    val, _ = _quad(g, 0.0, u_max, pts, rel_tol)
    return float(-val / (4.0 * math.pi))
