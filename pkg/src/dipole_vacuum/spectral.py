"""Free-space propagators, branch conventions and the radial quadrature engine.

Units: c = hbar = eps0 = 1 and the spectral variable is the wavenumber k = omega.
Lengths are measured in a user-chosen unit L0, so k carries units of 1/L0.

Fourier-space free propagators::

    G0_perp(q) = 1 / (k^2 - q^2)        G0_par = 1 / k^2

Retarded poles are resolved with k -> k (1 + i eta).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import constants
from scipy.integrate import IntegrationWarning, quad

from .errors import DomainError, QuadratureError, RegularizationError

DEFAULT_ETA = 1e-6
FOUR_PI = 4.0 * math.pi


# ---------------------------------------------------------------------------
# units and branches


def wavenumber_from_omega(omega_si, length_unit_m):
    """Angular frequency in rad/s -> internal wavenumber in units of 1/L0."""
    if length_unit_m <= 0:
        raise DomainError("length unit must be positive")
    return omega_si * length_unit_m / constants.c


def omega_from_wavenumber(k, length_unit_m):
    """Inverse of `wavenumber_from_omega`."""
    if length_unit_m <= 0:
        raise DomainError("length unit must be positive")
    return k * constants.c / length_unit_m


def passive_sqrt(eps) -> complex:
    """Square root of a permittivity on the passive branch.

    For Im(eps) >= 0 the returned value has non-negative real and imaginary
    parts; the sign is flipped only when the principal root lands in the
    lower half plane (e.g. ``-4 - 0j``).
    """
    s = complex(np.sqrt(complex(eps)))
    if s.imag < 0.0 or (s.imag == 0.0 and s.real < 0.0):
        s = -s
    return s


@dataclass(frozen=True)
class ComplexPermittivitySqrt:
    """A permittivity together with its physical square root n + i kappa."""

    eps: complex
    sqrt_eps: complex
    flipped: bool = False

    @classmethod
    def from_eps(cls, eps):
        eps = complex(eps)
        principal = complex(np.sqrt(eps))
        s = passive_sqrt(eps)
        return cls(eps=eps, sqrt_eps=s, flipped=(s != principal))

    @property
    def n(self) -> float:
        return self.sqrt_eps.real

    @property
    def kappa(self) -> float:
        return self.sqrt_eps.imag


# ---------------------------------------------------------------------------
# Fourier-space propagators


def retarded(k, eta=DEFAULT_ETA):
    """Shifted wavenumber k (1 + i eta)."""
    return k * (1.0 + 1j * eta)


def g0_perp(q, k, eta=DEFAULT_ETA):
    """Transverse free propagator 1/(k^2 - q^2) with the retarded prescription.

    Raises
    ------
    DomainError
        If ``eta == 0`` and ``q`` sits exactly on the light cone.
    """
    q = np.asarray(q, dtype=float)
    if eta == 0 and np.any(q == k):
        raise DomainError("g0_perp evaluated on the pole q = k with eta = 0")
    kc = retarded(k, eta)
    out = 1.0 / (kc * kc - q * q)
    return complex(out) if np.ndim(out) == 0 else out


def g0_par(k):
    """Longitudinal free propagator 1/k^2."""
    if k == 0:
        raise DomainError("k must be non-zero")
    return 1.0 / (k * k)


# ---------------------------------------------------------------------------
# real-space dyadic


def _dyadic_coefficients(r, k):
    kr = k * r
    pref = -np.exp(1j * kr) / (FOUR_PI * r)
    a = 1.0 + 1j / kr - 1.0 / kr**2
    b = -1.0 - 3j / kr + 3.0 / kr**2
    return pref * a, pref * b


def g0_dyadic(rvec, k):
    """Vectorized free dyadic for separation vectors of shape (..., 3).

    Returns an array of shape (..., 3, 3) holding the static plus radiative
    field propagator ``-e^{ikr}/(4 pi r) [a I + b rhat rhat]``.
    """
    rvec = np.asarray(rvec, dtype=float)
    r = np.linalg.norm(rvec, axis=-1)
    if np.any(r <= 0):
        raise DomainError("separation must be non-zero")
    rhat = rvec / r[..., None]
    ca, cb = _dyadic_coefficients(r, k)
    eye = np.eye(3)
    return ca[..., None, None] * eye + cb[..., None, None] * (rhat[..., :, None] * rhat[..., None, :])


def g0_realspace(r, k, direction=(0.0, 0.0, 1.0)):
    """Free dyadic at distance ``r`` along the unit vector ``direction``.

    Parameters
    ----------
    r : float
        Separation, must be positive.
    k : float or complex
        Wavenumber.
    direction : array_like
        Direction of the separation; normalized internally.

    Returns
    -------
    numpy.ndarray
        Complex 3x3 tensor.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r!r}")
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise DomainError("direction must be non-zero")
    return g0_dyadic(r * d / norm, k)


def g0_coupling_coefficients(r, k):
    """Transverse and longitudinal couplings (A, B) of the free dyadic.

    ``G0(r) = A (I - rhat rhat) + B rhat rhat``.
    """
    if not r > 0:
        raise DomainError("r must be positive")
    ca, cb = _dyadic_coefficients(r, k)
    return ca, ca + cb


# ---------------------------------------------------------------------------
# free self-energies


def phi0_perp(k):
    """Regularized transverse free self-energy, ``-i k / 4 pi``."""
    return -1j * k / FOUR_PI


def phi0_perp_lorentzian(k, k0, alpha0):
    """Transverse free self-energy with the two-level real part ``-3/(2 k0^2 alpha0)``."""
    if alpha0 == 0:
        raise DomainError("alpha0 must be non-zero")
    return -3.0 / (2.0 * k0 * k0 * alpha0) + phi0_perp(k)


def phi0_par(a, k):
    """Longitudinal free self-energy of a sphere of radius ``a``: 1/((4 pi/3) a^3 k^2)."""
    if not a > 0:
        raise DomainError("radius must be positive")
    if k * a > 0.3:
        warnings.warn(f"phi0_par used outside the small-particle regime (ka = {k * a:.3g})", stacklevel=2)
    return 1.0 / ((FOUR_PI / 3.0) * a**3 * k * k)


# ---------------------------------------------------------------------------
# radial quadrature


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for `radial_integral`.

    Attributes
    ----------
    q_max : float
        Upper limit of the radial integral (``inf`` allowed).
    eta : float
        Relative pole shift, k -> k (1 + i eta).
    rel_tol : float
        Requested relative accuracy, in (0, 1e-2].
    max_subdivisions : int
        Passed to QUADPACK as ``limit`` for every segment.
    richardson : bool
        Extrapolate eta -> 0 with I0 = 2 I(eta/2) - I(eta).
    """

    q_max: float = math.inf
    eta: float = DEFAULT_ETA
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    richardson: bool = True

    def __post_init__(self):
        if not (0 < self.rel_tol <= 1e-2):
            raise DomainError("rel_tol must lie in (0, 1e-2]")
        if not self.q_max > 0:
            raise DomainError("q_max must be positive")
        if self.eta < 0:
            raise DomainError("eta must be non-negative")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be positive")

    def with_(self, **changes) -> "QuadratureSpec":
        return replace(self, **changes)


@dataclass
class QuadratureRecord:
    """Bookkeeping returned alongside a radial integral."""

    value: complex
    error: float
    evaluations: int
    eta: float
    richardson: bool
    q_max: float
    segments: int = 0
    notes: list = field(default_factory=list)


def _pole_points(poles: Iterable[float], eta: float, lo: float, hi: float) -> list:
    pts = []
    depth = int(math.ceil(-math.log10(max(eta, 1e-12)))) + 1
    depth = min(max(depth, 2), 13)
    for p in poles:
        p = float(p)
        if not p > 0:
            continue
        pts.append(p)
        for j in range(1, depth + 1):
            w = p * 10.0 ** (-j)
            pts.extend((p - w, p + w))
    return [x for x in pts if lo < x < hi]


def _integrate_part(fun, a, b, rel_tol, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        res = quad(fun, a, b, epsabs=1e-15, epsrel=rel_tol, limit=limit, full_output=1)
    value, err, info = res[0], res[1], res[2]
    return value, err, info["neval"], len(res) > 3


def _decay_check(g, q_ref, part):
    """Raise if q^2 f(q) fails to decay at large q."""
    q1 = 1e3 * q_ref
    q2 = 4.0 * q1
    v1 = g(q1)
    v2 = g(q2)
    if part == "real":
        v1, v2 = abs(v1.real), abs(v2.real)
    elif part == "imag":
        v1, v2 = abs(v1.imag), abs(v2.imag)
    else:
        v1, v2 = abs(v1), abs(v2)
    # integrable tails fall faster than 1/q
    if v1 > 0 and v2 * q2 > 0.5 * v1 * q1 and v1 * q1 > 1e-12:
        raise RegularizationError(
            f"integrand does not decay (|q^2 f| = {v1:.3g} at q = {q1:.3g}, {v2:.3g} at q = {q2:.3g});"
            " supply a finite q_max or a decorrelating model"
        )


def _radial_once(f, spec, k, eta, poles, breakpoints, part):
    kc = retarded(k, eta)
    lo, hi = 0.0, spec.q_max
    pts = [x for x in breakpoints if lo < x < hi]
    pts += _pole_points(poles, eta, lo, hi)
    finite_pts = sorted(set(pts))
    edges = [lo] + finite_pts
    if math.isinf(hi):
        ref = max([abs(k)] + finite_pts)
        edges.append(10.0 * ref)
        edges.append(math.inf)
    else:
        edges.append(hi)

    def g(q):
        return q * q * complex(f(q, kc))

    if math.isinf(hi):
        _decay_check(g, max([abs(k)] + finite_pts), part)

    total = 0j
    err = 0.0
    scale = 0.0
    neval = 0
    failed = []
    parts = ("real", "imag") if part == "complex" else (part,)
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        for which in parts:
            if which == "real":
                val, e, n, bad = _integrate_part(lambda q: g(q).real, a, b, spec.rel_tol, spec.max_subdivisions)
                total += val
            else:
                val, e, n, bad = _integrate_part(lambda q: g(q).imag, a, b, spec.rel_tol, spec.max_subdivisions)
                total += 1j * val
            err += e
            scale += abs(val)
            neval += n
            if bad:
                failed.append((a, b, which, e))
    return total, err, scale, neval, failed, len(edges) - 1


def radial_integral(
    f: Callable[[float, complex], complex],
    spec: QuadratureSpec,
    k,
    *,
    poles: Sequence[float] = (),
    breakpoints: Sequence[float] = (),
    part: str = "complex",
    full_output: bool = False,
):
    """Compute ``(1/2 pi^2) int_0^q_max q^2 f(q) dq``.

    This is the isotropic form of ``int d^3q/(2 pi)^3 f(|q|)``.

    Parameters
    ----------
    f : callable
        ``f(q, kc)`` where ``kc = k (1 + i eta)`` is the pole-shifted
        wavenumber. Integrands that need no retarded prescription may ignore
        ``kc``.
    spec : QuadratureSpec
    k : float or complex
        Wavenumber (complex values are allowed for analytic continuation).
    poles : sequence of float
        Real locations near which the integrand is sharply peaked; the
        neighbourhoods are subdivided geometrically.
    breakpoints : sequence of float
        Known discontinuities (e.g. a spectral window).
    part : {"complex", "real", "imag"}
        Which part to integrate. Single parts return a float.
    full_output : bool
        Also return a `QuadratureRecord`.

    Raises
    ------
    QuadratureError
        If QUADPACK runs out of subdivisions or the accumulated error exceeds
        the tolerance.
    RegularizationError
        If ``q_max`` is infinite and ``q^2 f`` does not decay.
    """
    if part not in ("complex", "real", "imag"):
        raise DomainError(f"unknown part {part!r}")
    if not math.isinf(spec.q_max) and spec.q_max <= abs(k):
        raise DomainError("q_max must exceed k")

    def run(eta):
        total, err, scale, neval, failed, nseg = _radial_once(f, spec, k, eta, poles, breakpoints, part)
        tol = 10.0 * spec.rel_tol * max(abs(total), scale, 1e-300) + 1e-13 * scale
        if failed and err > tol:
            raise QuadratureError(
                f"radial quadrature did not converge on {len(failed)} segment(s); error estimate {err:.3g}",
                estimate=total / (2 * math.pi**2),
                error=err / (2 * math.pi**2),
            )
        return total, err, neval, nseg

    eta = spec.eta
    use_richardson = spec.richardson and eta > 0
    v1, e1, n1, nseg = run(eta)
    if use_richardson:
        v2, e2, n2, _ = run(eta / 2.0)
        value = 2.0 * v2 - v1
        err = 2.0 * e2 + e1
        neval = n1 + n2
    else:
        value, err, neval = v1, e1, n1
    value /= 2.0 * math.pi**2
    err /= 2.0 * math.pi**2
    if part == "real":
        out = float(value.real)
    elif part == "imag":
        out = float(value.imag)
    else:
        out = complex(value)
    if full_output:
        rec = QuadratureRecord(
            value=complex(value), error=float(err), evaluations=int(neval), eta=eta,
            richardson=use_richardson, q_max=spec.q_max, segments=nseg,
        )
        return out, rec
    return out
