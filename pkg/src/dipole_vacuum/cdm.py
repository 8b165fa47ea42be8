"""Coupled-dipole Monte-Carlo oracle for the scattering self-propagator.

Each configuration is solved exactly:

    p_i / alpha + k^2 sum_{j != i} G0(R_i - R_j) p_j = delta_{i0} E0

and the scattering self-propagator of the emitter follows from

    g_sc E0 = sum_{i != 0} G0(R_0 - R_i) p_i / alpha,

so that the field scattered back onto the emitter is -k^2 g_sc p_0.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import get_lapack_funcs
from threadpoolctl import threadpool_limits

from .errors import (
    ComparisonInvalidError, ConfigError, DensityTooHighError, EnsembleQualityError, ResonantClusterError,
)
from .propagators import PhiFactors
from .spectral import g0_dyadic

RSA_SAFE_PACKING = 0.3
MAX_REJECTIONS = 10**6
COND_LIMIT = 1e12
RESIDUAL_LIMIT = 1e-10
MAX_FAILURE_FRACTION = 0.05


@dataclass(frozen=True)
class DipoleConfiguration:
    """Positions of the emitter (index 0, at the box centre) and its hosts."""

    positions: np.ndarray
    xi: float
    box_side: float
    seed: int
    emitter_index: int = 0

    @property
    def n_dipoles(self) -> int:
        return len(self.positions)

    def min_distance(self) -> float:
        if self.n_dipoles < 2:
            return math.inf
        d = self.positions[:, None, :] - self.positions[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
        r[np.diag_indices_from(r)] = np.inf
        return float(r.min())


def generate_configuration(rho, xi, n_dipoles: int, seed: int, *, max_rejections: int = MAX_REJECTIONS) -> DipoleConfiguration:
    """Random sequential addition of hard points in a cube of side (n/rho)^{1/3}.

    The emitter is placed first at the centre; hosts are drawn uniformly and
    rejected if closer than ``xi`` to any accepted point.

    Raises
    ------
    DensityTooHighError
        If the packing fraction is not RSA-safe or the rejection budget is
        exhausted.
    """
    if not rho > 0 or not xi > 0 or n_dipoles < 1:
        raise ConfigError("rho, xi must be positive and n_dipoles >= 1")
    packing = rho * math.pi * xi**3 / 6.0
    if packing >= RSA_SAFE_PACKING:
        raise DensityTooHighError(f"packing fraction {packing:.3g} is not RSA-safe")
    side = (n_dipoles / rho) ** (1.0 / 3.0)
    rng = np.random.default_rng(seed)
    pos = np.empty((n_dipoles, 3))
    pos[0] = 0.5 * side
    m = 1
    rejected = 0
    xi2 = xi * xi
    while m < n_dipoles:
        cand = rng.uniform(0.0, side, 3)
        d = pos[:m] - cand
        if np.einsum("ij,ij->i", d, d).min() >= xi2:
            pos[m] = cand
            m += 1
        else:
            rejected += 1
            if rejected > max_rejections:
                raise DensityTooHighError(f"placed {m} of {n_dipoles} dipoles before {max_rejections} rejections")
    return DipoleConfiguration(positions=pos, xi=xi, box_side=side, seed=seed)


def interaction_matrix(cfg: DipoleConfiguration, alpha_tilde, k) -> np.ndarray:
    """Dense 3n x 3n matrix of the coupled-dipole system."""
    n = cfg.n_dipoles
    d = cfg.positions[:, None, :] - cfg.positions[None, :, :]
    idx = np.arange(n)
    d[idx, idx] = 1.0  # placeholder, overwritten below
    g = g0_dyadic(d, k)
    g[idx, idx] = 0.0
    a = (k * k) * g.transpose(0, 2, 1, 3).reshape(3 * n, 3 * n)
    a[np.diag_indices(3 * n)] += 1.0 / alpha_tilde
    return a


def solve_coupled_dipoles(cfg: DipoleConfiguration, alpha_tilde, k, E0_vec, *, return_info: bool = False):
    """Dipole moments induced by a field ``E0_vec`` acting on the emitter only.

    Parameters
    ----------
    E0_vec : array_like, shape (3,) or (3, m)
        One drive, or ``m`` drives as columns.

    Returns
    -------
    numpy.ndarray
        Shape (n, 3) or (n, 3, m).

    Raises
    ------
    ResonantClusterError
        If the reciprocal condition estimate is below 1e-12 or the relative
        residual exceeds 1e-10.
    """
    e0 = np.asarray(E0_vec, dtype=complex)
    single = e0.ndim == 1
    e0 = e0.reshape(3, -1)
    n = cfg.n_dipoles
    a = interaction_matrix(cfg, alpha_tilde, k)
    b = np.zeros((3 * n, e0.shape[1]), dtype=complex)
    b[:3] = e0
    anorm = np.linalg.norm(a, 1)
    lu, piv = lu_factor(a, check_finite=False)
    (gecon,) = get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond < 1.0 / COND_LIMIT:
        raise ResonantClusterError(f"coupled-dipole matrix ill-conditioned (rcond = {rcond:.3g})")
    x = lu_solve((lu, piv), b, check_finite=False)
    bnorm = np.linalg.norm(b)
    resid = float(np.linalg.norm(a @ x - b) / bnorm) if bnorm > 0 else 0.0
    if resid > RESIDUAL_LIMIT:
        raise ResonantClusterError(f"solver residual {resid:.3g} above tolerance")
    p = x.reshape(n, 3, -1)
    if single:
        p = p[..., 0]
    if return_info:
        return p, {"rcond": float(rcond), "residual": resid}
    return p


def self_propagator_scattering(cfg: DipoleConfiguration, moments, alpha_tilde, k, E0_vec=None) -> np.ndarray:
    """Scattering self-propagator of the emitter from solved moments.

    ``moments`` has shape (n, 3, 3) for three drives whose columns are given
    by ``E0_vec`` (identity by default).
    """
    p = np.asarray(moments)
    e0 = np.eye(3, dtype=complex) if E0_vec is None else np.asarray(E0_vec, dtype=complex)
    if cfg.n_dipoles < 2:
        return np.zeros((3, 3), dtype=complex)
    g = g0_dyadic(cfg.positions[0] - cfg.positions[1:], k)
    field_back = np.einsum("iab,ibd->ad", g, p[1:]) / alpha_tilde
    return field_back @ np.linalg.inv(e0)


def two_body_reference(r, alpha_tilde, k):
    """Closed-form recurrent-scattering series for an emitter and one host on the z axis.

    Returns the emitter moments for unit drives along x and z and the
    diagonal of the scattering self-propagator.
    """
    from .spectral import g0_coupling_coefficients

    A, B = g0_coupling_coefficients(r, k)
    out = {}
    for name, c in (("xx", A), ("zz", B)):
        den = 1.0 - (k * k * alpha_tilde * c) ** 2
        out["p0_" + name] = alpha_tilde / den
        out["g_" + name] = -(k * k) * alpha_tilde * c * c / den
    return out


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class CdmParams:
    """Physical parameters of a coupled-dipole ensemble."""

    rho: float
    xi: float
    n_dipoles: int
    alpha_tilde: complex
    k: float

    def __post_init__(self):
        if self.n_dipoles < 1:
            raise ConfigError("n_dipoles must be >= 1")
        if not self.k > 0:
            raise ConfigError("k must be positive")


def run_configuration(params: CdmParams, seed: int) -> dict:
    """Solve one configuration; failures are returned as records, not raised."""
    rec = {"seed": int(seed), "n_dipoles": params.n_dipoles, "ok": False}
    with threadpool_limits(limits=1):
        try:
            cfg = generate_configuration(params.rho, params.xi, params.n_dipoles, seed)
            p, info = solve_coupled_dipoles(cfg, params.alpha_tilde, params.k, np.eye(3), return_info=True)
            g = self_propagator_scattering(cfg, p, params.alpha_tilde, params.k)
        except (ResonantClusterError, DensityTooHighError) as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
            return rec
    extinction = [0.5 * params.k * float(np.vdot(np.eye(3)[:, d], p[0, :, d]).imag) for d in range(3)]
    rec.update(
        ok=True,
        g=g,
        trace=complex(np.trace(g)),
        residual=info["residual"],
        rcond=info["rcond"],
        extinction=extinction,
    )
    return rec


@dataclass
class EnsembleEstimate:
    """Ensemble mean of the scattering self-propagator."""

    mean: np.ndarray
    stderr: np.ndarray
    trace_mean: complex
    trace_stderr: float
    n_configs: int
    n_dipoles: int
    k: float
    params: CdmParams
    base_seed: int
    failures: List[dict] = field(default_factory=list)
    records: List[dict] = field(default_factory=list, repr=False)

    @property
    def trace_over_3(self) -> complex:
        return self.trace_mean / 3.0


def _complex_stderr(samples: np.ndarray, axis=0):
    n = samples.shape[axis]
    var = np.var(samples.real, axis=axis, ddof=1) + np.var(samples.imag, axis=axis, ddof=1)
    return np.sqrt(var / n)


def ensemble_average(params: CdmParams, n_configs: int, base_seed: int = 0, parallelism: int = 1) -> EnsembleEstimate:
    """Mean and standard error of the scattering self-propagator over configurations.

    Configuration ``i`` uses seed ``base_seed + i``. Results are reduced in
    index order, so they do not depend on ``parallelism``.

    Raises
    ------
    EnsembleQualityError
        If more than 5% of configurations fail.
    """
    if n_configs < 2:
        raise ConfigError("n_configs must be >= 2")
    seeds = [base_seed + i for i in range(n_configs)]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(run_configuration, [params] * n_configs, seeds))
    else:
        records = [run_configuration(params, s) for s in seeds]
    good = [r for r in records if r["ok"]]
    failures = [r for r in records if not r["ok"]]
    if len(failures) > MAX_FAILURE_FRACTION * n_configs:
        raise EnsembleQualityError(f"{len(failures)} of {n_configs} configurations failed")
    if len(good) < 2:
        raise EnsembleQualityError("fewer than two successful configurations")
    stack = np.stack([r["g"] for r in good])
    traces = np.array([r["trace"] for r in good])
    mean = np.zeros((3, 3), dtype=complex)
    for g in stack:  # fixed-order reduction
        mean += g
    mean /= len(good)
    return EnsembleEstimate(
        mean=mean,
        stderr=_complex_stderr(stack),
        trace_mean=complex(np.sum(traces) / len(good)),
        trace_stderr=float(_complex_stderr(traces)),
        n_configs=len(good),
        n_dipoles=params.n_dipoles,
        k=params.k,
        params=params,
        base_seed=base_seed,
        failures=failures,
        records=records,
    )


@dataclass
class ValidationReport:
    """Comparison of an ensemble estimate with the analytic self-energy."""

    passed: bool
    trace_estimate: complex
    trace_analytic: complex
    rel_deviation: float
    tolerance: float
    trace_stderr: float
    z_scores: np.ndarray

    def as_row(self) -> dict:
        return {
            "trace3_est_re": self.trace_estimate.real,
            "trace3_est_im": self.trace_estimate.imag,
            "trace3_ana_re": self.trace_analytic.real,
            "trace3_ana_im": self.trace_analytic.imag,
            "trace3_stderr": self.trace_stderr,
            "rel_deviation": self.rel_deviation,
            "tolerance": self.tolerance,
            "max_z": float(np.max(self.z_scores)),
            "pass": self.passed,
        }


def _check_params(estimate: EnsembleEstimate, phi: PhiFactors, rtol=1e-9):
    if abs(complex(phi.k) - estimate.k) > rtol * estimate.k:
        raise ComparisonInvalidError(f"k mismatch: {estimate.k} vs {phi.k}")
    model = phi.provenance.get("model", {}) if phi.provenance else {}
    if not isinstance(model, dict):
        return
    p = estimate.params
    for key, mine in (("rho", p.rho), ("xi", p.xi), ("alpha_tilde", p.alpha_tilde)):
        if key in model and abs(complex(model[key]) - mine) > rtol * max(abs(mine), 1e-300):
            raise ComparisonInvalidError(f"{key} mismatch: simulation {mine!r}, analytic {model[key]!r}")


def validate_against_analytic(estimate: EnsembleEstimate, phi: PhiFactors, rel_tol: float = 0.10,
                              n_sigma: float = 3.0) -> ValidationReport:
    """Compare trace/3 of the ensemble mean with (2 phi_sc_perp + phi_sc_par)/3.

    Passes when ``|est - ana| <= max(rel_tol |ana|, n_sigma * stderr)``.

    Raises
    ------
    ComparisonInvalidError
        If ``k``, ``rho``, ``xi`` or ``alpha_tilde`` differ between the two sides.
    """
    _check_params(estimate, phi)
    ana = phi.sc_sum / 3.0
    est = estimate.trace_over_3
    se = estimate.trace_stderr / 3.0
    dev = abs(est - ana)
    tol = max(rel_tol * abs(ana), n_sigma * se)
    target = ana * np.eye(3)
    diff = np.abs(estimate.mean - target)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(estimate.stderr > 0, diff / estimate.stderr, np.where(diff == 0, 0.0, np.inf))
    return ValidationReport(
        passed=bool(dev <= tol), trace_estimate=est, trace_analytic=ana,
        rel_deviation=float(dev / abs(ana)) if ana != 0 else math.inf,
        tolerance=float(tol / abs(ana)) if ana != 0 else math.inf,
        trace_stderr=se, z_scores=z,
    )


def free_space_alpha(alpha0, k):
    """Polarizability renormalized by free-space radiation reaction only."""
    return alpha0 / (1.0 - 1j * k**3 * alpha0 / (6.0 * math.pi))


def benchmark_params(rho=5.0, rho_alpha_mag=0.05, k_xi=0.2, n_dipoles=500, k=1.0) -> CdmParams:
    """Dilute benchmark with a real bare polarizability renormalized in free space.

    ``alpha0`` is chosen so that ``|rho alpha_tilde| = rho_alpha_mag``.
    """
    a = rho_alpha_mag / rho
    c = k**3 / (6.0 * math.pi)
    if c * a >= 1.0:
        raise ConfigError("requested |rho alpha| exceeds the free-space unitarity bound")
    alpha0 = a / math.sqrt(1.0 - (c * a) ** 2)
    return CdmParams(rho=rho, xi=k_xi / k, n_dipoles=n_dipoles, alpha_tilde=complex(free_space_alpha(alpha0, k)), k=k)


def record_to_json(rec: dict) -> dict:
    """JSON-serializable view of a configuration record."""
    out = {"seed": rec["seed"], "n_dipoles": rec["n_dipoles"], "ok": rec["ok"]}
    if rec["ok"]:
        t = rec["trace"]
        out.update(trace_re=float(t.real), trace_im=float(t.imag), residual=rec["residual"], rcond=rec["rcond"])
    else:
        out["error"] = rec.get("error", "")
    return out
