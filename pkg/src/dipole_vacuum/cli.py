"""``dipole-vacuum`` command-line front end.

Usage::

    dipole-vacuum SUBCOMMAND CONFIG.toml [--set section.key=value ...]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import os
import sys
import traceback
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .cdm import benchmark_params, ensemble_average, record_to_json, validate_against_analytic
from .config import RunConfig
from .emission import (
    emission_decomposition, ldos_emission, ldos_emission_mg_farfield_quadrature, ldos_from_power, ldos_light,
    n_free,
)
from .errors import ConfigError, DipoleVacuumError, DomainError, NumericalError
from .media import (
    ConstantModel, LorentzianDielectric, MaxwellGarnettMedium, SusceptibilityModel, VacuumModel,
    constant_mg_susceptibility, lorentzian_mg_model, windowed_mg_susceptibility,
)
from .propagators import phi_factors
from .renormalization import free_linewidth, self_consistent_medium, solve_kres
from .spectral import omega_from_wavenumber
from .vacuum_energy import delta_f_mg, f_lff_mg, schwinger_bulk

log = logging.getLogger("dipole_vacuum")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4

UNITS = {
    "ldos": "k in 1/L0; LDOS columns divided by the free value k^2/pi^2",
    "emission": "k in 1/L0; powers in units of |W_o| = (k^3/6)|p0|^2; n_emis_norm divided by k^2/pi^2",
    "renorm": "k in 1/L0; alpha in L0^3; gamma in 1/L0",
    "vacuum-energy": "energy densities in hbar c / L0^4; omega in c/L0",
    "cdm-validate": "k in 1/L0; propagators in 1/L0",
}


class ValidationFailed(Exception):
    """Raised by a subcommand whose oracle comparison did not pass."""


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, subcommand: str, cfg: RunConfig, columns: Sequence[str], rows: Iterable[Dict],
              extra_meta: Optional[Dict] = None) -> None:
    """CSV with a ``#`` metadata block, a header row and deterministic rows."""
    meta = {
        "tool": f"dipole-vacuum {__version__}",
        "subcommand": subcommand,
        "config_sha256": cfg.sha256(),
        "units": UNITS[subcommand],
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    meta.update(extra_meta or {})
    with open(path, "w", newline="") as fh:
        for key, val in meta.items():
            fh.write(f"# {key}: {val}\n")
        for line in cfg.to_toml().splitlines():
            fh.write(f"# config | {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, math.nan)) for c in columns])


def read_csv_rows(path) -> List[Dict[str, str]]:
    """Data rows of a CSV written by `write_csv` (metadata skipped)."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _out_path(cfg: RunConfig, subcommand: str, ext: str) -> str:
    run = cfg["run"]
    os.makedirs(run["output_dir"], exist_ok=True)
    return os.path.join(run["output_dir"], f"{run['prefix']}_{subcommand.replace('-', '_')}.{ext}")


def _si_columns(cfg: RunConfig, row: Dict, k) -> None:
    L0 = cfg["units"].get("length_m")
    if L0 is not None:
        row["omega_si"] = omega_from_wavenumber(k, L0)


# ---------------------------------------------------------------------------
# medium construction


def build_medium(cfg: RunConfig) -> Optional[MaxwellGarnettMedium]:
    m = cfg["medium"]
    if m["model"] not in ("mg_constant", "mg_windowed"):
        return None
    if "alpha_tilde" in m:
        return MaxwellGarnettMedium(m["rho"], m["alpha_tilde"], m["xi"])
    eps = m["n"] ** 2 if "n" in m else m["eps"]
    return MaxwellGarnettMedium.from_eps(eps, rho=m["rho"], xi=m["xi"])


def build_model(cfg: RunConfig) -> SusceptibilityModel:
    m = cfg["medium"]
    kind = m["model"]
    if kind == "vacuum":
        return VacuumModel()
    if kind == "lorentzian":
        d = LorentzianDielectric(m["f"], m["omega_res"], m["gamma"])
        return lorentzian_mg_model(d, rho=m["rho"])
    medium = build_medium(cfg)
    if kind == "mg_constant":
        return constant_mg_susceptibility(medium)
    return windowed_mg_susceptibility(medium, q_c=m.get("q_c"))


def _medium_at(model: SusceptibilityModel, cfg: RunConfig, k) -> MaxwellGarnettMedium:
    eps = model.eps(k)
    return MaxwellGarnettMedium.from_eps(eps, rho=cfg["medium"]["rho"], xi=cfg["medium"]["xi"])


def emission_ldos(model: SusceptibilityModel, cfg: RunConfig, k, spec) -> float:
    """Emission LDOS: exact self-energies for decorrelating models, far-field MG otherwise."""
    if isinstance(model, ConstantModel):
        return ldos_emission_mg_farfield_quadrature(_medium_at(model, cfg, k), k, spec)
    return ldos_emission(phi_factors(model, k, spec), k)


# ---------------------------------------------------------------------------
# subcommands


def run_ldos(cfg: RunConfig) -> str:
    model = build_model(cfg)
    spec = cfg.quadrature()
    rows = []
    for k in cfg.k_grid():
        nf = n_free(k)
        row = {"k": k, "n_free": nf}
        row["n_light_norm"] = ldos_light(model, k, spec) / nf
        row["n_emis_norm"] = emission_ldos(model, cfg, k, spec) / nf
        if not model.is_vacuum:
            row["n_coh_norm"] = ldos_from_power(emission_decomposition(model, k, spec).w_coh, k) / nf
        _si_columns(cfg, row, k)
        rows.append(row)
    cols = ["k", "n_free", "n_light_norm", "n_emis_norm", "n_coh_norm"]
    if cfg["units"].get("length_m") is not None:
        cols.append("omega_si")
    path = _out_path(cfg, "ldos", "csv")
    write_csv(path, "ldos", cfg, cols, rows)
    return path


EMISSION_COLUMNS = ["k", "w_coh_perp", "w_ext_perp", "w_coh_par", "w_ext_par", "w_direct", "w_indirect",
                    "w_total", "n_emis_norm"]


def run_emission(cfg: RunConfig) -> str:
    model = build_model(cfg)
    spec = cfg.quadrature()
    rows = []
    for k in cfg.k_grid():
        row = {"k": k, "n_emis_norm": emission_ldos(model, cfg, k, spec) / n_free(k)}
        if not model.is_vacuum:
            b = emission_decomposition(model, k, spec)
            row.update(w_coh_perp=b.w_coh_perp, w_ext_perp=b.w_ext_perp, w_coh_par=b.w_coh_par,
                       w_ext_par=b.w_ext_par, w_direct=b.w_direct, w_indirect=b.w_indirect, w_total=b.w_total)
        _si_columns(cfg, row, k)
        rows.append(row)
    cols = EMISSION_COLUMNS + (["omega_si"] if cfg["units"].get("length_m") is not None else [])
    path = _out_path(cfg, "emission", "csv")
    write_csv(path, "emission", cfg, cols, rows)
    return path


def run_renorm(cfg: RunConfig) -> str:
    r = cfg["renorm"]
    m = cfg["medium"]
    spec = cfg.quadrature()
    rows = []
    if r["mode"] == "self_consistent":
        for k in cfg.k_grid():
            _medium, res = self_consistent_medium(m["rho"], r["alpha0"], k, m["xi"], q_c=m.get("q_c"), spec=spec,
                                                  damping=r["damping"])
            rows.append({"k": k, "alpha_tilde_re": res.alpha_tilde.real, "alpha_tilde_im": res.alpha_tilde.imag,
                         "rho_alpha_abs": abs(m["rho"] * res.alpha_tilde), "iterations": res.iterations,
                         "residual": res.residual})
        cols = ["k", "alpha_tilde_re", "alpha_tilde_im", "rho_alpha_abs", "iterations", "residual"]
    else:
        model = build_model(cfg)
        phi_of_k = None if model.is_vacuum else (lambda k: phi_factors(model, k, spec))
        res = solve_kres(r["alpha0"], r["k0"], phi_of_k, bracket=(r["bracket_lo"], r["bracket_hi"]))
        rows.append({"k0": r["k0"], "alpha0": r["alpha0"], "k_res": res.k_res, "gamma": res.gamma,
                     "gamma0": free_linewidth(r["alpha0"], r["k0"]), "alpha0_tilde": res.alpha0_tilde,
                     "n_roots": len(res.roots), "residual": res.residual})
        cols = ["k0", "alpha0", "k_res", "gamma", "gamma0", "alpha0_tilde", "n_roots", "residual"]
    path = _out_path(cfg, "renorm", "csv")
    write_csv(path, "renorm", cfg, cols, rows, {"mode": r["mode"]})
    return path


def run_vacuum_energy(cfg: RunConfig) -> str:
    v = cfg["vacuum"]
    spec = cfg.quadrature()
    d = LorentzianDielectric(v["f"], v["omega_res"], v["gamma"])
    rows = []
    for name, res in (("f_lff_mg", f_lff_mg(d, v["rho"], spec)), ("delta_f_mg", delta_f_mg(d, v["rho"], spec))):
        rows.append({"term": name, "numeric": res.numeric, "estimate": res.closed_form_estimate, "raw": res.raw,
                     "rel_deviation": (res.numeric - res.closed_form_estimate) / res.closed_form_estimate})
    if "omega_max" in v:
        bulk = schwinger_bulk(d.eps, v["omega_max"], spec, breakpoints=(d.omega_res,), check_decay=False)
        rows.append({"term": "f_sch_bulk", "numeric": bulk, "raw": bulk})
    cols = ["term", "numeric", "estimate", "raw", "rel_deviation"]
    path = _out_path(cfg, "vacuum-energy", "csv")
    write_csv(path, "vacuum-energy", cfg, cols, rows, {"omega_max": v.get("omega_max", "inf")})
    return path


def run_cdm_validate(cfg: RunConfig):
    c = cfg["cdm"]
    params = benchmark_params(rho=c["rho"], rho_alpha_mag=c["rho_alpha"], k_xi=c["k_xi"], n_dipoles=c["n_dipoles"],
                              k=c["k"])
    est = ensemble_average(params, c["n_configs"], base_seed=c["base_seed"], parallelism=cfg["run"]["parallelism"])
    medium = MaxwellGarnettMedium(params.rho, params.alpha_tilde, params.xi)
    phi = phi_factors(windowed_mg_susceptibility(medium, q_c=cfg["medium"].get("q_c")), params.k, cfg.quadrature())
    report = validate_against_analytic(est, phi, rel_tol=c["rel_tol"])
    jpath = _out_path(cfg, "cdm-validate", "jsonl")
    with open(jpath, "w") as fh:
        for rec in est.records:
            fh.write(json.dumps(record_to_json(rec), sort_keys=True) + "\n")
    row = {"n_configs": est.n_configs, "n_failed": len(est.failures), "n_dipoles": est.n_dipoles,
           "alpha_tilde_re": params.alpha_tilde.real, "alpha_tilde_im": params.alpha_tilde.imag}
    row.update(report.as_row())
    cols = ["n_configs", "n_failed", "n_dipoles", "alpha_tilde_re", "alpha_tilde_im", "trace3_est_re",
            "trace3_est_im", "trace3_ana_re", "trace3_ana_im", "trace3_stderr", "rel_deviation", "tolerance",
            "max_z", "pass"]
    path = _out_path(cfg, "cdm-validate", "csv")
    write_csv(path, "cdm-validate", cfg, cols, [row])
    if not report.passed:
        raise ValidationFailed(f"CDM trace deviates by {report.rel_deviation:.3g} (tolerance {report.tolerance:.3g})")
    return path, jpath


def run_selftest(_cfg=None) -> str:
    from .checks import run_all

    results = run_all()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    if not all(r.passed for r in results):
        raise ValidationFailed("selftest failed")
    return "selftest passed"


COMMANDS = {
    "ldos": run_ldos,
    "emission": run_emission,
    "renorm": run_renorm,
    "vacuum-energy": run_vacuum_energy,
    "cdm-validate": run_cdm_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dipole-vacuum", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="TOML run configuration")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    sub.add_parser("selftest", help="run the built-in property checks")
    return p


def _origin(exc: BaseException) -> str:
    """Package module in which ``exc`` was raised."""
    frames = traceback.extract_tb(exc.__traceback__)
    for fr in reversed(frames):
        if os.sep + "dipole_vacuum" + os.sep in fr.filename:
            return "dipole_vacuum." + os.path.splitext(os.path.basename(fr.filename))[0]
    return "dipole_vacuum"


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            print(run_selftest())
            return EXIT_OK
        cfg = RunConfig.load(args.config, args.overrides)
        out = COMMANDS[args.command](cfg)
        for path in out if isinstance(out, tuple) else (out,):
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationFailed as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, DomainError, DipoleVacuumError) as exc:
        print(f"numerical failure in {_origin(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
