"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 a computed value missed its
reference tolerance, 4 a quadrature did not converge.

SIEVELEVEL_WORKERS sets the number of worker processes used when the
bound is assembled (default 1).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import exceptional_model as em
from .bound_assembly import BoundReport, assemble_bound, optimize_params
from .exponents import (
    ExponentConfig,
    balance_point,
    critical_interval,
    factorable_level,
    headline_levels,
    level_theta_t,
    level_theta_t123,
    parse_real,
)
from .factorization import (
    FactorizationFailure,
    FactorizationInstance,
    factorize_well,
    triple_constraint_values,
)
from .quadrature import QuadratureError, QuadratureSpec
from .sieve_integrals import G_n, G_of_c, H2_wu, SieveParams, integral_In
from .special_functions import (
    buchstab_omega,
    linear_sieve_F,
    linear_sieve_f,
    wu_F,
    wu_savings_H,
)
from .tables import REFERENCES, Check, ratio_check, table_checks

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_QUADRATURE = 0, 2, 3, 4

PARAM_KEYS = ("rho", "rho_prime", "tau1", "tau2", "tau3", "mu", "eps")
BUNDLED = {"twin": "params2.json", "goldbach": "paramsa.json"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    name: str
    exponent: ExponentConfig
    params: SieveParams
    quadrature: QuadratureSpec


def _read_json(path: Path | None, bundled: str | None) -> dict:
    try:
        if path is not None:
            text = Path(path).read_text()
        else:
            text = resources.files("sievelevel.data").joinpath(bundled).read_text()
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read parameter file: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("parameter file must hold a JSON object")
    return data


def load_run_config(which: str, path: Path | None, quadrature: QuadratureSpec) -> RunConfig:
    """Parameters from ``path`` or the bundled file for ``which``.

    Numbers are decimal strings ("0.275") or "p/q" strings for theta.
    """
    if which not in BUNDLED:
        raise ConfigError(f"unknown parameter set {which!r}")
    data = _read_json(path, None if path else BUNDLED[which])
    unknown = set(data) - set(PARAM_KEYS) - {"name", "theta", "alpha"}
    if unknown:
        raise ConfigError(f"unknown keys in parameter file: {sorted(unknown)}")
    missing = [k for k in PARAM_KEYS if k not in data]
    if missing:
        raise ConfigError(f"missing keys in parameter file: {missing}")
    try:
        cfg = ExponentConfig(theta=str(data.get("theta", "7/32")),
                             alpha=str(data.get("alpha", "1" if which == "goldbach" else "0")))
        params = SieveParams(**{k: float(Fraction(str(data[k]))) for k in PARAM_KEYS})
        params.check_against(cfg)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(str(data.get("name", which)), cfg, params, quadrature)


# -- output helpers -------------------------------------------------------------


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _write_all(files: dict[Path, str]) -> None:
    """Write several files only after all of them have been produced."""
    for path, text in files.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _frac_json(x) -> dict:
    return {"exact": str(x), "float": float(x)}


def _quadrature_from(args) -> QuadratureSpec:
    try:
        return QuadratureSpec(abs_tol=args.abs_tol, rel_tol=args.rel_tol,
                              sieve_abs_tol=args.sieve_abs_tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _cfg_from(args) -> ExponentConfig:
    try:
        return ExponentConfig(theta=args.theta, alpha=args.alpha, delta=args.delta)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None


def _floats(text: str) -> list[float]:
    try:
        return [float(Fraction(s.strip())) for s in text.split(",") if s.strip()]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"expected a comma separated list of numbers, got {text!r}") from None


# -- tables ---------------------------------------------------------------------


def report_table(report: BoundReport) -> str:
    """The n | G_n | n | I_n | n | I_n layout, eight rows."""
    lines = [f"{'n':>2} | {'G_n':>12} | {'n':>2} | {'I_n':>12} | {'n':>2} | {'I_n':>12}"]
    lines.append("-" * len(lines[0]))
    for row in range(8):
        g = row + 1
        i1 = 9 + row
        i2 = 17 + row
        right = f"{i2:>2} | {report.i(i2):>12.6g}" if i2 <= 21 else f"{'':>2} | {'':>12}"
        lines.append(f"{g:>2} | {report.g(g):>12.6g} | {i1:>2} | {report.i(i1):>12.6g} | {right}")
    lines.append("")
    lines.append(f"sum G_n = {report.sum_g:.6f}")
    lines.append(f"H2_wu = {report.h2wu:.6f}")
    lines.append(f"G(mu) = {report.g_mu:.6f}")
    lines.append(f"sum I_n = {report.sum_i:.6f}")
    lines.append(f"ratio = {report.ratio:.5f}")
    return "\n".join(lines) + "\n"


def report_csv(report: BoundReport) -> str:
    rows = [[f"G{n}", repr(report.g(n))] for n in range(1, 9)]
    rows += [[f"I{n}", repr(report.i(n))] for n in range(9, 22)]
    rows += [["G_mu", repr(report.g_mu)], ["H2_wu", repr(report.h2wu)],
             ["sum_G", repr(report.sum_g)], ["sum_I", repr(report.sum_i)],
             ["ratio", repr(report.ratio)]]
    return _csv_text(["quantity", "value"], rows)


def _report_json(report: BoundReport) -> str:
    d = report.as_dict()
    d.pop("seconds", None)
    return _json_text(d)


# -- commands -------------------------------------------------------------------


SPECIAL: dict[str, Callable] = {
    "omega": buchstab_omega,
    "F": linear_sieve_F,
    "f": linear_sieve_f,
    "H": wu_savings_H,
    "Fwu": wu_F,
}


def cmd_special(args) -> int:
    xs = _floats(args.s)
    fn = SPECIAL[args.function]
    try:
        vals = [float(fn(x)) for x in xs]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.format == "json":
        _emit(_json_text({"function": args.function,
                          "values": [{"s": x, "value": v} for x, v in zip(xs, vals)]}), args.out)
    else:
        _emit(_csv_text(["s", args.function], [[repr(x), repr(v)] for x, v in zip(xs, vals)]), args.out)
    return EXIT_OK


def exponent_constants(cfg: ExponentConfig) -> dict:
    triple, uniform = headline_levels(cfg)
    out = {
        "theta": str(cfg.theta),
        "alpha": str(cfg.alpha),
        "triple_well_factorable_level": _frac_json(triple),
        "uniform_level": _frac_json(uniform),
        "factorable_level": _frac_json(factorable_level(cfg)),
        "balance_point": _frac_json(balance_point(cfg)),
        "balance_point_alpha0": _frac_json(balance_point(ExponentConfig(cfg.theta, 0, cfg.delta))),
        "balance_point_alpha1": _frac_json(balance_point(ExponentConfig(cfg.theta, 1, cfg.delta))),
    }
    if triple < Fraction(5, 8):
        v, u = critical_interval(triple, cfg)
        out["critical_interval_at_triple_level"] = {"v": _frac_json(v), "u": _frac_json(u)}
    return out


def cmd_exponent(args) -> int:
    cfg = _cfg_from(args)
    out = exponent_constants(cfg)
    try:
        if args.t is not None:
            t = parse_real(args.t)
            out["theta_t"] = _frac_json(level_theta_t(t, cfg))
        if args.t123 is not None:
            ts = [parse_real(s) for s in args.t123.split(",")]
            if len(ts) != 3:
                raise ConfigError("--t123 needs three comma separated values")
            out["theta_t123"] = _frac_json(level_theta_t123(*ts, cfg))
        if args.level is not None:
            v, u = critical_interval(parse_real(args.level), cfg)
            out["critical_interval"] = {"v": _frac_json(v), "u": _frac_json(u)}
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    _emit(_json_text(out), args.out)
    return EXIT_OK


def cmd_factorize(args) -> int:
    cfg = _cfg_from(args)
    try:
        ts = sorted((parse_real(s) for s in args.primes.split(",") if s.strip()), reverse=True)
        inst = FactorizationInstance(tuple(ts), parse_real(args.level), parse_real(args.cut), cfg)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    res = factorize_well(inst, fallback=not args.no_search)
    if isinstance(res, FactorizationFailure):
        _emit(_json_text({"case": None, "failure": res.reason}), args.out)
        return EXIT_TOLERANCE
    f, tag = res
    out = {
        "case": tag,
        "a": float(f.a_exp),
        "b": float(f.b_exp),
        "c": float(f.c_exp),
        "assignment": list(f.assignment),
        "constraints": [[float(l), float(r)] for l, r in triple_constraint_values(f, inst)],
    }
    _emit(_json_text(out), args.out)
    return EXIT_OK


def _integral_rows(rc: RunConfig, which: str, low_argument: str) -> list[list]:
    p, cfg, q = rc.params, rc.exponent, rc.quadrature
    rows = []
    if which in ("all", "G"):
        rows.append(["G_mu", repr(G_of_c(p.mu, p, cfg, q))])
        rows += [[f"G{n}", repr(G_n(n, p, cfg, q))] for n in range(1, 9)]
    if which in ("all", "I"):
        rows += [[f"I{n}", repr(integral_In(n, p, q, low_argument))] for n in range(9, 22)]
    if which in ("all", "H2"):
        rows.append(["H2_wu", repr(H2_wu(p, cfg, q))])
    return rows


def cmd_integrals(args) -> int:
    rc = load_run_config(args.set, args.params, _quadrature_from(args))
    rows = _integral_rows(rc, args.which, args.low_argument)
    if args.format == "json":
        _emit(_json_text({k: float(v) for k, v in rows}), args.out)
    else:
        _emit(_csv_text(["quantity", "value"], rows), args.out)
    return EXIT_OK


def cmd_bound(args) -> int:
    rc = load_run_config(args.set, args.params, _quadrature_from(args))
    if args.budget < 0:
        raise ConfigError("--budget must be nonnegative")
    if args.optimize:
        report = optimize_params(rc.exponent, rc.params, args.budget, rc.quadrature,
                                 low_argument=args.low_argument)
    else:
        report = assemble_bound(rc.params, rc.exponent, rc.quadrature, args.low_argument)
    files = {}
    if args.tables is not None:
        files[args.tables / f"{rc.name}_table.csv"] = report_csv(report)
        files[args.tables / f"{rc.name}_table.txt"] = report_table(report)
    _write_all(files)
    _emit(_report_json(report), args.out)
    return EXIT_OK


def model_summary(grid: em.ModelGrid) -> dict:
    diff = grid.values - grid.candidate()
    return {
        "theta": grid.theta,
        "variant": grid.variant,
        "step": grid.step,
        "sweeps": grid.sweeps,
        "max_abs_E_minus_M": float(np.abs(diff).max()),
        "max_E_minus_M": float(diff.max()),
        "min_E_minus_M": float(diff.min()),
        "rule_violations": len(em.verify_model_rules(grid, grid)),
    }


def cmd_model(args) -> int:
    try:
        theta = float(Fraction(args.theta))
        grid0 = em.ModelGrid.initial(theta, args.variant, args.q_max, args.y_max, args.step)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    grid = em.iterate_E(grid0, args.max_sweeps, args.tol)
    if args.grid_out is not None:
        Q, Y = grid.mesh()
        cand = grid.candidate()
        rows = [[f"{q:.10g}", f"{y:.10g}", repr(float(e)), repr(float(m))]
                for q, y, e, m in zip(Q.ravel(), Y.ravel(), grid.values.ravel(), cand.ravel())]
        _write_all({args.grid_out: _csv_text(["q", "y", "E", "M"], rows)})
    _emit(_json_text(model_summary(grid)), args.out)
    return EXIT_OK


# -- reproduce ------------------------------------------------------------------


def _reproduce_bound(name: str, q: QuadratureSpec, files: dict, checks: list[Check]) -> None:
    rc = load_run_config(name, None, q)
    report = assemble_bound(rc.params, rc.exponent, q)
    ref = REFERENCES[name]
    found = table_checks(report, ref) + [ratio_check(report, ref)]
    checks.extend(found)
    files[f"{name}_report.json"] = _report_json(report)
    files[f"{name}_table.txt"] = report_table(report)
    files[f"{name}_table.csv"] = report_csv(report)
    files[f"{name}_checks.txt"] = "\n".join(c.line() for c in found) + "\n"


def _exact_check(name: str, value, target) -> Check:
    return Check(name, value, target, "eq", 0.0)


def _reproduce_exponents(files: dict, checks: list[Check]) -> None:
    c = ExponentConfig(Fraction(7, 32), 0)
    found = [
        _exact_check("triple level 66/107", headline_levels(c)[0], Fraction(66, 107)),
        _exact_check("triple level 5/8 at theta=0", headline_levels(ExponentConfig(0, 0))[0],
                     Fraction(5, 8)),
        _exact_check("uniform level 153/256", headline_levels(c)[1], Fraction(153, 256)),
        _exact_check("mu_0 = 25/107", balance_point(c), Fraction(25, 107)),
        _exact_check("mu_1 = 25/128", balance_point(ExponentConfig(Fraction(7, 32), 1)),
                     Fraction(25, 128)),
    ]
    v, u = critical_interval(Fraction(66, 107), c)
    found += [_exact_check("v at 66/107", v, Fraction(25, 107)),
              _exact_check("u at 66/107", u, Fraction(25, 107))]
    checks.extend(found)
    out = {"theta=7/32,alpha=0": exponent_constants(c),
           "theta=7/32,alpha=1": exponent_constants(ExponentConfig(Fraction(7, 32), 1)),
           "theta=0": exponent_constants(ExponentConfig(0, 0))}
    files["exponents.json"] = _json_text(out)


def _reproduce_model(files: dict, checks: list[Check]) -> None:
    rows = []
    for theta in (Fraction(7, 32), Fraction(2, 5)):
        for variant in ("plain", "starred"):
            grid = em.converge(float(theta), variant)
            s = model_summary(grid)
            rows.append([str(theta), variant, s["sweeps"], repr(s["max_abs_E_minus_M"]),
                         s["rule_violations"]])
            checks.append(Check(f"|E - M| theta={theta} {variant}", s["max_abs_E_minus_M"], 0.0,
                                "abs", 3 * grid.step))
            cand = em.map_M if variant == "plain" else em.map_Mstar
            viol = len(em.verify_model_rules(cand, grid))
            checks.append(Check(f"rules hold for the {variant} map, theta={theta}", viol, 0, "eq", 0))
    a50 = em.alpha_sequence(50, Fraction(7, 32))
    checks.append(Check("alpha_50(7/32)", float(a50), 2.0, "abs", 1e-6))
    checks.append(_exact_check("lambda limit 7/18", em.lambda_limit(Fraction(7, 32)), Fraction(7, 18)))
    files["model_summary.csv"] = _csv_text(
        ["theta", "variant", "sweeps", "max_abs_E_minus_M", "rule_violations"], rows)


def cmd_reproduce(args) -> int:
    q = _quadrature_from(args)
    which = ["twin", "goldbach", "exponents", "appendix"] if args.which == "all" else [args.which]
    files: dict[str, str] = {}
    checks: list[Check] = []
    for w in which:
        if w in ("twin", "goldbach"):
            _reproduce_bound(w, q, files, checks)
        elif w == "exponents":
            _reproduce_exponents(files, checks)
        else:
            _reproduce_model(files, checks)
    files["checks.txt"] = "\n".join(c.line() for c in checks) + "\n"
    _write_all({args.out_dir / name: text for name, text in files.items()})
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(c.line())
    if failed:
        print(f"{len(failed)} of {len(checks)} checks failed", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _add_cfg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", default="7/32", help="exceptional eigenvalue exponent, e.g. 7/32")
    p.add_argument("--alpha", default="0", help="residue size exponent")
    p.add_argument("--delta", default="0")


def _add_quadrature(p: argparse.ArgumentParser) -> None:
    d = QuadratureSpec()
    p.add_argument("--abs-tol", type=float, default=d.abs_tol)
    p.add_argument("--rel-tol", type=float, default=d.rel_tol)
    p.add_argument("--sieve-abs-tol", type=float, default=d.sieve_abs_tol,
                   help="absolute target for the F-1, f-1 parts of the G integrals")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sievelevel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("special", help="evaluate omega, F, f, H or F*H")
    p.add_argument("function", choices=sorted(SPECIAL))
    p.add_argument("--s", required=True, help="comma separated arguments")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_special)

    p = sub.add_parser("exponent", help="exponent maps and exact constants")
    _add_cfg(p)
    p.add_argument("--t", help="evaluate theta(t)")
    p.add_argument("--t123", help="evaluate theta(t1,t2,t3), e.g. 0.2,0.1,0.05")
    p.add_argument("--level", help="critical interval at this level")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("factorize", help="factor d = abc for given prime exponents")
    _add_cfg(p)
    p.add_argument("--level", required=True)
    p.add_argument("--cut", required=True, help="log_x A")
    p.add_argument("--primes", required=True, help="comma separated exponents log_x p_i")
    p.add_argument("--no-search", action="store_true", help="disable the exhaustive fallback")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_factorize)

    for name, func, helptext in (("integrals", cmd_integrals, "the I_n, G_n and H_2 integrals"),
                                 ("bound", cmd_bound, "assemble the upper-bound constant")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("set", choices=sorted(BUNDLED))
        p.add_argument("--params", type=Path, help="parameter JSON (default: bundled)")
        p.add_argument("--low-argument", choices=("unit", "measure"), default="unit")
        p.add_argument("--out", type=Path)
        _add_quadrature(p)
        if name == "integrals":
            p.add_argument("--which", choices=("all", "G", "I", "H2"), default="all")
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        else:
            p.add_argument("--optimize", action="store_true")
            p.add_argument("--budget", type=int, default=40)
            p.add_argument("--tables", type=Path, help="directory for CSV and text tables")
        p.set_defaults(func=func)

    p = sub.add_parser("model", help="grid fixed point of the exponent rules")
    p.add_argument("action", choices=("converge",))
    p.add_argument("--theta", default="7/32")
    p.add_argument("--variant", choices=("plain", "starred"), default="plain")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--q-max", type=float, default=3.0)
    p.add_argument("--y-max", type=float, default=6.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-sweeps", type=int, default=10**4)
    p.add_argument("--grid-out", type=Path, help="CSV dump of the converged grid")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("reproduce-paper", help="recompute the published tables and constants")
    p.add_argument("which", choices=("twin", "goldbach", "exponents", "appendix", "all"))
    p.add_argument("--out-dir", type=Path, default=Path("reproduction"))
    _add_quadrature(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"quadrature did not converge: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except em.ConvergenceError as exc:
        print(f"grid iteration did not converge: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE


if __name__ == "__main__":
    sys.exit(main())
