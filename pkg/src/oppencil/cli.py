"""Command-line front end: batch analysis with machine-readable reports.

Subcommands: parse, ellipticity, pencil, spectrum, res, index, adjoint,
adjoint-check, norm, model-solve, verify-cc.  Exit codes: 0 success,
2 schema error, 3 numerical guard, 4 not applicable.  All randomness is
seeded from the config (default 0) and reports are byte-identical across
repeated runs and across --threads settings.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import NotApplicable, NumericalGuard, OppencilError, SchemaError
from .index_ledger import Anchor, adjoint_res_check, build_ledger, pn_mu_nu
from .model_solver import (
    line_difference_expansion,
    mode_pencil,
    verify_coefficient_formula,
)
from .operator_ast import (
    check_ellipticity,
    check_symbol_class,
    formal_adjoint,
    is_homogeneous_cc,
    parse_operator,
    principal_part,
    serialize_operator,
)
from .pencil import assemble_pencil
from .spectrum import default_l_max, strip_spectrum
from .weighted_norms import (
    Expr,
    weighted_cl_norm,
    weighted_holder_seminorm,
    weighted_sobolev_norm,
)


@dataclass
class RunConfig:
    """Programmatic mirror of one CLI invocation.

    `extra` carries command-specific flags as {"flag-name": value}; unknown
    flags are rejected by the argument parser when the config is run.
    """

    command: str
    operator_path: str | None = None
    beta1: float | None = None
    beta2: float | None = None
    degree: int | None = None
    anchor: str | None = None
    output: str | None = None
    fmt: str = "json"
    seed: int = 0
    threads: int = 1
    extra: dict | None = None

    def to_argv(self):
        argv = [self.command]
        if self.operator_path is not None:
            argv.append(self.operator_path)
        if self.command in ("spectrum", "res") and self.beta1 is not None:
            argv += ["--strip", str(self.beta1), str(self.beta2)]
        elif self.command in ("index", "adjoint-check", "verify-cc") and \
                self.beta1 is not None:
            argv += ["--window", str(self.beta1), str(self.beta2)]
        elif self.command == "model-solve" and self.beta1 is not None:
            argv += ["--beta1", str(self.beta1), "--beta2", str(self.beta2)]
        if self.degree is not None:
            argv += ["--degree", str(self.degree)]
        if self.anchor is not None:
            argv += ["--anchor", self.anchor]
        if self.output is not None:
            argv += ["--output", self.output]
        argv += ["--format", self.fmt, "--seed", str(self.seed),
                 "--threads", str(self.threads)]
        for key, val in (self.extra or {}).items():
            argv += [f"--{key}"] + ([str(val)] if val is not None else [])
        return argv


def run(config: RunConfig) -> int:
    """Execute one analysis described by a RunConfig; returns the exit status."""
    return main(config.to_argv())


def _load_operator(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"operator file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return parse_operator(doc)


def _emit(payload, args):
    if isinstance(payload, str):
        text = payload
    else:
        payload = dict(payload)
        payload["tool_version"] = __version__
        text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fingerprinted(op, body):
    out = {"operator_fingerprint": op.fingerprint()}
    out.update(body)
    return out


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def cmd_parse(args):
    op = _load_operator(args.operator)
    _emit(_fingerprinted(op, {"canonical": serialize_operator(op)}), args)
    return 0


def cmd_ellipticity(args):
    op = _load_operator(args.operator)
    rep = check_ellipticity(op, xi_samples=args.xi_samples,
                            x_samples=args.x_samples,
                            threshold=args.threshold, threads=args.threads)
    _emit(_fingerprinted(op, rep.to_json()), args)
    return 0


def cmd_pencil(args):
    op = _load_operator(args.operator)
    P = assemble_pencil(op, args.l_max if args.l_max is not None
                        else default_l_max(op, args.degree))
    _emit(P.to_json(), args)
    return 0


def _spectrum_report(args):
    op = _load_operator(args.operator)
    return op, strip_spectrum(op, args.strip[0], args.strip[1], args.degree)


def cmd_spectrum(args):
    op, rep = _spectrum_report(args)
    if args.format == "csv":
        _emit(rep.res_lines_csv(), args)
    else:
        _emit(rep.to_json(), args)
    return 0


def cmd_res(args):
    op, rep = _spectrum_report(args)
    if args.format == "csv":
        _emit(rep.res_lines_csv(), args)
    else:
        _emit(_fingerprinted(op, {
            "strip": [rep.beta1, rep.beta2],
            "res_lines": {f"{l:.12g}": m for l, m in sorted(rep.res_lines.items())},
        }), args)
    return 0


def _parse_anchor(spec):
    if spec in ("cc", "selfadjoint"):
        return Anchor(spec)
    if spec.startswith("user:"):
        fields = dict(kv.split("=") for kv in spec[len("user:"):].split(","))
        known = {"beta0", "index"}
        if set(fields) - known:
            raise SchemaError(f"unknown anchor fields {sorted(set(fields) - known)}")
        return Anchor("user", beta0=float(fields["beta0"]),
                      index0=int(fields["index"]))
    raise SchemaError(f"bad anchor spec {spec!r} "
                      "(use cc | selfadjoint | user:beta0=V,index=W)")


def cmd_index(args):
    op = _load_operator(args.operator)
    rep = strip_spectrum(op, args.window[0], args.window[1], args.degree)
    led = build_ledger(rep, _parse_anchor(args.anchor))
    if args.format == "csv":
        _emit(led.to_csv(), args)
    else:
        _emit(_fingerprinted(op, led.to_json()), args)
    return 0


def cmd_adjoint(args):
    op = _load_operator(args.operator)
    adj = formal_adjoint(op)
    _emit(_fingerprinted(op, {"adjoint": serialize_operator(adj)}), args)
    return 0


def cmd_adjoint_check(args):
    op = _load_operator(args.operator)
    adj = formal_adjoint(op)
    b1, b2 = args.window
    rep_a = strip_spectrum(op, b1, b2, args.degree)
    shift = op.n + op.m
    rep_adj = strip_spectrum(adj, shift - b2, shift - b1, args.degree)
    check = adjoint_res_check(rep_a.res_lines, rep_adj.res_lines, op.n, op.m)
    _emit(_fingerprinted(op, check.to_json()), args)
    return 0 if check.passed else 3


def cmd_norm(args):
    with open(args.expr) as fh:
        doc = json.load(fh)
    u = Expr.from_json(doc, args.n)
    if args.kind == "sobolev":
        res = weighted_sobolev_norm(u, args.p, args.k, args.beta)
    elif args.kind == "cl":
        res = weighted_cl_norm(u, args.l, args.beta)
    elif args.kind == "holder":
        res = weighted_holder_seminorm(u, args.sigma, args.beta,
                                       samples=args.samples, seed=args.seed)
    elif args.kind == "decay":
        rep = check_symbol_class(u, args.beta, max_order=args.k)
        _emit(rep.to_json(), args)
        return 0 if rep.passed else 3
    else:
        raise SchemaError(f"unknown norm kind {args.kind!r}")
    _emit({"kind": args.kind, "beta": args.beta, **res.to_json()}, args)
    return 0


def _parse_f_spec(args):
    if args.f_csv:
        rows = np.loadtxt(args.f_csv, delimiter=",", skiprows=1)
        t = rows[:, 0]
        dt = np.diff(t)
        if np.max(np.abs(dt - dt[0])) > 1e-9 * abs(dt[0]):
            raise SchemaError("CSV t-grid must be uniform")
        return t, rows[:, 1] + 1j * rows[:, 2]
    if args.f_expr:
        with open(args.f_expr) as fh:
            u = Expr.from_json(json.load(fh), 1)
        return None, lambda t: u.evaluate(t[:, None])
    spec = args.f or "gaussian"
    name, _, params = spec.partition(":")
    if name != "gaussian":
        raise SchemaError(f"unknown f spec {spec!r}")
    opts = dict(kv.split("=") for kv in params.split(",")) if params else {}
    a = float(opts.pop("a", 1.0))
    t0 = float(opts.pop("t0", 0.0))
    if opts:
        raise SchemaError(f"unknown gaussian options {sorted(opts)}")
    return None, lambda t: np.exp(-a * (t - t0) ** 2)


def cmd_model_solve(args):
    op = _load_operator(args.operator)
    P = assemble_pencil(op, default_l_max(op, args.mode),
                        analysis_degree=args.mode)
    mp = mode_pencil(P, args.mode)
    t, f = _parse_f_spec(args)
    res = line_difference_expansion(mp, f, args.beta1, args.beta2, t)
    report = verify_coefficient_formula(res)
    _emit(_fingerprinted(op, {
        "mode": args.mode,
        "expansion": res.to_json(),
        "coefficient_check": report,
    }), args)
    return 0


def cmd_verify_cc(args):
    """Cross-check: combinatorial breakpoints == computed critical lines."""
    op = _load_operator(args.operator)
    if not is_homogeneous_cc(principal_part(op)):
        raise NotApplicable("verify-cc requires a homogeneous cc principal part")
    b1, b2 = args.window
    rep = strip_spectrum(op, b1, b2, args.degree)
    checks = []
    ok = True
    import math
    for b in range(math.ceil(b1), math.floor(b2) + 1):
        jump = (pn_mu_nu(op.n, op.mu, op.nu, b - 0.5)
                - pn_mu_nu(op.n, op.mu, op.nu, b + 0.5))
        line = next((l for l in rep.res_lines if abs(l - b) < 1e-6), None)
        mult = rep.res_lines.get(line, 0) if line is not None else 0
        checks.append({"beta": b, "formula_jump": jump, "computed_mult": mult,
                       "match": jump == mult})
        ok = ok and jump == mult
    stray = [l for l in rep.res_lines if abs(l - round(l)) > 1e-6]
    if stray:
        ok = False
    _emit(_fingerprinted(op, {
        "window": [b1, b2], "degree": args.degree,
        "checks": checks, "stray_lines": [f"{l:.9g}" for l in stray],
        "passed": ok,
    }), args)
    return 0 if ok else 3


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="oppencil",
        description="Spectral pencils, critical weight lines and Fredholm "
                    "index ledgers for elliptic operators on R^n")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, operator=True):
        if operator:
            sp.add_argument("operator", help="operator-spec JSON file")
        sp.add_argument("-o", "--output", help="write the report here")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("parse", help="validate and canonicalize an operator")
    common(sp)
    sp.set_defaults(fn=cmd_parse)

    sp = sub.add_parser("ellipticity", help="sampled ellipticity check")
    common(sp)
    sp.add_argument("--xi-samples", type=int, default=2000)
    sp.add_argument("--x-samples", type=int, default=500)
    sp.add_argument("--threshold", type=float, default=1e-9)
    sp.set_defaults(fn=cmd_ellipticity)

    sp = sub.add_parser("pencil", help="dump assembled pencil matrices")
    common(sp)
    sp.add_argument("--l-max", type=int, default=None)
    sp.add_argument("--degree", type=int, default=6)
    sp.set_defaults(fn=cmd_pencil)

    sp = sub.add_parser("spectrum", help="pencil spectrum in a strip")
    common(sp)
    sp.add_argument("--strip", type=float, nargs=2, required=True,
                    metavar=("BETA1", "BETA2"))
    sp.add_argument("--degree", type=int, default=6)
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("res", help="critical weight lines in a strip")
    common(sp)
    sp.add_argument("--strip", type=float, nargs=2, required=True,
                    metavar=("BETA1", "BETA2"))
    sp.add_argument("--degree", type=int, default=6)
    sp.set_defaults(fn=cmd_res)

    sp = sub.add_parser("index", help="Fredholm index ledger over a window")
    common(sp)
    sp.add_argument("--anchor", default="cc",
                    help="cc | selfadjoint | user:beta0=V,index=W")
    sp.add_argument("--window", type=float, nargs=2, required=True,
                    metavar=("BETA1", "BETA2"))
    sp.add_argument("--degree", type=int, default=6)
    sp.set_defaults(fn=cmd_index)

    sp = sub.add_parser("adjoint", help="formal adjoint operator")
    common(sp)
    sp.set_defaults(fn=cmd_adjoint)

    sp = sub.add_parser("adjoint-check",
                        help="critical lines of the adjoint vs reflection")
    common(sp)
    sp.add_argument("--window", type=float, nargs=2, required=True,
                    metavar=("BETA1", "BETA2"))
    sp.add_argument("--degree", type=int, default=6)
    sp.set_defaults(fn=cmd_adjoint_check)

    sp = sub.add_parser("norm", help="weighted norm of a ring expression")
    common(sp, operator=False)
    sp.add_argument("expr", help="Expr JSON file")
    sp.add_argument("--kind", choices=("sobolev", "cl", "holder", "decay"),
                    required=True)
    sp.add_argument("--n", type=int, required=True, help="ambient dimension")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--l", type=int, default=0)
    sp.add_argument("--sigma", type=float, default=0.5)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--samples", type=int, default=4096)
    sp.set_defaults(fn=cmd_norm)

    sp = sub.add_parser("model-solve",
                        help="per-mode line solves and the jump expansion")
    common(sp)
    sp.add_argument("--mode", type=int, required=True, help="harmonic degree")
    sp.add_argument("--beta1", type=float, required=True)
    sp.add_argument("--beta2", type=float, required=True)
    sp.add_argument("--f", default=None, help="gaussian[:a=..,t0=..]")
    sp.add_argument("--f-csv", default=None, help="CSV file t,re,im")
    sp.add_argument("--f-expr", default=None, help="1-D Expr JSON file")
    sp.set_defaults(fn=cmd_model_solve)

    sp = sub.add_parser("verify-cc",
                        help="combinatorial index jumps vs computed lines")
    common(sp)
    sp.add_argument("--window", type=float, nargs=2, required=True,
                    metavar=("BETA1", "BETA2"))
    sp.add_argument("--degree", type=int, default=6)
    sp.set_defaults(fn=cmd_verify_cc)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    np.random.seed(args.seed if hasattr(args, "seed") else 0)
    try:
        return args.fn(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except NotApplicable as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return 4
    except NumericalGuard as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    except OppencilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
