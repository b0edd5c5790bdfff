"""Command-line interface.

Exit codes: 0 success, 1 a verification failed, 2 bad arguments or input.
Level indices on the command line (``--pattern``) are 1-based.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from . import machine as mc
from . import optimality as opt
from .sphere import PureState, estimate_fourth_moment, fourth_moment_exact
from .verify import run_grid

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _exact(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _pattern(text: str) -> tuple[int, int, int, int]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"pattern needs four comma-separated levels, got {text!r}")
    return tuple(int(p) for p in parts)


def _report(args, results: dict, passes: dict, tolerances: dict) -> dict:
    inputs = {k: v for k, v in vars(args).items() if k not in ("func", "emit", "command")}
    return {
        "command": args.command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "tolerances": tolerances,
        "results": results,
        "pass": passes,
        "ok": all(passes.values()),
    }


def _emit(args, report: dict, out) -> None:
    if args.emit == "json":
        json.dump(report, out, indent=2, sort_keys=False)
        out.write("\n")
    elif args.emit == "text":
        for key in ("command", "seed"):
            out.write(f"{key}: {report[key]}\n")
        for key, value in report["results"].items():
            out.write(f"{key}: {json.dumps(value)}\n")
        for key, value in report["pass"].items():
            out.write(f"pass.{key}: {value}\n")
        out.write(f"ok: {report['ok']}\n")
    else:
        raise UsageError("csv output is only available for fidelity tables")


# -- commands ---------------------------------------------------------------


def cmd_fidelity(args, out) -> int:
    n, nprime, m = args.n, args.nprime, args.m
    try:
        spec = mc.MachineSpec(n, m, nprime)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    if args.emit == "csv":
        return _fidelity_table(args, out)

    fmax = mc.fmax_analytic(n, m)
    fnm = mc.fnm_analytic(n, nprime, m)
    tilde = mc.tilde_fmax(n, nprime, m)
    exact_sum = mc.basis_fidelity(spec)
    results = {
        "fmax": float(fmax),
        "fmax_exact": _exact(fmax),
        "fnm": float(fnm),
        "fnm_exact": _exact(fnm),
        "tilde_fmax": float(tilde),
        "tilde_fmax_exact": _exact(tilde),
        "basis_fidelity": float(exact_sum),
        "basis_fidelity_exact": _exact(exact_sum),
    }
    passes = {
        "basis_sum_matches_fnm": exact_sum == fnm,
        "learning_inequality": tilde <= fnm,
    }
    if nprime == 1:
        passes["fnm_matches_fmax"] = fnm == fmax
    try:
        rho = mc.single_copy_density(mc.clone_basis(spec, 0, args.dim_cap))
    except mc.DimensionCapError:
        results["machine_fidelity"] = None
    else:
        value = float(rho.entries[0, 0].real)
        results["machine_fidelity"] = value
        passes["machine_matches_fnm"] = abs(value - float(fnm)) <= args.tol
    _emit(args, _report(args, results, passes, {"tol": args.tol}), out)
    return EXIT_OK if all(passes.values()) else EXIT_FAIL


def _fidelity_table(args, out) -> int:
    n_max = args.n_max or args.n
    m_max = args.m_max or args.m
    cols = list(range(args.nprime, m_max + 1))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["N"] + [f"M={m}" for m in cols])
    for n in range(1, n_max + 1):
        writer.writerow([n] + [repr(float(mc.fnm_analytic(n, args.nprime, m))) for m in cols])
    return EXIT_OK


def cmd_verify(args, out) -> int:
    checks = run_grid(
        args.n_max,
        args.m_max,
        nprime_max=args.nprime_max,
        tol=args.tol,
        seed=args.seed,
        inputs=args.inputs,
        draws=args.draws,
        workers=args.workers,
        dim_cap=args.dim_cap,
    )
    names = list(dict.fromkeys(c.check for c in checks))
    passes = {name: all(c.passed for c in checks if c.check == name) for name in names}
    worst = {name: max(c.deviation for c in checks if c.check == name) for name in names}
    results = {
        "checks": [c.as_dict() for c in checks],
        "worst_deviation": worst,
        "failed": [c.as_dict() for c in checks if not c.passed],
    }
    _emit(args, _report(args, results, passes, {"tol": args.tol}), out)
    return EXIT_OK if all(passes.values()) else EXIT_FAIL


def _load_state(path: str, renormalize: bool) -> PureState:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read state file {path}: {exc}") from None
    try:
        amps = np.array([complex(float(re), float(im)) for re, im in data])
    except (TypeError, ValueError):
        raise UsageError("state file must be a JSON array of [re, im] pairs") from None
    if amps.size == 0 or not np.all(np.isfinite(amps)):
        raise UsageError("state file holds no usable amplitudes")
    norm = float(np.sum(np.abs(amps) ** 2))
    if abs(norm - 1.0) > 1e-6 and not renormalize:
        raise UsageError(f"state has |psi|^2 = {norm}; pass --renormalize to accept it")
    return PureState.normalized(amps)


def cmd_clone(args, out) -> int:
    psi = _load_state(args.state, args.renormalize)
    if args.n is not None and args.n != psi.n_levels:
        raise UsageError(f"--n {args.n} does not match the {psi.n_levels}-level state")
    n, m = psi.n_levels, args.m
    output = mc.clone_state(psi, m, dim_cap=args.dim_cap)
    rho = mc.single_copy_density(output)
    fid = rho.expectation(psi)
    iso = mc.build_isometry(output.spec, args.dim_cap)
    branches = [
        {
            "copy": list(iso.copy_basis[c].counts),
            "ancilla": list(iso.ancilla_basis[a].counts),
            "amplitude": [amp.real, amp.imag],
        }
        for (c, a), amp in sorted(output.branches.items())
    ]
    fmax = mc.fmax_analytic(n, m)
    results = {
        "n_levels": n,
        "input": [[z.real, z.imag] for z in psi.amplitudes.tolist()],
        "branches": branches,
        "output_norm": output.norm_squared(),
        "density_matrix": [[[z.real, z.imag] for z in row] for row in rho.entries.tolist()],
        "fidelity": fid,
        "fmax": float(fmax),
        "fmax_exact": _exact(fmax),
    }
    passes = {"fidelity_matches_fmax": abs(fid - float(fmax)) <= args.tol}
    _emit(args, _report(args, results, passes, {"tol": args.tol}), out)
    return EXIT_OK if all(passes.values()) else EXIT_FAIL


def cmd_spectrum(args, out) -> int:
    n, m = args.n, args.m
    scale = m * n * (n + 1)
    numeric = opt.max_eigen_fidelity(n, m, dim_cap=args.dim_cap)
    closed = opt.block_spectrum_closed_form(n, m)
    targets = closed.eigenvalues
    deviation = float(np.max(np.min(np.abs(numeric.eigenvalues[:, None] - targets[None, :]), axis=1)))
    results = {
        "matrix_size": int(numeric.eigenvalues.size),
        "eigenvalues": numeric.eigenvalues.tolist(),
        "lambda_prime": (numeric.eigenvalues * scale).tolist(),
        "closed_form_block_eigenvalues": targets.tolist(),
        "closed_form_lambda_prime": [float(x) for x in targets * scale],
        "lambda_max": numeric.lambda_max,
        "lambda_prime_max": numeric.lambda_max * scale,
        "fidelity_from_lambda": numeric.fidelity_from_lambda,
        "fmax_exact": _exact(closed.fidelity_exact),
        "max_deviation": deviation,
    }
    passes = {
        "eigenvalues_match_closed_form": deviation <= args.tol,
        "n_lambda_matches_fmax": abs(numeric.fidelity_from_lambda - closed.fidelity_from_lambda) <= args.tol,
    }
    _emit(args, _report(args, results, passes, {"tol": args.tol}), out)
    return EXIT_OK if all(passes.values()) else EXIT_FAIL


def _default_patterns(n: int) -> list[tuple[int, int, int, int]]:
    pats = [(1, 1, 1, 1)]
    if n >= 2:
        pats += [(1, 1, 2, 2), (1, 2, 2, 1), (1, 2, 1, 1)]
    if n >= 3:
        pats.append((1, 2, 3, 1))
    return pats


def cmd_moments(args, out) -> int:
    n = args.n
    patterns = args.pattern or _default_patterns(n)
    rows = []
    passes = {}
    for pat in patterns:
        if any(not 1 <= p <= n for p in pat):
            raise UsageError(f"pattern {pat} has a level outside 1..{n}")
        idx = tuple(p - 1 for p in pat)
        exact = fourth_moment_exact(n, idx)
        est = estimate_fourth_moment(
            n, idx, args.samples, np.random.SeedSequence([args.seed, *idx]), workers=args.workers
        )
        dev = abs(est.mean - float(exact))
        ok = dev <= args.sigmas * est.standard_error
        key = ",".join(map(str, pat))
        rows.append(
            {
                "pattern": list(pat),
                "exact": float(exact),
                "exact_fraction": _exact(exact),
                "mean": [est.mean.real, est.mean.imag],
                "standard_error": est.standard_error,
                "deviation_in_se": dev / est.standard_error if est.standard_error > 0 else 0.0,
                "pass": ok,
            }
        )
        passes[f"moment[{key}]"] = ok
    results = {"moments": rows}
    tolerances = {"sigmas": args.sigmas}
    if args.m is not None:
        analytic = opt.build_A(n, args.m, dim_cap=args.dim_cap).entries
        mc_a = opt.build_A(
            n, args.m, "montecarlo", samples=args.samples, rng=np.random.SeedSequence([args.seed, n, args.m]),
            dim_cap=args.dim_cap,
        )
        dev = np.abs(mc_a.entries - analytic)
        se = mc_a.standard_error
        allowed = args.a_sigmas * se + A_MATRIX_FLOOR
        in_se = np.divide(dev, se, out=np.zeros_like(dev), where=se > 0)
        results["a_matrix"] = {
            "size": int(analytic.shape[0]),
            "max_abs_deviation": float(dev.max()),
            "max_deviation_in_se": float(in_se.max()),
        }
        passes["a_matrix"] = bool(np.all(dev <= allowed))
        tolerances["a_sigmas"] = args.a_sigmas
        tolerances["a_floor"] = A_MATRIX_FLOOR
    _emit(args, _report(args, results, passes, tolerances), out)
    return EXIT_OK if all(passes.values()) else EXIT_FAIL


# Entries whose per-sample value is constant have zero standard error.
A_MATRIX_FLOOR = 1e-12


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--emit", choices=("json", "csv", "text"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=_positive_float, default=1e-10)
    common.add_argument("--dim-cap", type=_positive_int, default=None, help="matrix dimension cap (env QCLONE_DIM_CAP)")
    common.add_argument("--workers", type=_positive_int, default=1)

    parser = _Parser(prog="qclone", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qclone {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fidelity", parents=[common], help="closed-form and machine fidelities")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--nprime", type=_positive_int, default=1)
    p.add_argument("--n-max", type=_positive_int, default=None, help="rows of the csv table")
    p.add_argument("--m-max", type=_positive_int, default=None, help="columns of the csv table")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("verify", parents=[common], help="run the verification grid")
    p.add_argument("--n-max", type=_positive_int, required=True)
    p.add_argument("--m-max", type=_positive_int, required=True)
    p.add_argument("--nprime-max", type=_positive_int, default=3)
    p.add_argument("--inputs", type=_positive_int, default=200, help="random inputs per universality check")
    p.add_argument("--draws", type=int, default=200, help="random machines per bound check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("clone", parents=[common], help="clone a pure state read from a JSON file")
    p.add_argument("state", help="JSON array of [re, im] pairs")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--n", type=_positive_int, default=None)
    p.add_argument("--renormalize", action="store_true")
    p.set_defaults(func=cmd_clone)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues of the moment matrix")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--m", type=_positive_int, required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("moments", parents=[common], help="exact vs Monte Carlo fourth moments")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--pattern", type=_pattern, action="append", help="1-based levels j',i',i,j (repeatable)")
    p.add_argument("--sigmas", type=_positive_float, default=3.0)
    p.add_argument("--m", type=_positive_int, default=None, help="also compare the Monte Carlo moment matrix")
    p.add_argument("--a-sigmas", type=_positive_float, default=5.0)
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    buffer = io.StringIO()
    try:
        if args.command == "moments" and args.samples < 2:
            raise UsageError("--samples must be at least 2")
        if args.command == "verify" and args.draws < 0:
            raise UsageError("--draws must be non-negative")
        if args.command != "fidelity" and args.emit == "csv":
            raise UsageError("csv output is only available for fidelity tables")
        code = args.func(args, buffer)
    except (UsageError, ValueError) as exc:
        print(f"qclone: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out.write(buffer.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
