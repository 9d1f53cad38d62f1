"""The ``covest`` command-line front end.

Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 certificate failure.
"""

import argparse
import csv
import io
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import conjugate as cj
from . import equatorial as eq
from . import gates
from .errors import CapExceeded, CertificateFailed, CovestError
from .simulate import DETERMINISTIC, PROBABILISTIC, SimulationConfig, run_simulation

SCHEMA = "covest/1"
EQUAL_TOL = 1e-12
SWEEP_HEADER = ("param", "f_prob", "f_det", "delta_f", "success_prob")


class UsageError(Exception):
    pass


def _fmt(x, digits):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{digits}g}"
    return str(x)


def _json_value(x):
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.15g}") if np.isfinite(x) else None
    return x


def record(command, parameters, results, seed):
    return {
        "schema": SCHEMA,
        "command": command,
        "parameters": parameters,
        "results": results,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": seed,
    }


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x, 15) for x in row])
    return buf.getvalue()


def _flat(results, prefix=""):
    # scalars and nested dicts only; lists are rendered separately
    out = []
    for k, v in results.items():
        if isinstance(v, dict):
            out += _flat(v, f"{prefix}{k}.")
        elif not isinstance(v, list):
            out.append((prefix + k, v))
    return out


def _text(rec):
    lines = [f"{rec['command']} ({', '.join(f'{k}={v}' for k, v in rec['parameters'].items())})"]
    for key, v in _flat(rec["results"]):
        lines.append(f"  {key:<30} {_fmt(v, 9)}")
    for key, v in rec["results"].items():
        if isinstance(v, list) and v:
            lines.append(f"  {key}:")
            cols = list(v[0])
            lines.append("    " + "  ".join(f"{c:>16}" for c in cols))
            for row in v:
                lines.append("    " + "  ".join(f"{_fmt(row[c], 9):>16}" for c in cols))
    return "\n".join(lines) + "\n"


def render(rec, fmt):
    if fmt == "json":
        return json.dumps(_json_value(rec), indent=2) + "\n"
    if fmt == "csv":
        items = _flat(rec["results"])
        return _csv_text([k for k, _ in items], [[v for _, v in items]])
    return _text(rec)


def emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_range(text):
    """``a:b`` (inclusive) or a single integer."""
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected a:b")
    if hi < lo:
        raise UsageError(f"empty range {text!r}")
    return range(lo, hi + 1)


def conjugate_results(d):
    f_prob = cj.probabilistic_fidelity(d)
    f_det = cj.deterministic_fidelity(d)
    cert = cj.certify_deterministic(d)
    return {
        "f_prob": f_prob,
        "f_det": f_det,
        "delta_f": f_prob - f_det,
        "equal": bool(abs(f_prob - f_det) <= EQUAL_TOL),
        "success_prob": cj.probabilistic_success(d),
        "certificate": {
            "lambda1": cert.lambda1,
            "lambda2": cert.lambda2,
            "extremal_residual": cert.extremal_residual,
            "dual_min_eig": cert.dual_min_eig,
            "trace_K": cert.trace_K,
            "passed": cert.passed,
        },
        "spectrum": [{"label": e.label, "value": e.value, "multiplicity": e.multiplicity}
                     for e in cj.spectrum_RAinv(d)],
    }


def equatorial_results(n):
    f_prob = eq.probabilistic_fidelity_eq(n)
    f_det = eq.deterministic_fidelity_eq(n)
    return {
        "f_prob": f_prob,
        "f_det": f_det,
        "delta_f": f_prob - f_det,
        "equal": bool(abs(f_prob - f_det) <= EQUAL_TOL),
        "normalization": eq.povm_normalization_eq(n),
        "success_prob": eq.success_probability_eq(n),
    }


def sweep_rows(model, values):
    rows = []
    for p in values:
        if model == "conjugate":
            f_prob, f_det, succ = cj.probabilistic_fidelity(p), cj.deterministic_fidelity(p), cj.probabilistic_success(p)
        else:
            f_prob, f_det, succ = eq.probabilistic_fidelity_eq(p), eq.deterministic_fidelity_eq(p), eq.success_probability_eq(p)
        rows.append((p, f_prob, f_det, f_prob - f_det, succ))
    return rows


def _require(value, minimum, name):
    if value is None or value < minimum:
        raise UsageError(f"--{name} must be >= {minimum}")
    return value


def cmd_conjugate(args):
    d = _require(args.d, 2, "d")
    return record("conjugate", {"d": d}, conjugate_results(d), args.seed)


def cmd_equatorial(args):
    n = _require(args.n, 1, "n")
    return record("equatorial", {"n": n}, equatorial_results(n), args.seed)


def cmd_sweep(args):
    text = args.d if args.model == "conjugate" else args.n
    if text is None:
        raise UsageError(f"sweep {args.model} needs --{'d' if args.model == 'conjugate' else 'n'} a:b")
    values = parse_range(text)
    _require(values[0], 2 if args.model == "conjugate" else 1, "d" if args.model == "conjugate" else "n")
    rows = sweep_rows(args.model, values)
    if args.format == "csv" or args.format is None:
        return _csv_text(SWEEP_HEADER, rows)
    results = {"rows": [dict(zip(SWEEP_HEADER, r)) for r in rows]}
    return record("sweep", {"model": args.model, "range": text}, results, args.seed)


def cmd_simulate(args):
    if args.model == "conjugate":
        param = _require(args.d, 2, "d")
    else:
        param = _require(args.n, 1, "n")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    cfg = SimulationConfig(args.model, param, args.strategy, args.samples, args.seed,
                           method=args.method, workers=args.threads)
    rep = run_simulation(cfg)
    results = {
        "empirical_fidelity": rep.empirical_fidelity,
        "fidelity_error": rep.fidelity_error,
        "analytic_fidelity": rep.analytic_fidelity,
        "fidelity_sigmas": rep.fidelity_sigmas(),
        "empirical_success": rep.empirical_success,
        "success_error": rep.success_error,
        "analytic_success": rep.analytic_success,
        "success_sigmas": rep.success_sigmas(),
        "samples": rep.samples_used,
        "conclusive": rep.conclusive,
        "rejection_efficiency": rep.rejection_efficiency,
    }
    params = {"model": args.model, "param": param, "strategy": args.strategy,
              "samples": args.samples, "method": args.method}
    return record("simulate", params, results, args.seed)


def cmd_verify(args):
    opt = gates.Options(seed=args.seed, quick=args.quick, d_max=args.d_max, threads=args.threads)
    try:
        results = gates.run_gates(args.gate, opt, inject=args.inject_failure)
    except KeyError as exc:
        raise UsageError(exc.args[0])
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
    failed = [r.name for r in results if not r.passed]
    lines.append(f"FAILED: {', '.join(failed)}" if failed else "all gates passed")
    return "\n".join(lines) + "\n", 1 if failed else 0


def _default_seed():
    raw = os.environ.get("COVEST_SEED")
    try:
        return int(raw) if raw not in (None, "") else 0
    except ValueError:
        return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=_default_seed(),
                        help="RNG seed (default: $COVEST_SEED or 0)")
    common.add_argument("--format", choices=("text", "json", "csv"), default=None)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-o", "--output", default=None, help="write output to FILE")

    p = argparse.ArgumentParser(prog="covest", description="Optimal covariant state estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("conjugate", parents=[common], help="qudit plus conjugate copy")
    s.add_argument("--d", type=int, required=True)
    s.set_defaults(func=cmd_conjugate)

    s = sub.add_parser("equatorial", parents=[common], help="N copies of an equatorial qubit")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_equatorial)

    s = sub.add_parser("sweep", parents=[common], help="tabulate fidelities over a range")
    s.add_argument("model", choices=("conjugate", "equatorial"))
    s.add_argument("--d", help="range a:b for the conjugate model")
    s.add_argument("--n", help="range a:b for the equatorial model")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("simulate", parents=[common], help="Monte-Carlo measurement simulation")
    s.add_argument("model", choices=("conjugate", "equatorial"))
    s.add_argument("--d", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--strategy", choices=(PROBABILISTIC, DETERMINISTIC), default=PROBABILISTIC)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--method", choices=("auto", "rejection", "inverse_cdf"), default="auto")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", parents=[common], help="run the verification gates")
    s.add_argument("--quick", action="store_true", help="skip the 10^6-sample gates")
    s.add_argument("--gate", action="append", help="run only this gate (repeatable)")
    s.add_argument("--d-max", type=int, default=64)
    s.add_argument("--inject-failure", metavar="GATE", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("covest: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        out = args.func(args)
    except CertificateFailed as exc:
        print(f"covest: certificate failed ({exc.component}): {exc}", file=sys.stderr)
        return 3
    except (UsageError, CapExceeded) as exc:
        print(f"covest: error: {exc}", file=sys.stderr)
        return 2
    except CovestError as exc:
        print(f"covest: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # parameter validation inside the library
        print(f"covest: error: {exc}", file=sys.stderr)
        return 2
    code = 0
    if isinstance(out, tuple):
        out, code = out
    elif isinstance(out, dict):
        out = render(out, args.format or "text")
    emit(out, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
