"""Command-line entry point.

Commands
--------
``solve PROBLEM [OUTPUT]``
    Trajectory CSV/JSON: ``x`` for rfde/nfde, the birth rate and cumulative
    births for re-smooth, the cumulative births plus an atom ledger for re-bv.
``stability PROBLEM [OUTPUT]``
    Verdict JSON.
``fundamental PROBLEM [OUTPUT]``
    Fundamental solution (rfde) or resolvent kernel (re-smooth, re-bv; atoms
    of the resolvent measure are listed in a separate block).
``verify SUITE [--seed N]``
    Runs an invariant suite and prints one line per check.

Exit codes: 0 success, 1 failed verification, 2 invalid input (schema
violation, unknown suite, unsupported kind), 3 numerical failure.
"""

import argparse
import io
import json
import os
import sys

import numpy as np

from .problem import SchemaError, load_problem
from .resolvent import SingularAtZero

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def fmt(v):
    """Deterministic round-trip float formatting."""
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class Table:
    """Column table with an optional atom ledger (location + weights)."""

    def __init__(self, columns, rows, atom_columns=None, atoms=None):
        self.columns = list(columns)
        self.rows = np.asarray(rows, dtype=float)
        self.atom_columns = atom_columns
        self.atoms = None if atoms is None else np.asarray(atoms, dtype=float)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(fmt(v) for v in r) + "\n")
        if self.atom_columns is not None:
            buf.write("\n# atoms\n")
            buf.write(",".join(self.atom_columns) + "\n")
            for r in self.atoms:
                buf.write(",".join(fmt(v) for v in r) + "\n")
        return buf.getvalue()

    def to_json(self):
        d = {"columns": self.columns, "rows": self.rows.tolist()}
        if self.atom_columns is not None:
            d["atom_columns"] = self.atom_columns
            d["atoms"] = self.atoms.tolist()
        return json.dumps(d, sort_keys=True) + "\n"

    def render(self, form):
        return self.to_json() if form == "json" else self.to_csv()


def _names(prefix, n, m=None):
    if m is None:
        return [f"{prefix}_{i + 1}" for i in range(n)]
    return [f"{prefix}_{i + 1}_{j + 1}" for i in range(n) for j in range(m)]


def _stack(t, *blocks):
    N = len(t)
    return np.column_stack([t] + [np.asarray(b, dtype=float).reshape(N, -1) for b in blocks])


def _atom_rows(mu):
    k = len(mu.locs)
    return np.column_stack([mu.locs, np.asarray(mu.weights).reshape(k, -1)]) if k else np.zeros((0, 1 + int(np.prod(mu.dims))))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def solve_table(problem):
    """Trajectory table for a parsed problem."""
    from .measures import NBVFunction

    system = problem.system()
    n = problem.n
    t = system.grid.t
    if problem.kind == "rfde":
        from .rfde import forced_solve, solve_ivp

        if problem.forcing is not None:
            x = forced_solve(system, problem.history, problem.forcing)
        else:
            x = solve_ivp(system, problem.history)
        return Table(["t"] + _names("x", n), _stack(t, x.values))
    if problem.kind == "nfde":
        from .neutral import solve_nfde

        x = solve_nfde(system, problem.history)
        return Table(["t"] + _names("x", n), _stack(t, x.values))
    from .renewal import birth_cumulative_measure, birth_measure, birth_rate

    if problem.kind == "re-smooth":
        b = birth_rate(system, problem.state)
        B, _ = NBVFunction(birth_measure(system, problem.state)).values()
        return Table(["t"] + _names("b", n) + _names("B", n), _stack(t, b.values, B))
    beta = birth_cumulative_measure(system, problem.state)
    B, _ = NBVFunction(beta).values()
    return Table(["t"] + _names("B", n), _stack(t, B), ["t"] + _names("atom", n), _atom_rows(beta))


def fundamental_table(problem):
    """Fundamental solution (rfde) or resolvent kernel (renewal kinds)."""
    system = problem.system()
    n = problem.n
    t = system.grid.t
    if problem.kind == "rfde":
        from .rfde import fundamental_solution

        X = fundamental_solution(system)
        return Table(["t"] + _names("X", n, n), _stack(t, X.values))
    if problem.kind == "re-smooth":
        from .measures import GridFunction
        from .resolvent import resolvent_l1

        dL = system.dL()
        r = resolvent_l1(GridFunction(system.grid, dL.density, dL.density_left))
        return Table(["t"] + _names("r", n, n), _stack(t, r.values))
    if problem.kind == "re-bv":
        R = system.resolvent()
        return Table(["t"] + _names("r", n, n), _stack(t, R.density),
                     ["t"] + _names("R", n, n), _atom_rows(R))
    raise SchemaError("kind", "fundamental supports rfde, re-smooth and re-bv")


def stability_report(problem):
    """Verdict dictionary for a parsed problem."""
    from . import stability

    if problem.kind == "rfde":
        d = stability.rfde_stability_full(problem.zeta)
    elif problem.kind == "nfde":
        d = stability.nfde_stability_verdict(problem.eta, problem.zeta)
    else:
        d = stability.re_stability_verdict(problem.system().L)
    d = dict(d)
    d["kind"] = problem.kind
    return _jsonable(d)


def _write(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)


def cmd_solve(args):
    problem = load_problem(args.problem, T=args.T, h=args.h)
    _write(solve_table(problem).render(args.format), args.output)
    return EXIT_OK


def cmd_fundamental(args):
    problem = load_problem(args.problem, T=args.T, h=args.h)
    _write(fundamental_table(problem).render(args.format), args.output)
    return EXIT_OK


def cmd_stability(args):
    problem = load_problem(args.problem, T=args.T, h=args.h)
    report = stability_report(problem)
    _write(json.dumps(report, sort_keys=True, indent=2) + "\n", args.output)
    if not args.quiet:
        print(f"verdict: {report['verdict']}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    from .verify import SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {', '.join(SUITES)}, all",
              file=sys.stderr)
        return EXIT_INPUT
    lines = []
    ok = True
    total = 0
    for name in names:
        for check in run_suite(name, seed=args.seed):
            total += 1
            ok &= bool(check.passed)
            if not args.quiet or not check.passed:
                lines.append(check.line())
    failed = sum(1 for ln in lines if ln.startswith("FAIL"))
    lines.append(f"{total - failed}/{total} checks passed")
    text = "\n".join(lines) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        _write(text, args.output)
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--h", type=float, default=None, help="grid step (overrides the file)")
    common.add_argument("--T", type=float, default=None, help="horizon (overrides the file)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument("-o", "--output-file", dest="output_opt", default=None,
                        help="output path (alternative to the positional OUTPUT)")

    p = argparse.ArgumentParser(prog="renewalkit", description="Delay and renewal equation toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (
        ("solve", cmd_solve, "solve a problem file and write the trajectory"),
        ("stability", cmd_stability, "half-plane stability verdict as JSON"),
        ("fundamental", cmd_fundamental, "fundamental solution or resolvent kernel"),
    ):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("problem", help="problem JSON file")
        sp.add_argument("output", nargs="?", default=None, help="output path (default: stdout)")
        sp.set_defaults(func=fn)
    sp = sub.add_parser("verify", parents=[common], help="run invariant suites")
    sp.add_argument("suite", help="suite name or 'all'")
    sp.add_argument("--seed", type=int, default=42)
    sp.set_defaults(func=cmd_verify, output=None)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.output_opt is not None:
        args.output = args.output_opt
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream closed the pipe (e.g. ``| head``); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except SchemaError as exc:
        print(f"error: invalid problem: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularAtZero, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"error: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: invalid problem: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
