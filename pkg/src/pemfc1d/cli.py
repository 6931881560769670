"""Command-line interface.

    pemfc1d run SCENARIO          transient or steady run (per run.kind)
    pemfc1d sweep SCENARIO        polarization sweep
    pemfc1d fit SCENARIO          parameter calibration
    pemfc1d props-table NAME --from A --to B --points N
    pemfc1d validate SCENARIO     parse and check only

Exit codes: 0 success, 2 validation error, 3 infeasible operating point,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .cell_model import ConfigurationError
from .polarization import VoltageError
from .properties import DomainError
from .scenario_io import (PROPS_RANGES, PROPS_TABLES, PropsTable, RunResult, Scenario,
                          ScenarioError, default_output_dir, format_resolved, parse_scenario,
                          props_table, run_scenario, write_results)
from .solver import InfeasibleOperatingPoint, NumericalFailure
from .transport import StateError

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("pemfc1d")

COMMAND_KINDS = {"run": ("transient", "steady"), "sweep": ("sweep",), "fit": ("fit",)}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pemfc1d",
                                description="Dynamic 1D two-phase PEM fuel cell model")
    p.add_argument("--out", metavar="DIR", help="output directory (default: output.dir in "
                   "the scenario, else $PEMFC1D_OUTPUT_ROOT/<scenario name>)")
    p.add_argument("--quiet", action="store_true", help="print errors only")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "transient or steady run"), ("sweep", "polarization sweep"),
                       ("fit", "calibrate kinetic parameters"),
                       ("validate", "check a scenario without running it")):
        s = sub.add_parser(name, help=text)
        s.add_argument("scenario", type=Path)
    t = sub.add_parser("props-table", help="tabulate a property correlation")
    t.add_argument("name", choices=PROPS_TABLES)
    t.add_argument("--from", dest="start", type=float, default=None)
    t.add_argument("--to", dest="stop", type=float, default=None)
    t.add_argument("--points", type=int, default=51)
    t.add_argument("--T", dest="T", type=float, default=353.15, help="temperature, K")
    return p


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _summary(res: RunResult) -> str:
    if res.rows is not None:
        ok = [r for r in res.rows if r.feasible]
        lines = [f"{len(ok)}/{len(res.rows)} feasible points"]
        for r in res.rows:
            u = f"{r.U_cell:.6f} V" if r.feasible else "infeasible"
            lines.append(f"  i = {r.i_fc:10.4g} A/m2   U = {u}")
        return "\n".join(lines)
    if res.transient is not None:
        tr = res.transient
        w, thr = tr.ledger.closure("water")
        return (f"{tr.n_steps} steps ({tr.n_rejected} rejected), final U = "
                f"{tr.reports[-1].U_cell:.6f} V, water closure {abs(w) / max(thr, 1e-300):.2e}")
    if res.fit is not None:
        f = res.fit
        pars = ", ".join(f"{k} = {v:.6g}" for k, v in f.params.items())
        return f"fit: {pars}; rms {f.rms:.4g} V ({f.message})"
    return ""


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "props-table":
            lo, hi = PROPS_RANGES[args.name]
            start = lo if args.start is None else args.start
            stop = hi if args.stop is None else args.stop
            table = props_table(args.name, start, stop, args.points, args.T)
            scn = Scenario(cell=None, mesh={}, solver=None,
                           run=PropsTable(args.name, start, stop, args.points, args.T))
            scn.resolved = {"props.name": args.name, "props.from": start, "props.to": stop,
                            "props.points": args.points, "props.T": args.T}
            out = Path(args.out) if args.out else default_output_dir(scn)
            files = write_results(RunResult(scn, table=table), out)
            _say(args, f"wrote {files[-1]}")
            return EXIT_OK
        scn = parse_scenario(args.scenario)
        if args.command == "validate":
            _say(args, format_resolved(scn.resolved).rstrip())
            return EXIT_OK
        if scn.kind not in COMMAND_KINDS[args.command]:
            raise ScenarioError(f"run.kind = {scn.kind} cannot be used with "
                                f"'{args.command}' (expected {' or '.join(COMMAND_KINDS[args.command])})")
        res = run_scenario(scn)
        out = default_output_dir(scn, args.out)
        files = write_results(res, out)
        _say(args, _summary(res))
        _say(args, f"wrote {len(files)} files to {out}")
        return EXIT_OK
    except (ScenarioError, ConfigurationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InfeasibleOperatingPoint, DomainError) as exc:
        print(f"infeasible operating point: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalFailure, StateError, VoltageError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
