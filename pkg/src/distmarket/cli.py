"""Command-line entry point: ``distmarket {validate,solve,sweep,fixture,kkt}``.

Exit codes: 0 success, 1 input error, 2 infeasible hour, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import scenarios
from .clearing import InfeasibleHourError, SolverFailure, UnboundedHourError, build_hourly_lp, clear
from .io import (
    RunConfig,
    emit_results,
    emit_sweep,
    load_bids,
    load_inputs,
    load_network,
    read_solution,
    write_inputs,
    write_solution,
)
from .lp import LpSolution, Status, check_kkt
from .model import ValidationError, validate_network
from .settlement import settle

log = logging.getLogger("distmarket")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _add_inputs(p, required=True):
    p.add_argument("--network", type=Path, required=required)
    p.add_argument("--bids", type=Path)
    p.add_argument("--fixed", type=Path)
    p.add_argument("--tlmp", type=Path, required=required)
    p.add_argument("--assigned", type=Path)
    p.add_argument("--allow-negative-assigned", action="store_true")
    p.add_argument("--horizon", type=int, default=24, help="number of hourly steps in the series files")


def _add_run(p):
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.0, help="T-LMP scaling factor")
    p.add_argument("--no-lambda", action="store_true", help="drop the import-cost term")
    p.add_argument("--basis", choices=("actual", "assigned"), default="actual")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--max-iterations", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distmarket", description="Distribution market clearing and settlement")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check network and bid files")
    p.add_argument("--network", type=Path, required=True)
    p.add_argument("--bids", type=Path)

    p = sub.add_parser("solve", help="clear the market and settle")
    _add_inputs(p)
    _add_run(p)

    p = sub.add_parser("sweep", help="parameter sweep (defaults to the 13-bus fixture)")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--case", type=int, choices=(1, 2, 3))
    which.add_argument("--param", choices=("scale", "mu"))
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--fixture-config", type=Path)
    _add_inputs(p, required=False)
    _add_run(p)

    p = sub.add_parser("fixture", help="write the IEEE 13-bus input files")
    p.add_argument("--out", type=Path, default=Path("fixture"))
    p.add_argument("--config", type=Path)

    p = sub.add_parser("kkt", help="re-verify a saved solution")
    p.add_argument("--solution", type=Path, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    return parser


def _config(args) -> RunConfig:
    solver = {"max_iterations": args.max_iterations} if args.max_iterations else {}
    return RunConfig(
        network=args.network, bids=args.bids, tlmp=args.tlmp, fixed=args.fixed, assigned=args.assigned,
        mu=args.mu, tlmp_scale=args.scale, lambda_enabled=not args.no_lambda, basis=args.basis,
        out_dir=args.out, allow_negative_assigned=args.allow_negative_assigned, horizon=args.horizon, solver=solver,
    )


def cmd_validate(args) -> int:
    net = load_network(args.network)
    report = validate_network(net)
    bids = load_bids(args.bids) if args.bids else ()
    undeclared = sorted({b.bus for b in bids} - set(net.buses))
    for w in report.warnings:
        print(f"warning: {w}")
    if undeclared:
        print(f"error: {args.bids}: bids at undeclared buses {undeclared}")
        return EXIT_INPUT
    print(f"ok: {len(net.buses)} buses, {len(net.lines)} lines, {len(bids)} bids")
    return EXIT_OK


def cmd_solve(args) -> int:
    config = _config(args)
    inp = load_inputs(config)
    result = clear(inp, config.solver_options())
    report = settle(result, basis=config.basis)
    files = emit_results(result, report, config.out_dir)
    problems = [build_hourly_lp(inp, h.hour) for h in result.hours]
    files.append(write_solution(result, problems, [h.solution for h in result.hours], config.out_dir / "solution.json"))
    print(f"welfare {result.objective:.6f}  C_c {report.customer_total:.6f}  "
          f"C_u {report.utility_payment:.6f}  C_delta {report.surplus:.6f}")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.network:
        config = _config(args)
        inp = load_inputs(config)
        if not args.assigned:
            inp = replace(inp, assigned=scenarios.baseline_assignment(inp))
    else:
        inp = scenarios.ieee13_fixture(args.fixture_config)
        inp = replace(inp, mu=args.mu, tlmp_scale=args.scale, lambda_enabled=not args.no_lambda)
    values = tuple(args.values) if args.values else None
    if args.case == 1:
        sweep = scenarios.case1_sweep(inp, values or scenarios.CASE1_SCALES)
    elif args.case == 2:
        sweep = scenarios.case2_sweep(inp, values or scenarios.CASE2_MUS)
    elif args.case == 3:
        sweep = scenarios.case3_sweep(inp, values or scenarios.CASE3_SCALES, mu=args.mu if args.mu else 1.0)
    else:
        if not values:
            raise ValidationError("--param needs --values")
        param = "tlmp_scale" if args.param == "scale" else "mu"
        sweep = scenarios.run_sweep(scenarios.SweepSpec(param, values, inp, inp.lambda_enabled))
    path = emit_sweep(sweep, args.out)
    print(f"wrote {path} ({len(sweep.rows)} rows)")
    return EXIT_OK


def cmd_fixture(args) -> int:
    inp = scenarios.ieee13_fixture(args.config)
    files = write_inputs(inp, args.out, notes=scenarios.__doc__.strip())
    for f in files.values():
        print(f"wrote {f}")
    return EXIT_OK


def cmd_kkt(args) -> int:
    worst = 0.0
    for hour, problem, primal, duals in read_solution(args.solution):
        sol = LpSolution(Status.OPTIMAL, primal, float(problem.cost @ primal), duals, problem.cost.copy(), 0)
        r = check_kkt(problem, sol)
        scale = 1.0 + abs(sol.objective)
        ok = r.passed(args.tol, scale)
        worst = max(worst, r.primal_violation, r.dual_violation, r.complementarity, r.duality_gap / scale)
        print(f"hour {hour:2d} {'ok  ' if ok else 'FAIL'} primal {r.primal_violation:.3e} dual {r.dual_violation:.3e} "
              f"cs {r.complementarity:.3e} gap {r.duality_gap:.3e}")
    print(f"worst metric {worst:.3e} (tol {args.tol:g})")
    return EXIT_OK if worst <= args.tol else EXIT_SOLVER


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "sweep": cmd_sweep, "fixture": cmd_fixture, "kkt": cmd_kkt}


def run_cli(argv=None) -> int:
    level = os.environ.get("DISTMARKET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except InfeasibleHourError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UnboundedHourError, SolverFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValidationError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
