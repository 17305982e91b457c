"""
Subcommands of the command-line front end.

Every command reads a problem (or network) config, writes its artifacts to
--out-dir and finishes with a run manifest. `run` maps failures to exit
codes: 2 validation, 3 numerical, 4 I/O, 64 usage, 1 anything else.
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml

from ..hjb import OrthantGrid, default_grid, extract_policy, solve_hjb
from ..model import (
    NumericalError,
    ProblemConfig,
    ProblemSpec,
    validate_problem,
)
from ..montecarlo import (
    default_grid as default_time_grid,
    discounted_cost,
    estimates_frame,
    evaluate_policies,
    parse_policy,
    simulate,
    vertex_policies,
)
from ..queueing import NetworkSpec, compare_to_diffusion, simulate_network
from ..testfn import build_body, sign_table, sphere_points, verify_sign_conditions
from ..util.export import write_csv, write_json
from .manifest import RunManifest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
EXIT_USAGE = 64

SIGN_TABLE_ROWS = 200


class ValidationFailed(Exception):
    """A validation-style check reported failure"""


class CommandResult:
    """Outputs, seeds and config payloads a command hands back for its manifest"""

    def __init__(self, outputs: List[Path], seeds: Optional[Dict[str, int]] = None, configs: Sequence[dict] = (), settings=None):
        self.outputs = [str(p) for p in outputs]
        self.seeds = seeds or {}
        self.configs = list(configs)
        self.settings = settings or {}


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser exiting with 64 on bad usage"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _vector_list(text: str) -> List[np.ndarray]:
    return [_vector(part) for part in text.split(";") if part.strip()]


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_problem(path: str):
    config = ProblemConfig.from_yaml(path)
    return config, ProblemSpec.from_config(config)


def _time_grid(spec, args):
    return default_time_grid(spec, dt=args.dt, horizon=args.horizon)


# Commands


def cmd_validate(args) -> CommandResult:
    config, spec = _load_problem(args.config)
    report = validate_problem(spec, sample_count=args.samples, seed=args.seed)
    out = write_json(report.to_dict(), args.out_dir / "validation.json")
    logger.info(f"[CLI] Validation of {spec.name or args.config}:\n{report}")
    result = CommandResult([out], {"seed": args.seed}, [config.to_dict()])
    if not report.usable:
        raise ValidationFailed(f"problem is not usable: {', '.join(c.name for c in report.failures())}", result)
    return result


def cmd_simulate(args) -> CommandResult:
    config, spec = _load_problem(args.config)
    grid = _time_grid(spec, args)
    policy = parse_policy(args.policy, spec)
    pair, control = simulate(spec, args.x0, policy, grid, args.seed)
    cost = discounted_cost(pair, control, spec)
    logger.info(f"[CLI] Simulated {grid.n_steps} steps under {policy.name}; discounted cost {cost:.6g}")
    out = write_csv(pair.to_frame(), args.out_dir / args.out)
    return CommandResult([out], {"seed": args.seed}, [config.to_dict()], {"policy": policy.name, "dt": grid.dt, "horizon": grid.horizon})


def cmd_value_mc(args) -> CommandResult:
    config, spec = _load_problem(args.config)
    grid = _time_grid(spec, args)
    policies = [parse_policy(p, spec) for p in args.policy] if args.policy else vertex_policies(spec)
    estimates = evaluate_policies(spec, args.x0, policies, args.paths, grid, args.seed)
    best = int(np.argmin([e.mean for e in estimates]))
    out_json = write_json({"x0": args.x0.tolist(), "best": estimates[best].to_dict()}, args.out_dir / "value_mc.json")
    out_csv = write_csv(estimates_frame(estimates), args.out_dir / "value_mc_policies.csv")
    return CommandResult([out_json, out_csv], {"seed": args.seed}, [config.to_dict()], {"paths": args.paths, "dt": grid.dt, "horizon": grid.horizon})


def _hjb_grid(spec, args):
    if args.L is None and args.h is None:
        return default_grid(spec)
    if args.L is None:
        # snap the default edge onto the requested mesh
        cells = max(2, int(np.ceil(default_grid(spec).L / args.h)))
        return OrthantGrid(spec.d, cells * args.h, args.h)
    h = args.h if args.h is not None else args.L / 200
    return OrthantGrid(spec.d, args.L, h)


def cmd_solve_hjb(args) -> CommandResult:
    config, spec = _load_problem(args.config)
    field = solve_hjb(spec, _hjb_grid(spec, args), tol=args.tol, method=args.method)
    out_csv = write_csv(field.to_frame(), args.out_dir / "value_field.csv")
    out_json = write_json(field.metadata(), args.out_dir / "value_field.json")
    return CommandResult([out_csv, out_json], {}, [config.to_dict()], {"method": args.method, "tol": args.tol})


def cmd_testfn(args) -> CommandResult:
    config, spec = _load_problem(args.config)
    if np.any(spec.boundary_cost):
        logger.warning("[CLI] The sign conditions assume a zero boundary cost; c is ignored")
    body = build_body(spec.d, spec.alpha, delta=args.delta, epsilon=args.epsilon, spread=args.spread, seed=args.seed)
    report = verify_sign_conditions(body, args.samples, seed=args.seed, tol=args.tol)
    out_report = write_json({"body": body.to_dict(), "report": report.to_dict()}, args.out_dir / "sign_report.json")
    table = sign_table(body, sphere_points(spec.d, SIGN_TABLE_ROWS, args.seed))
    out_table = write_csv(table, args.out_dir / "sign_table.csv")
    result = CommandResult([out_report, out_table], {"seed": args.seed}, [config.to_dict()])
    if not report.passed:
        raise ValidationFailed("sign conditions violated", result)
    return result


def cmd_compare(args) -> CommandResult:
    config, spec = _load_problem(args.config)
    field = solve_hjb(spec, _hjb_grid(spec, args), tol=args.tol)
    policies = vertex_policies(spec) + [extract_policy(field, spec)]
    grid = _time_grid(spec, args)
    rows = []
    for x0 in args.x0_list:
        x0 = spec.check_state(x0)
        estimates = evaluate_policies(spec, x0, policies, args.paths, grid, args.seed)
        best = min(estimates, key=lambda e: e.mean)
        v_pde = field.value_at(x0)
        row = {f"x0_{k + 1}": float(x0[k]) for k in range(spec.d)}
        row.update(
            {
                "v_pde": v_pde,
                "v_mc": best.mean,
                "se_mc": best.std_error,
                "policy": best.policy,
                "difference": abs(v_pde - best.mean),
            }
        )
        rows.append(row)
        logger.info(f"[CLI] x0={x0.tolist()}: V_pde={v_pde:.6g}, V_mc={best.mean:.6g} +/- {best.std_error:.3g}")
    out = write_csv(pd.DataFrame(rows), args.out_dir / "compare.csv")
    return CommandResult([out], {"seed": args.seed}, [config.to_dict()], {"paths": args.paths, "dt": grid.dt, "h": field.grid.h, "L": field.grid.L})


def cmd_queue(args) -> CommandResult:
    net = NetworkSpec.from_yaml(args.netconfig)
    if args.n is not None:
        net = net.with_scaling(args.n)
    path = simulate_network(net, args.rule, args.T, args.seed, x0=args.x0)
    out = write_csv(path.to_frame(), args.out_dir / "scaled_path.csv")
    logger.info(f"[CLI] {path.events} events at n={net.scaling_n}")
    return CommandResult([out], {"seed": args.seed}, [net.to_dict()], {"rule": args.rule, "n": net.scaling_n, "T": args.T})


def cmd_queue_compare(args) -> CommandResult:
    net = NetworkSpec.from_yaml(args.netconfig)
    configs = [net.to_dict()]
    spec = None
    if args.config is not None:
        config, spec = _load_problem(args.config)
        configs.append(config.to_dict())
    report = compare_to_diffusion(
        net, args.rule, spec=spec, n_list=args.n_list, n_paths=args.paths, seed=args.seed, T=args.T, x0=args.x0, dt=args.dt
    )
    out_csv = write_csv(report.to_frame(), args.out_dir / "comparison.csv")
    out_json = write_json(report.to_dict(), args.out_dir / "comparison.json")
    return CommandResult([out_csv, out_json], {"seed": args.seed}, configs, {"rule": args.rule, "paths": args.paths})


def _add_mc_options(parser, paths: Optional[int] = None):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--dt", type=float, default=1e-3, help="Time step")
    parser.add_argument("--horizon", type=float, default=None, help="Horizon (default 12 / beta)")
    if paths is not None:
        parser.add_argument("--paths", type=int, default=paths)


def _add_grid_options(parser):
    parser.add_argument("--L", type=float, default=None, help="Truncation edge")
    parser.add_argument("--h", type=float, default=None, help="Mesh width")
    parser.add_argument("--tol", type=float, default=1e-8)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="orthant-hjb", description="Controlled reflection in the orthant: simulation, PDE and checks")
    parser.add_argument("--out-dir", type=Path, default=Path("out"), help="Directory for artifacts")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    p = sub.add_parser("validate", help="Check the standing assumptions of a problem")
    p.add_argument("config")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("simulate", help="Simulate one reflected path to CSV")
    p.add_argument("config")
    p.add_argument("--x0", type=_vector, required=True)
    p.add_argument("--policy", default="vertex:0", help="vertex:<k> or callback:<id>")
    p.add_argument("--out", default="path.csv")
    _add_mc_options(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("value-mc", help="Monte Carlo value estimate over a policy family")
    p.add_argument("config")
    p.add_argument("--x0", type=_vector, required=True)
    p.add_argument("--policy", action="append", help="Repeatable; default all vertex policies")
    _add_mc_options(p, paths=10_000)
    p.set_defaults(handler=cmd_value_mc)

    p = sub.add_parser("solve-hjb", help="Finite-difference value function")
    p.add_argument("config")
    _add_grid_options(p)
    p.add_argument("--method", choices=["howard", "sweep"], default="howard")
    p.set_defaults(handler=cmd_solve_hjb)

    p = sub.add_parser("testfn", help="Build the test function and check its sign conditions")
    p.add_argument("config")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--spread", type=float, default=0.9)
    p.add_argument("--samples", type=int, default=1000, help="Points per radius")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(handler=cmd_testfn)

    p = sub.add_parser("compare", help="PDE value against Monte Carlo at given states")
    p.add_argument("config")
    p.add_argument("--x0-list", dest="x0_list", type=_vector_list, required=True, help="e.g. '0;1.5' or '0,0;1,0'")
    _add_grid_options(p)
    _add_mc_options(p, paths=10_000)
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("queue", help="Simulate the queueing network under diffusion scaling")
    p.add_argument("netconfig")
    p.add_argument("--n", type=int, default=None, help="Scaling parameter (default from the config)")
    p.add_argument("--rule", choices=["none", "longest_queue", "priority"], default="longest_queue")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--x0", type=_vector, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_queue)

    p = sub.add_parser("queue-compare", help="Compare the network with its diffusion limit")
    p.add_argument("netconfig")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--rule", choices=["none", "longest_queue", "priority"], default="longest_queue")
    p.add_argument("--n-list", dest="n_list", type=_int_list, default=[100, 1000, 10000])
    p.add_argument("--paths", type=int, default=200)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--x0", type=_vector, default=None)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_queue_compare)

    return parser


def _finish(args, argv, result: CommandResult, started: float) -> None:
    manifest = RunManifest(
        command=args.command,
        argv=list(argv),
        config_hash=RunManifest.hash_configs(*result.configs),
        seeds=result.seeds,
        wall_time=time.perf_counter() - started,
        outputs=result.outputs,
        settings=result.settings,
    )
    manifest.write(args.out_dir)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run the subcommand and return the exit code

    Exit codes: 0 success, 2 validation failure, 3 numerical failure,
    4 I/O error, 64 bad usage, 1 anything unexpected.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    args.out_dir = Path(args.out_dir)
    handler: Callable = args.handler
    started = time.perf_counter()

    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        result = handler(args)
        _finish(args, argv, result, started)
        return EXIT_OK
    except ValidationFailed as exc:
        message, result = exc.args
        _finish(args, argv, result, started)
        logger.error(f"[CLI] {message}")
        return EXIT_VALIDATION
    except ValueError as exc:
        # pydantic ValidationError and the toolkit input errors are ValueErrors
        logger.error(f"[CLI] Invalid input: {exc}")
        return EXIT_VALIDATION
    except NumericalError as exc:
        logger.error(f"[CLI] Numerical failure: {exc}")
        return EXIT_NUMERICAL
    except (OSError, yaml.YAMLError) as exc:
        logger.error(f"[CLI] I/O error: {exc}")
        return EXIT_IO
    except Exception as exc:
        logger.error(f"[CLI] Unexpected failure: {exc}", exc_info=True)
        return EXIT_FAILURE
