"""``cellgame`` command-line interface.

Exit codes: 0 success, 2 convergence failure, 3 invalid input.
"""

import argparse
import json
import os
import sys

from .. import __version__
from ..errors import ConvergenceError, DomainError, ScenarioParseError, ValidationError
from ..poa import SingleClassInstance, mass_grid
from . import fixtures
from .artifacts import ensure_dir
from .instances import KINDS, generate_random_instance
from .runner import (
    EXIT_CONVERGENCE,
    EXIT_OK,
    EXIT_VALIDATION,
    OUTPUT_ENV,
    _metadata,
    _sweep,
    default_output_dir,
    run_example,
    run_scenario,
)
from .scenario import parse_scenario


def _err(msg):
    print(f"cellgame: error: {msg}", file=sys.stderr)


def _cmd_run(args):
    try:
        scenario = parse_scenario(args.scenario, seed=args.seed)
    except (ScenarioParseError, ValidationError) as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    out = args.out or scenario.output_dir or default_output_dir()
    code = run_scenario(scenario, out, log=_err)
    print(f"wrote artifacts to {out} (exit {code})")
    return code


def _cmd_example(args):
    if not 1 <= args.k <= 7:
        _err("example must be between 1 and 7")
        return EXIT_VALIDATION
    out = ensure_dir(args.out or os.path.join(default_output_dir(), f"example{args.k}"))
    _metadata(out, {"experiment": "example", "example": args.k, "seed": args.seed}, args.seed, "example")
    try:
        summary, code = run_example(args.k, args.seed, out)
    except ConvergenceError as exc:
        _err(str(exc))
        return EXIT_CONVERGENCE
    print(json.dumps({k: v for k, v in summary.items() if not isinstance(v, dict)}, default=str, indent=2))
    print(f"wrote artifacts to {out} (exit {code})")
    return code


def _cmd_sweep(args):
    try:
        if args.gains:
            gains = args.gains
        elif args.lam is not None:
            if not 0.0 < args.lam <= 1.0:
                raise DomainError("lambda must lie in (0, 1]")
            gains = [1.0, args.lam]
        else:
            gains = generate_random_instance("single_class_poa", {"num_bs": args.random_bs}, args.seed)["gains"]
        inst = SingleClassInstance(gains, args.gamma, args.sigma2)
        grid = mass_grid(inst, args.points, args.max_mass)
    except (ValidationError, DomainError) as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    out = ensure_dir(args.out or os.path.join(default_output_dir(), "sweep"))
    params = {"gains": list(map(float, gains)), "gamma": args.gamma, "sigma2": args.sigma2,
              "points": args.points, "max_mass": args.max_mass}
    _metadata(out, {"experiment": "poa_sweep", "params": params, "seed": args.seed}, args.seed, "poa_sweep")
    summary = _sweep(inst, grid, out, "poa")
    print(f"max PoA {summary['max_poa']:.6f} at mass {summary['argmax_mass']:.6g}"
          f" (spill-over: {summary['at_spillover']}); bound {summary['anarchy_bound']:.6f}")
    print(f"wrote artifacts to {out}")
    return EXIT_OK


def _cmd_generate(args):
    dims = {"num_bs": args.num_bs}
    if args.kind == "discrete":
        dims["num_mobiles"] = args.num_mobiles
    elif args.kind == "nonatomic":
        dims["num_classes"] = args.num_classes
    try:
        payload = generate_random_instance(args.kind, dims, args.seed)
    except ValidationError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="cellgame",
        description="Association and power-control games for cellular uplinks.",
        epilog=f"Default output directory: ${OUTPUT_ENV}, else ./cellgame-output.",
    )
    p.add_argument("--version", action="version", version=f"cellgame {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario", help="path to a scenario JSON file")
    r.add_argument("--out", help="output directory")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.set_defaults(func=_cmd_run)

    e = sub.add_parser("example", help="run one of the named examples 1..7")
    e.add_argument("k", type=int)
    e.add_argument("--out", help="output directory")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=_cmd_example)

    s = sub.add_parser("sweep", help="price-of-anarchy sweep over the mass of a single class")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--gains", type=float, nargs="+", help="BS gains of the class")
    g.add_argument("--lambda", dest="lam", type=float, help="two BSs with gains (1, LAMBDA)")
    g.add_argument("--random-bs", type=int, default=5, help="draw this many uniform gains (default 5)")
    s.add_argument("--gamma", type=float, default=0.01)
    s.add_argument("--sigma2", type=float, default=1.0)
    s.add_argument("--points", type=int, default=400)
    s.add_argument("--max-mass", type=float)
    s.add_argument("--seed", type=int, default=fixtures.SWEEP_SEED)
    s.add_argument("--out", help="output directory")
    s.set_defaults(func=_cmd_sweep)

    q = sub.add_parser("generate", help="print a seeded random instance payload")
    q.add_argument("kind", choices=KINDS)
    q.add_argument("--num-bs", type=int, default=2)
    q.add_argument("--num-mobiles", type=int, default=4)
    q.add_argument("--num-classes", type=int, default=2)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", help="write to this file instead of stdout")
    q.set_defaults(func=_cmd_generate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
