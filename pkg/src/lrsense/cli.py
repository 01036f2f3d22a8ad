"""Command-line entry point.

Exit codes: 0 success, 1 check violations, 2 configuration or input
errors, 3 divergence.
"""

import argparse
import json
import math
import sys

from . import __version__
from .errors import ConfigError
from .harness import (apply_overrides, build_problem, load_check_suite, load_config,
                      run_check, run_comparison, run_experiment)
from .sensing import estimate_rip

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _emit(record):
    print(json.dumps(_json_safe(record), sort_keys=True))


def _dims(text):
    try:
        n1, n2, r = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected n1,n2,r") from None
    return n1, n2, r


def _cmd_run(args):
    cfg = load_config(args.config, args.set)
    res = run_experiment(cfg)
    if cfg.output.emit_summary:
        _emit(res.summary)
    return EXIT_DIVERGED if res.summary["diverged"] else EXIT_OK


def _cmd_compare(args):
    a = load_config(args.config_a, args.set)
    b = load_config(args.config_b, args.set)
    summary, _, _ = run_comparison(a, b, threshold=args.threshold, compare_csv=args.csv)
    _emit(summary)
    return EXIT_DIVERGED if summary["a"]["diverged"] or summary["b"]["diverged"] else EXIT_OK


def _cmd_check(args):
    from .checks import CHECKS

    if args.config:
        suite = load_check_suite(args.config, args.set)["checks"]
    else:
        suite = {}
    names = list(CHECKS) if args.name == "all" else [args.name]
    if args.name != "all" and args.name not in CHECKS:
        raise ConfigError(f"unknown check {args.name!r}; choose from {sorted(CHECKS)} or 'all'")
    failed = False
    for name in names:
        params = dict(suite.get(name, {}))
        if args.instances is not None:
            params["instances"] = args.instances
        if args.seed is not None:
            params["seed"] = args.seed
        if args.dims is not None:
            params["n1"], params["n2"], params["r"] = args.dims
        if name == "rip-inner-product" and (args.m is not None or args.op_seed is not None):
            op = dict(params.get("operator", {"kind": "gaussian", "m": 6000, "op_seed": 1}))
            if args.m is not None:
                op["m"] = args.m
            if args.op_seed is not None:
                op["op_seed"] = args.op_seed
            params["operator"] = op
        if not args.config and args.set:
            params = apply_overrides(params, args.set)
        rep = run_check(name, params)
        _emit(rep.to_dict())
        failed |= not rep.passed
    return EXIT_VIOLATION if failed else EXIT_OK


def _cmd_rip_probe(args):
    cfg = load_config(args.config, args.set)
    _, op, _ = build_problem(cfg)
    rank = args.rank if args.rank is not None else min(2 * cfg.instance.r, op.n1, op.n2)
    delta = estimate_rip(op, rank, args.trials, args.seed)
    _emit({"operator": cfg.operator.kind, "m": op.m, "rank": rank,
           "trials": args.trials, "seed": args.seed, "delta_hat": delta})
    return EXIT_OK


def _cmd_version(args):
    print(__version__)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="lrsense", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_set(sp):
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field by dotted path, e.g. solver.eta=0.25")
        return sp

    sp = with_set(sub.add_parser("run", help="run one experiment"))
    sp.add_argument("config")
    sp.set_defaults(func=_cmd_run)

    sp = with_set(sub.add_parser("compare", help="run two solver configs on one problem"))
    sp.add_argument("config_a")
    sp.add_argument("config_b")
    sp.add_argument("--csv", default=None, help="write per-iteration errors and ratio here")
    sp.add_argument("--threshold", type=float, default=1e-6)
    sp.set_defaults(func=_cmd_compare)

    sp = with_set(sub.add_parser("check", help="run a randomized inequality check"))
    sp.add_argument("name", help="check name or 'all'")
    sp.add_argument("--instances", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--dims", type=_dims, help="n1,n2,r")
    sp.add_argument("--m", type=int, help="measurements for rip-inner-product")
    sp.add_argument("--op-seed", type=int, help="operator seed for rip-inner-product")
    sp.add_argument("--config", help="check-suite JSON with per-check parameters")
    sp.set_defaults(func=_cmd_check)

    sp = with_set(sub.add_parser("rip-probe", help="estimate the RIP constant of a config's operator"))
    sp.add_argument("config")
    sp.add_argument("--rank", type=int)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_rip_probe)

    sp = sub.add_parser("version", help="print the package version")
    sp.set_defaults(func=_cmd_version)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"lrsense: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
