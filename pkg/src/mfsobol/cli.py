"""Command-line interface: one subcommand per campaign stage.

Examples
--------
    mfsobol pilot --config study.yaml --out runs/cca
    mfsobol allocate --config study.yaml --out runs/cca --budget 500 --qoi psys
    mfsobol run-mfmc --config study.yaml --out runs/cca --budget 500 1000
    mfsobol replicate --config study.yaml --out runs/cca --replicates 100 --jobs 4
    mfsobol report --out runs/cca
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .campaign import Campaign, load_config, with_overrides
from .campaign import report as rpt
from .errors import ConfigError, MfsobolError, StageOrderError

OUT_ENV = "MFSOBOL_OUT"
DEFAULT_OUT = "mfsobol-out"

EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_ORDER = 3


def _default_out() -> str:
    return os.environ.get(OUT_ENV, DEFAULT_OUT)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="campaign YAML file")
    common.add_argument("--out", default=None,
                        help=f"artifacts directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for model evaluations")
    common.add_argument("--phi", type=float, default=None, help="perturbation factor override")
    common.add_argument("--qoi", nargs="+", default=None, help="QoIs (P_sys/psys, PP/pp, dr_max/dr)")

    parser = argparse.ArgumentParser(prog="mfsobol", description="Multifidelity Sobol' sensitivity campaigns")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("pilot", parents=[common], help="evaluate every model on the pilot points")
    for name, helptext in (("allocate", "optimal allocation per QoI and budget"),
                           ("run-mfmc", "multifidelity estimates"),
                           ("run-mc", "single-fidelity estimates on the highest fidelity")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--budget", type=float, nargs="+", default=None, help="budgets (default: config)")
    p = sub.add_parser("run-pc", parents=[common], help="polynomial chaos estimates")
    p.add_argument("--order", type=int, default=None, help="total PC order (default: config)")
    p.add_argument("--samples", type=int, default=None, help="training runs (default: config)")
    p = sub.add_parser("replicate", parents=[common], help="replicate MC and MFMC estimators")
    p.add_argument("--budget", type=float, nargs="+", default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--method", choices=("both", "mc", "mfmc"), default="both")
    sub.add_parser("validate", parents=[common], help="cross-fidelity trace errors at mean inputs")
    sub.add_parser("report", parents=[common], help="render tables from persisted results")
    return parser


def _campaign(args) -> Campaign:
    if not args.config:
        raise ConfigError("--config", "a campaign config file is required")
    cfg = load_config(args.config)
    overrides = {"phi": args.phi, "qois": args.qoi}
    if getattr(args, "budget", None):
        overrides["budgets"] = list(args.budget)
    if getattr(args, "replicates", None) is not None:
        overrides["replicates"] = args.replicates
    if any(v is not None for v in overrides.values()):
        cfg = with_overrides(cfg, **overrides)
    return Campaign(cfg, args.out, args.jobs)


def _print(lines):
    if lines:
        print("\n".join(lines))


def run(args) -> int:
    args.out = args.out or _default_out()
    root = Path(args.out)
    cmd = args.command
    if cmd == "report":
        print(rpt.render_report(root), end="")
        return 0
    camp = _campaign(args)
    cfg = camp.cfg
    if cmd == "pilot":
        camp.run_pilot()
        _print(rpt.pilot_section(root))
    elif cmd == "allocate":
        camp.pilot()
        header, rows = camp.run_allocate()
        title = "Model allocations"
        body = [[r[0], f"{r[1]:g}", r[2], r[4], r[5], "-" if r[6] == "" else f"{r[6]:.4f}"] for r in rows]
        _print(rpt._table(title, ["qoi", "budget", "model", "m", "evals", "alpha"], body))
    elif cmd == "run-mfmc":
        camp.pilot()
        for p in cfg.budgets:
            camp.run_mfmc(p)
        _print(rpt.estimates_section(root)[0])
    elif cmd == "run-mc":
        for p in cfg.budgets:
            camp.run_mc(p)
        _print(rpt.estimates_section(root)[0])
    elif cmd == "run-pc":
        camp.run_pc(args.order, args.samples)
        _print(rpt.estimates_section(root)[0])
    elif cmd == "replicate":
        methods = ("mc", "mfmc") if args.method == "both" else (args.method,)
        if "mfmc" in methods:
            camp.pilot()
        camp.run_replicates(methods=methods)
        _print(rpt.replicate_section(root))
    elif cmd == "validate":
        camp.validate()
        _print(rpt.validation_section(root))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageOrderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORDER
    except MfsobolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
