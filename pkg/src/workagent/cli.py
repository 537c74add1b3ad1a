"""Command-line entry point for the scenario runners.

Every subcommand reads a RunConfig file (JSON or TOML), writes a run
directory under --out, and exits 0 only when all invariant checks in the
manifest pass.
"""

import argparse
import json
import sys
from pathlib import Path

from . import scenarios
from .scenarios import ConfigError, RunConfig


def _add_common(sub):
    sub.add_argument("--config", required=True, help="RunConfig file (.json/.toml)")
    sub.add_argument("--out", default="runs", help="output root directory")
    sub.add_argument("--jobs", type=int, default=1, help="sweep-point worker count")
    sub.add_argument(
        "--checkpoints", type=int, default=None, help="override checkpoint count"
    )
    sub.add_argument(
        "--strict",
        action="store_true",
        help="treat any invariant warning as failure",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="workagent",
        description="Quantum work measurement with a finite-mass oscillator agent",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, desc in [
        ("design", "design diagram borders and a config report"),
        ("simulate", "autonomous run with channel tables and work distributions"),
        ("sweep-x0", "mean work vs sweep rate for several launch amplitudes"),
        ("sweep-omega", "mean-work comparison along a design-diagram path"),
        ("interference", "two-crossing interference scan"),
        ("fidelity", "fidelity series and spectral work reconstruction"),
        ("ideal-agent", "heavy-agent convergence check"),
    ]:
        sub = subs.add_parser(name, help=desc)
        _add_common(sub)
        if name == "sweep-x0":
            sub.add_argument(
                "--x0", type=float, nargs="+", required=True, help="X0 values"
            )
        if name == "sweep-omega":
            sub.add_argument(
                "--path",
                choices=["constant_dvbr", "constant_dvuc"],
                required=True,
            )
            sub.add_argument("--omega", type=float, nargs="+", required=True)
        if name == "interference":
            sub.add_argument("--omega", type=float, nargs="+", required=True)
            sub.add_argument(
                "--ell", type=float, nargs="*", default=[], help="quantum-agent ells"
            )
        if name == "ideal-agent":
            sub.add_argument(
                "--factors", type=float, nargs="+", default=[1, 4, 16]
            )
        if name == "design":
            sub.add_argument(
                "--goal",
                type=float,
                nargs=3,
                metavar=("W0", "V0", "DV0"),
                required=True,
            )
    return parser


def _load_config(args):
    config = RunConfig.from_file(args.config)
    if args.checkpoints is not None:
        config = config.replace(numerics={"checkpoints": args.checkpoints})
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "design":
            run_dir = scenarios.run_design(
                tuple(args.goal), config=config, out_dir=args.out
            )
        elif args.command == "simulate":
            run_dir = scenarios.run_simulate(config, out_dir=args.out)
        elif args.command == "sweep-x0":
            run_dir = scenarios.run_sweep_x0(
                config, args.x0, out_dir=args.out, jobs=args.jobs
            )
        elif args.command == "sweep-omega":
            run_dir = scenarios.run_sweep_omega(
                config, args.path, args.omega, out_dir=args.out, jobs=args.jobs
            )
        elif args.command == "interference":
            run_dir = scenarios.run_interference(
                config, args.omega, args.ell, out_dir=args.out, jobs=args.jobs
            )
        elif args.command == "fidelity":
            run_dir = scenarios.run_fidelity(config, out_dir=args.out)
        elif args.command == "ideal-agent":
            run_dir = scenarios.run_ideal_agent(
                config, args.factors, out_dir=args.out, jobs=args.jobs
            )
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:
        print(f"run failed: {err}", file=sys.stderr)
        return 1

    manifest_path = Path(run_dir) / "manifest.json"
    print(run_dir)
    if not manifest_path.exists():
        return 0
    manifest = json.loads(manifest_path.read_text())
    checks = manifest.get("invariants", {})
    failed = [k for k, v in checks.items() if not v.get("pass", True)]
    for k in failed:
        print(f"invariant failed: {k}: {checks[k].get('detail')}", file=sys.stderr)
    if failed:
        return 1
    if args.strict and manifest.get("status") not in (None, "ok"):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
