"""Command line entry point: ``exosim run | sweep | check``.

Exit codes: 0 success, 1 config error, 2 simulation failure, 3 output error,
4 ``check`` found a violated invariant.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .checks import run_all
from .config import ConfigError, load_config, parse_config
from .experiment import OutputError, resolve_output_dir, run_experiment, sweep
from .metrics import DEFAULT_PAYLOADS, format_report
from .sim import ControllerMode, Scenario, SimulationError

EXIT_OK, EXIT_CONFIG, EXIT_SIM, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3, 4

log = logging.getLogger("exosim")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _mode_list(text: str) -> list[ControllerMode]:
    try:
        return [ControllerMode(v.strip().lower()) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"modes must be from unassisted,gc,agc; got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML scenario file (defaults used when omitted)")
    common.add_argument("--dt", type=float, help="integration step [s]")
    common.add_argument("--duration", type=float, help="simulated time [s]")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="exosim", description="GC / AGC elbow exosuit simulation"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="simulate a single scenario")
    p_run.add_argument("--out", help="output directory (default $EXOSIM_OUT or ./exosim_out)")
    p_run.add_argument("--payload", type=float, help="payload mass M [kg]")
    p_run.add_argument("--mode", choices=[m.value for m in ControllerMode])
    p_run.add_argument("--degrees", action="store_true", help="write angles in degrees")
    p_run.add_argument("--stem", default="run", help="file name stem for outputs")

    p_sweep = sub.add_parser("sweep", parents=[common], help="payload x mode grid")
    p_sweep.add_argument("--out", help="output directory (default $EXOSIM_OUT or ./exosim_out)")
    p_sweep.add_argument("--payloads", type=_float_list, default=list(DEFAULT_PAYLOADS))
    p_sweep.add_argument(
        "--modes", type=_mode_list, default=list(ControllerMode), help="e.g. unassisted,gc,agc"
    )
    p_sweep.add_argument("--degrees", action="store_true", help="write angles in degrees")

    p_check = sub.add_parser("check", parents=[common], help="run the invariant suite")
    p_check.add_argument("--payload", type=float, help="payload mass M [kg]")
    p_check.add_argument("--mode", choices=[m.value for m in ControllerMode])
    return parser


def _scenario(args) -> Scenario:
    if args.config:
        try:
            sc = load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
    else:
        sc = parse_config("")
    try:
        if getattr(args, "payload", None) is not None:
            sc = sc.with_payload(args.payload)
        if getattr(args, "mode", None):
            sc = sc.with_mode(ControllerMode(args.mode))
        if args.dt is not None:
            sc = replace(sc, dt=args.dt)
        if args.duration is not None:
            sc = replace(sc, duration=args.duration)
    except ValueError as exc:
        raise ConfigError(f"invalid command line override: {exc}") from exc
    return sc


def _cmd_run(args) -> int:
    sc = _scenario(args)
    bundle = run_experiment(sc, resolve_output_dir(args.out), degrees=args.degrees, stem=args.stem)
    print(bundle.summary_path.read_text(encoding="utf-8"), end="")
    print(f"wrote {bundle.csv_path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sc = _scenario(args)
    result = sweep(sc, args.payloads, args.modes, resolve_output_dir(args.out), degrees=args.degrees)
    print(format_report(result.rows))
    print(f"wrote {result.summary_path}")
    if result.partial:
        for (M, mode), msg in result.failures.items():
            print(f"FAILED M={M:g} kg {mode.value}: {msg}", file=sys.stderr)
        return EXIT_SIM
    return EXIT_OK


def _cmd_check(args) -> int:
    sc = _scenario(args)
    results = run_all(sc)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "check": _cmd_check}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
