"""Command line entry point: headless runs, seed sweeps, live serving.

Exit status: 0 success, 2 configuration error, 1 runtime error. The
WOSPP_LOG environment variable (error/warn/info/debug) sets verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError
from .engine import ConnectivityError
from .scenario import ScenarioError, execute, parse_scenario, sweep, write_sweep

log = logging.getLogger("wospp")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wospp",
        description="Ping-wave swarm simulator: run scenarios, sweep seeds, "
                    "or serve a steerable live run.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", required=True, help="scenario JSON path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--steps", type=int, default=None,
                       help="override the scenario horizon")
        p.add_argument("--trace-out", default=None, help="trace CSV path")
        p.add_argument("--metrics-out", default=None, help="metrics CSV path")

    run_p = sub.add_parser("run", help="execute one headless run")
    common(run_p)

    sweep_p = sub.add_parser("sweep", help="run consecutive seeds, aggregate")
    common(sweep_p)
    sweep_p.add_argument("--seeds", type=int, required=True,
                         help="number of consecutive seeds")

    serve_p = sub.add_parser("serve", help="serve a live steerable run")
    common(serve_p)
    serve_p.add_argument("--port", type=int, required=True)
    serve_p.add_argument("--rate", type=float, default=100.0,
                         help="simulation steps per second (0 = unthrottled)")
    return parser


def _load_scenario(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path!r}: {exc}") from exc
    return parse_scenario(text)


def main(argv=None) -> int:
    logging.basicConfig(
        level=_LOG_LEVELS.get(os.environ.get("WOSPP_LOG", "warn"),
                              logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        scenario = _load_scenario(args.scenario)
        if args.command == "run":
            execute(scenario, seed_override=args.seed,
                    steps_override=args.steps,
                    trace_path=args.trace_out, metrics_path=args.metrics_out)
        elif args.command == "sweep":
            if args.seeds < 1:
                raise ScenarioError("--seeds must be >= 1")
            if args.steps is not None:
                import dataclasses
                if scenario.schedule is not None:
                    raise ScenarioError("--steps cannot override a schedule")
                scenario = dataclasses.replace(scenario, horizon=args.steps)
            base = args.seed if args.seed is not None else scenario.sim.rng_seed
            aggregated = sweep(scenario, args.seeds, base_seed=base)
            out_path = args.metrics_out or scenario.metrics_path
            if out_path is None:
                raise ScenarioError(
                    "sweep needs --metrics-out or a 'metrics' path")
            with open(out_path, "w") as fh:
                write_sweep(aggregated, fh, scenario.sim, base, args.seeds)
        else:  # serve
            from .gateway import SteeringServer
            delay = 0.0 if args.rate <= 0 else 1.0 / args.rate
            server = SteeringServer(
                scenario, port=args.port, seed_override=args.seed,
                steps_override=args.steps, trace_path=args.trace_out,
                metrics_path=args.metrics_out, step_delay=delay)
            log.info("serving on port %d", args.port)
            server.serve_forever()
    except (ScenarioError, ConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConnectivityError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
