"""Command-line entry point.

Verbs:
  run               run an experiment config (baseline / coevolution / single match)
  replay            re-simulate a stored replay and print the outcome
  serve             start the session service (WebSocket + static client)
  describe-sensors  print the 68-entry sensor index table
  report            render figures from a run directory's CSV output

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _cmd_run(args: argparse.Namespace) -> int:
    from .experiment import run_experiment

    outdir = run_experiment(args.config, output_override=args.out)
    print(f"run complete: {outdir}")
    return EXIT_OK


def _cmd_replay(args: argparse.Namespace) -> int:
    from .replay import replay_file

    p_res, e_res, header = replay_file(args.file)
    print(f"replay {args.file}")
    print(f"  stage {header['stage_id']}  archetype {header['enemy_archetype_id']}"
          f"  seed {header['master_seed']}")
    if header.get("config_hash"):
        print(f"  config_hash {header['config_hash']}")
    winner = {"self": "player", "opponent": "enemy"}.get(p_res.winner, p_res.winner)
    print(f"  winner: {winner}")
    print(f"  player energy {p_res.self_energy:g}   enemy energy {e_res.self_energy:g}")
    print(f"  duration {p_res.duration} ticks")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    from .session import serve

    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"--listen must look like host:port, got {args.listen!r}")
    static_dir = Path(args.static) if args.static else None
    serve(host, int(port), static_dir=static_dir)
    return EXIT_OK


def _cmd_describe_sensors(args: argparse.Namespace) -> int:
    from .sensors import GROUP_SIZES, sensor_layout

    names = sensor_layout(args.perspective)
    print(f"# {len(names)} sensors ({args.perspective} perspective); "
          f"group sizes {GROUP_SIZES}")
    for i, name in enumerate(names):
        print(f"{i:3d}  {name}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    from .report import render_run_dir

    for path in render_run_dir(args.run_dir):
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoarena",
        description="deterministic duel simulator + neuroevolution toolkit",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config file")
    p_run.add_argument("config", help="path to the experiment YAML")
    p_run.add_argument("--out", help="output directory (overrides config/env)")
    p_run.set_defaults(fn=_cmd_run)

    p_replay = sub.add_parser("replay", help="re-simulate a stored replay")
    p_replay.add_argument("file", help="path to a .replay file")
    p_replay.set_defaults(fn=_cmd_replay)

    p_serve = sub.add_parser("serve", help="start the session service")
    p_serve.add_argument("--listen", default="127.0.0.1:8731",
                         help="host:port to listen on (default %(default)s)")
    p_serve.add_argument("--static", default="frontend/dist",
                         help="static web client directory (default %(default)s)")
    p_serve.set_defaults(fn=_cmd_serve)

    p_desc = sub.add_parser("describe-sensors", help="print the sensor table")
    p_desc.add_argument("--perspective", choices=("player", "enemy"),
                        default="player")
    p_desc.set_defaults(fn=_cmd_describe_sensors)

    p_report = sub.add_parser("report", help="render figures from run CSVs")
    p_report.add_argument("run_dir", help="run output directory")
    p_report.set_defaults(fn=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except ValueError as exc:
        # ConfigError / ReplayError / SessionError and friends all signal
        # bad input rather than a crashed run.
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logging.getLogger(__name__).debug("traceback", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
