"""Command-line entry point.

Subcommands:
  simulate          run a batch experiment from a JSON config
  generate-layouts  sample and filter random layouts
  replay            re-simulate a trace file and verify it byte-for-byte
  serve             host the live play service

Exit codes: 0 success, 2 configuration error, 3 simulation error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, SimulationError


def _cmd_simulate(args: argparse.Namespace) -> int:
    from .harness import BatchConfig, run_batch

    config = BatchConfig.from_file(args.config)
    summary = run_batch(config)
    print(json.dumps(summary, indent=2))
    print(f"wrote {config.out_dir}/trials.csv and {config.out_dir}/aggregate.csv")
    return 0


def _cmd_generate_layouts(args: argparse.Namespace) -> int:
    from .layoutgen import generate_filtered

    candidates = generate_filtered(
        count=args.count,
        seed=args.seed,
        out_dir=args.out,
        n_one=args.n_one,
        m_joint=args.m_joint,
        rollouts=args.rollouts,
    )
    kept = sum(1 for c in candidates if c.accepted)
    print(f"scored {len(candidates)} candidates, accepted {kept} "
          f"({kept / len(candidates):.3f}); layouts and manifest.csv in {args.out}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    from .harness import replay_trace

    ok, record = replay_trace(args.trace)
    if ok:
        print(f"replay OK: {len(record.ticks)} ticks, "
              f"completion_time={record.completion_time}")
        return 0
    print("replay MISMATCH: re-simulation differs from the stored trace",
          file=sys.stderr)
    return 3


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(layouts_dir=args.layouts, records_dir=args.records)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collabsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a batch experiment")
    p.add_argument("--config", required=True, help="JSON batch config file")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("generate-layouts", help="sample and filter layouts")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-one", type=int, default=3, help="one-agent tasks per layout")
    p.add_argument("--m-joint", type=int, default=2, help="joint tasks per layout")
    p.add_argument("--rollouts", type=int, default=200)
    p.set_defaults(func=_cmd_generate_layouts)

    p = sub.add_parser("replay", help="re-simulate and verify a trace")
    p.add_argument("--trace", required=True, help="trace .jsonl file")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("serve", help="host the live play service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--layouts", required=True, help="directory of layout JSON files")
    p.add_argument("--records", default="session_records",
                   help="directory for persisted session records")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
