"""Command-line entry point.

    llmbandit run --config exp.cfg [--policy NAME]... [--seed N] [--out DIR]
                  [--log-messages] [--replay LOG]
    llmbandit presets list

Exit codes: 0 success, 2 configuration error, 3 enumeration size guard,
4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from ._validation import ConfigError
from .config import build_environment, load_config
from .env import PRESETS
from .metrics import write_csv
from .oracle import SizeGuardError
from .runner import replay, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIZE_GUARD = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llmbandit", description="Budgeted multi-LLM selection simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver fallbacks and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("--config", required=True, help="key=value experiment file")
    run.add_argument("--policy", action="append", help="policy key; repeat to compare (overrides config)")
    run.add_argument("--seed", type=int, help="base seed; replication i uses seed+i")
    run.add_argument("--out", help="output directory")
    run.add_argument("--log-messages", action="store_true", help="write the local/cloud message log")
    run.add_argument("--replay", metavar="LOG", help="rebuild the run CSV from a message log instead of simulating")

    presets = sub.add_parser("presets", help="named instances")
    presets.add_argument("action", choices=["list"])
    return parser


def _run(args) -> int:
    cfg = load_config(args.config)
    if args.policy:
        cfg.policies = args.policy
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out = args.out
    if args.log_messages:
        cfg.log_messages = True
    cfg.validate()

    if args.replay:
        if len(cfg.policies) != 1:
            raise ConfigError("replay needs exactly one policy (set --policy)")
        env = build_environment(cfg)
        with open(args.replay, encoding="utf-8") as fh:
            records = replay(fh.readlines(), env, cfg.policies[0])
        os.makedirs(cfg.out, exist_ok=True)
        base = os.path.basename(args.replay)
        stem = base[: -len(".messages.jsonl")] if base.endswith(".messages.jsonl") else base
        path = os.path.join(cfg.out, f"{stem}.replay.csv")
        write_csv(path, records)
        print(path)
        return EXIT_OK

    results = run_experiment(cfg)
    for policy, runs in results.items():
        final = [r.records[-1] for r in runs]
        n = len(final)
        print(
            f"{policy}: T={cfg.T} reps={n} "
            f"regret={sum(r.cum_regret_budgeted for r in final) / n:.4g} "
            f"violation={sum(r.violation for r in final) / n:.4g} "
            f"wall={sum(r.wall_clock for r in runs):.2f}s"
        )
    print(f"outputs in {cfg.out}")
    return EXIT_OK


def _presets() -> int:
    for p in PRESETS.values():
        print(f"{p.name:18s} K={p.K:<3d} N={p.N:<2d} model={p.model.value} dist={p.reward_dist.value}  {p.description}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "presets":
            return _presets()
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_SIZE_GUARD
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
