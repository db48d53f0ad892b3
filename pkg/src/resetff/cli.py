"""Command line entry point: ``resetff run CONFIG | preset NAME | list-presets``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PRESETS, Experiment, expand_preset, parse_config
from .report import format_report, summarize, write_csv
from .sim import run

log = logging.getLogger("resetff")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3


def _apply_flags(cfg, args):
    if args.duration is not None:
        cfg.set("scenario", "duration", args.duration)
    if args.seed is not None:
        cfg.set("scenario", "seed", args.seed)
    if args.no_ff:
        cfg.set("scenario", "ff_enabled", False)
    return cfg


def run_experiment(exp: Experiment, out_dir) -> tuple[int, str]:
    """Run every scenario, write one CSV each plus ``report.txt``.

    Returns (exit code, report text).
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return EXIT_IO, ""
    logs, scenarios = {}, {}
    for cfg in exp.configs:
        sc = cfg.to_scenario()
        log.info("running %s (%s, %.1f s)", sc.name, sc.controller.value, sc.duration)
        logs[sc.name] = run(sc)
        scenarios[sc.name] = sc
    summaries = {
        name: summarize(name, lg, scenarios[name], logs.get(exp.baselines.get(name)))
        for name, lg in logs.items()
    }
    report = format_report(summaries)
    try:
        for name, lg in logs.items():
            write_csv(lg, out / f"{name}.csv")
        (out / "report.txt").write_text(report)
    except OSError as exc:
        log.error("cannot write results to %s: %s", out, exc)
        return EXIT_IO, report
    unexpected = [n for n, lg in logs.items() if lg.diverged and n not in exp.may_diverge]
    if unexpected:
        log.error("diverged: %s", ", ".join(unexpected))
        return EXIT_DIVERGED, report
    return EXIT_OK, report


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="resetff", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "preset"):
        sp = sub.add_parser(name)
        sp.add_argument("target", help="config file" if name == "run" else "preset name")
        sp.add_argument("--out-dir", default="out")
        sp.add_argument("--duration", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--no-ff", action="store_true")
        sp.add_argument("--config", help="base config for presets" if name == "preset" else argparse.SUPPRESS)
    sub.add_parser("list-presets")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "list-presets":
        print("\n".join(PRESETS))
        return EXIT_OK

    try:
        if args.command == "run":
            try:
                text = Path(args.target).read_text(encoding="utf-8")
            except OSError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_IO
            cfg = parse_config(text)
            if cfg.defaulted:
                print("notice: defaulted " + ", ".join(f"{s}.{k}" for s, k in cfg.defaulted), file=sys.stderr)
            exp = Experiment(cfg.name, [_apply_flags(cfg, args)])
        else:
            base = parse_config(Path(args.config).read_text(encoding="utf-8") if args.config else "")
            exp = expand_preset(args.target, _apply_flags(base, args))
            for c in exp.configs:
                _apply_flags(c, args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    code, report = run_experiment(exp, args.out_dir)
    sys.stdout.write(report)
    return code
