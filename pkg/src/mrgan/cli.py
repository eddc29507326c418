"""Command line entry point: ``mrgan train|eval-gs|analyze|sweep|gen-data|presets``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, load, preset, preset_names
from .datasets import DataFormatError
from .runner import RunAborted, run_analyze, run_eval_gs, run_gen_data, run_sweep, run_train

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mrgan", description="Manifold-regularized GAN experiments.")
    p.add_argument("--version", action="version", version=f"mrgan {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--config", type=Path, help="JSON experiment config")
        sp.add_argument("--preset", help="named preset (see `mrgan presets`)")
        sp.add_argument("--seed", type=int, help="override training.seed")
        sp.add_argument("--out", type=Path, required=out_required, help="output directory")

    common(sub.add_parser("train", help="train one model and write a run directory"), out_required=True)

    ev = sub.add_parser("eval-gs", help="Geometry Score between two sample sources")
    ev.add_argument("real", type=Path, help="CSV, IDX or generator checkpoint (.json)")
    ev.add_argument("generated", type=Path, help="CSV, IDX or generator checkpoint (.json)")
    common(ev)

    an = sub.add_parser("analyze", help="stability, gap or equilibrium report")
    an.add_argument("mode", help="stability | gap | equilibrium")
    common(an)

    sw = sub.add_parser("sweep", help="grid over lambda x rho; a lambda=0 row is always added")
    sw.add_argument("--lambdas", type=_floats, required=True, help="e.g. 0.05,0.1,0.2")
    sw.add_argument("--rhos", type=_floats, required=True, help="e.g. 6.4")
    common(sw, out_required=True)

    gd = sub.add_parser("gen-data", help="write synthetic ring-mixture samples to CSV")
    gd.add_argument("output", type=Path)
    common(gd)

    sub.add_parser("presets", help="list preset names")
    return p


def resolve_config(args) -> tuple[ExperimentConfig, Path]:
    if args.config is not None and args.preset is not None:
        raise ConfigError("cli", "give --config or --preset, not both")
    if args.config is not None:
        cfg, base = load(args.config), args.config.resolve().parent
    elif args.preset is not None:
        cfg, base = preset(args.preset), Path.cwd()
    else:
        cfg, base = ExperimentConfig(), Path.cwd()
    if args.seed is not None:
        cfg = replace(cfg, training=replace(cfg.training, seed=args.seed))
    return cfg.validate(), base


def _print(obj) -> None:
    print(json.dumps(obj, indent=2))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:        # argparse usage errors count as validation errors
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    try:
        cfg, base = resolve_config(args)
        if args.command == "train":
            m = run_train(cfg, args.out, base)
            _print({"status": m["status"], "out": str(args.out), "evaluation": m.get("evaluation", {})})
        elif args.command == "eval-gs":
            rep = run_eval_gs(args.real, args.generated, cfg, args.out, args.seed)
            _print({"gs": rep["gs"], "repeats": rep["repeats"], "landmarks": rep["landmarks"]})
        elif args.command == "analyze":
            if args.mode not in ("stability", "gap", "equilibrium"):
                parser.print_usage(sys.stderr)
                print(f"mrgan: error: unknown analysis mode {args.mode!r}", file=sys.stderr)
                return EXIT_INVALID
            _print(run_analyze(args.mode, cfg, args.out, base))
        elif args.command == "sweep":
            sys.stdout.write(run_sweep(cfg, args.lambdas, args.rhos, args.out, base))
        elif args.command == "gen-data":
            print(run_gen_data(cfg, args.output))
    except (ConfigError, DataFormatError, FileNotFoundError, ValueError) as exc:
        print(f"mrgan: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RunAborted as exc:
        print(f"mrgan: run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
