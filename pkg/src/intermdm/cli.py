"""Command-line entry point: ``intermdm {generate,run,crossmodal,inspect}``.

Exit codes: 0 success, 1 usage error, 2 invalid configuration or input
file, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .model import GameState
from .synthdata import DatasetFormatError, generate_synthetic, save_dataset

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="intermdm", description="Two-agent naming-game experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", type=Path,
                       help="experiment config JSON (or a results bundle to replay)")
        p.add_argument("--seed", type=_seed, help="override the experiment seed")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        p.add_argument("--format", choices=("csv", "json"),
                       help="trace/prediction format (default: write both)")

    p = sub.add_parser("generate", help="write a synthetic dataset JSON file")
    p.add_argument("--config", type=Path, help="config whose data section is used")
    p.add_argument("--seed", type=_seed, help="generator seed")
    p.add_argument("--out", type=Path, default=Path("dataset.json"), help="output file")
    p.add_argument("--objects", type=_positive, help="number of object types")
    p.add_argument("--per-object", type=_positive, help="data per object")

    p = sub.add_parser("run", help="run an experiment and write tables and traces")
    common(p)
    p.add_argument("--trials", type=_positive, help="override the number of trials")
    p.add_argument("--iterations", type=_positive, help="override the iterations per trial")
    p.add_argument("--parallel", type=_positive, default=1, help="worker processes")

    p = sub.add_parser("crossmodal", help="cross-modal prediction report")
    common(p)
    p.add_argument("--state", type=Path, help="trained GameState JSON to score instead of training")
    p.add_argument("--trials", type=_positive, help="override the number of trials")
    p.add_argument("--iterations", type=_positive, help="override the iterations per trial")
    p.add_argument("--parallel", type=_positive, default=1, help="worker processes")

    p = sub.add_parser("inspect", help="summarize a results bundle")
    p.add_argument("bundle", type=Path, help="bundle.json / crossmodal.json or its directory")
    p.add_argument("--format", choices=("csv", "json"), help="machine-readable output")
    return parser


def _load_config(args, **overrides) -> harness.ExperimentConfig:
    if args.config is None:
        return harness.build_config({}, **overrides)
    return harness.load_config(args.config, **overrides)


def _cmd_generate(args) -> int:
    if args.config is not None:
        cfg = harness.load_config(args.config, seed=args.seed)
        if cfg.data["source"] != "synthetic":
            raise harness.ConfigError("generate needs a synthetic data section")
        params = {k: v for k, v in cfg.data.items() if k != "source"}
        params.setdefault("seed", cfg.seed)
    else:
        params = {"seed": 0 if args.seed is None else args.seed}
    if args.seed is not None:
        params["seed"] = args.seed
    if args.objects is not None:
        params["num_objects"] = args.objects
    if args.per_object is not None:
        params["per_object"] = args.per_object
    try:
        dataset = generate_synthetic(**params)
    except (TypeError, ValueError) as exc:
        raise harness.ConfigError(str(exc)) from exc
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, args.out)
    print(f"wrote {args.out} (D={dataset.D}, modalities={','.join(dataset.modalities)})")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _load_config(args, seed=args.seed, trials=args.trials, iterations=args.iterations)
    bundle = harness.run_experiment(cfg, parallel=args.parallel)
    paths = harness.write_results(bundle, args.out, args.format)
    sys.stdout.write(harness.format_table(bundle))
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_crossmodal(args) -> int:
    cfg = _load_config(args, seed=args.seed, iterations=args.iterations)
    if args.trials is not None:
        cfg.crossmodal["trials"] = args.trials
    state = None
    if args.state is not None:
        try:
            state = GameState.from_dict(json.loads(args.state.read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise harness.ConfigError(f"{args.state}: not a readable GameState ({exc})") from exc
    report = harness.run_crossmodal_eval(cfg, state=state, parallel=args.parallel)
    paths = harness.write_crossmodal(report, args.out, args.format)
    sys.stdout.write(harness.crossmodal_csv(report))
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    path = args.bundle
    if path.is_dir():
        path = next((path / n for n in ("bundle.json", "crossmodal.json") if (path / n).exists()),
                    path / "bundle.json")
    try:
        bundle = json.loads(path.read_text())
    except OSError as exc:
        raise harness.ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise harness.ConfigError(f"{path}: invalid JSON ({exc})") from exc
    kind = bundle.get("format") if isinstance(bundle, dict) else None
    if kind not in (harness.BUNDLE_FORMAT, harness.CROSSMODAL_FORMAT):
        raise harness.ConfigError(f"{path}: not a results bundle")
    if args.format == "json":
        sys.stdout.write(harness.dumps(harness.summarize_bundle(bundle)))
    elif kind == harness.CROSSMODAL_FORMAT:
        sys.stdout.write(harness.crossmodal_csv(bundle))
    elif args.format == "csv":
        sys.stdout.write(harness.results_csv(bundle))
    else:
        cfg = bundle["config"]
        print(f"seed={cfg['seed']} trials={cfg['trials']} iterations={cfg['model']['iterations']} "
              f"D={bundle['dataset']['D']}")
        sys.stdout.write(harness.format_table(bundle))
    return EXIT_OK


COMMANDS = {"generate": _cmd_generate, "run": _cmd_run, "crossmodal": _cmd_crossmodal,
            "inspect": _cmd_inspect}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (harness.ConfigError, DatasetFormatError) as exc:
        print(f"intermdm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (harness.TrialError, RuntimeError, ValueError, FloatingPointError, OSError) as exc:
        print(f"intermdm: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
