"""
Command line interface.

    ddae <subcommand> [--config PATH] [--seed N] [--out DIR] [--preset NAME] [options]

Subcommands: pretrain, gridsearch, probe, finetune, metrics, sample, fid, ablate, plot.

Exit codes:
    0 success, 2 configuration error, 3 data or I/O error (missing files, unwritable outputs),
    4 numerical abort.

Functions:
    - build_parser() -> argparse.ArgumentParser
    - load_config(args) -> RunConfig
    - main(argv=None) -> int
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from .ablation import Variant, beta_range_variant, levels_variant, run_ablation, standard_variants
from .emit import emit_csv, emit_plot, select_records
from .pipeline import DDAERun
from ..config import RunConfig, resolve_run_config
from ..exceptions import ContractError, DataFormatError, DDAEConfigError, NumericalError
from ..utilities.records import PHASES, read_records
from ..version import __version__

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

logger = logging.getLogger("nts.ddae")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="JSON configuration file")
    parser.add_argument("--seed", type=int, default=None, help="Master seed")
    parser.add_argument("--out", type=str, default=None, help="Output directory")
    parser.add_argument("--preset", type=str, default=None, help="Comma separated preset names")
    parser.add_argument("--data", type=str, default=None, help="Training dataset path")
    parser.add_argument("--test-data", type=str, default=None, help="Test split path")
    parser.add_argument("--limit", type=int, default=None, help="Use the first N training images")
    parser.add_argument("--tap", type=str, default=None, help="Adopted tap key, e.g. up.1.0@16")
    parser.add_argument("--t", type=int, default=None, dest="t_fixed", help="Adopted level")
    parser.add_argument("--progress", action="store_true", help="Show progress bars")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one sub-parser per subcommand."""
    parser = argparse.ArgumentParser(prog="ddae", description="Denoising diffusion autoencoders")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level", type=str, default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("pretrain", help="Denoising pre-training")
    _common(sub)
    sub.add_argument("--resume", action="store_true", help="Continue from the last checkpoint")

    for name, text in (
        ("gridsearch", "Layer x noise level linear probe search"),
        ("probe", "Linear probe at the adopted cell with reference probes"),
    ):
        _common(commands.add_parser(name, help=text))

    sub = commands.add_parser("finetune", help="End-to-end fine-tuning of the truncated encoder")
    _common(sub)
    sub.add_argument("--from-scratch", action="store_true", help="Random init instead")

    sub = commands.add_parser("metrics", help="Alignment, uniformity and classifier sweep")
    _common(sub)
    sub.add_argument("--guidance-label", type=int, default=None, help="Report guided hit rates")
    sub.add_argument("--scales", type=float, nargs="+", default=[0.0, 1.0, 10.0])
    sub.add_argument("--n", type=int, default=16, help="Samples per guidance scale")

    sub = commands.add_parser("sample", help="Ancestral sampling")
    _common(sub)
    sub.add_argument("--n", type=int, default=64, help="Number of samples")
    sub.add_argument("--label", type=int, default=None, help="Guidance target label")
    sub.add_argument("--scale", type=float, default=1.0, help="Guidance scale")

    sub = commands.add_parser("fid", help="Frechet distance of fresh samples")
    _common(sub)
    sub.add_argument("--n", type=int, default=None, help="Number of samples")

    sub = commands.add_parser("ablate", help="Noise configuration ablation")
    _common(sub)
    sub.add_argument(
        "--variants", type=str, nargs="*", default=None,
        help="Variants as T=<levels>, smaller-half or larger-half (standard list when omitted)",
    )

    sub = commands.add_parser("plot", help="CSV and SVG of selected records")
    sub.add_argument("records", type=str, help="records.jsonl file")
    sub.add_argument("--phase", type=str, default=None, choices=PHASES)
    sub.add_argument("--key", type=str, default=None, help="Key prefix")
    sub.add_argument("--csv", type=str, default=None, help="CSV output path")
    sub.add_argument("--svg", type=str, default=None, help="SVG output path")
    sub.add_argument("--title", type=str, default=None)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Effective configuration: presets, then the config file, then command line flags.

    Raises:
        DDAEConfigError: Unreadable or invalid configuration.
    """
    data: dict[str, Any] = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DDAEConfigError(f"Cannot read configuration {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DDAEConfigError(f"Configuration {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise DDAEConfigError(f"Configuration {args.config} must hold a JSON object")
    overrides: dict[str, Any] = {
        "out_dir": args.out,
        "dataset_path": args.data,
        "test_path": args.test_data,
        "limit": args.limit,
        "tap": args.tap,
        "t_fixed": args.t_fixed,
    }
    if args.seed is not None:
        overrides.update(
            {"seed": args.seed, "train": {"seed": args.seed}, "probe": {"seed": args.seed}}
        )
    return resolve_run_config(args.preset, data, overrides)


def _parse_variant(text: str, config: RunConfig) -> Variant:
    if text.startswith("T="):
        try:
            levels = int(text[2:])
        except ValueError as exc:
            raise DDAEConfigError(f"Bad variant {text!r}, expected T=<levels>") from exc
        return levels_variant(levels, config.schedule)
    return beta_range_variant(text, config.schedule)


def _plot(args: argparse.Namespace) -> None:
    records = select_records(read_records(args.records, logger), args.phase, args.key)
    stem = Path(args.records).with_suffix("")
    emit_csv(records, args.csv or f"{stem}.csv", logger)
    emit_plot(records, args.svg or f"{stem}.svg", args.title, logger)


# pylint: disable=too-many-branches
def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "plot":
        _plot(args)
        return
    config = load_config(args)
    if args.command == "ablate":
        variants = (
            standard_variants(config.schedule)
            if args.variants is None
            else [_parse_variant(text, config) for text in args.variants]
        )
        results = run_ablation(config, variants, progress=args.progress, logger=logger)
        failed = [r["data"]["variant"] for r in results if r["status"] == "ERROR"]
        if failed:
            logger.warning("Failed variants: %s", ", ".join(failed))
        return
    with DDAERun(config, args.progress, logger) as run:
        if args.command == "pretrain":
            run.pretrain(args.resume)
            return
        net = run.network()
        if args.command == "gridsearch":
            best = run.gridsearch(net).best
            logger.info("Best cell %s t=%d accuracy %.4f", best.label, best.t, best.accuracy)
        elif args.command == "probe":
            for name, value in run.probe(net).items():
                logger.info("%s probe accuracy %.4f", name, value)
        elif args.command == "finetune":
            logger.info("Fine-tuned accuracy %.4f", run.finetune(net, args.from_scratch))
        elif args.command == "metrics":
            result = run.metrics(net, args.guidance_label, args.scales, args.n)
            logger.info("Classifier accuracy / level Spearman %.4f", result["sweep"].spearman)
        elif args.command == "sample":
            run.sample(net, args.n, args.label, args.scale)
        elif args.command == "fid":
            run.fid(net, args.n)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the ``ddae`` console script.

    Returns:
        int: Exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        _dispatch(args)
    except NumericalError as exc:
        logger.error("Numerical abort: %s (diagnostics: %s)", exc, exc.diagnostics)
        return EXIT_NUMERICAL
    except (DataFormatError, OSError) as exc:
        logger.error("Data or I/O error: %s", exc)
        return EXIT_DATA
    except (DDAEConfigError, ContractError) as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
