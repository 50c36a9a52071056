"""
ECG ImageGen - Synthetic paper ECG images with ground truth
Main entry point
"""
import sys
import argparse
import logging
from pathlib import Path
from typing import List, Optional

from ecg_imagegen import __version__
from ecg_imagegen.core import Config, ConfigError, load_config
from ecg_imagegen.services import (
    EvaluationError,
    PipelineError,
    evaluate_directory,
    generate_batch,
    report_timings,
)
from ecg_imagegen.services.evaluation import DEFAULT_BIN_WIDTH_DB


logger = logging.getLogger("ecg_imagegen")


def setup_logging(verbose: bool) -> None:
    """Configure root logging once for the command line"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecg-imagegen",
        description="Generate synthetic paper ECG images with ground truth and score digitizations"
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('-v', '--verbose', action='store_true', help='Enable debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('generate', help='Render a directory of records into paper ECG images')
    gen.add_argument('--input', required=True, type=Path, help='Directory of .csv / .ecg records')
    gen.add_argument('--out', required=True, type=Path, help='Output directory')
    gen.add_argument('--config', type=Path, help='Distortion recipe (YAML); defaults when omitted')
    gen.add_argument('--workers', type=int, default=1, help='Worker processes (default: 1)')
    gen.add_argument('--seed', type=int, help='Override the master seed of the recipe')

    tim = sub.add_parser('timings', help='Print the per-stage timing table of a batch')
    tim.add_argument('--manifest', required=True, type=Path, help='manifest.json of a generate run')

    ev = sub.add_parser('eval', help='Digitize generated images and score them against ground truth')
    ev.add_argument('--images', required=True, type=Path, help='Output directory of a generate run')
    ev.add_argument('--out', required=True, type=Path, help='Report file (JSON); histogram CSV is written next to it')
    ev.add_argument('--workers', type=int, default=1, help='Worker processes (default: 1)')
    ev.add_argument('--bin-width', type=float, default=DEFAULT_BIN_WIDTH_DB, help='SNR histogram bin width in dB')

    cfg = sub.add_parser('config', help='Write the default distortion recipe to a file')
    cfg.add_argument('path', type=Path, help='Destination YAML file')
    return parser


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config) if args.config else Config.get_default()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    manifest = generate_batch(args.input, args.out, cfg, workers=args.workers)
    summary = manifest['summary']
    print(f"{summary['succeeded']} image(s) written to {args.out}, {summary['failed']} failure(s)")
    return 1 if summary['failed'] else 0


def cmd_timings(args: argparse.Namespace) -> int:
    print(report_timings(args.manifest), end='')
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    report = evaluate_directory(args.images, workers=args.workers, bin_width=args.bin_width)
    report.save(args.out)
    summary = report.summary()
    mean = summary['snr_db_mean']
    std = summary['snr_db_std']
    print(f"{summary['leads']} lead(s) from {summary['records']} page(s): SNR "
          f"{mean:.2f} +/- {std:.2f} dB" if mean is not None else f"{summary['leads']} lead(s): SNR n/a")
    if summary['lead_failures']:
        print(f"{summary['lead_failures']} lead(s) without a readable trace")
    return 1 if report.failures else 0


def cmd_config(args: argparse.Namespace) -> int:
    Config.save(Config.get_default(), args.path)
    print(f"Default configuration written to {args.path}")
    return 0


COMMANDS = {
    'generate': cmd_generate,
    'timings': cmd_timings,
    'eval': cmd_eval,
    'config': cmd_config,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
    except (PipelineError, EvaluationError) as e:
        logger.error("%s", e)
    except OSError as e:
        logger.error("I/O error: %s", e)
    return 1


if __name__ == "__main__":
    sys.exit(main())
