"""Command-line interface for the Ehrenfest workbench."""

import argparse
import sys
from pathlib import Path

from dotenv import load_dotenv

from core.config import default_config, load_config
from core.errors import ConfigError
from core.logger import get_logger
from core.settings import get_settings
from workflows.run_scenario import run_scenario
from workflows.selftest import selftest_workflow

# Load environment variables
load_dotenv()


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point."""
    parser = argparse.ArgumentParser(
        description="Ehrenfest theorem verification workbench",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Exact counterexample certificate with default settings
  python cli.py counterexample --out output/cx

  # Harmonic oscillator run described by a scenario file
  python cli.py evolve --config scenarios/harmonic.ini --out output/harmonic

  # Discretised counterexample against the exact values
  python cli.py crosscheck --seed 3

  # All reference scenarios
  python cli.py selftest --quiet
        """,
    )

    parser.add_argument(
        "command",
        choices=["counterexample", "evolve", "crosscheck", "selftest"],
        help="Command to execute",
    )

    parser.add_argument("--config", help="Scenario file (INI); defaults are used when omitted")

    parser.add_argument("--out", help="Output directory (default: <output_dir>/<command>)")

    parser.add_argument("--seed", type=int, help="Override the scenario seed")

    parser.add_argument("--quiet", action="store_true", help="Only print warnings and the final summary")

    args = parser.parse_args(argv)

    logger = get_logger()
    if args.quiet:
        logger.set_console_level("WARNING")
    out_dir = Path(args.out or Path(get_settings().output_dir) / args.command)

    try:
        if args.command == "selftest":
            logger.info(f"Running selftest into {out_dir}")
            manifest = selftest_workflow(out_dir, seed=args.seed or 0)
        else:
            if args.config:
                config = load_config(args.config, default_mode=args.command)
            else:
                config = default_config(args.command)
            if args.seed is not None:
                config = config.model_copy(update={"seed": args.seed})
            logger.info(f"Running {args.command} into {out_dir}")
            manifest = run_scenario(config, out_dir)

        failed = [c for c in manifest.checks if not c.passed]
        mark = "✓" if manifest.passed else "✗"
        print(f"\n{mark} {manifest.mode}: {len(manifest.checks) - len(failed)}/{len(manifest.checks)} checks passed")
        for check in failed:
            print(f"  ✗ {check.name} {check.detail}".rstrip())
        if manifest.error:
            print(f"  Stopped early: {manifest.error}")
        print(f"  Manifest: {out_dir / 'manifest.json'}")
        return 0 if manifest.passed else 1

    except ConfigError as e:
        print("\n✗ Invalid configuration:", file=sys.stderr)
        for message in e.errors:
            print(f"  - {message}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.error(f"Error: {e}")
        print(f"\n✗ Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
