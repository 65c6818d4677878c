"""
Command line front end
analyze / classify / holonomy run configurations, list-metrics prints the registry
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from .config import ASSERTIONS
from .registry import MetricRegistry
from .runner import EXIT_ERROR, FinslerAnalysisRunner

logger = logging.getLogger(__name__)

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog='finsler-rigidity',
        description="Numerical Berwald, Landsberg and rigidity checks for Finsler structures",
    )
    parser.add_argument('--seed', type=int, help="Override the sampling seed")
    parser.add_argument('--out', help="Report path (overrides output.report)")
    parser.add_argument('--assert', dest='assertion', choices=ASSERTIONS,
                        help="Exit with status 2 when this verdict comes out 'no'")
    parser.add_argument('--log-level', choices=LOG_LEVELS, type=str.upper,
                        help="Logging level (default: FINSLER_LOG_LEVEL or INFO)")
    parser.add_argument('--metrics-dir', help="Directory of stored metric presets")

    commands = parser.add_subparsers(dest='command', required=True)
    analyze = commands.add_parser('analyze', help="Run the analyses listed in a config")
    analyze.add_argument('config', help="Run configuration (.json or .toml)")
    classify = commands.add_parser('classify', help="Classify the metric of a config")
    classify.add_argument('config', help="Run configuration (.json or .toml)")
    holonomy = commands.add_parser('holonomy', help="Sample and classify holonomy (surfaces)")
    holonomy.add_argument('config', help="Run configuration (.json or .toml)")
    list_metrics = commands.add_parser('list-metrics', help="Print metric families and presets")
    list_metrics.add_argument('--json', action='store_true', help="Machine-readable JSON array")
    return parser.parse_args(argv)


def _print_registry(registry: MetricRegistry, as_json: bool):
    entries = registry.describe()
    if as_json:
        print(json.dumps(entries, indent=2, sort_keys=True))
        return
    print("Metric families:")
    for entry in entries:
        if entry['kind'] != 'family':
            continue
        print(f"  {entry['name']}: {entry['description']}")
        for param, doc in sorted(entry['params'].items()):
            print(f"      {param}: {doc}")
    print("Presets:")
    for entry in entries:
        if entry['kind'] == 'preset':
            print(f"  {entry['name']} ({entry['family']}, n={entry['dimension']}): {entry['description']}")


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = _parse_args(argv)
    level = args.log_level or os.environ.get('FINSLER_LOG_LEVEL', 'INFO').upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO))

    registry = MetricRegistry(args.metrics_dir)
    if args.command == 'list-metrics':
        _print_registry(registry, args.json)
        return 0

    analyses = {'classify': ['classify'], 'holonomy': ['holonomy']}.get(args.command)
    runner = FinslerAnalysisRunner(registry)
    try:
        outcome = runner.run_file(args.config, args.seed, args.out, args.assertion, analyses)
    except OSError as e:
        logger.error(f"Could not write report: {e}")
        return EXIT_ERROR

    verdicts = outcome.report.get('verdicts', {})
    for key in sorted(verdicts):
        print(f"{key}: {verdicts[key]}")
    for error in outcome.report.get('errors', []):
        print(f"error: {error.get('type')}: {error.get('message')}", file=sys.stderr)
    return outcome.exit_code


if __name__ == '__main__':
    sys.exit(main())
