"""
Write the built-in metric presets and the preset index to the metrics directory
"""

import argparse
import json
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from finsler_rigidity.registry import MetricRegistry  # noqa: E402

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def write_presets(metrics_dir: Path) -> int:
    """Write one preset_<name>.json per preset; returns how many were written"""
    registry = MetricRegistry(str(metrics_dir))
    metrics_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for name in registry.list_presets():
        preset_file = metrics_dir / f"preset_{name}.json"
        try:
            with open(preset_file, 'w', encoding='utf-8') as f:
                json.dump(registry.get_preset(name), f, indent=2)
                f.write('\n')
            written += 1
            logger.info(f"Wrote preset: {name}")
        except OSError as e:
            logger.error(f"Failed to write {preset_file}: {e}")
    index_path = registry.write_index()
    logger.info(f"Preset index written to {index_path}")
    return written


def main():
    parser = argparse.ArgumentParser(description="Write metric presets as JSON")
    parser.add_argument('--metrics-dir', default='metrics', help="Target directory")
    args = parser.parse_args()

    logger.info("Setting up metric presets...")
    count = write_presets(Path(args.metrics_dir))
    logger.info(f"{count} presets ready")


if __name__ == '__main__':
    main()
