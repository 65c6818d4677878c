"""
Reports
Deterministic JSON serialization with 17 significant digits and CSV tables of
sampled tensors
"""

import csv
import json
import math
import re
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .connections import FiberGeometry
from .structures import FinslerStructure

SCHEMA_VERSION = '1.0.0'
_PLACEHOLDER = re.compile(r'"__float17_(\d+)__"')


def build_report(config: Dict[str, Any], verdicts: Dict[str, Any], residuals: Dict[str, Any],
                 samples: Dict[str, Any], timings: Dict[str, float],
                 errors: List[Dict[str, Any]]) -> Dict[str, Any]:
    return {
        'schema_version': SCHEMA_VERSION,
        'config': config,
        'verdicts': verdicts,
        'residuals': residuals,
        'samples': samples,
        'timings': timings,
        'errors': errors,
    }


def dumps_report(report: Dict[str, Any]) -> str:
    """JSON text with sorted keys and every float written as %.17g"""
    floats: List[str] = []

    def prepare(value):
        if isinstance(value, Enum):
            return prepare(value.value)
        if hasattr(value, 'to_dict'):
            return prepare(value.to_dict())
        if isinstance(value, dict):
            return {str(k): prepare(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [prepare(v) for v in value]
        if isinstance(value, np.ndarray):
            return prepare(value.tolist())
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            value = float(value)
            if not math.isfinite(value):
                return None
            floats.append(format(value, '.17g'))
            return f"__float17_{len(floats) - 1}__"
        return value

    text = json.dumps(prepare(report), indent=2, sort_keys=True)
    return _PLACEHOLDER.sub(lambda m: floats[int(m.group(1))], text) + '\n'


def write_report(report: Dict[str, Any], path: str) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps_report(report))
    return path


def tensor_header(n: int) -> List[str]:
    return ([f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)] + ['F']
            + [f"g{i + 1}{j + 1}" for i in range(n) for j in range(n)]
            + ['min_eigenvalue', 'max_abs_cartan', 'max_abs_chern'])


def tensor_rows(fs: FinslerStructure, points: Sequence[Sequence[float]],
                directions: np.ndarray) -> List[List[float]]:
    """One row per (x, y) sample"""
    rows = []
    for x in points:
        geometry = FiberGeometry(fs, x, directions, 3)
        eigenvalues = np.linalg.eigvalsh(geometry.g)[:, 0]
        for k, y in enumerate(directions):
            rows.append(list(np.asarray(x, dtype=float)) + list(y) + [geometry.F[k]]
                        + list(geometry.g[k].ravel())
                        + [eigenvalues[k], np.max(np.abs(geometry.cartan[k])), np.max(np.abs(geometry.chern[k]))])
    return rows


def write_csv(path: str, header: List[str], rows: List[List[float]],
              provenance: Optional[Dict[str, Any]] = None) -> Path:
    """CSV with an optional '# key: value' provenance header"""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        for key, value in sorted((provenance or {}).items()):
            f.write(f"# {key}: {value}\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(float(v), '.17g') for v in row])
    return path
