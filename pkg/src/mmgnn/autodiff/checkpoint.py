"""Plain-text parameter checkpoints.

    # config {"num_layers": 2, ...}
    layer0.moment.w1 1433 64
    <row-major values, %.17g, space separated>
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from mmgnn.autodiff.tape import Parameter

logger = logging.getLogger(__name__)

CONFIG_PREFIX = "# config "


class CheckpointError(ValueError):
    """Raised for malformed checkpoint files or parameter mismatches."""


def save_checkpoint(
    path: str | Path,
    params: Sequence[Parameter],
    config: Optional[dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        if config is not None:
            f.write(CONFIG_PREFIX + json.dumps(config, sort_keys=True) + "\n")
        for p in params:
            rows, cols = p.shape
            f.write(f"{p.name} {rows} {cols}\n")
            f.write(" ".join(format(float(v), ".17g") for v in p.values.reshape(-1)) + "\n")
    logger.debug(f"Wrote {len(params)} parameters to {path}")
    return path


def read_checkpoint(path: str | Path) -> tuple[Optional[dict[str, Any]], dict[str, np.ndarray]]:
    """Return (config or None, name -> value matrix) in file order."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    config: Optional[dict[str, Any]] = None
    arrays: dict[str, np.ndarray] = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    i = 0
    if lines and lines[0].startswith(CONFIG_PREFIX):
        config = json.loads(lines[0][len(CONFIG_PREFIX):])
        i = 1
    while i < len(lines):
        header = lines[i].split()
        if len(header) != 3:
            raise CheckpointError(f"{path.name}:{i + 1}: expected 'name rows cols'")
        name, rows, cols = header[0], int(header[1]), int(header[2])
        body = lines[i + 1].split() if i + 1 < len(lines) else []
        if len(body) != rows * cols:
            raise CheckpointError(f"{path.name}: {name} has {len(body)} values, expected {rows * cols}")
        arrays[name] = np.array([float(v) for v in body], dtype=np.float64).reshape(rows, cols)
        i += 2
    return config, arrays


def load_into(params: Sequence[Parameter], arrays: dict[str, np.ndarray]) -> None:
    """Copy stored values into matching parameters; names and shapes must agree."""
    names = {p.name for p in params}
    if names != set(arrays):
        missing = sorted(names - set(arrays))
        extra = sorted(set(arrays) - names)
        raise CheckpointError(f"parameter mismatch: missing {missing}, unexpected {extra}")
    for p in params:
        if arrays[p.name].shape != p.shape:
            raise CheckpointError(f"{p.name}: stored shape {arrays[p.name].shape}, model expects {p.shape}")
        p.assign(arrays[p.name])
