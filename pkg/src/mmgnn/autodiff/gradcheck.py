"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from mmgnn.autodiff.tape import Parameter, Tape, Tensor

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-6  # below this magnitude errors are measured absolutely


def relative_error(analytic: float, numeric: float, floor: float = DEFAULT_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradient_errors(
    f: Callable[[], Tensor],
    params: Sequence[Parameter],
    eps: float = 1e-4,
    max_coordinates: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> list[tuple[str, float]]:
    """(parameter name, relative error) for every checked coordinate.

    With `max_coordinates`, that many coordinates are sampled uniformly over all
    parameters without replacement; otherwise every coordinate is checked.
    """
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = f()
    tape.backward(loss)
    analytic = [p.grad.copy() for p in params]

    coords = [(i, flat) for i, p in enumerate(params) for flat in range(p.values.size)]
    if max_coordinates is not None and max_coordinates < len(coords):
        rng = rng or np.random.default_rng(0)
        picked = rng.choice(len(coords), size=max_coordinates, replace=False)
        coords = [coords[c] for c in np.sort(picked)]

    errors = []
    for i, flat in coords:
        values = params[i].values.reshape(-1)
        original = values[flat]
        values[flat] = original + eps
        upper = f().item()
        values[flat] = original - eps
        lower = f().item()
        values[flat] = original
        numeric = (upper - lower) / (2.0 * eps)
        errors.append((params[i].name, relative_error(analytic[i].reshape(-1)[flat], numeric)))
    return errors


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Parameter],
    eps: float = 1e-4,
    max_coordinates: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Max relative error between tape gradients and central differences."""
    errors = gradient_errors(f, params, eps, max_coordinates, rng)
    worst = max((e for _, e in errors), default=0.0)
    logger.debug(f"grad_check: {len(errors)} coordinates, max relative error {worst:.3e}")
    return worst
