"""Train/val/test splitting policies."""

from __future__ import annotations

import logging
import math
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from mmgnn.graph.storage import LabelVector, SplitError, SplitMask
from mmgnn.models import SplitRole
from mmgnn.seeding import SPLIT_STREAM, rng_for

logger = logging.getLogger(__name__)


class PerClassSplit(BaseModel):
    """Fixed number of training nodes per class, then fixed val/test totals."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["per_class"] = "per_class"
    train_per_class: int = Field(default=20, ge=1)
    val_total: int = Field(default=500, ge=1)
    test_total: int = Field(default=1000, ge=1)


class RatioSplit(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["ratio"] = "ratio"
    train: float = Field(default=0.6, gt=0.0, le=1.0)
    val: float = Field(default=0.2, gt=0.0, le=1.0)
    test: float = Field(default=0.2, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_total(self) -> RatioSplit:
        if self.train + self.val + self.test > 1.0 + 1e-9:
            raise ValueError(
                f"split ratios sum to {self.train + self.val + self.test:.4f} > 1"
            )
        return self


SplitPolicy = Annotated[Union[PerClassSplit, RatioSplit], Field(discriminator="kind")]


def _count(ratio: float, n: int) -> int:
    return int(math.floor(ratio * n + 1e-9))


def make_split(labels: LabelVector, policy: PerClassSplit | RatioSplit, seed: int) -> SplitMask:
    """Deterministic split of all nodes under `policy`; leftovers are UNUSED."""
    rng = rng_for(seed, SPLIT_STREAM)
    n = len(labels)

    if isinstance(policy, PerClassSplit):
        train_nodes = []
        for cls_id in range(labels.num_classes):
            members = labels.class_indices(cls_id)
            if members.size < policy.train_per_class:
                raise SplitError(
                    f"class {cls_id} has {members.size} nodes, "
                    f"fewer than train_per_class={policy.train_per_class}"
                )
            train_nodes.append(rng.permutation(members)[:policy.train_per_class])
        train_idx = np.concatenate(train_nodes)
        rest = rng.permutation(np.setdiff1d(np.arange(n), train_idx))
        needed = policy.val_total + policy.test_total
        if rest.size < needed:
            raise SplitError(
                f"{rest.size} nodes remain after training selection, "
                f"{needed} needed for val+test"
            )
        val_idx = rest[:policy.val_total]
        test_idx = rest[policy.val_total:needed]
    else:
        order = rng.permutation(n)
        n_train, n_val, n_test = (_count(r, n) for r in (policy.train, policy.val, policy.test))
        if min(n_train, n_val, n_test) == 0:
            raise SplitError(f"ratios {policy.train}/{policy.val}/{policy.test} leave a role empty on {n} nodes")
        train_idx = order[:n_train]
        val_idx = order[n_train:n_train + n_val]
        test_idx = order[n_train + n_val:n_train + n_val + n_test]

    split = SplitMask.from_indices(
        n, {SplitRole.TRAIN: train_idx, SplitRole.VAL: val_idx, SplitRole.TEST: test_idx}
    )
    logger.debug(f"Split (seed={seed}): {split.counts()}")
    return split
