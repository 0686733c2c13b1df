"""Immutable graph, feature, label and split containers.

A `SparseGraph` is stored as symmetric CSR with strictly increasing column
indices per row. The sparse operators every aggregation kernel needs (mean,
sum, per-edge gathers) are derived once and cached on the instance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from mmgnn.models import SplitRole

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised when graph data violates a storage invariant or file format."""


def _frozen(array: np.ndarray, dtype: type) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# SparseGraph
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SparseGraph:
    num_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    directed: bool = False  # storage is always symmetric; kept for provenance

    def __post_init__(self) -> None:
        offsets = _frozen(self.row_offsets, np.int64)
        cols = _frozen(self.col_indices, np.int64)
        object.__setattr__(self, "row_offsets", offsets)
        object.__setattr__(self, "col_indices", cols)
        self._validate()

    def _validate(self) -> None:
        n = self.num_nodes
        offsets, cols = self.row_offsets, self.col_indices
        if n < 0:
            raise GraphFormatError(f"num_nodes must be >= 0, got {n}")
        if offsets.ndim != 1 or offsets.size != n + 1:
            raise GraphFormatError(f"row_offsets must have length {n + 1}, got {offsets.size}")
        if offsets[0] != 0 or np.any(np.diff(offsets) < 0):
            raise GraphFormatError("row_offsets must start at 0 and be non-decreasing")
        if offsets[-1] != cols.size:
            raise GraphFormatError(
                f"row_offsets[-1]={offsets[-1]} does not match {cols.size} column indices"
            )
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise GraphFormatError(f"column index out of range [0, {n})")
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
        same_row = rows[1:] == rows[:-1]
        if np.any(cols[1:][same_row] <= cols[:-1][same_row]):
            raise GraphFormatError("column indices must be strictly increasing within each row")
        forward = rows * n + cols
        backward = cols * n + rows
        if not np.array_equal(np.sort(backward), forward):
            raise GraphFormatError("adjacency is not symmetric")

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        num_nodes: int,
        edges: np.ndarray,
        keep_self_loops: bool = False,
    ) -> SparseGraph:
        """Symmetrize, drop duplicates (and self loops unless asked) and build CSR."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= num_nodes):
            bad = edges[(edges < 0).any(axis=1) | (edges >= num_nodes).any(axis=1)][0]
            raise GraphFormatError(
                f"edge ({bad[0]}, {bad[1]}) references a node outside [0, {num_nodes})"
            )
        loops = edges[:, 0] == edges[:, 1]
        if not keep_self_loops and loops.any():
            logger.debug(f"Dropping {int(loops.sum())} self-loop edge(s)")
            edges = edges[~loops]
        both = np.concatenate([edges, edges[:, ::-1]], axis=0)
        keys = np.unique(both[:, 0] * num_nodes + both[:, 1])
        rows, cols = np.divmod(keys, num_nodes) if num_nodes else (keys, keys)
        counts = np.bincount(rows, minlength=num_nodes)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        return cls(num_nodes=num_nodes, row_offsets=offsets, col_indices=cols)

    def with_self_loops(self) -> SparseGraph:
        loops = np.repeat(np.arange(self.num_nodes, dtype=np.int64), 2).reshape(-1, 2)
        return SparseGraph.from_edges(
            self.num_nodes, np.concatenate([self.edges(), loops]), keep_self_loops=True
        )

    def permuted(self, perm: np.ndarray) -> SparseGraph:
        """Relabel node i as perm[i]."""
        perm = np.asarray(perm, dtype=np.int64)
        return SparseGraph.from_edges(self.num_nodes, perm[self.edges()], keep_self_loops=True)

    # ------------------------------------------------------------------
    # Structure queries
    # ------------------------------------------------------------------

    @property
    def num_edges(self) -> int:
        return int(self.col_indices.size)

    @cached_property
    def degrees(self) -> np.ndarray:
        return _frozen(np.diff(self.row_offsets), np.int64)

    def neighbors(self, node: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[node]:self.row_offsets[node + 1]]

    @cached_property
    def edge_rows(self) -> np.ndarray:
        """Center node of every stored edge, aligned with col_indices."""
        return _frozen(np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees), np.int64)

    def edges(self) -> np.ndarray:
        return np.stack([self.edge_rows, self.col_indices], axis=1)

    def same_structure(self, other: SparseGraph) -> bool:
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
        )

    # ------------------------------------------------------------------
    # Sparse operators (n = nodes, E = stored edges)
    # ------------------------------------------------------------------

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """n×n 0/1 adjacency (sum aggregation)."""
        data = np.ones(self.num_edges, dtype=np.float64)
        return sp.csr_matrix(
            (data, self.col_indices, self.row_offsets), shape=(self.num_nodes, self.num_nodes)
        )

    @cached_property
    def inverse_degrees(self) -> np.ndarray:
        inv = np.zeros(self.num_nodes, dtype=np.float64)
        nonzero = self.degrees > 0
        inv[nonzero] = 1.0 / self.degrees[nonzero]
        return inv

    @cached_property
    def mean_operator(self) -> sp.csr_matrix:
        """n×n row-normalized adjacency D⁻¹A; zero-degree rows stay zero."""
        data = self.inverse_degrees[self.edge_rows]
        return sp.csr_matrix(
            (data, self.col_indices, self.row_offsets), shape=(self.num_nodes, self.num_nodes)
        )

    @cached_property
    def neighbor_gather(self) -> sp.csr_matrix:
        """E×n selector: row e picks the neighbor endpoint of edge e."""
        return self._selector(self.col_indices)

    @cached_property
    def center_gather(self) -> sp.csr_matrix:
        """E×n selector: row e picks the center endpoint of edge e."""
        return self._selector(self.edge_rows)

    @cached_property
    def edge_mean(self) -> sp.csr_matrix:
        """n×E averaging of per-edge values into their center node."""
        data = self.inverse_degrees[self.edge_rows]
        edge_ids = np.arange(self.num_edges, dtype=np.int64)
        return sp.csr_matrix(
            (data, edge_ids, self.row_offsets), shape=(self.num_nodes, self.num_edges)
        )

    def _selector(self, targets: np.ndarray) -> sp.csr_matrix:
        e = self.num_edges
        return sp.csr_matrix(
            (np.ones(e, dtype=np.float64), targets, np.arange(e + 1, dtype=np.int64)),
            shape=(e, self.num_nodes),
        )


# ---------------------------------------------------------------------------
# Node data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    feature_names: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        values = _frozen(self.values, np.float64)
        if values.ndim != 2 or values.shape[1] < 1:
            raise GraphFormatError(f"features must be a 2-D matrix with >= 1 column, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise GraphFormatError("features contain non-finite entries")
        names = self.feature_names
        if names is not None:
            names = tuple(names)
            if len(names) != values.shape[1]:
                raise GraphFormatError(
                    f"{len(names)} feature names for {values.shape[1]} feature columns"
                )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", names)

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> tuple[str, ...]:
        return self.feature_names or tuple(f"f{i}" for i in range(self.dim))


@dataclass(frozen=True, eq=False)
class LabelVector:
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        labels = _frozen(self.labels, np.int64)
        if labels.ndim != 1:
            raise GraphFormatError("labels must be a 1-D array")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise GraphFormatError(f"label out of range [0, {self.num_classes})")
        missing = np.setdiff1d(np.arange(self.num_classes), labels)
        if missing.size:
            raise GraphFormatError(f"classes {missing.tolist()} have no nodes")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_array(cls, labels: np.ndarray) -> LabelVector:
        labels = np.asarray(labels, dtype=np.int64)
        return cls(labels=labels, num_classes=int(labels.max()) + 1 if labels.size else 0)

    def __len__(self) -> int:
        return int(self.labels.size)

    def class_indices(self, cls_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cls_id)


_ROLE_CODES = {role: i for i, role in enumerate(SplitRole)}
_ROLES = list(SplitRole)


class SplitError(ValueError):
    """Raised when a split cannot be built or is malformed."""


@dataclass(frozen=True, eq=False)
class SplitMask:
    codes: np.ndarray  # index into SplitRole order, one per node

    def __post_init__(self) -> None:
        codes = _frozen(self.codes, np.int8)
        if codes.size and (codes.min() < 0 or codes.max() >= len(_ROLES)):
            raise SplitError("unknown split role code")
        for role in (SplitRole.TRAIN, SplitRole.VAL, SplitRole.TEST):
            if not np.any(codes == _ROLE_CODES[role]):
                raise SplitError(f"split has no '{role.value}' nodes")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def from_roles(cls, roles: list[SplitRole]) -> SplitMask:
        return cls(codes=np.array([_ROLE_CODES[SplitRole(r)] for r in roles], dtype=np.int8))

    @classmethod
    def from_indices(cls, num_nodes: int, assigned: dict[SplitRole, np.ndarray]) -> SplitMask:
        """Nodes not listed under any role are UNUSED."""
        codes = np.full(num_nodes, _ROLE_CODES[SplitRole.UNUSED], dtype=np.int8)
        for role, nodes in assigned.items():
            codes[np.asarray(nodes, dtype=np.int64)] = _ROLE_CODES[role]
        return cls(codes=codes)

    def role(self, node: int) -> SplitRole:
        return _ROLES[int(self.codes[node])]

    def mask(self, role: SplitRole) -> np.ndarray:
        return self.codes == _ROLE_CODES[role]

    def indices(self, role: SplitRole) -> np.ndarray:
        return np.flatnonzero(self.mask(role))

    def counts(self) -> dict[str, int]:
        return {role.value: int(self.mask(role).sum()) for role in SplitRole}

    def same_as(self, other: SplitMask) -> bool:
        return np.array_equal(self.codes, other.codes)


# ---------------------------------------------------------------------------
# Dataset bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dataset:
    graph: SparseGraph
    features: FeatureMatrix
    labels: LabelVector
    split: Optional[SplitMask] = None
    name: str = field(default="dataset")

    def __post_init__(self) -> None:
        n = self.graph.num_nodes
        if self.features.num_nodes != n:
            raise GraphFormatError(f"{self.features.num_nodes} feature rows for {n} nodes")
        if len(self.labels) != n:
            raise GraphFormatError(f"{len(self.labels)} labels for {n} nodes")
        if self.split is not None and self.split.codes.size != n:
            raise GraphFormatError(f"{self.split.codes.size} split roles for {n} nodes")

    @property
    def num_classes(self) -> int:
        return self.labels.num_classes

    @property
    def feature_dim(self) -> int:
        return self.features.dim

    def with_split(self, split: SplitMask) -> Dataset:
        return Dataset(self.graph, self.features, self.labels, split, self.name)

    def with_self_loops(self) -> Dataset:
        return Dataset(self.graph.with_self_loops(), self.features, self.labels, self.split, self.name)
