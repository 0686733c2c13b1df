"""Plain-text dataset directory format.

    edges.tsv     node_a <TAB> node_b        (# comments, blank lines ignored)
    features.csv  header of feature names, one row per node in id order
    labels.tsv    node_id <TAB> class_id
    split.tsv     node_id <TAB> train|val|test|unused   (optional)
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from mmgnn.graph.storage import (
    Dataset,
    FeatureMatrix,
    GraphFormatError,
    LabelVector,
    SparseGraph,
    SplitMask,
)
from mmgnn.models import SplitRole

logger = logging.getLogger(__name__)

EDGES_FILE = "edges.tsv"
FEATURES_FILE = "features.csv"
LABELS_FILE = "labels.tsv"
SPLIT_FILE = "split.tsv"


def _require(path: Path) -> Path:
    if not path.is_file():
        raise GraphFormatError(f"missing required file: {path}")
    return path


def _records(path: Path) -> Iterator[tuple[int, list[str]]]:
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _parse_int(token: str, path: Path, lineno: int) -> int:
    try:
        return int(token)
    except ValueError as e:
        raise GraphFormatError(f"{path.name}:{lineno}: expected an integer, got '{token}'") from e


# ---------------------------------------------------------------------------
# Readers
# ---------------------------------------------------------------------------

def _read_features(path: Path) -> FeatureMatrix:
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration as e:
            raise GraphFormatError(f"{path.name} is empty") from e
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise GraphFormatError(
                    f"{path.name}:{lineno}: {len(row)} cells, header declares {len(header)}"
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as e:
                raise GraphFormatError(f"{path.name}:{lineno}: non-numeric feature cell ({e})") from e
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return FeatureMatrix(values=values, feature_names=tuple(h.strip() for h in header))


def _read_edges(path: Path, num_nodes: int) -> np.ndarray:
    pairs: list[tuple[int, int]] = []
    for lineno, fields in _records(path):
        if len(fields) != 2:
            raise GraphFormatError(f"{path.name}:{lineno}: expected two node ids")
        u, v = (_parse_int(tok, path, lineno) for tok in fields)
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise GraphFormatError(
                f"{path.name}:{lineno}: node id out of range [0, {num_nodes}) in edge ({u}, {v})"
            )
        pairs.append((u, v))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _read_labels(path: Path, num_nodes: int) -> LabelVector:
    labels = np.full(num_nodes, -1, dtype=np.int64)
    for lineno, fields in _records(path):
        if len(fields) != 2:
            raise GraphFormatError(f"{path.name}:{lineno}: expected 'node_id<TAB>class_id'")
        node, cls_id = (_parse_int(tok, path, lineno) for tok in fields)
        if not 0 <= node < num_nodes:
            raise GraphFormatError(f"{path.name}:{lineno}: node id {node} out of range")
        if cls_id < 0:
            raise GraphFormatError(f"{path.name}:{lineno}: label {cls_id} out of range")
        labels[node] = cls_id
    unlabeled = np.flatnonzero(labels < 0)
    if unlabeled.size:
        raise GraphFormatError(f"{path.name}: {unlabeled.size} node(s) without a label, first {unlabeled[0]}")
    return LabelVector.from_array(labels)


def _read_split(path: Path, num_nodes: int) -> SplitMask:
    roles: list[Optional[SplitRole]] = [None] * num_nodes
    for lineno, fields in _records(path):
        if len(fields) != 2:
            raise GraphFormatError(f"{path.name}:{lineno}: expected 'node_id<TAB>role'")
        node = _parse_int(fields[0], path, lineno)
        if not 0 <= node < num_nodes:
            raise GraphFormatError(f"{path.name}:{lineno}: node id {node} out of range")
        try:
            roles[node] = SplitRole(fields[1].lower())
        except ValueError as e:
            raise GraphFormatError(f"{path.name}:{lineno}: unknown role '{fields[1]}'") from e
    return SplitMask.from_roles([r or SplitRole.UNUSED for r in roles])


def load_graph(dir_path: str | Path, name: Optional[str] = None) -> Dataset:
    """Load a dataset directory into an immutable `Dataset`."""
    root = Path(dir_path)
    if not root.is_dir():
        raise GraphFormatError(f"dataset directory not found: {root}")

    features = _read_features(_require(root / FEATURES_FILE))
    n = features.num_nodes
    raw_edges = _read_edges(_require(root / EDGES_FILE), n)
    labels = _read_labels(_require(root / LABELS_FILE), n)
    split = _read_split(root / SPLIT_FILE, n) if (root / SPLIT_FILE).is_file() else None

    graph = SparseGraph.from_edges(n, raw_edges)
    loops = int(np.sum(raw_edges[:, 0] == raw_edges[:, 1]))
    logger.info(
        f"Loaded {root.name}: {n} nodes, {graph.num_edges} directed edges, "
        f"{features.dim} features, {labels.num_classes} classes"
        + (f" ({loops} self-loop line(s) dropped)" if loops else "")
    )
    return Dataset(graph, features, labels, split, name or root.name)


# ---------------------------------------------------------------------------
# Writer
# ---------------------------------------------------------------------------

def read_split(path: str | Path, num_nodes: int) -> SplitMask:
    return _read_split(_require(Path(path)), num_nodes)


def write_split(path: str | Path, split: SplitMask) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for node in range(split.codes.size):
            f.write(f"{node}\t{split.role(node).value}\n")
    return path


def save_graph(dir_path: str | Path, dataset: Dataset) -> Path:
    """Write `dataset` in the directory format; reloading reproduces the same CSR.

    Self loops are not written (the loader drops them); re-add them with
    `Dataset.with_self_loops` after loading.
    """
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)

    edges = dataset.graph.edges()
    loops = int(np.sum(edges[:, 0] == edges[:, 1]))
    if loops:
        logger.info(f"Not writing {loops} self-loop edge(s)")
    edges = edges[edges[:, 0] < edges[:, 1]]
    with (root / EDGES_FILE).open("w", encoding="utf-8") as f:
        f.write("# undirected edges, one per line\n")
        for u, v in edges:
            f.write(f"{u}\t{v}\n")

    with (root / FEATURES_FILE).open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(dataset.features.names)
        for row in dataset.features.values:
            writer.writerow([repr(float(x)) for x in row])

    with (root / LABELS_FILE).open("w", encoding="utf-8") as f:
        for node, cls_id in enumerate(dataset.labels.labels):
            f.write(f"{node}\t{cls_id}\n")

    if dataset.split is not None:
        write_split(root / SPLIT_FILE, dataset.split)

    logger.info(f"Saved dataset to {root}")
    return root
