import numpy as np
import pytest

from mmgnn.graph import RatioSplit, SparseGraph, make_split
from mmgnn.graph.synthetic import SyntheticSpec, generate_theorem1_graph
from mmgnn.verification import canned_instance


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def path_graph():
    """0 - 1 - 2"""
    return SparseGraph.from_edges(3, np.array([[0, 1], [1, 2]]))


@pytest.fixture
def two_neighbor_graph():
    """Node 0 sees nodes 1 and 2; node 3 is isolated."""
    return SparseGraph.from_edges(4, np.array([[0, 1], [0, 2]]))


@pytest.fixture
def tiny_dataset():
    """The 12-node gradient-check graph with a fixed 6/3/3 split."""
    dataset = canned_instance()
    return dataset.with_split(make_split(dataset.labels, RatioSplit(train=0.5, val=0.25, test=0.25), seed=0))


@pytest.fixture
def small_synthetic():
    spec = SyntheticSpec(nodes_per_class=150, feature_dim=4, neighbors_per_node=10, seed=3)
    dataset = generate_theorem1_graph(spec)
    return dataset.with_split(make_split(dataset.labels, RatioSplit(), seed=0))

