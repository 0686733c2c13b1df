from mmgnn.graph.io import load_graph, read_split, save_graph, write_split
from mmgnn.graph.splits import PerClassSplit, RatioSplit, SplitPolicy, make_split
from mmgnn.graph.storage import (
    Dataset,
    FeatureMatrix,
    GraphFormatError,
    LabelVector,
    SparseGraph,
    SplitError,
    SplitMask,
)
from mmgnn.graph.synthetic import SyntheticSpec, generate_theorem1_graph, random_graph

__all__ = [
    "Dataset",
    "FeatureMatrix",
    "GraphFormatError",
    "LabelVector",
    "PerClassSplit",
    "RatioSplit",
    "SparseGraph",
    "SplitError",
    "SplitMask",
    "SplitPolicy",
    "SyntheticSpec",
    "generate_theorem1_graph",
    "load_graph",
    "make_split",
    "random_graph",
    "read_split",
    "save_graph",
    "write_split",
]
