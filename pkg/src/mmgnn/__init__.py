"""MM-GNN - graph neural networks aggregating multi-order neighborhood moments."""

__version__ = "0.1.0"
