"""Hierarchical words, twisting operators, f-bar distances and the
tree-to-odometer construction built from them."""

__version__ = "0.1.0"
