"""Thin trees, shortcut matrices and locally connected hierarchies on multigraphs."""

__version__ = "0.1.0"

from .errors import ThinTreeError
from .graph import MultiGraph, parse_graph, read_graph, write_graph

__all__ = ["MultiGraph", "ThinTreeError", "parse_graph", "read_graph", "write_graph", "__version__"]
