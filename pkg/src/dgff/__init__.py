"""Discrete Gaussian free field on Z^2 boxes with Dirichlet boundary."""

__version__ = "0.1.0"

from .errors import InsufficientDataError, ResourceLimitError
from .lattice import Region, Vertex, build_ball, build_box, neighbors

__all__ = ["Region", "Vertex", "build_box", "build_ball", "neighbors",
           "ResourceLimitError", "InsufficientDataError", "__version__"]
