"""Numerical verification of Chen–Ricci inequalities for Riemannian submersions and maps."""

from .errors import ChenRicciError
from .manifold import Box, ChartManifold, SignConvention

__all__ = ["Box", "ChartManifold", "ChenRicciError", "SignConvention"]
__version__ = "0.1.0"
