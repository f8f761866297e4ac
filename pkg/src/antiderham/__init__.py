"""Exact piecewise-polynomial exterior calculus: a linear anti-differential
through the Cech-de Rham double complex, and coordinate-appending symplectic
embeddings into R^2N."""

from .antidiff import (CechSplitting, NotExact, build_splitting, gamma, is_exact, primitive,
                       primitive_family, zigzag_lift)
from .cechdr import CechCochain, CechDeRham, TotalCochain
from .cover import Coloring, Cover, Nerve, build_bspline_cover, color_nerve, nerve
from .embedder import EmbeddingResult, PairDecomposition, append_coordinates, decompose, lift_family, twist_map
from .exactpp import AxisSpec, PPFunction, bspline, cumulative_integral, integrate_axis_full, partial_derivative
from .forms import Domain, Form, PPMap, exterior_derivative, periods, pullback_constant_form, wedge

__all__ = [
    "AxisSpec", "PPFunction", "bspline", "cumulative_integral", "integrate_axis_full",
    "partial_derivative", "Domain", "Form", "PPMap", "exterior_derivative", "wedge",
    "pullback_constant_form", "periods", "Cover", "Nerve", "Coloring", "build_bspline_cover",
    "nerve", "color_nerve", "CechDeRham", "CechCochain", "TotalCochain", "CechSplitting",
    "NotExact", "build_splitting", "gamma", "is_exact", "primitive", "primitive_family",
    "zigzag_lift", "PairDecomposition", "EmbeddingResult", "decompose", "append_coordinates",
    "lift_family", "twist_map",
]
