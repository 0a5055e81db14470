"""Curve segment neighborhood graphs and interactive community steering."""

__version__ = "0.1.0"

from .curves import CurveSegment, Dataset, Polyline, decompose, load_lines, save_lines

__all__ = [
    "CurveSegment",
    "Dataset",
    "Polyline",
    "decompose",
    "load_lines",
    "save_lines",
    "__version__",
]
