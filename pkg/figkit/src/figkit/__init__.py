"""Figure rendering for riscat experiment CSVs."""

from .render import FIGURES, FigureSpec, RenderResult, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FIGURES", "FigureSpec", "RenderResult", "SchemaError", "render", "__version__"]
