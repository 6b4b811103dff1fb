"""Figure rendering for lease-duration experiment CSVs."""

from .recipe import FigureRecipe, PanelSpec, RecipeError, load_recipe, parse_recipe
from .render import aggregate_panel, load_table, read_csv, render

__version__ = "0.1.0"

__all__ = [
    "FigureRecipe",
    "PanelSpec",
    "RecipeError",
    "load_recipe",
    "parse_recipe",
    "read_csv",
    "load_table",
    "aggregate_panel",
    "render",
    "__version__",
]
