"""Figure recipes: structured descriptions of one rendered figure.

A recipe names the experiment kind it expects, the x column, the panel
stack (one y column each), axis labels, and how replicate rows are
aggregated.  Recipes never compute model quantities; they only select and
aggregate CSV columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

AGGREGATIONS = ("none", "mean-std")


class RecipeError(ValueError):
    """Raised when a recipe is malformed or does not match its CSV."""


@dataclass(frozen=True)
class PanelSpec:
    """One stacked panel: a y column against the shared x column."""

    y: str
    label: str = ""

    def __post_init__(self):
        if not self.y:
            raise RecipeError("panel.y is required")


@dataclass(frozen=True)
class FigureRecipe:
    """A complete figure description.

    Parameters
    ----------
    kind : str
        Experiment kind the input CSV must declare in its metadata.
    x : str
        Column plotted on the shared x axis.
    panels : tuple of PanelSpec
        Vertically stacked panels, top to bottom.
    x_label : str
        Shared x-axis label.
    title : str
        Figure title (optional).
    aggregate : str
        ``none`` plots rows as-is; ``mean-std`` averages over replicates at
        each x value and draws sample-std error bars.
    out_name : str
        File name of the rendered image.
    """

    kind: str
    x: str
    panels: tuple
    x_label: str = ""
    title: str = ""
    aggregate: str = "mean-std"
    out_name: str = "figure.png"

    def __post_init__(self):
        if not self.kind:
            raise RecipeError("recipe.kind is required")
        if not self.x:
            raise RecipeError("recipe.x is required")
        if not self.panels:
            raise RecipeError("recipe.panels must be non-empty")
        if self.aggregate not in AGGREGATIONS:
            raise RecipeError(
                f"recipe.aggregate must be one of {AGGREGATIONS}, "
                f"got {self.aggregate!r}")


def parse_recipe(text: str) -> FigureRecipe:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise RecipeError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise RecipeError("recipe must be a mapping")
    known = {"kind", "x", "panels", "x_label", "title", "aggregate",
             "out_name"}
    unknown = set(doc) - known
    if unknown:
        raise RecipeError(f"unknown recipe fields {sorted(unknown)}")
    raw_panels = doc.get("panels") or ()
    panels = []
    for i, p in enumerate(raw_panels):
        if not isinstance(p, dict) or set(p) - {"y", "label"}:
            raise RecipeError(f"panels[{i}] must map y (and optional label)")
        panels.append(PanelSpec(y=str(p.get("y", "")),
                                label=str(p.get("label", ""))))
    return FigureRecipe(
        kind=str(doc.get("kind", "")),
        x=str(doc.get("x", "")),
        panels=tuple(panels),
        x_label=str(doc.get("x_label", "")),
        title=str(doc.get("title", "")),
        aggregate=str(doc.get("aggregate", "mean-std")),
        out_name=str(doc.get("out_name", "figure.png")),
    )


def load_recipe(path) -> FigureRecipe:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_recipe(fh.read())
