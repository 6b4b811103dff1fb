"""Command-line front end: render one recipe against one or more CSVs."""

from __future__ import annotations

import argparse
import sys

from .recipe import RecipeError, load_recipe
from .render import render

EXIT_OK = 0
EXIT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render experiment CSVs into figure files")
    parser.add_argument("--recipe", required=True, help="recipe YAML file")
    parser.add_argument("--csv", required=True, nargs="+",
                        help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        recipe = load_recipe(args.recipe)
        path = render(recipe, args.csv, args.out)
    except RecipeError as exc:
        print(f"recipe error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
