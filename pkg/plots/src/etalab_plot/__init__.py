"""etalab-plot: render etalab CSV outputs into publication-style figures.

The package consumes only the public CSV files written by the etalab
harness (no library coupling), so any simulation output with the same
schemas renders identically.
"""

__version__ = "0.1.0"

from .render import PlotSpec, PlotError, SchemaError, EmptyDataError, render

__all__ = ["PlotSpec", "PlotError", "SchemaError", "EmptyDataError", "render"]
