"""Figures built from the simulator's CSV/JSON artifacts.

The package reads only the documented file formats (samples.csv,
margins.csv, paths.csv, reports.csv) and never imports the simulator.
"""

from .figures import FigureSpec, mda_rows, qq_points, render
from .schema import SchemaError

__all__ = ["FigureSpec", "SchemaError", "mda_rows", "qq_points", "render"]
