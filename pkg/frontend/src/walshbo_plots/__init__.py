"""Figures from optimizer experiment CSVs."""

__version__ = "0.1.0"

from .core import (CurveSpec, SchemaError, plot_convergence, plot_diversity,
                   read_run, read_summary, recompute_summary)
