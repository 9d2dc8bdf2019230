"""Figure rendering for the PCA Wald-statistic harness's frozen outputs."""

from wald_plots.io import Replications, SchemaError, load_replications, load_summary
from wald_plots.render import PLOT_KINDS, PlotJob, render

__version__ = "0.1.0"

__all__ = [
    "PLOT_KINDS", "PlotJob", "Replications", "SchemaError",
    "load_replications", "load_summary", "render",
]
