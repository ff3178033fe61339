"""Offline plotting for scenario run artifacts.

Renders the file formats written by the simulation CLI — ``diagnostics.csv``,
``trajectory.csv``, ``summary.json``, and ``snapshot-*.npz`` — into static
images.  The reader side is deliberately schema-based: this package never
imports the simulation code, so plots can be produced on any machine that has
the artifact files.

Plot kinds
----------
growth
    log-scale time series of a diagnostics column (default ``grad_sup``)
    with a least-squares exponential-rate annotation.
trajectory
    particle path in the (X1, X2) plane, with the observation square and the
    exit time marked when a run summary is supplied.
diagnostics
    four-panel time-series overview: corner integral, residual terms,
    log-sum of the coordinates, and conserved-quantity drift.
heatmap
    filled pseudocolor of a vorticity snapshot on the fundamental quadrant.
"""

from .render import PlotSpec, SchemaError, render

__all__ = ["PlotSpec", "SchemaError", "render"]
