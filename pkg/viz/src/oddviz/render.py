"""Schema-based renderers for the scenario run artifacts."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
# deterministic SVG element ids so identical inputs give identical bytes
matplotlib.rcParams["svg.hashsalt"] = "oddviz"

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("growth", "trajectory", "diagnostics", "heatmap")


class SchemaError(ValueError):
    """An input file does not match the documented artifact schema."""


@dataclass(frozen=True)
class PlotSpec:
    """One render request.

    Parameters
    ----------
    kind : str
        One of ``growth``, ``trajectory``, ``diagnostics``, ``heatmap``.
    inputs : list of str
        Artifact paths; every kind here consumes exactly one input file
        (CSV for the time-series kinds, NPZ for ``heatmap``).
    output : str
        Image path; the extension selects the backend format (png/svg/pdf).
    summary : str, optional
        Path to the run's ``summary.json``; used for the exit-box overlay,
        the exit-time marker, and fitted-rate annotations when present.
    quantity : str
        Diagnostics column plotted by the ``growth`` kind.
    dpi : int
        Raster resolution.
    title : str, optional
        Figure title override.
    """

    kind: str
    inputs: list = field(default_factory=list)
    output: str = "plot.png"
    summary: str | None = None
    quantity: str = "grad_sup"
    dpi: int = 150
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown plot kind {self.kind!r}; "
                              f"expected one of {KINDS}")
        if len(self.inputs) != 1:
            raise SchemaError(f"{self.kind} takes exactly one input file, "
                              f"got {len(self.inputs)}")
        for p in list(self.inputs) + ([self.summary] if self.summary else []):
            if not os.path.exists(p):
                raise SchemaError(f"input file not found: {p}")


# ---------------------------------------------------------------------------
# Readers
# ---------------------------------------------------------------------------

def read_table(path, required=()):
    """Read a headered CSV into a dict of float columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file, expected a CSV header")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}; "
                          f"header is {header}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r])
    except ValueError as e:
        raise SchemaError(f"{path}: non-numeric cell in body ({e})") from None
    if data.size and data.shape[1] != len(header):
        raise SchemaError(f"{path}: ragged rows vs header of {len(header)}")
    data = data.reshape(-1, len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


def read_summary(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(data, dict) or "config" not in data:
        raise SchemaError(f"{path}: expected a run summary with a "
                          f"'config' section")
    return data


def read_snapshot(path):
    try:
        z = np.load(path, allow_pickle=False)
    except Exception as e:
        raise SchemaError(f"{path}: cannot read NPZ ({e})") from None
    with z:
        for key in ("values", "n", "time"):
            if key not in z:
                raise SchemaError(f"{path}: snapshot missing key {key!r}")
        return np.asarray(z["values"]), int(z["n"]), float(z["time"])


def _exit_box_side(summary):
    cfg = summary["config"]
    if cfg.get("box_side") is not None:
        return float(cfg["box_side"])
    return float(np.exp(-cfg["A"] * cfg["T"]))


# ---------------------------------------------------------------------------
# Renderers
# ---------------------------------------------------------------------------

def _empty(ax, message):
    ax.text(0.5, 0.5, f"no data: {message}", transform=ax.transAxes,
            ha="center", va="center", color="crimson")


def _fit_rate(t, v):
    """Least-squares slope of log(v) against t; None when not fittable."""
    keep = v > 0
    if keep.sum() < 3:
        return None
    slope, _ = np.polyfit(t[keep], np.log(v[keep]), 1)
    return float(slope)


def _render_growth(spec, fig):
    table = read_table(spec.inputs[0], required=("t", spec.quantity))
    ax = fig.add_subplot(111)
    t, v = table["t"], table[spec.quantity]
    meta = {}
    if t.size == 0:
        _empty(ax, "empty series")
        meta["empty"] = True
    else:
        ax.semilogy(t, v, "o-", ms=3, lw=1.2, color="tab:blue")
        slope = _fit_rate(t, v)
        if slope is not None:
            meta["slope"] = slope
            ax.semilogy(t, np.exp(slope * (t - t[0]) + np.log(v[v > 0][0])),
                        "--", color="tab:gray", lw=1.0)
            ax.annotate(f"rate {slope:.3f} / unit time", xy=(0.05, 0.92),
                        xycoords="axes fraction")
        if spec.summary:
            growth = read_summary(spec.summary).get("growth", {})
            fit = growth.get(spec.quantity)
            if fit and "rate" in fit:
                meta["summary_rate"] = fit["rate"]
                ax.annotate(f"run fit {fit['rate']:.3f} "
                            f"(R²={fit.get('r_squared', float('nan')):.3f})",
                            xy=(0.05, 0.85), xycoords="axes fraction")
    ax.set_xlabel("t")
    ax.set_ylabel(spec.quantity)
    ax.set_title(spec.title or f"growth of {spec.quantity}")
    return meta


def _render_trajectory(spec, fig):
    table = read_table(spec.inputs[0], required=("t", "X1", "X2"))
    ax = fig.add_subplot(111)
    ax.set_aspect("equal")
    t, x1, x2 = table["t"], table["X1"], table["X2"]
    meta = {}
    if t.size == 0:
        _empty(ax, "empty trajectory")
        meta["empty"] = True
    else:
        ax.plot(x1, x2, "-", lw=1.2, color="tab:blue")
        ax.plot(x1[0], x2[0], "o", color="tab:green", label="start")
        ax.plot(x1[-1], x2[-1], "s", color="tab:red", label="end")
        if spec.summary:
            summary = read_summary(spec.summary)
            side = _exit_box_side(summary)
            ax.add_patch(plt.Rectangle((0, 0), side, side, fill=False,
                                       ls="--", ec="tab:gray",
                                       label="observation box"))
            t_star = summary.get("exit_time")
            if t_star is not None:
                j = int(np.argmin(np.abs(t - t_star)))
                ax.plot(x1[j], x2[j], "*", ms=12, color="tab:orange",
                        label=f"exit T*={t_star:.3f}")
                meta["exit_time"] = float(t_star)
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("X1")
    ax.set_ylabel("X2")
    ax.set_title(spec.title or "corner trajectory")
    return meta


_DIAG_PANELS = (
    (("key_value",), "corner integral I(X(t))", False),
    (("b1", "b2"), "residual terms B1, B2", False),
    (("log_sum",), "log X1 + log X2", False),
    (("energy", "enstrophy"), "conserved quantities", False),
)


def _render_diagnostics(spec, fig):
    need = ("t",) + tuple(c for cols, _, _ in _DIAG_PANELS for c in cols)
    table = read_table(spec.inputs[0], required=need)
    t = table["t"]
    meta = {"panels": len(_DIAG_PANELS)}
    for i, (cols, label, log) in enumerate(_DIAG_PANELS, start=1):
        ax = fig.add_subplot(2, 2, i)
        if t.size == 0:
            _empty(ax, "empty series")
            meta["empty"] = True
        else:
            for c in cols:
                ax.plot(t, table[c], lw=1.2, label=c)
            if "key_error" in table and cols == ("key_value",):
                ax.fill_between(t, table["key_value"] - table["key_error"],
                                table["key_value"] + table["key_error"],
                                alpha=0.25)
            if len(cols) > 1:
                ax.legend(fontsize=7)
        ax.set_title(label, fontsize=9)
        ax.set_xlabel("t", fontsize=8)
    fig.suptitle(spec.title or "diagnostics overview")
    return meta


def _render_heatmap(spec, fig):
    values, n, time = read_snapshot(spec.inputs[0])
    ax = fig.add_subplot(111)
    vmax = float(np.abs(values).max()) or 1.0
    im = ax.imshow(values.T, origin="lower", extent=(0, 1, 0, 1),
                   cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    fig.colorbar(im, ax=ax, label="vorticity")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(spec.title or f"vorticity at t={time:.3f} (N={n})")
    return {"n": n, "time": time}


_RENDERERS = {
    "growth": _render_growth,
    "trajectory": _render_trajectory,
    "diagnostics": _render_diagnostics,
    "heatmap": _render_heatmap,
}


def render(spec: PlotSpec) -> dict:
    """Render one plot; returns metadata (fit slopes, exit time, ...).

    Read-only on its inputs and deterministic: embedded timestamps are
    suppressed so identical inputs give identical image bytes.
    """
    fig = plt.figure(figsize=(7.5, 6) if spec.kind == "diagnostics"
                     else (6, 4.5), constrained_layout=True)
    try:
        meta = _RENDERERS[spec.kind](spec, fig)
        ext = os.path.splitext(spec.output)[1].lower()
        metadata = {"Date": None} if ext == ".svg" else \
            {"Software": "oddviz", "Creation Time": ""} if ext == ".png" \
            else {"CreationDate": None}
        fig.savefig(spec.output, dpi=spec.dpi, metadata=metadata)
    finally:
        plt.close(fig)
    meta["output"] = spec.output
    return meta
