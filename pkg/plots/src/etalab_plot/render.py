"""Rendering of etalab CSVs: correlation heatmaps, distance-resolved
timeseries with grand-canonical overlays, and structure-factor waterfalls.

Input schemas (headers must match exactly):
    heatmap     corr_matrix.csv        t,i,j,re,im,abs
    timeseries  corr_timeseries.csv    t,j,re,im,abs,stderr
    waterfall   structure_factor.csv   t,n,qa,value
    overlay     corr_matrix.csv        t,i,j,re,im,abs (GCE prediction)

Rendering is read-only over its inputs and writes a single image file per
spec; nothing is written when validation fails.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

KINDS = ("heatmap", "timeseries", "waterfall")

REQUIRED_COLUMNS = {
    "heatmap": ["t", "i", "j", "re", "im", "abs"],
    "timeseries": ["t", "j", "re", "im", "abs", "stderr"],
    "waterfall": ["t", "n", "qa", "value"],
    "overlay": ["t", "i", "j", "re", "im", "abs"],
}


class PlotError(Exception):
    """Base error for plot specs and rendering."""


class SchemaError(PlotError):
    """Input CSV does not carry the expected columns."""


class EmptyDataError(PlotError):
    """Input CSV has headers but no rows."""


@dataclass
class PlotSpec:
    kind: str
    input: str
    output: str
    xlabel: str = None
    ylabel: str = None
    title: str = None
    gce_overlay: str = None
    time: float = None  # heatmap: which output time to draw (default last)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise PlotError(f"unknown plot spec fields: {sorted(unknown)}")
        for key in ("kind", "input", "output"):
            if key not in data:
                raise PlotError(f"plot spec is missing {key!r}")
        spec = cls(**data)
        if spec.kind not in KINDS:
            raise PlotError(f"unknown kind {spec.kind!r}; pick one of {KINDS}")
        return spec


def _load(path, role):
    path = Path(path)
    if not path.exists():
        raise PlotError(f"input file does not exist: {path}")
    frame = pd.read_csv(path)
    missing = [c for c in REQUIRED_COLUMNS[role] if c not in frame.columns]
    if missing:
        raise SchemaError(
            f"{path} is missing column(s) {missing}; expected "
            f"{REQUIRED_COLUMNS[role]} for a {role} input"
        )
    if frame.empty:
        raise EmptyDataError(f"{path} has headers but no data rows")
    return frame


def _corr_matrix_at(frame, time):
    times = np.sort(frame["t"].unique())
    if time is None:
        t_sel = times[-1]
    else:
        idx = np.argmin(np.abs(times - time))
        t_sel = times[idx]
    sub = frame[frame["t"] == t_sel]
    M = int(max(sub["i"].max(), sub["j"].max())) + 1
    mat = np.zeros((M, M))
    for _, row in sub.iterrows():
        mat[int(row["i"]), int(row["j"])] = row["abs"]
    return t_sel, mat


def _render_heatmap(spec, ax):
    frame = _load(spec.input, "heatmap")
    t_sel, mat = _corr_matrix_at(frame, spec.time)
    image = ax.imshow(
        mat, origin="lower", cmap="viridis", vmin=0.0, vmax=mat.max() or 1.0
    )
    ax.set_xlabel(spec.xlabel or "site j")
    ax.set_ylabel(spec.ylabel or "site i")
    ax.set_title(spec.title or f"|pair correlations| at t = {t_sel:g}")
    plt.colorbar(image, ax=ax, shrink=0.85)


def _overlay_levels(path):
    frame = _load(path, "overlay")
    _, mat = _corr_matrix_at(frame, None)
    M = mat.shape[0]
    levels = {}
    for j in range(M):
        entries = [mat[i, i + j] for i in range(M - j)]
        levels[j] = float(np.mean(entries))
    return levels


def _render_timeseries(spec, ax):
    frame = _load(spec.input, "timeseries")
    levels = _overlay_levels(spec.gce_overlay) if spec.gce_overlay else {}
    cmap = plt.get_cmap("tab10")
    for j, group in frame.groupby("j"):
        j = int(j)
        color = cmap(j % 10)
        group = group.sort_values("t")
        ax.plot(group["t"], group["abs"], color=color, label=f"j = {j}")
        if np.any(group["stderr"] > 0):
            ax.fill_between(
                group["t"],
                group["abs"] - group["stderr"],
                group["abs"] + group["stderr"],
                color=color,
                alpha=0.25,
                linewidth=0,
            )
        if j in levels:
            ax.axhline(levels[j], color=color, linestyle="--", linewidth=1.0)
    ax.set_xlabel(spec.xlabel or "t")
    ax.set_ylabel(spec.ylabel or "distance-averaged |pair correlation|")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(fontsize=8, ncol=2)


def _render_waterfall(spec, ax):
    frame = _load(spec.input, "waterfall")
    times = np.sort(frame["t"].unique())
    span = frame["value"].max() - frame["value"].min()
    offset = 0.35 * (span if span > 0 else 1.0)
    cmap = plt.get_cmap("plasma")
    for rank, t_sel in enumerate(times):
        sub = frame[frame["t"] == t_sel].sort_values("qa")
        shade = cmap(rank / max(len(times) - 1, 1) * 0.85)
        ax.plot(
            sub["qa"],
            sub["value"] + rank * offset,
            color=shade,
            label=f"t = {t_sel:g}" if len(times) <= 8 else None,
        )
    ax.set_xlabel(spec.xlabel or "q a")
    ax.set_ylabel(spec.ylabel or "D(q) (offset per time)")
    ax.set_xticks([0, np.pi / 2, np.pi, 3 * np.pi / 2, 2 * np.pi])
    ax.set_xticklabels(["0", "pi/2", "pi", "3pi/2", "2pi"])
    if spec.title:
        ax.set_title(spec.title)
    if len(times) <= 8:
        ax.legend(fontsize=8)


_RENDERERS = {
    "heatmap": _render_heatmap,
    "timeseries": _render_timeseries,
    "waterfall": _render_waterfall,
}


def render(spec):
    """Render one figure; returns the output path. No file on failure."""
    if not isinstance(spec, PlotSpec):
        spec = PlotSpec.from_dict(dict(spec))
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=150)
    try:
        _RENDERERS[spec.kind](spec, ax)
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, bbox_inches="tight")
    finally:
        plt.close(fig)
    return Path(spec.output)
