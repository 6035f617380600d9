"""Figures for solver output: the recovered diagonal and the source map.

Figures are drawn on an Agg canvas without touching pyplot state and
saved without software metadata, so identical inputs give identical PNGs.
"""

import functools

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
}


def _styled(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        with mpl.rc_context(STYLE):
            return func(*args, **kwargs)
    return wrapper


def _new_figure(width=4.8, height=3.4):
    fig = Figure(figsize=(width, height), dpi=120)
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path):
    import io

    from .io import atomic_write_bytes

    buf = io.BytesIO()
    fig.savefig(buf, format="png", metadata={"Software": None})
    atomic_write_bytes(path, buf.getvalue())


@_styled
def plot_diagonal(path, diag, points=(), estimates=(), truth_diag=None, threshold=0.0):
    """Stem plot of ``|Re X_ii|`` above ``threshold`` against the 1-based index.

    Cluster members are drawn in their cluster's colour, dashed lines mark
    cluster boundaries and black circles the ground truth.
    """
    fig, ax = _new_figure()
    diag = np.asarray(diag)
    vals = np.abs(diag.real)
    idx = np.flatnonzero(vals > threshold)
    if idx.size:
        ax.vlines(idx + 1, 0, vals[idx], color="0.6", lw=0.8)
        ax.plot(idx + 1, vals[idx], "o", ms=3, color="0.5", label="solution")
    for c, est in enumerate(estimates):
        members = np.asarray(est.member_indices)
        ax.plot(members, vals[members - 1], "s", ms=3.5, color=f"C{c}")
        ax.axvline(members.min() - 0.5, ls="--", lw=0.6, color=f"C{c}")
        ax.axvline(members.max() + 0.5, ls="--", lw=0.6, color=f"C{c}")
    if truth_diag is not None:
        t = np.asarray(truth_diag).real
        tidx = np.flatnonzero(t)
        ax.plot(tidx + 1, t[tidx], "o", mfc="none", mec="k", ms=6, label="ground truth")
    ax.set_xlim(0.5, len(diag) + 0.5)
    ax.set_xlabel("diagonal index")
    ax.set_ylabel(r"$|\mathrm{Re}\,X_{ii}|$")
    if idx.size or truth_diag is not None:
        ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    _save(fig, path)


@_styled
def plot_source_map(path, grid, points=(), estimates=(), truth=()):
    """Grid-plane scatter of above-threshold entries, cluster centres and truth."""
    fig, ax = _new_figure(4.0, 3.8)
    if points:
        xy = grid.plane_coords(np.array([p.position for p in points]))
        s = np.array([p.strength for p in points])
        size = 8 + 120 * s / s.max() if s.max() > 0 else 8
        ax.scatter(xy[:, 0], xy[:, 1], s=size, c="0.6", lw=0)
    for c, est in enumerate(estimates):
        cx, cy = grid.plane_coords(np.array(est.centroid))
        ax.plot(cx, cy, "x", color=f"C{c}", ms=7, mew=1.5)
        ax.annotate(f"{est.total_strength:.4f}", (cx, cy), xytext=(4, -10),
                    textcoords="offset points", color=f"C{c}", fontsize=7)
    for t in truth:
        tx, ty = grid.plane_coords(np.array([t["x"], t["y"], t["z"]]))
        ax.plot(tx, ty, "o", mfc="none", mec="k", ms=8)
        ax.annotate(f"{t['strength']:.4f}", (tx, ty), xytext=(4, 4),
                    textcoords="offset points", fontsize=7)
    corner = grid.plane_coords(np.array(grid.origin))
    ext = np.array([(grid.nx - 1) * grid.spacing, (grid.ny - 1) * grid.spacing])
    pad = grid.spacing
    ax.set_xlim(corner[0] - pad, corner[0] + ext[0] + pad)
    ax.set_ylim(corner[1] - pad, corner[1] + ext[1] + pad)
    ax.set_aspect("equal")
    ax.grid(True, lw=0.3, color="0.85")
    ax.set_xlabel("position / m")
    ax.set_ylabel("position / m")
    fig.tight_layout()
    _save(fig, path)
