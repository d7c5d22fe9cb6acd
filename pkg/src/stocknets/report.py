"""Degree-distribution figures rendered from the emitted CSV artifacts.

Output is deterministic SVG: fixed 800x600 canvas, fixed axes placement,
hashed ids salted with a constant, and no embedded timestamps, so repeated
renders of the same inputs are byte-identical. The axes rectangle is pinned
so a data point's pixel position is an affine function of the axis limits.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import DataError

# SVG output is written at 72 units per inch, so this figure size makes the
# viewBox exactly 800x600
CANVAS_UNITS = (800.0, 600.0)
_FIGSIZE = (CANVAS_UNITS[0] / 72.0, CANVAS_UNITS[1] / 72.0)
# axes rectangle in figure fractions; pinned for the coordinate oracle
AXES_RECT = (0.125, 0.11, 0.775, 0.77)
PAD_FRACTION = 0.05
_RC = {"svg.hashsalt": "stocknets", "svg.fonttype": "path"}


def axis_limits(values: list[float]) -> tuple[float, float]:
    """Data range padded by 5% on each side; a flat range gets a 0.5 pad."""
    lo, hi = min(values), max(values)
    if hi > lo:
        pad = PAD_FRACTION * (hi - lo)
    else:
        pad = 0.5
    return lo - pad, hi + pad


def _read_points(path: Path) -> list[tuple[float, float]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or len(header) != 2:
            raise DataError(f"{path.name}: expected a two-column header")
        points = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise DataError(f"{path.name} line {line_no}: expected 2 cells")
            try:
                points.append((float(row[0]), float(row[1])))
            except ValueError:
                raise DataError(
                    f"{path.name} line {line_no}: non-numeric cell") from None
    return points


def _new_axes():
    fig = plt.figure(figsize=_FIGSIZE)
    ax = fig.add_axes(AXES_RECT)
    return fig, ax


def _finish(fig, ax, points, path: Path) -> None:
    if points:
        ax.set_xlim(*axis_limits([p[0] for p in points]))
        ax.set_ylim(*axis_limits([p[1] for p in points]))
    else:
        ax.set_xlim(0.0, 1.0)
        ax.set_ylim(0.0, 1.0)
        ax.annotate("no data", (0.5, 0.5), ha="center", va="center")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


SERIES_GID = "series"  # SVG group id wrapping the data markers


def render_cdf(source: Path, target: Path) -> None:
    points = _read_points(source)
    with plt.rc_context(_RC):
        fig, ax = _new_axes()
        if points:
            line, = ax.plot([p[0] for p in points], [p[1] for p in points],
                            marker="o", linestyle="-")
            line.set_gid(SERIES_GID)
        ax.set_xlabel("degree k")
        ax.set_ylabel("cumulative probability")
        _finish(fig, ax, points, target)


def render_loglog(source: Path, target: Path) -> None:
    points = _read_points(source)
    with plt.rc_context(_RC):
        fig, ax = _new_axes()
        if points:
            line, = ax.plot([p[0] for p in points], [p[1] for p in points],
                            marker="s", linestyle="none")
            line.set_gid(SERIES_GID)
        ax.set_xlabel("ln k")
        ax.set_ylabel("ln P(k)")
        _finish(fig, ax, points, target)


def render_plots(out_dir: str | Path) -> list[Path]:
    """Render every degree distribution CSV in ``out_dir`` to SVG.

    ``degree_cdf_<stage>.csv`` becomes ``cdf_<stage>.svg`` and
    ``degree_loglog_<stage>.csv`` becomes ``loglog_<stage>.svg``.
    """
    out = Path(out_dir)
    if not out.is_dir():
        raise DataError(f"output directory not found: {out}")
    cdf_files = sorted(out.glob("degree_cdf_*.csv"))
    loglog_files = sorted(out.glob("degree_loglog_*.csv"))
    if not cdf_files and not loglog_files:
        raise DataError(f"no degree distribution files in {out}")
    rendered = []
    for src in cdf_files:
        dst = out / (src.stem.replace("degree_cdf_", "cdf_") + ".svg")
        render_cdf(src, dst)
        rendered.append(dst)
    for src in loglog_files:
        dst = out / (src.stem.replace("degree_loglog_", "loglog_") + ".svg")
        render_loglog(src, dst)
        rendered.append(dst)
    return rendered


def marker_oracle(points: list[tuple[float, float]],
                  xlim: tuple[float, float],
                  ylim: tuple[float, float]) -> list[tuple[float, float]]:
    """Expected SVG coordinates of plotted markers on the pinned canvas.

    SVG y points down from the top-left corner, so the vertical map flips.
    """
    width, height = CANVAS_UNITS
    ax_x0 = AXES_RECT[0] * width
    ax_y0 = AXES_RECT[1] * height
    ax_w = AXES_RECT[2] * width
    ax_h = AXES_RECT[3] * height
    out = []
    for x, y in points:
        px = ax_x0 + (x - xlim[0]) / (xlim[1] - xlim[0]) * ax_w
        py = height - (ax_y0 + (y - ylim[0]) / (ylim[1] - ylim[0]) * ax_h)
        out.append((px, py))
    return out
