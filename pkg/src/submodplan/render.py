"""Map and trajectory rendering: ASCII for terminals, PNG rasters and
summary charts (via matplotlib) for reports."""

from __future__ import annotations

import io

import numpy as np

from .environments import NavMap, parse_cell
from .mdp import Trajectory

# Figure 2-style color convention.
COLOR_OBSTACLE = (214, 39, 40)     # red
COLOR_NAVIGABLE = (31, 119, 180)   # blue
COLOR_TARGET = (255, 165, 0)       # orange
COLOR_PATH = (44, 160, 44)         # green


def trajectory_cells(traj: Trajectory) -> list:
    cells = [parse_cell(sid) for sid, _act in traj.pairs]
    cells.append(parse_cell(traj.final_state))
    return cells


def _check_bounds(nav_map: NavMap, cells) -> None:
    rows, cols = nav_map.navigable.shape
    for r, c in cells:
        if not (1 <= r <= rows and 1 <= c <= cols):
            raise ValueError(f"trajectory cell ({r}, {c}) outside the {rows}x{cols} map")


def render_ascii(nav_map: NavMap, traj: Trajectory | None = None) -> str:
    """Obstacles '#', navigable '.', targets 'E', path '*' (path overdraws
    targets)."""
    rows, cols = nav_map.navigable.shape
    grid = [
        ["." if nav_map.navigable[r, c] else "#" for c in range(cols)]
        for r in range(rows)
    ]
    for r, c in nav_map.targets:
        grid[r - 1][c - 1] = "E"
    if traj is not None:
        cells = trajectory_cells(traj)
        _check_bounds(nav_map, cells)
        for r, c in cells:
            grid[r - 1][c - 1] = "*"
    return "\n".join("".join(row) for row in grid) + "\n"


def render_raster(nav_map: NavMap, traj: Trajectory | None = None, scale: int = 16) -> np.ndarray:
    """RGB uint8 raster of shape (rows*scale, cols*scale, 3)."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    rows, cols = nav_map.navigable.shape
    img = np.empty((rows, cols, 3), dtype=np.uint8)
    img[~nav_map.navigable] = COLOR_OBSTACLE
    img[nav_map.navigable] = COLOR_NAVIGABLE
    for r, c in nav_map.targets:
        img[r - 1, c - 1] = COLOR_TARGET
    if traj is not None:
        cells = trajectory_cells(traj)
        _check_bounds(nav_map, cells)
        for r, c in cells:
            img[r - 1, c - 1] = COLOR_PATH
    return np.kron(img, np.ones((scale, scale, 1), dtype=np.uint8))


def raster_png_bytes(raster: np.ndarray) -> bytes:
    import matplotlib.image

    buf = io.BytesIO()
    matplotlib.image.imsave(buf, raster, format="png")
    return buf.getvalue()


def render_trajectory(nav_map: NavMap, traj: Trajectory | None, fmt: str = "ascii",
                      scale: int = 16):
    """ASCII text or PNG bytes of the map with the trajectory drawn on it."""
    if fmt == "ascii":
        return render_ascii(nav_map, traj)
    if fmt == "png":
        return raster_png_bytes(render_raster(nav_map, traj, scale=scale))
    raise ValueError(f"unknown render format {fmt!r}")


def save_trajectory_image(nav_map: NavMap, traj: Trajectory | None, path,
                          scale: int = 16) -> None:
    with open(path, "wb") as fh:
        fh.write(render_trajectory(nav_map, traj, fmt="png", scale=scale))


def summary_figure(summary_rows, env: str, path) -> None:
    """Bar chart of per-algorithm mean objective with std error bars."""
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure

    labels = [s.algorithm for s in summary_rows]
    means = [s.mean for s in summary_rows]
    stds = [s.std for s in summary_rows]
    fig = Figure(figsize=(max(4.0, 1.1 * len(labels)), 3.6))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    pos = np.arange(len(labels))
    ax.bar(pos, means, yerr=stds, capsize=3, color="#4878a8")
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("objective value")
    ax.set_title(env)
    ax.axhline(0.0, color="black", linewidth=0.6)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
