"""Output serialisation: provenance-stamped tables, JSON records, heatmaps.

Every file embeds the fully resolved configuration and the code version, and
contains nothing run-dependent beyond the data itself (no timestamps), so
reruns with identical config and seed are byte-identical.  Tables are
tab-separated text with '#'-prefixed JSON metadata lines; records are sorted
JSON.  Images are SVG with the creation date stripped.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from ._version import __version__

FLOAT_FORMAT = "%.12e"


def _meta_block(meta: dict) -> str:
    payload = {"version": __version__, **meta}
    encoded = json.dumps(payload, sort_keys=True, default=_json_default)
    return f"# {encoded}\n"


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serialisable: {type(value)}")


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return FLOAT_FORMAT % value


def write_table(path: str, columns: dict[str, np.ndarray], meta: dict) -> None:
    """Tab-separated table with a metadata header line."""
    names = list(columns.keys())
    length = len(next(iter(columns.values())))
    for name, col in columns.items():
        if len(col) != length:
            raise ValueError(f"column {name!r} has length {len(col)} != {length}")
    lines = [_meta_block(meta), "\t".join(names) + "\n"]
    for k in range(length):
        lines.append("\t".join(_format_cell(columns[name][k]) for name in names) + "\n")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.writelines(lines)


def write_record(path: str, record: dict) -> None:
    """Nested machine-readable summary, sorted keys, trailing newline."""
    payload = {"version": __version__, **record}
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2, default=_json_default)
        handle.write("\n")


def records_columns(records) -> dict[str, list]:
    """Column view of a squeezing-record series for tabular output."""
    cols: dict[str, list] = {
        "t": [r.time for r in records],
        "lambda_t": [r.lambda_t for r in records],
        "xi2_min": [r.xi2_min for r in records],
        "xi2_min_db": [r.xi2_min_db for r in records],
        "theta_opt_deg": [r.theta_opt_deg for r in records],
        "n_minus": [r.n_minus for r in records],
        "n_zero": [r.n_zero for r in records],
        "n_plus": [r.n_plus for r in records],
        "mean_qzz_minus_qyy": [r.mean_qzz_minus_qyy for r in records],
        "var_sx": [r.var_sx for r in records],
        "var_qyz": [r.var_qyz for r in records],
        "cov_sx_qyz": [r.cov_sx_qyz for r in records],
        "defined": [r.defined for r in records],
    }
    if any(r.xi2_stderr is not None for r in records):
        cols["xi2_stderr"] = [
            math.nan if r.xi2_stderr is None else r.xi2_stderr for r in records
        ]
    if any(r.mean_jumps is not None for r in records):
        cols["mean_jumps"] = [
            math.nan if r.mean_jumps is None else r.mean_jumps for r in records
        ]
    return cols


def heatmap_columns(lambda_t, theta_deg, grids: dict[str, np.ndarray]) -> dict:
    """Long-format columns for one or more (theta, t) grids."""
    n_theta, n_t = next(iter(grids.values())).shape
    lt = np.repeat(np.asarray(lambda_t)[None, :], n_theta, axis=0).ravel()
    th = np.repeat(np.asarray(theta_deg)[:, None], n_t, axis=1).ravel()
    cols = {"lambda_t": lt, "theta_deg": th}
    for name, grid in grids.items():
        cols[name] = np.asarray(grid).ravel()
        with np.errstate(divide="ignore", invalid="ignore"):
            cols[f"{name}_db"] = 10.0 * np.log10(np.asarray(grid).ravel())
    return cols


def sphere_grid_columns(grid) -> dict:
    n_polar, n_azim = grid.values.shape
    theta = np.repeat(grid.theta_s[:, None], n_azim, axis=1).ravel()
    phi = np.repeat(grid.phi[None, :], n_polar, axis=0).ravel()
    return {"theta_s_rad": theta, "phi_rad": phi, "q": grid.values.ravel()}


def matplotlib_backend():
    """Agg backend with deterministic SVG ids (fixed hash salt, no dates)."""
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "spincavity"
    import matplotlib.pyplot as plt

    return plt


def save_pole_view(path: str, grid, title: str = "") -> None:
    """South-pole view of a Q-function grid as an SVG heatmap."""
    plt = matplotlib_backend()

    fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(4.2, 4.0))
    values = grid.values / max(grid.values.max(), 1e-300)
    phi_edges = np.concatenate([grid.phi, [2.0 * np.pi]])
    mesh = ax.pcolormesh(
        phi_edges,
        grid.theta_s,
        np.concatenate([values, values[:, :1]], axis=1),
        cmap="inferno",
        shading="auto",
    )
    ax.set_yticklabels([])
    ax.set_xticklabels([])
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, shrink=0.8)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_mollweide(path: str, grid, title: str = "") -> None:
    """Whole-sphere Mollweide view of a Q-function grid as an SVG heatmap.

    The ladder ground state sits at the south pole, so latitude is
    theta_s - pi/2."""
    plt = matplotlib_backend()

    fig, ax = plt.subplots(
        subplot_kw={"projection": "mollweide"}, figsize=(5.6, 3.2)
    )
    values = grid.values / max(grid.values.max(), 1e-300)
    lon = np.where(grid.phi <= np.pi, grid.phi, grid.phi - 2.0 * np.pi)
    order = np.argsort(lon)
    lat = grid.theta_s - 0.5 * np.pi
    mesh = ax.pcolormesh(
        lon[order], lat, values[:, order], cmap="inferno", shading="auto"
    )
    ax.set_xticklabels([])
    ax.set_yticklabels([])
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, shrink=0.7)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_heatmap_image(
    path: str, lambda_t, theta_deg, grid_db, title: str = ""
) -> None:
    """xi2(theta, t) panel in dB as an SVG image."""
    plt = matplotlib_backend()

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    mesh = ax.pcolormesh(
        np.asarray(lambda_t),
        np.asarray(theta_deg),
        np.asarray(grid_db),
        cmap="viridis",
        shading="auto",
    )
    ax.set_xlabel(r"$\Lambda t$")
    ax.set_ylabel(r"$\theta$ (deg)")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label=r"$\xi^2$ (dB)")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
