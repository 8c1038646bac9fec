"""Panel definitions and rendering for fiberqed CSV outputs.

Reads the documented CSV format ('#'-prefixed metadata lines, one header row,
comma-separated floats) and renders heatmaps, line plots and log-scale
variants with matplotlib.  Rendering is strictly read-only over the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(ValueError):
    """CSV did not match the panel's expected schema."""


def read_csv(path):
    """Parse a fiberqed CSV into (meta, {column: array-or-list})."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    meta = {}
    rows = []
    names = None
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, val = body.partition(":")
                meta[key.strip()] = val.strip()
            continue
        if names is None:
            names = line.split(",")
            continue
        rows.append(line.split(","))
    if names is None or not rows:
        raise SchemaError(f"{path}: empty table (no header or no data rows)")
    cols = {}
    for i, n in enumerate(names):
        vals = [r[i] for r in rows]
        try:
            cols[n] = np.array([float(v) for v in vals])
        except ValueError:
            cols[n] = vals
    return meta, cols


@dataclass(frozen=True)
class PanelSpec:
    """One rendered panel: which CSV, which kind of plot, which columns."""

    name: str
    csv: str
    kind: str                       # "heatmap" | "line" | "log-line"
    x: str
    y: str | tuple = ()             # heatmap: y column; line: series column(s)
    value: str = ""                 # heatmap value column
    overlay: tuple = ()             # line: dotted overlay series (e.g. asymptotic)
    log_scale: bool = False         # log color/axis for shifts and concurrences
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    absolute: bool = False          # plot |value| (signed fields on log scale)

    def required_columns(self):
        cols = [self.x]
        if self.kind == "heatmap":
            cols += [self.y, self.value]
        else:
            cols += list(self.y if isinstance(self.y, tuple) else (self.y,))
            cols += list(self.overlay)
        return cols


def _validate(spec: PanelSpec, cols):
    missing = [c for c in spec.required_columns() if c not in cols]
    if missing:
        raise SchemaError(
            f"{spec.csv}: missing column(s) {missing} required by panel "
            f"{spec.name!r} ({spec.kind}); found {sorted(cols)}"
        )


def render(spec: PanelSpec, data_dir, out_dir, fmt: str = "png"):
    """Render one panel; returns the written image path."""
    data_dir = Path(data_dir)
    out_dir = Path(out_dir)
    meta, cols = read_csv(data_dir / spec.csv)
    _validate(spec, cols)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(4.6, 3.6), constrained_layout=True)
    if spec.kind == "heatmap":
        _render_heatmap(spec, cols, fig, ax)
    elif spec.kind in ("line", "log-line"):
        _render_line(spec, cols, ax)
    else:
        raise SchemaError(f"unknown panel kind {spec.kind!r}")
    ax.set_xlabel(spec.xlabel or spec.x)
    ax.set_ylabel(spec.ylabel or (spec.value if spec.kind == "heatmap" else ""))
    ax.set_title(spec.title or spec.name)
    path = out_dir / f"{spec.name}.{fmt}"
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def _render_heatmap(spec, cols, fig, ax):
    x = cols[spec.x]
    y = cols[spec.y]
    v = cols[spec.value]
    if spec.absolute:
        v = np.abs(v)
    norm = None
    if spec.log_scale:
        from matplotlib.colors import LogNorm

        pos = v[v > 0]
        if pos.size == 0:
            raise SchemaError(f"{spec.csv}: no positive values for log-scale panel")
        floor = max(pos.min(), pos.max() * 1e-6)
        v = np.clip(v, floor, None)
        norm = LogNorm(vmin=floor, vmax=pos.max())
    xs = np.unique(x)
    ys = np.unique(y)
    if len(xs) * len(ys) == len(v):
        grid = v.reshape(len(xs), len(ys)).T
        mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", norm=norm)
    else:
        # irregular grid (masked points near surfaces): triangulate
        mesh = ax.tripcolor(x, y, v, shading="gouraud", norm=norm)
    fig.colorbar(mesh, ax=ax, label=spec.value)


def _render_line(spec, cols, ax):
    x = cols[spec.x]
    series = spec.y if isinstance(spec.y, tuple) else (spec.y,)
    for name in series:
        v = cols[name]
        if spec.absolute:
            v = np.abs(v)
        ax.plot(x, v, "-", label=name)
    for name in spec.overlay:
        v = cols[name]
        if spec.absolute:
            v = np.abs(v)
        ax.plot(x, v, "o", ms=3.5, label=name)
    if spec.kind == "log-line" or spec.log_scale:
        ax.set_yscale("log")
    if len(series) + len(spec.overlay) > 1:
        ax.legend(fontsize=7)


#: the reproduce-target panel registry (one entry per CSV the CLI emits)
PANELS = {
    "fig1b": PanelSpec("fig1b", "fig1b.csv", "heatmap", "a_nm", "d_nm", "eta",
                       xlabel="a (nm)", ylabel="d (nm)",
                       title="coupling efficiency"),
    "fig1c": PanelSpec("fig1c", "fig1c.csv", "heatmap", "a_nm", "d_nm", "purcell",
                       xlabel="a (nm)", ylabel="d (nm)", title="Purcell factor"),
    "fig1d": PanelSpec("fig1d", "fig1d.csv", "heatmap", "x_nm", "y_nm", "eta",
                       xlabel="x (nm)", ylabel="y (nm)",
                       title="eta vs emitter position"),
    "fig1e": PanelSpec("fig1e", "fig1e.csv", "line", "a2_nm", "eta",
                       xlabel="a2 (nm)", title="eta vs second radius"),
    "fig1f": PanelSpec("fig1f", "fig1f.csv", "heatmap", "x_nm", "y_nm",
                       "lamb_shift_ratio", log_scale=True, absolute=True,
                       xlabel="x (nm)", ylabel="y (nm)",
                       title="|Lamb shift| / gamma0 (log)"),
    "fig2a": PanelSpec("fig2a", "fig2a.csv", "line", "dz_nm",
                       ("gam_sub", "gam_sup", "dw_sub", "dw_sup"),
                       overlay=("gam_sub_asym", "gam_sup_asym",
                                "dw_sub_asym", "dw_sup_asym"),
                       xlabel="dz (nm)", title="collective resonances"),
    "fig2b": PanelSpec("fig2b", "fig2b.csv", "line", "t_gamma",
                       ("c_two", "c_single"), xlabel="Gamma t",
                       title="transient concurrence"),
    "fig2c": PanelSpec("fig2c", "fig2c.csv", "line", "t_gamma",
                       ("p2_two", "p2_single"), xlabel="Gamma t",
                       title="transferred population"),
    "fig2d": PanelSpec("fig2d", "fig2d.csv", "line", "eta", ("c_max", "p2_max"),
                       xlabel="eta", title="max concurrence vs eta"),
    "fig2e": PanelSpec("fig2e", "fig2e.csv", "heatmap", "drive_over_gamma", "eta",
                       "concurrence", log_scale=True,
                       xlabel="drive / Gamma", ylabel="eta",
                       title="steady concurrence (log)"),
    "fig2f": PanelSpec("fig2f", "fig2f.csv", "line", "t_gamma",
                       ("c_two", "c_single"), xlabel="Gamma t",
                       title="driven concurrence"),
    "supp1": PanelSpec("supp1", "supp1.csv", "line", "dz_nm",
                       ("im_exact_xx", "im_exact_yy", "im_exact_zz",
                        "re_exact_xx", "re_exact_yy", "re_exact_zz"),
                       overlay=("im_asym_xx", "im_asym_yy", "im_asym_zz",
                                "re_asym_xx", "re_asym_yy", "re_asym_zz"),
                       xlabel="dz (nm)", title="exact vs asymptotic"),
    "supp2": PanelSpec("supp2", "supp2.csv", "line", "a_nm", "eta",
                       xlabel="a (nm)", title="N-fiber ring efficiency"),
    "supp3": PanelSpec("supp3", "supp3.csv", "line", "x_nm", "eta",
                       xlabel="x (nm)", title="eta along the slot axis"),
    "supp4": PanelSpec("supp4", "supp4.csv", "log-line", "surface_distance_nm",
                       "lamb_shift_ratio", absolute=True, log_scale=True,
                       xlabel="d/2 (nm)", title="|Lamb shift| / gamma0"),
}


def render_targets(targets, data_dir, out_dir, fmt: str = "png"):
    """Render a list of registry targets; 'all' renders every panel whose CSV
    exists under data_dir."""
    written = []
    if list(targets) == ["all"]:
        targets = [n for n, s in PANELS.items() if (Path(data_dir) / s.csv).exists()]
        if not targets:
            raise SchemaError(f"no known panel CSVs found in {data_dir}")
    for t in targets:
        if t not in PANELS:
            raise SchemaError(f"unknown panel {t!r} (known: {sorted(PANELS)})")
        written.append(render(PANELS[t], data_dir, out_dir, fmt=fmt))
    return written
