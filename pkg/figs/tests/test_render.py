"""Rendering tests, including the figure-component acceptance criterion:
every reproduce-target CSV renders without error, log-scale panels are
log-scaled, and real heatmap data reproduces the qualitative extrema
structure (slot maximum for the efficiency, slot zero-valley for the shift).
"""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fiberqed_figs import PANELS, PanelSpec, SchemaError, read_csv, render, render_targets


def _write_csv(path, columns, rows, meta=()):
    lines = [f"# fiberqed {path.stem} v0.1.0"]
    for k, v in meta:
        lines.append(f"# {k}: {v}")
    lines.append(",".join(columns))
    for r in rows:
        lines.append(",".join(format(x, ".9g") for x in r))
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture(scope="module")
def synthetic_dir(tmp_path_factory):
    """Synthetic CSVs in the documented schema for every registry panel."""
    d = tmp_path_factory.mktemp("synthetic")
    rng = np.random.default_rng(0)
    for name, spec in PANELS.items():
        cols = spec.required_columns()
        if spec.kind == "heatmap":
            xs = np.linspace(1.0, 2.0, 6)
            ys = np.linspace(0.0, 1.0, 5)
            rows = []
            for x in xs:
                for y in ys:
                    v = float(np.abs(rng.normal()) + 1e-3)
                    rows.append((x, y, v))
            _write_csv(d / spec.csv, cols, rows)
        else:
            xs = np.linspace(0.0, 10.0, 24)
            rows = []
            for x in xs:
                rows.append((x, *(float(np.abs(rng.normal()) + 1e-3)
                                  for _ in cols[1:])))
            _write_csv(d / spec.csv, cols, rows)
    return d


def test_all_reproduce_targets_render(synthetic_dir, tmp_path):
    written = render_targets(["all"], synthetic_dir, tmp_path)
    assert sorted(p.stem for p in written) == sorted(PANELS)
    for p in written:
        assert p.exists() and p.stat().st_size > 0
    print("\nACCEPTANCE 12 (part 1): PASS — all "
          f"{len(written)} reproduce-target panels rendered")


def test_log_scale_panels_marked_and_used(synthetic_dir, tmp_path):
    # shift and steady-concurrence panels carry the log flag per the source
    assert PANELS["fig1f"].log_scale
    assert PANELS["fig2e"].log_scale
    assert PANELS["supp4"].log_scale
    # and a log-line panel really sets a log axis
    import matplotlib.pyplot as plt

    from fiberqed_figs.panels import _render_line, read_csv as rc

    _, cols = rc(synthetic_dir / "supp4.csv")
    fig, ax = plt.subplots()
    _render_line(PANELS["supp4"], cols, ax)
    assert ax.get_yscale() == "log"
    plt.close(fig)


def test_empty_csv_errors_and_writes_nothing(tmp_path):
    empty = tmp_path / "fig1e.csv"
    empty.write_text("# fiberqed fig1e v0\na2_nm,eta\n")
    out = tmp_path / "out"
    with pytest.raises(SchemaError, match="empty"):
        render(PANELS["fig1e"], tmp_path, out)
    assert not (out / "fig1e.png").exists()


def test_schema_mismatch_actionable(tmp_path):
    bad = tmp_path / "fig1e.csv"
    _write_csv(bad, ("a2_nm", "wrong"), [(1.0, 2.0)])
    with pytest.raises(SchemaError) as err:
        render(PANELS["fig1e"], tmp_path, tmp_path / "out")
    assert "eta" in str(err.value) and "fig1e" in str(err.value)


def test_rendering_is_read_only(synthetic_dir, tmp_path):
    src = synthetic_dir / "fig2d.csv"
    before = src.read_bytes()
    render(PANELS["fig2d"], synthetic_dir, tmp_path)
    render(PANELS["fig2d"], synthetic_dir, tmp_path)  # re-run never mutates inputs
    assert src.read_bytes() == before


def test_cli_entry(synthetic_dir, tmp_path):
    from fiberqed_figs.cli import main

    assert main(["fig2b", "--data-dir", str(synthetic_dir),
                 "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "fig2b.png").exists()
    assert main(["nonsense", "--data-dir", str(synthetic_dir),
                 "--out-dir", str(tmp_path)]) == 1


# -- real-data spot checks (the qualitative part of the acceptance criterion) --

@pytest.fixture(scope="module")
def real_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("real")
    base = [sys.executable, "-m", "fiberqed.cli", "reproduce"]
    opts = ["--out-dir", str(d), "--m-max", "10", "--tol", "1e-4", "--grid", "9"]
    for target in ("fig1d", "fig1f", "fig2b-f"):
        subprocess.run(base + [target] + opts, check=True, capture_output=True,
                       timeout=3000)
    return d


def test_real_fig1d_extrema_in_slot(real_dir, tmp_path):
    render(PANELS["fig1d"], real_dir, tmp_path)
    _, cols = read_csv(real_dir / "fig1d.csv")
    i = int(np.argmax(cols["eta"]))
    # the efficiency peaks in the slot between the fibers, near the x axis
    assert abs(cols["x_nm"][i]) < 250.0
    assert abs(cols["y_nm"][i]) < 160.0
    print(f"\nACCEPTANCE 12 (part 2): PASS — fig1d eta max at "
          f"({cols['x_nm'][i]:.0f}, {cols['y_nm'][i]:.0f}) inside the slot")


def test_real_fig1f_shift_small_on_slot_curve(real_dir, tmp_path):
    render(PANELS["fig1f"], real_dir, tmp_path)
    _, cols = read_csv(real_dir / "fig1f.csv")
    x, y, v = cols["x_nm"], cols["y_nm"], np.abs(cols["lamb_shift_ratio"])
    # |shift| on the slot axis far above the gap is orders below the
    # near-surface values (the zero curve lies between the fibers)
    near_axis = v[(np.abs(x) < 60) & (np.abs(y) > 150)]
    near_surface = v[(np.abs(np.hypot(np.abs(x) - 250.0, y) - 150.0) < 40.0)]
    assert near_axis.min() < 0.1 * near_surface.max()


def test_real_fig2_panels(real_dir, tmp_path):
    for t in ("fig2b", "fig2c", "fig2d", "fig2e", "fig2f"):
        render(PANELS[t], real_dir, tmp_path)
    _, cols = read_csv(real_dir / "fig2b.csv")
    assert np.max(cols["c_two"]) > np.max(cols["c_single"])  # two-fiber enhancement
    _, cols = read_csv(real_dir / "fig2e.csv")
    c = cols["concurrence"]
    assert np.min(c) == 0.0 and np.max(c) > 0.0  # threshold structure visible
