import json
from pathlib import Path

import numpy as np
import pytest

from fiberqed.cli import ResultTable, _fmt, build_parser, main, nfiber_ring
from fiberqed.config import canonical_two_fiber
from fiberqed.errors import ConfigError, FiberQEDError

from oracles import read_table

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "two_fiber_180_300.toml"

# regression goldens: first verified run at m_max = 12, quad_rel_tol = 1e-6
GOLD_150_200 = {
    "eta": 0.298155010888,
    "purcell": 1.58183682075,
    "lamb_shift_ratio": 0.349743107858,
}


def run(args):
    return main(args)


def test_rates_golden_and_deterministic(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        code = run(["rates", "-a", "150", "-d", "200", "--m-max", "12",
                    "--out-dir", str(out)])
        assert code == 0
    b1 = (out1 / "rates.csv").read_bytes()
    b2 = (out2 / "rates.csv").read_bytes()
    assert b1 == b2  # byte-identical for identical config + version
    rows = read_table(out1 / "rates.csv")
    assert float(rows["eta"][0]) == pytest.approx(GOLD_150_200["eta"], rel=1e-8)
    assert float(rows["purcell"][0]) == pytest.approx(GOLD_150_200["purcell"], rel=1e-8)
    assert float(rows["lamb_shift_ratio"][0]) == pytest.approx(
        GOLD_150_200["lamb_shift_ratio"], rel=1e-8)
    meta = json.loads((out1 / "rates.meta.json").read_text())
    assert meta["target"] == "rates"
    assert meta["solver_m_max"] == 12


def test_modes_subcommand(tmp_path):
    code = run(["modes", "-a", "180", "-d", "300", "--m-max", "12",
                "--out-dir", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "modes.csv").read_text()
    assert "TE-like" in text
    rows = [l for l in text.splitlines() if not l.startswith("#")][1:]
    assert len(rows) == 4


def test_dynamics_subcommand(tmp_path):
    code = run(["dynamics", "--eta", "1.0", "--t-max", "20", "--t-num", "801",
                "--out-dir", str(tmp_path)])
    assert code == 0
    data = read_table(tmp_path / "dynamics.csv")
    assert np.max(data["concurrence"]) == pytest.approx(0.5, abs=0.01)


def test_sweep_from_config(tmp_path):
    code = run(["sweep", "--config", str(CONFIG), "--m-max", "10",
                "--out-dir", str(tmp_path)])
    assert code == 0
    data = read_table(tmp_path / "sweep.csv")
    assert len(data["eta"]) == 4
    assert np.all(data["eta"] > 0.1)


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[geometry\nbroken")
    assert run(["rates", "--config", str(bad), "--out-dir", str(tmp_path)]) == 1


def test_numerical_error_exit_code(monkeypatch, tmp_path):
    import fiberqed.cli as cli
    from fiberqed.errors import ConvergenceError

    def boom(args):
        raise ConvergenceError("synthetic")

    monkeypatch.setitem(cli._REPRODUCE, "synthetic", lambda *a, **k: boom(None))
    assert run(["reproduce", "synthetic", "--out-dir", str(tmp_path)]) == 2


def test_unknown_reproduce_target(tmp_path):
    assert run(["reproduce", "nope", "--out-dir", str(tmp_path)]) == 1


def test_nfiber_ring_geometry():
    ring2 = nfiber_ring(2, 150.0, 500.0)
    two = canonical_two_fiber(150.0, 500.0)
    c_ring = sorted(map(tuple, np.round(ring2.centers(), 9).tolist()))
    c_two = sorted(map(tuple, np.round(two.centers(), 9).tolist()))
    assert c_ring == c_two  # N = 2 ring reduces to the canonical pair
    ring1 = nfiber_ring(1, 150.0, 500.0)
    assert np.linalg.norm(ring1.centers()[0]) == pytest.approx(150.0 + 250.0)
    ring4 = nfiber_ring(4, 150.0, 500.0)
    assert ring4.n_fibers == 4  # validated non-overlapping
    with pytest.raises(ConfigError):
        nfiber_ring(8, 300.0, 0.0)  # neighbors would overlap


def test_result_table_rejects_nan(tmp_path):
    with pytest.raises(FiberQEDError):
        _fmt(float("nan"))
    t = ResultTable("x", ("a",), [{"a": 1.5}])
    p = t.write(tmp_path)
    assert p.read_text().splitlines()[-1] == "1.5"


def test_reproduce_supp3_small(tmp_path):
    code = run(["reproduce", "supp3", "--m-max", "10", "--out-dir", str(tmp_path)])
    assert code == 0
    data = read_table(tmp_path / "supp3.csv")
    assert len(data["x_nm"]) == 13
    # robustness: small eta variation within 50 nm of the center
    xs = data["x_nm"]
    etas = data["eta"]
    near = etas[np.abs(xs) <= 50.0]
    assert (near.max() - near.min()) / near.max() < 0.25


def test_parser_covers_documented_flags():
    p = build_parser()
    args = p.parse_args(["rates", "--config", "c.toml", "--out-dir", "o",
                         "--threads", "2", "--tol", "1e-5", "-a", "150", "-d", "200"])
    assert args.threads == 2
    assert args.tol == 1e-5
