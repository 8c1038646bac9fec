"""Command-line front end: single evaluations, sweeps, and canned paper-style
reproduction targets, all emitting deterministic CSV + JSON sidecars.

Exit codes: 0 success, 1 input/configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    DEFAULT_INDEX_CORE,
    DEFAULT_WAVELENGTH_NM,
    EmitterSpec,
    Fiber,
    FiberArray,
    ProblemConfig,
    SolverSettings,
    canonical_two_fiber,
    geometry_hash,
    load_config,
)
from .errors import ConfigError, ConvergenceError, DomainError, FiberQEDError, PoleError, RangeError
from .observables import coupling_matrix, emitter_rates, tensor_comparison_exact_asymptotic
from .qdynamics import (
    concurrence,
    evolve,
    population,
    product_state,
    steady_state,
    symmetric_pair_spec,
    transient_sweep,
)
from .spectral import find_guided_modes, get_solver


def nfiber_ring(n: int, a_nm: float, d_nm: float,
                index_core: float = DEFAULT_INDEX_CORE) -> FiberArray:
    """N identical fibers on a ring: centers (a + d/2)(cos 2 pi l/N, sin 2 pi l/N),
    so an emitter at the origin has surface distance d/2 from every fiber."""
    if n < 1:
        raise ConfigError("n", f"ring needs n >= 1, got {n}")
    if not (a_nm > 0):
        raise ConfigError("a_nm", f"must be > 0, got {a_nm}")
    if d_nm < 0:
        raise ConfigError("d_nm", f"must be >= 0, got {d_nm}")
    r0 = a_nm + d_nm / 2.0
    fibers = tuple(
        Fiber(radius_nm=a_nm,
              center_nm=(r0 * np.cos(2 * np.pi * l / n), r0 * np.sin(2 * np.pi * l / n)),
              index_core=index_core)
        for l in range(1, n + 1)
    )
    return FiberArray(fibers=fibers)  # constructor rejects overlapping rings


# ---------------------------------------------------------------------------
# result tables
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    v = float(x)
    if np.isnan(v):
        raise FiberQEDError("NaN in accepted output")
    return format(v, ".12g")


@dataclass
class ResultTable:
    name: str
    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)

    def write(self, out_dir: Path):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{self.name}.csv"
        meta = {"target": self.name, "version": __version__, "columns": list(self.columns),
                "n_rows": len(self.rows), **self.meta}
        lines = [f"# fiberqed {self.name} v{__version__}"]
        for key in sorted(self.meta):
            lines.append(f"# {key}: {self.meta[key]}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in self.columns))
        csv_path.write_text("\n".join(lines) + "\n")
        (out_dir / f"{self.name}.meta.json").write_text(
            json.dumps(meta, sort_keys=True, indent=1) + "\n")
        return csv_path


def _solver_meta(settings: SolverSettings) -> dict:
    return {
        "solver_m_max": settings.m_max if settings.m_max is not None else "adaptive",
        "solver_quad_rel_tol": settings.quad_rel_tol,
        "solver_pole_rel_tol": settings.pole_rel_tol,
        "solver_contour": settings.contour,
    }


# ---------------------------------------------------------------------------
# parallel sweep helpers (tasks must be module level for pickling)
# ---------------------------------------------------------------------------

def _map_tasks(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tasks, chunksize=1))


def _rates_task(args):
    """(geometry kind, params, emitter params, settings dict, with_lamb)."""
    kind, gparams, eparams, sdict, with_lamb = args
    if kind == "two":
        a, d, index = gparams
        fibers = canonical_two_fiber(a, d, index_core=index)
    elif kind == "ring":
        n, a, d, index = gparams
        fibers = nfiber_ring(n, a, d, index_core=index)
    else:
        fibers = FiberArray(fibers=tuple(Fiber(**f) for f in gparams))
    x, y, dipole, lam = eparams
    emitter = EmitterSpec(rho_a_nm=(x, y), dipole=tuple(dipole), wavelength_nm=lam)
    settings = SolverSettings(**sdict)
    r = emitter_rates(emitter, fibers, settings, with_lamb=with_lamb)
    return {"eta": r.eta, "purcell": r.purcell,
            "gamma_total_ratio": r.gamma_total_ratio,
            "gamma_guided_ratio": r.gamma_guided_ratio,
            "lamb_shift_ratio": r.lamb_shift_ratio if with_lamb else 0.0}


def _settings_dict(settings: SolverSettings) -> dict:
    return {"m_max": settings.m_max, "quad_rel_tol": settings.quad_rel_tol,
            "pole_rel_tol": settings.pole_rel_tol, "contour": settings.contour}


_DIPOLES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


def _parse_dipole(text: str):
    if text in _DIPOLES:
        return np.array(_DIPOLES[text], dtype=complex)
    parts = [complex(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError("--dipole", "expected x|y|z or three comma-separated components")
    v = np.asarray(parts, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise ConfigError("--dipole", "zero vector")
    return v / n


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _geometry_from_args(args, cfg: ProblemConfig | None) -> FiberArray:
    if args.radius is not None:
        if args.nfibers is not None and args.nfibers != 2:
            return nfiber_ring(args.nfibers, args.radius,
                               args.separation if args.separation is not None else 0.0,
                               index_core=args.index)
        return canonical_two_fiber(args.radius,
                                   args.separation if args.separation is not None else 0.0,
                                   index_core=args.index)
    if cfg is not None:
        return cfg.fibers
    raise ConfigError("geometry", "need --config or --radius/--separation")


def _emitter_from_args(args, cfg: ProblemConfig | None) -> EmitterSpec:
    if cfg is not None and cfg.emitters and args.radius is None:
        e = cfg.emitters[0]
        if args.dipole is not None:
            d = _parse_dipole(args.dipole)
            e = EmitterSpec(rho_a_nm=e.rho_a_nm, z_nm=e.z_nm, dipole=tuple(d),
                            wavelength_nm=e.wavelength_nm)
        return e
    d = _parse_dipole(args.dipole or "x")
    return EmitterSpec(rho_a_nm=(args.x, args.y), dipole=tuple(d),
                       wavelength_nm=args.wavelength)


def _settings_from_args(args, cfg: ProblemConfig | None) -> SolverSettings:
    base = cfg.solver if cfg is not None else SolverSettings()
    kw = _settings_dict(base)
    if args.tol is not None:
        kw["quad_rel_tol"] = args.tol
    if getattr(args, "m_max", None):
        kw["m_max"] = args.m_max
    return SolverSettings(**kw)


def cmd_rates(args) -> int:
    cfg = load_config(args.config) if args.config else None
    fibers = _geometry_from_args(args, cfg)
    settings = _settings_from_args(args, cfg)
    emitter = _emitter_from_args(args, cfg)
    if args.dipole_average:
        vals = []
        for dip in _DIPOLES.values():
            e = EmitterSpec(rho_a_nm=emitter.rho_a_nm, z_nm=emitter.z_nm,
                            dipole=dip, wavelength_nm=emitter.wavelength_nm)
            vals.append(emitter_rates(e, fibers, settings))
        row = {
            "eta": float(np.mean([v.eta for v in vals])),
            "purcell": float(np.mean([v.purcell for v in vals])),
            "gamma_total_ratio": float(np.mean([v.gamma_total_ratio for v in vals])),
            "gamma_guided_ratio": float(np.mean([v.gamma_guided_ratio for v in vals])),
            "lamb_shift_ratio": float(np.mean([v.lamb_shift_ratio for v in vals])),
        }
    else:
        r = emitter_rates(emitter, fibers, settings)
        row = {"eta": r.eta, "purcell": r.purcell,
               "gamma_total_ratio": r.gamma_total_ratio,
               "gamma_guided_ratio": r.gamma_guided_ratio,
               "lamb_shift_ratio": r.lamb_shift_ratio}
    table = ResultTable(
        name="rates",
        columns=("eta", "purcell", "gamma_total_ratio", "gamma_guided_ratio",
                 "lamb_shift_ratio"),
        rows=[row],
        meta={"config_hash": geometry_hash(fibers, emitter.k), **_solver_meta(settings)},
    )
    path = table.write(Path(args.out_dir))
    print(path)
    return 0


def cmd_modes(args) -> int:
    cfg = load_config(args.config) if args.config else None
    fibers = _geometry_from_args(args, cfg)
    settings = _settings_from_args(args, cfg)
    lam = (cfg.emitters[0].wavelength_nm if cfg is not None and cfg.emitters
           else args.wavelength)
    k = 2 * np.pi / lam
    modes = find_guided_modes(k, fibers, settings)
    rows = [{"beta_rad_per_nm": m.beta, "beta_over_k": m.beta / k, "label": m.label,
             "group_index": m.group_index,
             "azimuthal_order": m.azimuthal_order if m.azimuthal_order is not None else -999}
            for m in modes]
    table = ResultTable(
        name="modes",
        columns=("beta_rad_per_nm", "beta_over_k", "label", "group_index", "azimuthal_order"),
        rows=rows,
        meta={"config_hash": geometry_hash(fibers, k), "wavelength_nm": lam,
              **_solver_meta(settings)},
    )
    path = table.write(Path(args.out_dir))
    print(path)
    return 0


def cmd_coupling(args) -> int:
    cfg = load_config(args.config) if args.config else None
    fibers = _geometry_from_args(args, cfg)
    settings = _settings_from_args(args, cfg)
    emitter = _emitter_from_args(args, cfg)
    dzs = np.linspace(args.dz_min, args.dz_max, args.dz_num)
    rows = []
    for dz in dzs:
        e2 = EmitterSpec(rho_a_nm=emitter.rho_a_nm, z_nm=emitter.z_nm + dz,
                         dipole=emitter.dipole, wavelength_nm=emitter.wavelength_nm)
        cm = coupling_matrix([emitter, e2], fibers, settings)
        lam = cm.eigenvalues
        rows.append({
            "dz_nm": dz,
            "omega12_over_gamma0": cm.omega[0, 1],
            "gamma12_over_gamma0": cm.gamma[0, 1],
            "dw_sub_over_gamma0_half": 2 * lam[0].real,
            "gam_sub_over_gamma0_half": 2 * lam[0].imag,
            "dw_sup_over_gamma0_half": 2 * lam[-1].real,
            "gam_sup_over_gamma0_half": 2 * lam[-1].imag,
        })
    table = ResultTable(
        name="coupling",
        columns=("dz_nm", "omega12_over_gamma0", "gamma12_over_gamma0",
                 "dw_sub_over_gamma0_half", "gam_sub_over_gamma0_half",
                 "dw_sup_over_gamma0_half", "gam_sup_over_gamma0_half"),
        rows=rows,
        meta={"config_hash": geometry_hash(fibers, emitter.k), **_solver_meta(settings)},
    )
    path = table.write(Path(args.out_dir))
    print(path)
    return 0


def cmd_dynamics(args) -> int:
    eta = args.eta
    ts = np.linspace(0.0, args.t_max, args.t_num)
    initial = product_state(args.initial)
    spec = symmetric_pair_spec(eta, drive_rabi=args.drive, initial=initial)
    rhos = evolve(spec, ts)
    rows = []
    for t, rho in zip(ts, rhos):
        rows.append({"t_gamma": t, "concurrence": concurrence(rho),
                     "population_1": population(rho, 0, 2),
                     "population_2": population(rho, 1, 2)})
    table = ResultTable(
        name="dynamics",
        columns=("t_gamma", "concurrence", "population_1", "population_2"),
        rows=rows,
        meta={"eta": eta, "drive_over_gamma": args.drive, "initial": args.initial},
    )
    path = table.write(Path(args.out_dir))
    print(path)
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config) if args.config else None
    if cfg is None:
        raise ConfigError("--config", "sweep requires a config file with a [sweep] section")
    settings = _settings_from_args(args, cfg)
    axes = cfg.sweep.axes
    out_dir = Path(args.out_dir or cfg.sweep.out_dir)
    lam = cfg.emitters[0].wavelength_nm if cfg.emitters else DEFAULT_WAVELENGTH_NM
    dip = cfg.emitters[0].dipole if cfg.emitters else (1.0 + 0j, 0j, 0j)
    pos = cfg.emitters[0].rho_a_nm if cfg.emitters else (0.0, 0.0)
    index = cfg.fibers.fibers[0].index_core if cfg.fibers.fibers else DEFAULT_INDEX_CORE
    with_lamb = "lamb_shift_ratio" in cfg.sweep.observables
    if "radius_nm" in axes and "separation_nm" in axes:
        tasks = [("two", (a, d, index), (pos[0], pos[1], dip, lam),
                  _settings_dict(settings), with_lamb)
                 for a in axes["radius_nm"] for d in axes["separation_nm"]]
        results = _map_tasks(_rates_task, tasks, args.threads)
        rows = []
        for (kind, g, e, s, wl), res in zip(tasks, results):
            rows.append({"radius_nm": g[0], "separation_nm": g[1], **res})
        cols = ("radius_nm", "separation_nm") + tuple(cfg.sweep.observables)
    elif "x_nm" in axes or "y_nm" in axes:
        xs = axes.get("x_nm", (pos[0],))
        ys = axes.get("y_nm", (pos[1],))
        tasks = []
        for x in xs:
            for y in ys:
                tasks.append(("raw", tuple(
                    {"radius_nm": f.radius_nm, "center_nm": f.center_nm,
                     "index_core": f.index_core} for f in cfg.fibers.fibers),
                    (x, y, dip, lam), _settings_dict(settings), with_lamb))
        results = _map_tasks(_rates_task, tasks, args.threads)
        rows = [{"x_nm": t[2][0], "y_nm": t[2][1], **res} for t, res in zip(tasks, results)]
        cols = ("x_nm", "y_nm") + tuple(cfg.sweep.observables)
    elif "eta" in axes and "drive_over_gamma" in axes:
        rows = []
        for om in axes["drive_over_gamma"]:
            for eta in axes["eta"]:
                spec = symmetric_pair_spec(float(eta), drive_rabi=float(om),
                                           initial=product_state("gg"))
                rho = steady_state(spec)
                rows.append({"drive_over_gamma": om, "eta": eta,
                             "concurrence": concurrence(rho)})
        cols = ("drive_over_gamma", "eta", "concurrence")
    else:
        raise ConfigError("sweep.axes", f"unsupported axis combination: {sorted(axes)}")
    table = ResultTable(name="sweep", columns=cols, rows=rows,
                        meta={"config_hash": geometry_hash(cfg.fibers, 2 * np.pi / lam),
                              **_solver_meta(settings)})
    path = table.write(out_dir)
    print(path)
    return 0


# ---------------------------------------------------------------------------
# reproduce targets
# ---------------------------------------------------------------------------

def _heatmap_ad(settings, threads, observable, n_a, n_d, lamb=False):
    a_vals = np.linspace(100.0, 300.0, n_a)
    d_vals = np.linspace(2.0, 400.0, n_d)
    tasks = [("two", (a, d, DEFAULT_INDEX_CORE),
              (0.0, 0.0, (1.0 + 0j, 0j, 0j), DEFAULT_WAVELENGTH_NM),
              _settings_dict(settings), lamb)
             for a in a_vals for d in d_vals]
    results = _map_tasks(_rates_task, tasks, threads)
    rows = [{"a_nm": t[1][0], "d_nm": t[1][1], observable: r[observable]}
            for t, r in zip(tasks, results)]
    return rows


def reproduce_fig1b(settings, threads, full_res, grid=None):
    n_a, n_d = (grid, grid) if grid else ((40, 40) if full_res else (16, 12))
    rows = _heatmap_ad(settings, threads, "eta", n_a, n_d)
    return [ResultTable("fig1b", ("a_nm", "d_nm", "eta"), rows,
                        {"panel": "coupling efficiency heatmap", **_solver_meta(settings)})]


def reproduce_fig1c(settings, threads, full_res, grid=None):
    n_a, n_d = (grid, grid) if grid else ((40, 40) if full_res else (16, 12))
    rows = _heatmap_ad(settings, threads, "purcell", n_a, n_d)
    return [ResultTable("fig1c", ("a_nm", "d_nm", "purcell"), rows,
                        {"panel": "Purcell factor heatmap", **_solver_meta(settings)})]


def _transverse_grid_task(args):
    return _rates_task(args)


def _transverse_heatmap(settings, threads, a, d, observable, n_x, n_y, lamb):
    fibers = canonical_two_fiber(a, d)
    half = a + d / 2.0
    xs = np.linspace(-(half + 1.6 * a), half + 1.6 * a, n_x)
    ys = np.linspace(-1.8 * a, 1.8 * a, n_y)
    tasks = []
    keep = []
    for x in xs:
        for y in ys:
            if fibers.surface_distance((x, y)) < 5.0:
                continue
            keep.append((x, y))
            tasks.append(("two", (a, d, DEFAULT_INDEX_CORE),
                          (x, y, (1.0 + 0j, 0j, 0j), DEFAULT_WAVELENGTH_NM),
                          _settings_dict(settings), lamb))
    results = _map_tasks(_rates_task, tasks, threads)
    rows = [{"x_nm": p[0], "y_nm": p[1], observable: r[observable]}
            for p, r in zip(keep, results)]
    return rows


def reproduce_fig1d(settings, threads, full_res, grid=None):
    n = grid or (36 if full_res else 14)
    rows = _transverse_heatmap(settings, threads, 150.0, 200.0, "eta", n, n, lamb=False)
    return [ResultTable("fig1d", ("x_nm", "y_nm", "eta"), rows,
                        {"panel": "eta vs transverse emitter position, (a,d)=(150,200)",
                         **_solver_meta(settings)})]


def reproduce_fig1e(settings, threads, full_res, grid=None):
    a1 = 175.0
    n = grid or (40 if full_res else 12)
    a2_vals = np.linspace(100.0, 300.0, n)
    rows = []
    for a2 in a2_vals:
        fibers = FiberArray(fibers=(
            Fiber(radius_nm=a1, center_nm=(-a1, 0.0)),
            Fiber(radius_nm=a2, center_nm=(a2, 0.0)),
        ))
        emitter = EmitterSpec(rho_a_nm=(0.0, 10.0))
        r = emitter_rates(emitter, fibers, settings, with_lamb=False)
        rows.append({"a2_nm": a2, "eta": r.eta})
    return [ResultTable("fig1e", ("a2_nm", "eta"), rows,
                        {"panel": "eta vs second radius, touching fibers, a1=175",
                         "emitter": "touching point, offset 10 nm along y",
                         **_solver_meta(settings)})]


def reproduce_fig1f(settings, threads, full_res, grid=None):
    n = grid or (36 if full_res else 14)
    rows = _transverse_heatmap(settings, threads, 150.0, 200.0, "lamb_shift_ratio",
                               n, n, lamb=True)
    return [ResultTable("fig1f", ("x_nm", "y_nm", "lamb_shift_ratio"), rows,
                        {"panel": "normalized Lamb shift (log scale), (a,d)=(150,200)",
                         "plot_scale": "log", **_solver_meta(settings)})]


def reproduce_fig2a(settings, threads, full_res, grid=None):
    a, d = 180.0, 300.0
    lam = DEFAULT_WAVELENGTH_NM
    k = 2 * np.pi / lam
    fibers = canonical_two_fiber(a, d)
    emitter = EmitterSpec(rho_a_nm=(0.0, 0.0))
    solver = get_solver(fibers, k, settings)
    modes = solver.modes(with_profiles=True)
    n_dz = grid or (60 if full_res else 36)
    dzs = np.linspace(0.25 * lam, 6.0 * lam, n_dz)
    from .observables import compare_exact_asymptotic, emitter_rates as _er

    base = _er(emitter, fibers, settings, with_lamb=True)
    rows = []
    table = compare_exact_asymptotic(emitter, fibers, dzs, settings=settings, modes=modes)
    for row in table:
        om12e, ga12e = row["omega12_exact"], row["gamma12_exact"]
        om12a, ga12a = row["omega12_asym"], row["gamma12_asym"]
        gtot = base.gamma_total_ratio
        lamb = base.lamb_shift_ratio / 2.0  # units of Gamma0
        rows.append({
            "dz_nm": row["dz_nm"],
            "dw_sub": 2 * (lamb - om12e), "gam_sub": gtot - ga12e,
            "dw_sup": 2 * (lamb + om12e), "gam_sup": gtot + ga12e,
            "dw_sub_asym": 2 * (lamb - om12a), "gam_sub_asym": gtot - ga12a,
            "dw_sup_asym": 2 * (lamb + om12a), "gam_sup_asym": gtot + ga12a,
        })
    return [ResultTable(
        "fig2a",
        ("dz_nm", "dw_sub", "gam_sub", "dw_sup", "gam_sup",
         "dw_sub_asym", "gam_sub_asym", "dw_sup_asym", "gam_sup_asym"),
        rows,
        {"panel": "collective lineshifts/linewidths vs dz (units gamma0)",
         "geometry": "(a,d)=(180,300)", **_solver_meta(settings)})]


def _fig2_etas(settings):
    """eta for the two-fiber (a=200, d=200) and single-fiber (a=200, 100 nm
    surface distance) reference systems of the entanglement figures."""
    two = canonical_two_fiber(200.0, 200.0)
    e_two = EmitterSpec(rho_a_nm=(0.0, 0.0))
    r_two = emitter_rates(e_two, two, settings, with_lamb=False)
    single = FiberArray(fibers=(Fiber(radius_nm=200.0, center_nm=(-300.0, 0.0)),))
    e_single = EmitterSpec(rho_a_nm=(0.0, 0.0))
    r_single = emitter_rates(e_single, single, settings, with_lamb=False)
    return r_two.eta, r_single.eta


def reproduce_fig2bf(settings, threads, full_res, grid=None):
    eta_two, eta_single = _fig2_etas(settings)
    ts = np.linspace(0.0, 20.0, 801)
    tables = []
    # (b), (c): transient from |eg>, no drive
    rows_b, rows_c = [], []
    trajs = {}
    for tag, eta in (("two", eta_two), ("single", eta_single)):
        spec = symmetric_pair_spec(eta, initial=product_state("eg"))
        trajs[tag] = evolve(spec, ts)
    for i, t in enumerate(ts):
        rows_b.append({"t_gamma": t,
                       "c_two": concurrence(trajs["two"][i]),
                       "c_single": concurrence(trajs["single"][i])})
        rows_c.append({"t_gamma": t,
                       "p2_two": population(trajs["two"][i], 1, 2),
                       "p2_single": population(trajs["single"][i], 1, 2)})
    meta = {"eta_two": eta_two, "eta_single": eta_single, **_solver_meta(settings)}
    tables.append(ResultTable("fig2b", ("t_gamma", "c_two", "c_single"), rows_b,
                              {"panel": "transient concurrence", **meta}))
    tables.append(ResultTable("fig2c", ("t_gamma", "p2_two", "p2_single"), rows_c,
                              {"panel": "transferred population", **meta}))
    # (d): maximal concurrence vs eta
    n_eta = grid or (41 if full_res else 21)
    rows_d = [{"eta": r["eta"], "c_max": r["c_max"], "p2_max": r["p2_max"]}
              for r in transient_sweep(np.linspace(0.0, 1.0, n_eta))]
    tables.append(ResultTable("fig2d", ("eta", "c_max", "p2_max"), rows_d,
                              {"panel": "max concurrence vs eta", **meta}))
    # (e): steady-state concurrence over (drive, eta)
    n_om, n_et = (grid, grid) if grid else ((40, 40) if full_res else (18, 18))
    rows_e = []
    for om in np.linspace(0.05, 1.0, n_om):
        for eta in np.linspace(0.0, 0.99, n_et):
            spec = symmetric_pair_spec(float(eta), drive_rabi=float(om),
                                       initial=product_state("gg"))
            rho = steady_state(spec)
            rows_e.append({"drive_over_gamma": om, "eta": eta,
                           "concurrence": concurrence(rho)})
    tables.append(ResultTable("fig2e", ("drive_over_gamma", "eta", "concurrence"), rows_e,
                              {"panel": "steady concurrence (log scale)",
                               "plot_scale": "log", **meta}))
    # (f): driven transient from the ground state
    rows_f = []
    for tag, eta in (("two", eta_two), ("single", eta_single)):
        spec = symmetric_pair_spec(eta, drive_rabi=0.45, initial=product_state("gg"))
        trajs[tag] = evolve(spec, ts)
    for i, t in enumerate(ts):
        rows_f.append({"t_gamma": t,
                       "c_two": concurrence(trajs["two"][i]),
                       "c_single": concurrence(trajs["single"][i])})
    tables.append(ResultTable("fig2f", ("t_gamma", "c_two", "c_single"), rows_f,
                              {"panel": "driven concurrence, drive = 0.45 Gamma", **meta}))
    return tables


def reproduce_supp1(settings, threads, full_res, grid=None):
    """Exact vs asymptotic off-diagonal tensor verification at (200,100,800)."""
    lam = 800.0
    k = 2 * np.pi / lam
    fibers = canonical_two_fiber(200.0, 100.0)
    rho = (-400.0, -300.0)
    rho_src = (-50.0, -100.0)
    n_dz = grid or (24 if full_res else 12)
    dzs = np.linspace(1.0 * lam, 10.0 * lam, n_dz)
    dz, exact, asym = tensor_comparison_exact_asymptotic(rho, rho_src, dzs, k, fibers,
                                                         settings)
    comps = ["xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz"]
    rows = []
    for i, z in enumerate(dz):
        row = {"dz_nm": z}
        for ci, cname in enumerate(comps):
            a, b = divmod(ci, 3)
            row[f"re_exact_{cname}"] = exact[i, a, b].real
            row[f"im_exact_{cname}"] = exact[i, a, b].imag
            row[f"re_asym_{cname}"] = asym[i, a, b].real
            row[f"im_asym_{cname}"] = asym[i, a, b].imag
        rows.append(row)
    cols = ["dz_nm"]
    for cname in comps:
        cols += [f"re_exact_{cname}", f"im_exact_{cname}",
                 f"re_asym_{cname}", f"im_asym_{cname}"]
    return [ResultTable("supp1", tuple(cols), rows,
                        {"panel": "exact vs asymptotic tensor, (a,d,lambda)=(200,100,800)",
                         **_solver_meta(settings)})]


def reproduce_supp2(settings, threads, full_res, grid=None):
    """Radii-optimized coupling for N = 1..4 ring fibers at d/2 = 250 nm."""
    n_a = grid or (16 if full_res else 9)
    a_vals = np.linspace(120.0, 360.0, n_a)
    tasks = []
    for n in (1, 2, 3, 4):
        for a in a_vals:
            tasks.append(("ring", (n, a, 500.0, DEFAULT_INDEX_CORE),
                          (0.0, 0.0, (1.0 + 0j, 0j, 0j), DEFAULT_WAVELENGTH_NM),
                          _settings_dict(settings), False))
    results = _map_tasks(_rates_task, tasks, threads)
    rows = []
    for (kind, g, _e, _s, _l), res in zip(tasks, results):
        rows.append({"n_fibers": g[0], "a_nm": g[1], "eta": res["eta"]})
    return [ResultTable("supp2", ("n_fibers", "a_nm", "eta"), rows,
                        {"panel": "eta vs radius for N-fiber rings, surface distance 250 nm",
                         **_solver_meta(settings)})]


def reproduce_supp3(settings, threads, full_res, grid=None):
    """Robustness: eta along the x axis between the fibers, (a,d) = (175,200)."""
    n = grid or (25 if full_res else 13)
    xs = np.linspace(-80.0, 80.0, n)
    tasks = [("two", (175.0, 200.0, DEFAULT_INDEX_CORE),
              (x, 0.0, (1.0 + 0j, 0j, 0j), DEFAULT_WAVELENGTH_NM),
              _settings_dict(settings), False) for x in xs]
    results = _map_tasks(_rates_task, tasks, threads)
    rows = [{"x_nm": t[2][0], "eta": r["eta"]} for t, r in zip(tasks, results)]
    return [ResultTable("supp3", ("x_nm", "eta"), rows,
                        {"panel": "eta vs emitter x position, (a,d)=(175,200)",
                         **_solver_meta(settings)})]


def reproduce_supp4(settings, threads, full_res, grid=None):
    """Lamb shift at the center vs separation, a = 150 nm."""
    n = grid or (25 if full_res else 13)
    d_vals = np.linspace(60.0, 360.0, n)
    tasks = [("two", (150.0, d, DEFAULT_INDEX_CORE),
              (0.0, 0.0, (1.0 + 0j, 0j, 0j), DEFAULT_WAVELENGTH_NM),
              _settings_dict(settings), True) for d in d_vals]
    results = _map_tasks(_rates_task, tasks, threads)
    rows = [{"d_nm": t[1][1], "surface_distance_nm": t[1][1] / 2.0,
             "lamb_shift_ratio": r["lamb_shift_ratio"]} for t, r in zip(tasks, results)]
    return [ResultTable("supp4", ("d_nm", "surface_distance_nm", "lamb_shift_ratio"), rows,
                        {"panel": "normalized Lamb shift vs separation at the center, a=150",
                         "plot_scale": "log", **_solver_meta(settings)})]


_REPRODUCE = {
    "fig1b": reproduce_fig1b,
    "fig1c": reproduce_fig1c,
    "fig1d": reproduce_fig1d,
    "fig1e": reproduce_fig1e,
    "fig1f": reproduce_fig1f,
    "fig2a": reproduce_fig2a,
    "fig2b-f": reproduce_fig2bf,
    "supp1": reproduce_supp1,
    "supp2": reproduce_supp2,
    "supp3": reproduce_supp3,
    "supp4": reproduce_supp4,
}


def cmd_reproduce(args) -> int:
    cfg = load_config(args.config) if args.config else None
    settings = _settings_from_args(args, cfg)
    if args.target == "all":
        targets = list(_REPRODUCE)
    else:
        if args.target not in _REPRODUCE:
            raise ConfigError("target", f"unknown reproduce target {args.target!r} "
                                        f"(known: {sorted(_REPRODUCE)} or 'all')")
        targets = [args.target]
    for t in targets:
        for table in _REPRODUCE[t](settings, args.threads, args.full_res,
                                   grid=args.grid):
            path = table.write(Path(args.out_dir))
            print(path)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fiberqed",
                                description="Dyadic Green-function emitter QED for "
                                            "parallel nanofiber arrays")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, emitter=True):
        sp.add_argument("--config", type=str, default=None, help="TOML problem definition")
        sp.add_argument("--out-dir", type=str, default="results")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--tol", type=float, default=None,
                        help="override solver quad_rel_tol")
        sp.add_argument("--m-max", type=int, default=None)
        sp.add_argument("--radius", "-a", type=float, default=None,
                        help="two-fiber radius (canonical geometry)")
        sp.add_argument("--separation", "-d", type=float, default=None,
                        help="two-fiber surface gap")
        sp.add_argument("--nfibers", type=int, default=None,
                        help="ring of N fibers instead of the canonical pair")
        sp.add_argument("--index", type=float, default=DEFAULT_INDEX_CORE)
        if emitter:
            sp.add_argument("--x", type=float, default=0.0)
            sp.add_argument("--y", type=float, default=0.0)
            sp.add_argument("--dipole", type=str, default=None,
                            help="x|y|z or three comma-separated components")
            sp.add_argument("--wavelength", type=float, default=DEFAULT_WAVELENGTH_NM)

    sp = sub.add_parser("rates", help="single-emitter figures of merit")
    common(sp)
    sp.add_argument("--dipole-average", action="store_true",
                    help="average over x, y, z dipole orientations")
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("modes", help="guided modes of the composite structure")
    common(sp, emitter=False)
    sp.add_argument("--wavelength", type=float, default=DEFAULT_WAVELENGTH_NM)
    sp.set_defaults(func=cmd_modes)

    sp = sub.add_parser("coupling", help="two-emitter coupling vs axial separation")
    common(sp)
    sp.add_argument("--dz-min", type=float, default=100.0)
    sp.add_argument("--dz-max", type=float, default=4000.0)
    sp.add_argument("--dz-num", type=int, default=24)
    sp.set_defaults(func=cmd_coupling)

    sp = sub.add_parser("dynamics", help="two-emitter master-equation evolution")
    sp.add_argument("--out-dir", type=str, default="results")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--drive", type=float, default=0.0)
    sp.add_argument("--initial", type=str, default="eg", choices=["eg", "ge", "gg", "ee"])
    sp.add_argument("--t-max", type=float, default=20.0)
    sp.add_argument("--t-num", type=int, default=801)
    sp.set_defaults(func=cmd_dynamics)

    sp = sub.add_parser("sweep", help="generic sweep from the config [sweep] section")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("reproduce", help="canned paper-style data sets")
    common(sp, emitter=False)
    sp.add_argument("target", type=str)
    sp.add_argument("--full-res", action="store_true",
                    help="paper-resolution grids instead of desk-scale")
    sp.add_argument("--grid", type=int, default=None,
                    help="override the per-target grid resolution")
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, PoleError, RangeError, FiberQEDError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
