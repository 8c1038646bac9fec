"""Problem definitions: geometry, emitters, solver knobs, sweeps.

Units: every length is in nanometers; every rate the package reports is a
dimensionless ratio (Gamma/Gamma0, eta, F_p, dOmega/gamma0), so hbar, eps0
and the dipole magnitude never acquire numeric values.  Objects are frozen
after construction and safe to share across workers.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

#: fused silica at 780 nm; the reference work never states its index value
DEFAULT_INDEX_CORE = 1.4537
DEFAULT_WAVELENGTH_NM = 780.0
CONTOURS = ("indented_real_axis", "rotated_path")


@dataclass(frozen=True)
class Fiber:
    radius_nm: float
    center_nm: tuple[float, float]
    index_core: float = DEFAULT_INDEX_CORE


@dataclass(frozen=True)
class FiberArray:
    """Parallel-cylinder geometry: radii a_l, centers c_l, indices."""

    fibers: tuple[Fiber, ...]
    index_ambient: float = 1.0

    def __post_init__(self):
        if self.index_ambient < 1.0:
            raise ConfigError("index_ambient", f"must be >= 1, got {self.index_ambient}")
        for i, f in enumerate(self.fibers):
            if not (f.radius_nm > 0):
                raise ConfigError(f"fibers[{i}].radius_nm", f"must be > 0, got {f.radius_nm}")
            if f.index_core < 1.0:
                raise ConfigError(f"fibers[{i}].index_core", f"must be >= 1, got {f.index_core}")
        for i in range(len(self.fibers)):
            for j in range(i + 1, len(self.fibers)):
                ci = np.asarray(self.fibers[i].center_nm)
                cj = np.asarray(self.fibers[j].center_nm)
                gap = float(np.linalg.norm(ci - cj)) - (
                    self.fibers[i].radius_nm + self.fibers[j].radius_nm
                )
                # touching (gap == 0) is allowed, overlap is not
                if gap < -1e-9:
                    raise ConfigError(
                        f"fibers[{i}]/fibers[{j}]",
                        f"cross-sections overlap (gap = {gap:.3g} nm)",
                    )

    @property
    def n_fibers(self) -> int:
        return len(self.fibers)

    def centers(self) -> np.ndarray:
        return np.array([f.center_nm for f in self.fibers], dtype=float).reshape(-1, 2)

    def radii(self) -> np.ndarray:
        return np.array([f.radius_nm for f in self.fibers], dtype=float)

    def max_index_core(self) -> float:
        return max((f.index_core for f in self.fibers), default=self.index_ambient)

    def surface_distance(self, rho) -> float:
        """Smallest distance from transverse point rho to any fiber surface."""
        rho = np.asarray(rho, dtype=float)
        dists = [
            float(np.linalg.norm(rho - np.asarray(f.center_nm))) - f.radius_nm
            for f in self.fibers
        ]
        return min(dists) if dists else np.inf

    def require_outside(self, rho, what="point", margin=0.0):
        rho = np.asarray(rho, dtype=float)
        for i, f in enumerate(self.fibers):
            d = float(np.linalg.norm(rho - np.asarray(f.center_nm)))
            if d <= f.radius_nm + margin:
                raise ConfigError(
                    what,
                    f"lies inside or on fiber {i} (distance to center {d:.6g} nm, "
                    f"radius {f.radius_nm:.6g} nm)",
                )


@dataclass(frozen=True)
class EmitterSpec:
    """A two-level emitter: transverse position, axial position, dipole, wavelength."""

    rho_a_nm: tuple[float, float]
    z_nm: float = 0.0
    dipole: tuple[complex, complex, complex] = (1.0 + 0j, 0j, 0j)
    wavelength_nm: float = DEFAULT_WAVELENGTH_NM

    def __post_init__(self):
        if not (self.wavelength_nm > 0):
            raise ConfigError("emitter.wavelength_nm", f"must be > 0, got {self.wavelength_nm}")
        norm = float(np.linalg.norm(np.asarray(self.dipole, dtype=complex)))
        if abs(norm - 1.0) > 1e-12:
            raise ConfigError("emitter.dipole", f"must be unit norm, got |d| = {norm!r}")

    @property
    def k(self) -> float:
        """Vacuum wavenumber 2 pi / lambda in rad/nm."""
        return 2.0 * np.pi / self.wavelength_nm

    def dipole_vec(self) -> np.ndarray:
        return np.asarray(self.dipole, dtype=complex)

    def position3(self) -> np.ndarray:
        return np.array([self.rho_a_nm[0], self.rho_a_nm[1], self.z_nm], dtype=float)

    def validate_against(self, fibers: FiberArray):
        fibers.require_outside(self.rho_a_nm, what="emitter.rho_a_nm")


@dataclass(frozen=True)
class SolverSettings:
    m_max: int | None = None  # None -> adaptive
    quad_rel_tol: float = 1e-6
    pole_rel_tol: float = 1e-10
    contour: str = "indented_real_axis"

    def __post_init__(self):
        if self.m_max is not None and self.m_max < 1:
            raise ConfigError("solver.m_max", f"must be >= 1, got {self.m_max}")
        for name in ("quad_rel_tol", "pole_rel_tol"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ConfigError(f"solver.{name}", f"must be in (0, 1), got {v}")
        if self.contour not in CONTOURS:
            raise ConfigError("solver.contour", f"must be one of {CONTOURS}, got {self.contour!r}")


_AXIS_NAMES = (
    "radius_nm",
    "separation_nm",
    "x_nm",
    "y_nm",
    "dz_nm",
    "drive_over_gamma",
    "eta",
    "t_gamma",
)
_OBSERVABLES = (
    "eta",
    "purcell",
    "gamma_total_ratio",
    "gamma_guided_ratio",
    "lamb_shift_ratio",
    "concurrence",
    "population",
    "collective_eigenvalues",
)


@dataclass(frozen=True)
class SweepConfig:
    axes: dict = field(default_factory=dict)
    observables: tuple[str, ...] = ("eta", "purcell")
    out_dir: str = "results"

    def __post_init__(self):
        for name, values in self.axes.items():
            if name not in _AXIS_NAMES:
                raise ConfigError(f"sweep.axes.{name}", f"unknown axis (allowed: {_AXIS_NAMES})")
            arr = np.asarray(values, dtype=float)
            if arr.size == 0:
                raise ConfigError(f"sweep.axes.{name}", "axis is empty")
            if arr.size > 1 and not (np.all(np.diff(arr) > 0) or np.all(np.diff(arr) < 0)):
                raise ConfigError(f"sweep.axes.{name}", "axis values must be strictly monotone")
        for obs in self.observables:
            if obs not in _OBSERVABLES:
                raise ConfigError("sweep.observables", f"unknown observable {obs!r}")


@dataclass(frozen=True)
class ProblemConfig:
    fibers: FiberArray
    emitters: tuple[EmitterSpec, ...]
    solver: SolverSettings = SolverSettings()
    sweep: SweepConfig = SweepConfig()

    def __post_init__(self):
        for e in self.emitters:
            e.validate_against(self.fibers)

    def with_overrides(self, **kwargs) -> "ProblemConfig":
        return replace(self, **kwargs)


def canonical_two_fiber(a_nm: float, d_nm: float, index_core: float = DEFAULT_INDEX_CORE,
                        index_ambient: float = 1.0) -> FiberArray:
    """Two identical fibers of radius a with surface gap d, centers (+-(a + d/2), 0).

    An emitter at the origin then sits at surface distance d/2 from each fiber.
    """
    if not (a_nm > 0):
        raise ConfigError("a_nm", f"must be > 0, got {a_nm}")
    if d_nm < 0:
        raise ConfigError("d_nm", f"must be >= 0, got {d_nm}")
    half = a_nm + d_nm / 2.0
    return FiberArray(
        fibers=(
            Fiber(radius_nm=a_nm, center_nm=(-half, 0.0), index_core=index_core),
            Fiber(radius_nm=a_nm, center_nm=(half, 0.0), index_core=index_core),
        ),
        index_ambient=index_ambient,
    )


# ---------------------------------------------------------------------------
# TOML parsing / serialization (restricted, documented schema)
# ---------------------------------------------------------------------------

def _as_complex_triplet(raw, fieldname):
    vec = []
    for comp in raw:
        if isinstance(comp, (int, float)):
            vec.append(complex(comp))
        elif isinstance(comp, list) and len(comp) == 2:
            vec.append(complex(comp[0], comp[1]))
        else:
            raise ConfigError(fieldname, f"components must be numbers or [re, im] pairs, got {comp!r}")
    if len(vec) != 3:
        raise ConfigError(fieldname, f"needs 3 components, got {len(vec)}")
    return tuple(vec)


def config_from_dict(data: dict) -> ProblemConfig:
    geo = data.get("geometry", {})
    fibers = []
    for i, f in enumerate(geo.get("fibers", [])):
        try:
            fibers.append(
                Fiber(
                    radius_nm=float(f["radius_nm"]),
                    center_nm=(float(f["center_nm"][0]), float(f["center_nm"][1])),
                    index_core=float(f.get("index_core", DEFAULT_INDEX_CORE)),
                )
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"geometry.fibers[{i}]", f"missing or malformed field: {exc}") from exc
    array = FiberArray(fibers=tuple(fibers), index_ambient=float(geo.get("index_ambient", 1.0)))

    emitters = []
    raw_emitters = data.get("emitter")
    if raw_emitters is None:
        raw_emitters = data.get("emitters", [])
    if isinstance(raw_emitters, dict):
        raw_emitters = [raw_emitters]
    for i, e in enumerate(raw_emitters):
        try:
            pos = e["position_nm"]
        except KeyError as exc:
            raise ConfigError(f"emitter[{i}].position_nm", "required") from exc
        dipole = _as_complex_triplet(e.get("dipole", [1.0, 0.0, 0.0]), f"emitter[{i}].dipole")
        norm = float(np.linalg.norm(np.asarray(dipole)))
        if norm > 0:
            dipole = tuple(c / norm for c in dipole)
        emitters.append(
            EmitterSpec(
                rho_a_nm=(float(pos[0]), float(pos[1])),
                z_nm=float(e.get("z_nm", 0.0)),
                dipole=dipole,
                wavelength_nm=float(e.get("wavelength_nm", DEFAULT_WAVELENGTH_NM)),
            )
        )

    sol = data.get("solver", {})
    m_max = sol.get("m_max")
    if m_max in (0, None):
        m_max = None
    solver = SolverSettings(
        m_max=m_max,
        quad_rel_tol=float(sol.get("quad_rel_tol", 1e-6)),
        pole_rel_tol=float(sol.get("pole_rel_tol", 1e-10)),
        contour=str(sol.get("contour", "indented_real_axis")),
    )

    sw = data.get("sweep", {})
    sweep = SweepConfig(
        axes={k: tuple(float(x) for x in v) for k, v in sw.get("axes", {}).items()},
        observables=tuple(sw.get("observables", ("eta", "purcell"))),
        out_dir=str(sw.get("out_dir", "results")),
    )
    return ProblemConfig(fibers=array, emitters=tuple(emitters), solver=solver, sweep=sweep)


def load_config(path) -> ProblemConfig:
    """Parse and validate a TOML problem definition."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("path", f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError("path", f"TOML parse error in {path}: {exc}") from exc
    return config_from_dict(data)


def _toml_scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[ " + ", ".join(_toml_scalar(x) for x in v) + " ]"
    raise TypeError(f"cannot serialize {type(v)}")


def serialize_config(cfg: ProblemConfig) -> str:
    """Emit the documented TOML schema; load(serialize(x)) round-trips."""
    lines = ["[geometry]", f"index_ambient = {_toml_scalar(cfg.fibers.index_ambient)}"]
    for f in cfg.fibers.fibers:
        lines += [
            "",
            "[[geometry.fibers]]",
            f"radius_nm = {_toml_scalar(f.radius_nm)}",
            f"center_nm = {_toml_scalar(list(f.center_nm))}",
            f"index_core = {_toml_scalar(f.index_core)}",
        ]
    for e in cfg.emitters:
        dip = [[c.real, c.imag] for c in e.dipole]
        lines += [
            "",
            "[[emitters]]",
            f"position_nm = {_toml_scalar(list(e.rho_a_nm))}",
            f"z_nm = {_toml_scalar(e.z_nm)}",
            f"dipole = {_toml_scalar(dip)}",
            f"wavelength_nm = {_toml_scalar(e.wavelength_nm)}",
        ]
    lines += [
        "",
        "[solver]",
        f"m_max = {_toml_scalar(0 if cfg.solver.m_max is None else cfg.solver.m_max)}",
        f"quad_rel_tol = {_toml_scalar(cfg.solver.quad_rel_tol)}",
        f"pole_rel_tol = {_toml_scalar(cfg.solver.pole_rel_tol)}",
        f"contour = {_toml_scalar(cfg.solver.contour)}",
        "",
        "[sweep]",
        f"observables = {_toml_scalar(list(cfg.sweep.observables))}",
        f"out_dir = {_toml_scalar(cfg.sweep.out_dir)}",
    ]
    if cfg.sweep.axes:
        lines.append("")
        lines.append("[sweep.axes]")
        for name, vals in cfg.sweep.axes.items():
            lines.append(f"{name} = {_toml_scalar(list(vals))}")
    return "\n".join(lines) + "\n"


def save_config(cfg: ProblemConfig, path):
    Path(path).write_text(serialize_config(cfg))


def geometry_hash(fibers: FiberArray, k: float) -> str:
    """Stable short hash of geometry + wavenumber for provenance metadata."""
    import hashlib

    parts = [f"{k:.17g}", f"{fibers.index_ambient:.17g}"]
    for f in fibers.fibers:
        parts.append(
            f"{f.radius_nm:.17g},{f.center_nm[0]:.17g},{f.center_nm[1]:.17g},{f.index_core:.17g}"
        )
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]
