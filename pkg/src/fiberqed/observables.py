"""Emitter figures of merit from Green tensors.

All outputs are dimensionless ratios: decay rates are normalized to the
free-space rate Gamma0 (from the analytic vacuum tensor, never hard-coded),
frequency shifts to the free-space half linewidth gamma0 = Gamma0/2, and the
collective coupling matrix to Gamma0.  Collective eigenvalues follow the
lambda_j = dOmega_j + i gamma_j convention with gamma_j a half width, sorted
subradiant-first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EmitterSpec, FiberArray, SolverSettings
from .errors import DomainError
from .spectral import asymptotic_tensor, get_solver, invert_total
from .vacuum import vacuum_im_coincident


def _qform(dipole: np.ndarray, mat: np.ndarray) -> float:
    """d . M . d* for a real matrix M (returns the real part)."""
    return float(np.real(np.einsum("i,ij,j", dipole, mat, dipole.conj())))


@dataclass(frozen=True)
class EmitterRates:
    gamma_total_ratio: float        # Gamma / Gamma0
    gamma_guided_ratio: float       # Gamma_1D / Gamma0
    eta: float                      # Gamma_1D / Gamma
    purcell: float                  # F_p = Gamma / Gamma0
    lamb_shift_ratio: float | None  # dOmega / gamma0 (None when not computed)


@dataclass(frozen=True)
class CouplingMatrix:
    """Pairwise coupling of n emitters in units of Gamma0.

    omega[m][n] = Omega_mn / Gamma0 (diagonal: scattered-part Lamb shift),
    gamma[m][n] = Gamma_mn / Gamma0.  eigenvalues are those of
    G_mn = omega + i gamma / 2, sorted by imaginary part (subradiant first).
    """

    omega: np.ndarray
    gamma: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        lam, _ = self._eig()
        return lam

    @property
    def eigenvectors(self) -> np.ndarray:
        _, vec = self._eig()
        return vec

    def _eig(self):
        lam, vec = np.linalg.eig(self.omega + 0.5j * self.gamma)
        order = np.argsort(lam.imag)
        return lam[order], vec[:, order]


def emitter_rates(emitter: EmitterSpec, fibers: FiberArray,
                  settings: SolverSettings | None = None,
                  with_lamb: bool = True) -> EmitterRates:
    """Total/guided decay ratios, efficiency, Purcell factor and Lamb shift.

    with_lamb=False runs the cheaper imaginary-part-only inversion (the gap
    and evanescent-tail integrands are real for lossless fibers).
    """
    settings = settings or SolverSettings()
    emitter.validate_against(fibers)
    d = emitter.dipole_vec()
    k = emitter.k
    vac = _qform(d, vacuum_im_coincident(k))
    if fibers.n_fibers == 0:
        return EmitterRates(1.0, 0.0, 0.0, 1.0, 0.0 if with_lamb else None)
    gt = invert_total(emitter.rho_a_nm, emitter.rho_a_nm, 0.0, k, fibers, settings,
                      parts="full" if with_lamb else "fast_im")
    im_scatt = _qform(d, np.imag(gt.scattered))
    im_guided = _qform(d, np.imag(gt.guided))
    total = 1.0 + im_scatt / vac
    guided = im_guided / vac
    lamb = _qform(d, np.real(gt.scattered)) / vac if with_lamb else None
    return EmitterRates(
        gamma_total_ratio=total,
        gamma_guided_ratio=guided,
        eta=guided / total,
        purcell=total,
        lamb_shift_ratio=lamb,
    )


def coupling_matrix(emitters, fibers: FiberArray,
                    settings: SolverSettings | None = None) -> CouplingMatrix:
    """Omega_mn, Gamma_mn (units of Gamma0) for a list of emitters.

    Off-diagonal entries include both the free-space and the fiber-scattered
    Green tensor; diagonals are the per-emitter total decay and scattered-part
    Lamb shift.
    """
    settings = settings or SolverSettings()
    emitters = list(emitters)
    n = len(emitters)
    if n < 2:
        raise DomainError("coupling_matrix needs at least two emitters")
    k0 = emitters[0].k
    d0 = emitters[0].dipole_vec()
    for e in emitters[1:]:
        if abs(e.k - k0) > 1e-12 * k0:
            raise DomainError("all emitters must share one transition wavelength")
    for e in emitters:
        e.validate_against(fibers)
    positions = [e.position3() for e in emitters]
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(positions[i] - positions[j]) == 0.0:
                raise DomainError(f"emitters {i} and {j} are coincident")
    vac = _qform(d0, vacuum_im_coincident(k0))
    omega = np.zeros((n, n))
    gamma = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei, ej = emitters[i], emitters[j]
            dz = ei.z_nm - ej.z_nm
            gt = invert_total(ei.rho_a_nm, ej.rho_a_nm, dz, k0, fibers, settings)
            di, dj = ei.dipole_vec(), ej.dipole_vec()
            qre = float(np.real(np.einsum("i,ij,j", di, np.real(gt.total), dj.conj())))
            qim = float(np.real(np.einsum("i,ij,j", di, np.imag(gt.total), dj.conj())))
            if i == j:
                # coincident: total excludes the divergent vacuum real part
                omega[i, i] = 0.5 * _qform(di, np.real(gt.scattered)) / vac
                gamma[i, i] = qim / vac
            else:
                omega[i, j] = omega[j, i] = 0.5 * qre / vac
                gamma[i, j] = gamma[j, i] = qim / vac
    return CouplingMatrix(omega=omega, gamma=gamma)


def compare_exact_asymptotic(emitter: EmitterSpec, fibers: FiberArray, dz_grid,
                             rho_obs=None, settings: SolverSettings | None = None,
                             modes=None):
    """Omega_12, Gamma_12 (units of Gamma0) by exact inversion and by the
    long-range guided-mode formula, with relative deviations.

    Returns a list of row dicts over the dz grid.
    """
    settings = settings or SolverSettings()
    k = emitter.k
    d = emitter.dipole_vec()
    vac = _qform(d, vacuum_im_coincident(k))
    rho_src = np.asarray(emitter.rho_a_nm, float)
    rho = rho_src if rho_obs is None else np.asarray(rho_obs, float)
    if modes is None:
        solver = get_solver(fibers, k, settings)
        modes = solver.modes(with_profiles=True)
    rows = []
    for dz in np.asarray(dz_grid, dtype=float):
        gt = invert_total(rho, rho_src, dz, k, fibers, settings)
        g_as = asymptotic_tensor(modes, rho, rho_src, dz)
        om_ex = 0.5 * float(np.real(np.einsum("i,ij,j", d, np.real(gt.total), d.conj()))) / vac
        ga_ex = float(np.real(np.einsum("i,ij,j", d, np.imag(gt.total), d.conj()))) / vac
        om_as = 0.5 * float(np.real(np.einsum("i,ij,j", d, np.real(g_as), d.conj()))) / vac
        ga_as = float(np.real(np.einsum("i,ij,j", d, np.imag(g_as), d.conj()))) / vac
        scale = max(abs(om_ex), abs(ga_ex))
        rows.append({
            "dz_nm": float(dz),
            "omega12_exact": om_ex, "gamma12_exact": ga_ex,
            "omega12_asym": om_as, "gamma12_asym": ga_as,
            "rel_dev": float(np.hypot(om_ex - om_as, ga_ex - ga_as) / scale),
        })
    return rows


def tensor_comparison_exact_asymptotic(rho, rho_src, dz_grid, k: float,
                                       fibers: FiberArray,
                                       settings: SolverSettings | None = None,
                                       modes=None):
    """Full 3x3 exact-vs-asymptotic comparison at off-center points; returns
    (dz, exact, asym) arrays with exact/asym of shape (n_dz, 3, 3)."""
    settings = settings or SolverSettings()
    if modes is None:
        solver = get_solver(fibers, k, settings)
        modes = solver.modes(with_profiles=True)
    dz_grid = np.asarray(dz_grid, dtype=float)
    exact = np.empty((len(dz_grid), 3, 3), complex)
    asym = np.empty_like(exact)
    for i, dz in enumerate(dz_grid):
        gt = invert_total(rho, rho_src, dz, k, fibers, settings)
        exact[i] = gt.total
        asym[i] = asymptotic_tensor(modes, rho, rho_src, dz)
    return dz_grid, exact, asym
