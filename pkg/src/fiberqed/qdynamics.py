"""Driven-dissipative dynamics of few two-level emitters.

Master equation in the frame rotating at the emitter frequency,

    drho/dt = -i [H, rho] + sum_jk (Gamma_jk / 2) (2 s_k rho s_j+ - s_j+ s_k rho - rho s_j+ s_k),
    H = sum_j (Omega/2)(s_j + s_j+) + sum_jk Omega_jk s_j+ s_k,

with a common real drive Omega and all rates in units of the single-emitter
decay Gamma.  Supports up to four emitters; entanglement is quantified by the
Wootters concurrence for two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eig

from .errors import ConvergenceError, DomainError

# basis |e> = (1, 0), |g> = (0, 1): lowering operator |g><e|
_SM = np.array([[0.0, 0.0], [1.0, 0.0]])
_SY = np.array([[0.0, -1j], [1j, 0.0]])


def _site_operator(op, j, n):
    mats = [np.eye(2)] * n
    mats[j] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def lowering_operators(n: int):
    return [_site_operator(_SM, j, n) for j in range(n)]


def product_state(labels: str) -> np.ndarray:
    """Pure product density matrix from a string like 'eg' (e = excited)."""
    vecs = {"e": np.array([1.0, 0.0]), "g": np.array([0.0, 1.0])}
    psi = np.array([1.0])
    for ch in labels:
        psi = np.kron(psi, vecs[ch])
    return np.outer(psi, psi.conj()).astype(complex)


@dataclass(frozen=True)
class MasterEqSpec:
    """Problem data for the Lindblad evolution; rates in units of Gamma."""

    omega_matrix: np.ndarray
    gamma_matrix: np.ndarray
    drive_rabi: float = 0.0
    initial: np.ndarray | None = None

    def __post_init__(self):
        om = np.asarray(self.omega_matrix, dtype=float)
        gm = np.asarray(self.gamma_matrix, dtype=float)
        n = om.shape[0]
        if om.shape != (n, n) or gm.shape != (n, n):
            raise DomainError("omega/gamma matrices must be square and same size")
        if n > 4:
            raise DomainError("at most 4 emitters supported")
        if not np.allclose(gm, gm.T, atol=1e-12):
            raise DomainError("gamma matrix must be symmetric")
        evals = np.linalg.eigvalsh(gm)
        if np.min(evals) < -1e-10 * max(1.0, np.max(np.abs(evals))):
            raise DomainError("gamma matrix must be positive semidefinite")
        object.__setattr__(self, "omega_matrix", om)
        object.__setattr__(self, "gamma_matrix", gm)
        if self.initial is not None:
            rho = np.asarray(self.initial, dtype=complex)
            dim = 2**n
            if rho.shape != (dim, dim):
                raise DomainError(f"initial state must be {dim}x{dim}")
            if abs(np.trace(rho) - 1.0) > 1e-9:
                raise DomainError("initial state must have unit trace")
            object.__setattr__(self, "initial", rho)

    @property
    def n_emitters(self) -> int:
        return self.omega_matrix.shape[0]


def symmetric_pair_spec(eta: float, drive_rabi: float = 0.0,
                        initial: np.ndarray | None = None,
                        omega12: float = 0.0) -> MasterEqSpec:
    """Two identical emitters at commensurate spacing: Gamma_12 = eta * Gamma,
    coherent exchange Omega_12 optional (defaults to the commensurate value 0)."""
    return MasterEqSpec(
        omega_matrix=np.array([[0.0, omega12], [omega12, 0.0]]),
        gamma_matrix=np.array([[1.0, eta], [eta, 1.0]]),
        drive_rabi=drive_rabi,
        initial=initial,
    )


def _hamiltonian(spec: MasterEqSpec):
    n = spec.n_emitters
    sms = lowering_operators(n)
    dim = 2**n
    h = np.zeros((dim, dim), complex)
    for j in range(n):
        h += 0.5 * spec.drive_rabi * (sms[j] + sms[j].conj().T)
    for j in range(n):
        for kk in range(n):
            if spec.omega_matrix[j, kk] != 0.0:
                h += spec.omega_matrix[j, kk] * (sms[j].conj().T @ sms[kk])
    return h, sms


def liouvillian(spec: MasterEqSpec) -> np.ndarray:
    """Dense superoperator L with d vec(rho)/dt = L vec(rho).

    vec is the C-order (row-major) flattening, for which
    vec(A rho B) = (A kron B^T) vec(rho).
    """
    h, sms = _hamiltonian(spec)
    n = spec.n_emitters
    dim = 2**n
    ident = np.eye(dim)
    lv = -1j * (np.kron(h, ident) - np.kron(ident, h.T))
    for j in range(n):
        for kk in range(n):
            g = spec.gamma_matrix[j, kk]
            if g == 0.0:
                continue
            sk = sms[kk]
            sjd = sms[j].conj().T
            jump = sjd @ sk
            lv += 0.5 * g * (
                2.0 * np.kron(sk, sjd.T)
                - np.kron(jump, ident)
                - np.kron(ident, jump.T)
            )
    return lv


def evolve(spec: MasterEqSpec, t_grid) -> np.ndarray:
    """Density matrices along t_grid (units 1/Gamma); adaptive RK (DOP853)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    if spec.initial is None:
        raise DomainError("evolve needs an initial state")
    lv = liouvillian(spec)
    dim = spec.initial.shape[0]
    y0 = spec.initial.reshape(-1)
    t0 = 0.0 if t_grid[0] > 0 else t_grid[0]
    sol = solve_ivp(
        lambda _t, y: lv @ y, (t0, t_grid[-1]), y0, t_eval=t_grid,
        method="DOP853", rtol=1e-10, atol=1e-12,
    )
    if not sol.success:
        raise ConvergenceError(f"master-equation integration failed: {sol.message}")
    rhos = sol.y.T.reshape(len(t_grid), dim, dim)
    # step control on trace/Hermiticity drift
    horizon = max(t_grid[-1] - t0, 1e-12)
    for rho in rhos[-1:]:
        drift = abs(np.trace(rho) - 1.0) + np.max(np.abs(rho - rho.conj().T))
        if drift > 1e-9 * horizon + 1e-9:
            raise ConvergenceError(f"trace/Hermiticity drift {drift:.2e} over Gamma t = {horizon}")
    return rhos


def steady_state(spec: MasterEqSpec) -> np.ndarray:
    """Null vector of the Liouvillian, unit trace; verified |L rho| <= 1e-10."""
    lv = liouvillian(spec)
    dim = int(np.sqrt(lv.shape[0]))
    evals, vecs = eig(lv)
    idx = np.argsort(np.abs(evals))
    tol_null = 1e-10 * max(1.0, float(np.max(np.abs(evals))))
    null_idx = [i for i in idx if np.abs(evals[i]) < tol_null]
    if len(null_idx) > 1:
        import warnings

        warnings.warn(f"steady-state manifold is degenerate ({len(null_idx)} null vectors); "
                      "returning the first with nonzero trace")
    rho = None
    for i in null_idx or [idx[0]]:
        cand = vecs[:, i].reshape(dim, dim)
        if abs(np.trace(cand)) > 1e-8:
            rho = cand
            break
    if rho is None:
        raise ConvergenceError("no normalizable steady state found")
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    resid = float(np.linalg.norm(lv @ rho.reshape(-1)))
    if resid > 1e-10:
        raise ConvergenceError(f"steady state residual |L rho| = {resid:.2e}")
    return rho


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix, clamped at 0."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DomainError("concurrence is defined for 4x4 density matrices")
    if abs(np.trace(rho) - 1.0) > 1e-8:
        raise DomainError(f"density matrix trace {np.trace(rho)!r} != 1")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > 1e-8:
        raise DomainError(f"density matrix not Hermitian (deviation {herm:.2e})")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if np.min(evals) < -1e-7:
        raise DomainError(f"density matrix has negative eigenvalue {np.min(evals):.2e}")
    yy = np.kron(_SY, _SY)
    rr = rho @ yy @ rho.conj() @ yy
    lam = np.linalg.eigvals(rr)
    lam = np.sqrt(np.clip(lam.real, 0.0, None))
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def population(rho: np.ndarray, site: int, n: int | None = None) -> float:
    """<sigma_j^+ sigma_j> for emitter `site`."""
    if n is None:
        n = int(np.log2(rho.shape[0]))
    sm = lowering_operators(n)[site]
    return float(np.real(np.trace(sm.conj().T @ sm @ rho)))


def transient_sweep(eta_grid, t_max: float = 20.0, n_t: int = 801):
    """Collective-decay transients from |eg> for a grid of efficiencies.

    For each eta sets Gamma_12 = eta Gamma (commensurate spacing, Omega_12
    neglected), evolves with no drive, and records the maximum concurrence and
    the maximum population transferred to the second emitter.
    """
    t_grid = np.linspace(0.0, t_max, n_t)
    rows = []
    for eta in np.asarray(eta_grid, dtype=float):
        if not (0.0 <= eta <= 1.0):
            raise DomainError(f"eta must lie in [0, 1], got {eta}")
        spec = symmetric_pair_spec(eta, initial=product_state("eg"))
        rhos = evolve(spec, t_grid)
        cs = np.array([concurrence(r) for r in rhos])
        p2 = np.array([population(r, 1, 2) for r in rhos])
        rows.append({"eta": float(eta), "c_max": float(np.max(cs)),
                     "p2_max": float(np.max(p2)),
                     "t_c_max": float(t_grid[int(np.argmax(cs))])})
    return rows
