"""Single-cylinder scattering matrices at fixed axial wavenumber beta.

For each azimuthal order m the four tangential continuity conditions
(E_z, H_z, E_phi, H_phi) at the fiber surface give a 4x4 linear system
relating regular (J) amplitudes outside, outgoing (H) amplitudes outside
and regular amplitudes inside, with full E/H polarization mixing for m != 0.

Everything here works in a surface-scaled basis: the outgoing unknown is
B^V H_m(k+ a) and the interior unknown C^V J_m(k- a), so the matrix contains
only log-derivative ratios and stays well conditioned from the propagating
window deep into the evanescent tail.  The raw scattering matrix (the spec'd
map A -> B) is recovered by multiplying with J_m(k+ a)/H_m(k+ a).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .config import Fiber
from .errors import PoleError


def transverse_wavenumber(beta, kn: float):
    """k_rho = sqrt((kn)^2 - beta^2) on the physical (retarded) branch.

    Real beta: real >= 0 in the propagating window, +i sqrt(..) beyond.
    Complex beta (residue circles, detoured contours): the branch analytic
    around real guided-window poles and along lower-half-plane detours.
    """
    beta = complex(beta)
    b2 = beta * beta
    kn2 = kn * kn
    if beta.imag == 0.0:
        b2r = b2.real
        if b2r <= kn2:
            return complex(np.sqrt(kn2 - b2r))
        return 1j * complex(np.sqrt(b2r - kn2))
    if b2.real > kn2:
        return 1j * np.sqrt(b2 - kn2)
    return np.sqrt(kn2 - b2)


def _smallarg_ratios(vals, ms, x, kind):
    """Replace non-finite log-derivative ratios (over/underflowed Bessel
    values at |x| << |m|) with their small-argument limits, which are exact
    to double precision exactly where the direct quotient breaks down."""
    bad = ~np.isfinite(vals)
    if not np.any(bad):
        return vals
    vals = vals.copy()
    ma = np.abs(ms[bad])
    if kind == "j":
        vals[bad] = ma / x - x / (2.0 * (ma + 1.0))
    else:
        vals[bad] = -ma / x
    return vals


@dataclass(frozen=True)
class ScatterMatrix:
    """2x2 block mapping regular (A^E, A^H) to outgoing (B^E, B^H) at order m."""

    m: int
    R_EE: complex
    R_EH: complex
    R_HE: complex
    R_HH: complex

    def as_array(self) -> np.ndarray:
        return np.array([[self.R_EE, self.R_EH], [self.R_HE, self.R_HH]])


def _boundary_blocks(ms: np.ndarray, beta, k: float, a: float, n_in: float, n_out: float):
    """Scaled 4x4 matrices and RHS columns for an array of orders.

    Returns (M, rhs) with shapes (n_m, 4, 4) and (n_m, 4, 2); unknown order
    (Bhat^E, Bhat^H, Chat^E, Chat^H), RHS columns driven by Ahat^E, Ahat^H = 1.
    """
    kp = transverse_wavenumber(beta, k * n_out)
    km = transverse_wavenumber(beta, k * n_in)
    xp = kp * a
    xm = km * a
    with np.errstate(all="ignore"):
        hr = sp.h1vp(ms, xp) / sp.hankel1(ms, xp)
        jrp = sp.jvp(ms, xp) / sp.jv(ms, xp)
        jrm = sp.jvp(ms, xm) / sp.jv(ms, xm)
    hr = _smallarg_ratios(hr, ms, xp, kind="h")
    jrp = _smallarg_ratios(jrp, ms, xp, kind="j")
    jrm = _smallarg_ratios(jrm, ms, xm, kind="j")
    ib = 1j * ms * beta / a
    n = len(ms)
    M = np.zeros((n, 4, 4), dtype=complex)
    rhs = np.zeros((n, 4, 2), dtype=complex)
    M[:, 0, 0] = 1.0
    M[:, 0, 2] = -1.0
    M[:, 1, 1] = 1.0
    M[:, 1, 3] = -1.0
    M[:, 2, 0] = ib / kp**2
    M[:, 2, 1] = -(k / kp) * hr
    M[:, 2, 2] = -ib / km**2
    M[:, 2, 3] = (k / km) * jrm
    M[:, 3, 0] = (k * n_out**2 / kp) * hr
    M[:, 3, 1] = ib / kp**2
    M[:, 3, 2] = -(k * n_in**2 / km) * jrm
    M[:, 3, 3] = -ib / km**2
    rhs[:, 0, 0] = -1.0
    rhs[:, 2, 0] = -ib / kp**2
    rhs[:, 3, 0] = -(k * n_out**2 / kp) * jrp
    rhs[:, 1, 1] = -1.0
    rhs[:, 2, 1] = (k / kp) * jrp
    rhs[:, 3, 1] = -ib / kp**2
    return M, rhs, kp, km


def scaled_blocks(m_max: int, beta, k: float, fiber: Fiber, n_out: float):
    """Scaled scattering blocks Rhat and interior maps for orders -m_max..m_max.

    Returns (rhat, interior) where rhat has shape (2 m_max + 1, 2, 2) mapping
    surface-scaled regular amplitudes to surface-scaled outgoing amplitudes,
    and interior the corresponding (2 m_max + 1, 2, 2) map to the scaled
    interior coefficients (Chat^E, Chat^H).
    """
    ms = np.arange(-m_max, m_max + 1)
    M, rhs, _, _ = _boundary_blocks(ms, beta, k, fiber.radius_nm, fiber.index_core, n_out)
    # m = 0 decouples exactly (TE/TM); solve the two 2x2 blocks to keep the
    # mixing entries identically zero instead of LU round-off.
    i0 = m_max
    sol = np.linalg.solve(M, rhs)
    M0 = M[i0]
    e_blk = np.array([[M0[0, 0], M0[0, 2]], [M0[3, 0], M0[3, 2]]])
    h_blk = np.array([[M0[1, 1], M0[1, 3]], [M0[2, 1], M0[2, 3]]])
    re = np.linalg.solve(e_blk, np.array([rhs[i0][0, 0], rhs[i0][3, 0]]))
    rh = np.linalg.solve(h_blk, np.array([rhs[i0][1, 1], rhs[i0][2, 1]]))
    sol[i0] = 0.0
    sol[i0, 0, 0], sol[i0, 2, 0] = re
    sol[i0, 1, 1], sol[i0, 3, 1] = rh
    return sol[:, :2, :], sol[:, 2:, :]


def scatter_matrix(m: int, beta: float, k: float, fiber: Fiber, n_out: float = 1.0,
                   pole_rel_tol: float = 1e-10) -> ScatterMatrix:
    """Raw per-order scattering matrix (A^E, A^H) -> (B^E, B^H).

    Finite for all real beta except the isolated fiber's own guided poles,
    where the boundary system is singular and a PoleError is raised so contour
    code can detour.
    """
    ms = np.array([m])
    M, rhs, kp, _ = _boundary_blocks(ms, beta, k, fiber.radius_nm, fiber.index_core, n_out)
    cond_probe = np.abs(np.linalg.det(M[0]))
    scale = np.prod([max(np.max(np.abs(M[0, i])), 1e-300) for i in range(4)])
    if cond_probe < pole_rel_tol * scale:
        raise PoleError(
            f"beta = {beta!r} is within pole tolerance of a guided mode of the isolated fiber"
        )
    rhat, _ = scaled_blocks(abs(m), beta, k, fiber, n_out)
    blk = rhat[abs(m) + m]  # index of order m in -|m|..|m|
    xp = kp * fiber.radius_nm
    ratio = complex(sp.jv(m, xp) / sp.hankel1(m, xp))
    r = blk * ratio
    return ScatterMatrix(m=m, R_EE=r[0, 0], R_EH=r[0, 1], R_HE=r[1, 0], R_HH=r[1, 1])


def boundary_determinant(m: int, beta, k: float, fiber: Fiber, n_out: float = 1.0) -> complex:
    """det of the scaled 4x4 boundary system; zeros are the isolated fiber's
    guided-mode propagation constants at azimuthal order m."""
    ms = np.array([m])
    M, _, _, _ = _boundary_blocks(ms, beta, k, fiber.radius_nm, fiber.index_core, n_out)
    return complex(np.linalg.det(M[0]))
