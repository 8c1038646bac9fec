"""Multiple-scattering solve and spectral Green tensor at fixed beta.

The scattered part of the Fourier-domain Green tensor is expanded in outgoing
cylindrical harmonics about each fiber.  Graf's addition theorem turns the
mutual coupling into a dense block system

    (I - Rhat Shat) Bhat = Rhat Khat,

solved once per (beta, source) for all three dipole orientations.  All
quantities are surface-scaled (see cylscatter): Bhat = B * H_m(k+ a_l),
Ahat = A * J_m(k+ a_l), which keeps every matrix entry bounded from the
radiation window through the deep evanescent tail.

Sign and normalization conventions are fixed by requiring that the machinery
reproduce the analytic free-space dyadic tensor when all scattering matrices
vanish (see vacuum.py); the test suite checks this end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .config import FiberArray
from .cylscatter import scaled_blocks, transverse_wavenumber
from .errors import ConvergenceError, DomainError, PoleError

#: minimum clearance of evaluation points from fiber surfaces (nm)
SURFACE_MARGIN_NM = 0.1

#: hard cap for the adaptive azimuthal truncation
M_MAX_CAP = 64


def _finite_or_zero(arr):
    """Zero the entries whose paired-factor products over/underflowed.

    Used only for surface-scaled combinations that are mathematically bounded
    by (a/rho)^|m|: a non-finite value can only arise where the true entry is
    below double-precision resolution."""
    bad = ~np.isfinite(arr)
    if np.any(bad):
        arr = np.where(bad, 0.0, arr)
    return arr


def default_m_max(fibers: FiberArray, k: float) -> int:
    """Standard multipole heuristic: ceil(k n_core a_max) + 12."""
    if fibers.n_fibers == 0:
        return 1
    return int(np.ceil(k * fibers.max_index_core() * float(np.max(fibers.radii())))) + 12


@dataclass(frozen=True)
class SourceTerms:
    """Source coefficients K[u][V][l][m] of the dipole field expanded about
    each fiber; includes the i/4 prefactor of the global expansion.  k_hat
    carries the surface scaling J_m(k_rho a_l)."""

    beta: float
    k_rho: complex
    K: np.ndarray      # (3, 2, N, 2*m_max+1)
    k_hat: np.ndarray  # same shape, scaled


@dataclass(frozen=True)
class TranslationOperator:
    """Scaled Graf translation matrix Shat between distinct fibers, flattened
    over (fiber, order)."""

    beta: float
    k_rho: complex
    S_hat: np.ndarray  # (N*(2*m_max+1),) square


@dataclass(frozen=True)
class ScatteredAmplitudes:
    B_hat: np.ndarray  # (3, 2, N, 2*m_max+1) surface-scaled amplitudes
    m_max: int
    residual: float


@dataclass(frozen=True)
class SpectralGreen:
    """3x3 spectral Green tensor at one beta, split vacuum/scattered."""

    beta: float
    rho: tuple
    rho_src: tuple
    scattered: np.ndarray
    vacuum: np.ndarray | None = None

    @property
    def total(self) -> np.ndarray:
        if self.vacuum is None:
            raise DomainError("vacuum part was not evaluated (coincident transverse points)")
        return self.vacuum + self.scattered


class MultiScatterer:
    """Assembles and solves the multiple-scattering system for one geometry."""

    def __init__(self, fibers: FiberArray, k: float, m_max: int):
        if fibers.n_fibers == 0:
            raise DomainError("MultiScatterer needs at least one fiber (vacuum is analytic)")
        self.fibers = fibers
        self.k = float(k)
        self.m_max = int(m_max)
        self.n_out = fibers.index_ambient
        self.centers = fibers.centers()
        self.radii = fibers.radii()
        self.N = fibers.n_fibers
        self.ms = np.arange(-m_max, m_max + 1)
        self.nm = 2 * m_max + 1
        self.D = self.N * self.nm

    # -- per-beta assembly ---------------------------------------------------

    def k_rho_out(self, beta) -> complex:
        return transverse_wavenumber(beta, self.k * self.n_out)

    def _surface_scales(self, kp):
        jl = np.empty((self.N, self.nm), complex)
        hl = np.empty((self.N, self.nm), complex)
        for l in range(self.N):
            jl[l] = sp.jv(self.ms, kp * self.radii[l])
            hl[l] = sp.hankel1(self.ms, kp * self.radii[l])
        return jl, hl

    def scattering_blocks(self, beta):
        """Rhat, interior maps for all fibers: arrays (N, nm, 2, 2); identical
        fibers share one boundary solve."""
        rhat = np.empty((self.N, self.nm, 2, 2), complex)
        interior = np.empty((self.N, self.nm, 2, 2), complex)
        cache = {}
        for l, fib in enumerate(self.fibers.fibers):
            key = (fib.radius_nm, fib.index_core)
            if key not in cache:
                cache[key] = scaled_blocks(self.m_max, beta, self.k, fib, self.n_out)
            rhat[l], interior[l] = cache[key]
        return rhat, interior

    def translation(self, beta, kp=None, jl=None, hl=None) -> TranslationOperator:
        """Shat[(l,m),(l',m')] = J_m(kp a_l) H_(m'-m)(kp rho_ll') e^{i(m'-m) phi_l'l} / H_m'(kp a_l')."""
        if kp is None:
            kp = self.k_rho_out(beta)
        if jl is None or hl is None:
            jl, hl = self._surface_scales(kp)
        Sh = np.zeros((self.D, self.D), complex)
        dm = self.ms[None, :] - self.ms[:, None]  # m' - m, rows m / cols m'
        dm_range = np.arange(-2 * self.m_max, 2 * self.m_max + 1)
        h_cache = {}
        for l in range(self.N):
            for lp in range(self.N):
                if l == lp:
                    continue
                dc = self.centers[l] - self.centers[lp]
                rho = float(np.hypot(dc[0], dc[1]))
                phi = float(np.arctan2(dc[1], dc[0]))
                if rho not in h_cache:
                    with np.errstate(all="ignore"):
                        h_cache[rho] = sp.hankel1(dm_range, kp * rho)
                hvals = h_cache[rho][dm + 2 * self.m_max]
                with np.errstate(all="ignore"):
                    blk = (jl[l][:, None] * (hvals * np.exp(1j * dm * phi))) / hl[lp][None, :]
                blk = _finite_or_zero(blk)
                Sh[l * self.nm:(l + 1) * self.nm, lp * self.nm:(lp + 1) * self.nm] = blk
        return TranslationOperator(beta=complex(beta).real, k_rho=kp, S_hat=Sh)

    def source_terms(self, beta, source, kp=None, jl=None) -> SourceTerms:
        """Dipole source coefficients about every fiber, all three orientations."""
        source = np.asarray(source, dtype=float)
        self.fibers.require_outside(source, what="source point", margin=SURFACE_MARGIN_NM * 0.999)
        if kp is None:
            kp = self.k_rho_out(beta)
        if jl is None:
            jl, _ = self._surface_scales(kp)
        k = self.k
        K = np.zeros((3, 2, self.N, self.nm), complex)
        mext = np.arange(-self.m_max - 1, self.m_max + 2)
        for l in range(self.N):
            zs = source - self.centers[l]
            rs = float(np.hypot(zs[0], zs[1]))
            ps = float(np.arctan2(zs[1], zs[0]))
            with np.errstate(all="ignore"):
                hs = sp.hankel1(mext, kp * rs) * np.exp(-1j * mext * ps)
            hm = hs[1:-1]
            hm_m1 = hs[:-2]
            hm_p1 = hs[2:]
            pref = 0.25j
            K[0, 0, l] = pref * (1j * beta * kp / (2 * k * k)) * (hm_p1 - hm_m1)
            K[1, 0, l] = pref * (-beta * kp / (2 * k * k)) * (hm_p1 + hm_m1)
            K[2, 0, l] = pref * (kp * kp / (k * k)) * hm
            K[0, 1, l] = pref * (-kp / (2 * k)) * (hm_p1 + hm_m1)
            K[1, 1, l] = pref * (-1j * kp / (2 * k)) * (hm_p1 - hm_m1)
            # K[2, 1] = 0: a z dipole sources no H_z directly
        with np.errstate(all="ignore"):
            k_hat = _finite_or_zero(K * jl[None, None, :, :])
        return SourceTerms(beta=complex(beta).real, k_rho=kp, K=K, k_hat=k_hat)

    # -- system solve ----------------------------------------------------------

    def _system(self, beta):
        """Returns (kp, jl, hl, rhat, interior, A) with A = I - Rhat Shat."""
        kp = self.k_rho_out(beta)
        jl, hl = self._surface_scales(kp)
        rhat, interior = self.scattering_blocks(beta)
        rflat = rhat.reshape(self.D, 2, 2)
        if self.N > 1:
            Sh = self.translation(beta, kp, jl, hl).S_hat
            RS = np.einsum("ivw,ij->viwj", rflat, Sh).reshape(2 * self.D, 2 * self.D)
            A = np.eye(2 * self.D, dtype=complex) - RS
        else:
            A = np.eye(2 * self.D, dtype=complex)
        return kp, jl, hl, rflat, interior, A

    def determinant(self, beta):
        """(sign, log|det|) of I - Rhat Shat; zeros are composite guided modes."""
        _, _, _, _, _, A = self._system(beta)
        sign, logabs = np.linalg.slogdet(A)
        return sign, logabs

    def solve(self, beta, source, rtol: float = 1e-10) -> ScatteredAmplitudes:
        """Scattered amplitudes for a dipole at `source`, all orientations."""
        kp, jl, hl, rflat, interior, A = self._system(beta)
        st = self.source_terms(beta, source, kp, jl)
        kh = st.k_hat.reshape(3, 2, self.D)
        rhs = np.einsum("ivw,uwi->viu", rflat, kh).reshape(2 * self.D, 3)
        sol = np.linalg.solve(A, rhs)
        nrm = np.linalg.norm(rhs)
        res = np.linalg.norm(A @ sol - rhs)
        for _ in range(2):
            if nrm == 0 or res <= rtol * nrm:
                break
            sol += np.linalg.solve(A, rhs - A @ sol)
            res = np.linalg.norm(A @ sol - rhs)
        if nrm > 0 and res > rtol * nrm:
            # accept if backward stable (cannot do better in double precision);
            # only an actual near-singular system is a pole hit
            backward = res / (np.linalg.norm(A) * np.linalg.norm(sol) + nrm)
            if backward > 100 * np.finfo(float).eps:
                raise PoleError(
                    f"linear system residual {res / nrm:.2e} at beta = {beta!r}; "
                    "spectral point is too close to a guided-mode pole"
                )
        b_hat = sol.reshape(2, self.N, self.nm, 3).transpose(3, 0, 1, 2)
        return ScatteredAmplitudes(B_hat=b_hat, m_max=self.m_max,
                                   residual=float(res / nrm) if nrm > 0 else 0.0)

    def null_vector(self, beta):
        """Smallest singular vector of I - Rhat Shat, as Bhat (2, N, nm);
        also returns the two smallest singular values for degeneracy checks."""
        _, _, _, _, _, A = self._system(beta)
        _, svals, vh = np.linalg.svd(A)
        vec = vh[-1].conj()
        return vec.reshape(2, self.N, self.nm), svals[-1], svals[-2]

    # -- field evaluation ------------------------------------------------------

    def _hankel_eval(self, kp, points):
        """Per-fiber Hankel arrays at orders -m_max-1 .. m_max+1 for a batch
        of exterior points; returns list over fibers of (nm+2, npts) arrays
        psi_m = H_m(kp rho_l) e^{i m phi_l}."""
        mext = np.arange(-self.m_max - 1, self.m_max + 2)
        out = []
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        for l in range(self.N):
            z = pts - self.centers[l][None, :]
            r = np.hypot(z[:, 0], z[:, 1])
            ph = np.arctan2(z[:, 1], z[:, 0])
            with np.errstate(all="ignore"):
                h = sp.hankel1(mext[:, None], kp * r[None, :])
            out.append(h * np.exp(1j * mext[:, None] * ph[None, :]))
        return out

    def scattered_field_zrows(self, beta, b_hat, points, kp=None, hl=None):
        """E_z/H_z scalars and their transverse gradients of the scattered
        field encoded by b_hat (..., 2, N, nm) at exterior points.

        Returns arrays (..., npts) for (Ez, Hz, dxEz, dyEz, dxHz, dyHz).
        """
        if kp is None:
            kp = self.k_rho_out(beta)
        if hl is None:
            _, hl = self._surface_scales(kp)
        psi = self._hankel_eval(kp, points)
        lead = b_hat.shape[:-3]
        npts = np.asarray(points).reshape(-1, 2).shape[0]
        fields = np.zeros(lead + (6, npts), complex)
        for l in range(self.N):
            with np.errstate(all="ignore"):
                c = _finite_or_zero(b_hat[..., :, l, :] / hl[l])  # (..., 2, nm)
            pm = psi[l][1:-1]   # order m
            pm_m1 = psi[l][:-2]
            pm_p1 = psi[l][2:]
            dx = 0.5 * kp * (pm_m1 - pm_p1)
            dy = 0.5j * kp * (pm_p1 + pm_m1)
            with np.errstate(all="ignore"):
                fields[..., 0, :] += _finite_or_zero(
                    np.einsum("...m,mp->...p", c[..., 0, :], pm))
                fields[..., 1, :] += _finite_or_zero(
                    np.einsum("...m,mp->...p", c[..., 1, :], pm))
                fields[..., 2, :] += _finite_or_zero(
                    np.einsum("...m,mp->...p", c[..., 0, :], dx))
                fields[..., 3, :] += _finite_or_zero(
                    np.einsum("...m,mp->...p", c[..., 0, :], dy))
                fields[..., 4, :] += _finite_or_zero(
                    np.einsum("...m,mp->...p", c[..., 1, :], dx))
                fields[..., 5, :] += _finite_or_zero(
                    np.einsum("...m,mp->...p", c[..., 1, :], dy))
        return fields

    def efield_from_zrows(self, beta, kp, fields):
        """Assemble (Ex, Ey, Ez) from the z-row scalars; source-free region."""
        ez, hz, dxe, dye, dxh, dyh = (fields[..., i, :] for i in range(6))
        k = self.k
        ex = (1j / kp**2) * (beta * dxe + k * dyh)
        ey = (1j / kp**2) * (beta * dye - k * dxh)
        return np.stack([ex, ey, ez], axis=-2)  # (..., 3, npts)

    def spectral_scattered(self, beta, source, obs, amplitudes=None):
        """Scattered spectral tensor(s) at observation point(s); (npts, 3, 3)
        with [p, i, u] = component i of the field from orientation u."""
        obs_arr = np.asarray(obs, dtype=float).reshape(-1, 2)
        for p in obs_arr:
            self.fibers.require_outside(p, what="observation point",
                                        margin=SURFACE_MARGIN_NM * 0.999)
        if amplitudes is None:
            amplitudes = self.solve(beta, source)
        kp = self.k_rho_out(beta)
        fields = self.scattered_field_zrows(beta, amplitudes.B_hat, obs_arr, kp=kp)
        e = self.efield_from_zrows(beta, kp, fields)  # (3, 3, npts): u, comp, p
        return np.ascontiguousarray(np.transpose(e, (2, 1, 0)))


# -- module-level operations matching the public contracts ---------------------

def source_terms(beta: float, k: float, fibers: FiberArray, source_point, k_rho=None,
                 m_max: int | None = None) -> SourceTerms:
    eng = MultiScatterer(fibers, k, m_max if m_max is not None else default_m_max(fibers, k))
    if k_rho is not None:
        expected = eng.k_rho_out(beta)
        if abs(k_rho - expected) > 1e-9 * max(1.0, abs(expected)):
            raise DomainError(f"k_rho = {k_rho!r} inconsistent with beta (expected {expected!r})")
    return eng.source_terms(beta, source_point)


def assemble_and_solve(beta: float, k: float, fibers: FiberArray, source,
                       m_max: int | None = None, quad_rel_tol: float = 1e-6):
    """Solve with adaptive m_max doubling until the coincident-point emitter
    observable changes by less than quad_rel_tol."""
    m = m_max if m_max is not None else default_m_max(fibers, k)
    prev = None
    while True:
        eng = MultiScatterer(fibers, k, m)
        amps = eng.solve(beta, source)
        probe = eng.spectral_scattered(beta, source, np.asarray(source), amplitudes=amps)[0]
        if m_max is not None:
            return eng, amps
        if prev is not None:
            scale = max(np.max(np.abs(probe)), np.max(np.abs(prev)), 1e-300)
            if np.max(np.abs(probe - prev)) <= quad_rel_tol * scale:
                return eng, amps
        if 2 * m > M_MAX_CAP:
            raise ConvergenceError(
                f"azimuthal truncation did not converge by m_max = {m}",
                diagnostics={"m_max": m, "last_change": float(np.max(np.abs(probe - prev)))
                             if prev is not None else None},
            )
        prev = probe
        m *= 2


def spectral_tensor(beta: float, k: float, fibers: FiberArray, rho, rho_src,
                    m_max: int | None = None, include_vacuum: bool = True) -> SpectralGreen:
    """Full spectral tensor G~ = G~0 + G~scatt at one beta (vacuum part only
    when the transverse points are distinct)."""
    rho = np.asarray(rho, dtype=float)
    rho_src = np.asarray(rho_src, dtype=float)
    eng = MultiScatterer(fibers, k, m_max if m_max is not None else default_m_max(fibers, k))
    scatt = eng.spectral_scattered(beta, rho_src, rho)[0]
    vac = None
    if include_vacuum and np.linalg.norm(rho - rho_src) > 0:
        kp = eng.k_rho_out(beta)
        vac = _spectral_vacuum_full(k, kp, beta, rho, rho_src)
    return SpectralGreen(beta=beta, rho=tuple(rho), rho_src=tuple(rho_src),
                         scattered=scatt, vacuum=vac)


def _spectral_vacuum_full(k: float, kp, beta, rho, rho_src) -> np.ndarray:
    """Analytic 3x3 spectral vacuum tensor for distinct transverse points."""
    d = np.asarray(rho, float) - np.asarray(rho_src, float)
    P = float(np.hypot(d[0], d[1]))
    phi = float(np.arctan2(d[1], d[0]))
    h = sp.hankel1(np.arange(-3, 4), kp * P)
    psi = lambda m: h[m + 3] * np.exp(1j * m * phi)
    out = np.zeros((3, 3), complex)
    for u in range(3):
        if u == 2:
            cE = {0: (kp**2 / k**2) * 0.25j}
            cH = {}
        elif u == 0:
            cE = {-1: (1j * beta / k**2) * 0.25j * 0.5 * kp,
                  1: -(1j * beta / k**2) * 0.25j * 0.5 * kp}
            cH = {1: -(1 / (1j * k)) * 0.25j * 0.5j * kp,
                  -1: -(1 / (1j * k)) * 0.25j * 0.5j * kp}
        else:
            cE = {1: (1j * beta / k**2) * 0.25j * 0.5j * kp,
                  -1: (1j * beta / k**2) * 0.25j * 0.5j * kp}
            cH = {-1: (1 / (1j * k)) * 0.25j * 0.5 * kp,
                  1: -(1 / (1j * k)) * 0.25j * 0.5 * kp}
        ez = sum(c * psi(m) for m, c in cE.items())
        dxe = sum(c * 0.5 * kp * (psi(m - 1) - psi(m + 1)) for m, c in cE.items())
        dye = sum(c * 0.5j * kp * (psi(m + 1) + psi(m - 1)) for m, c in cE.items())
        dxh = sum(c * 0.5 * kp * (psi(m - 1) - psi(m + 1)) for m, c in cH.items())
        dyh = sum(c * 0.5j * kp * (psi(m + 1) + psi(m - 1)) for m, c in cH.items())
        out[0, u] = (1j / kp**2) * (beta * dxe + k * dyh)
        out[1, u] = (1j / kp**2) * (beta * dye - k * dxh)
        out[2, u] = ez
    return out
