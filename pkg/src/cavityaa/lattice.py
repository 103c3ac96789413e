"""Bloch bands and Wannier orbitals of the deep confining lattice.

The confining potential is W0 cos^2(k0 x).  Everything here works in recoil
units: energies in E_r = hbar^2 k0^2 / (2m), lengths in 1/k0, so the lattice
constant is a = pi and the kinetic operator is -d^2/dx^2.  The lowest band is
solved in a plane-wave basis, the real lowest-band Wannier orbital is built by
phase fixing, and the tight-binding constants derived from it (hopping t and
the smearing constants A, B, alpha of the incommensurate harmonic) are stored
on the basis object for the downstream chain model.

Site centers sit at the potential minima.  For W0 < 0 the minima of
W0 cos^2(k0 x) are at x = 0 mod a; for W0 > 0 they are shifted by a/2.  The
solver always works in the site-centered frame, which makes the two signs of
W0 exactly equivalent apart from a constant energy offset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import eigh_tridiagonal

if TYPE_CHECKING:  # pragma: no cover
    from .model import EffectivePotential

#: Inverse golden ratio, the default incommensuration beta = k / k0.
GOLDEN_BETA = (np.sqrt(5.0) - 1.0) / 2.0

#: Lattice constant a = pi / k0 in units of 1/k0.
LATTICE_CONSTANT = np.pi


class BandSolveError(RuntimeError):
    """Raised when the plane-wave eigenproblem fails at some quasimomentum."""


@dataclass(frozen=True)
class LatticeSpec:
    """Parameters of the confining lattice and of the numerical basis.

    depth_W0 is in E_r and may be negative (the deep-lattice figures use
    W0 = -15 E_r).  The plane-wave basis spans reciprocal vectors -M..+M.
    window_sites and points_per_site fix the real-space grid on which the
    Wannier orbital is sampled.
    """

    depth_W0: float
    planewave_cutoff_M: int = 15
    quasimomentum_samples_Nq: int = 128
    beta: float = GOLDEN_BETA
    window_sites: int = 5
    points_per_site: int = 64

    def __post_init__(self):
        if self.planewave_cutoff_M < 8:
            raise ValueError("planewave_cutoff_M must be >= 8")
        if self.quasimomentum_samples_Nq < 64 or self.quasimomentum_samples_Nq % 2:
            raise ValueError("quasimomentum_samples_Nq must be even and >= 64")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly between 0 and 1")
        if self.window_sites < 2:
            raise ValueError("window_sites must be >= 2")
        if self.points_per_site < 16:
            raise ValueError("points_per_site must be >= 16")


@dataclass(frozen=True)
class BlochBand:
    """Lowest band sampled on a symmetric quasimomentum grid in [-k0, k0)."""

    quasimomenta: np.ndarray  # (Nq,)
    energies: np.ndarray  # (Nq,) in E_r
    eigenvectors: np.ndarray  # (Nq, 2M+1) plane-wave coefficients, unit norm
    depth_W0: float

    def __post_init__(self):
        for arr in (self.quasimomenta, self.energies, self.eigenvectors):
            arr.setflags(write=False)


@dataclass(frozen=True)
class WannierBasis:
    """Sampled lowest-band Wannier orbital with its derived constants.

    The grid spans +-window_sites lattice sites around one site center with
    points_per_site samples per site; quad_weights are trapezoid weights, so
    integrals over the window are plain dot products.  t is the hopping from
    the real-space matrix element (t_band is the band-sum cross-check), and
    alpha = sqrt(A^2 + B^2) is the Wannier smearing factor of the first
    incommensurate harmonic.
    """

    grid: np.ndarray  # (Npts,) sample points, site center at 0
    w0_samples: np.ndarray  # (Npts,) real Wannier values
    w0_laplacian: np.ndarray  # (Npts,) exact second derivative
    quad_weights: np.ndarray  # (Npts,) trapezoid weights
    site_spacing_a: float
    t: float
    t_band: float
    A: float
    B: float
    alpha: float
    beta: float
    depth_W0: float
    spec: LatticeSpec = field(repr=False)

    def __post_init__(self):
        for arr in (self.grid, self.w0_samples, self.w0_laplacian, self.quad_weights):
            arr.setflags(write=False)

    @property
    def density_weights(self) -> np.ndarray:
        """w0^2 times quadrature weights; the smearing measure."""
        return self.w0_samples * self.w0_samples * self.quad_weights


def _quasimomentum_grid(nq: int) -> np.ndarray:
    # Offset symmetric grid: every q has an exact -q partner and the zone
    # boundary is avoided, which keeps the Wannier sum exactly real and even.
    return -1.0 + (2.0 * np.arange(nq) + 1.0) / nq


def solve_lowest_band(spec: LatticeSpec) -> BlochBand:
    """Diagonalize -d^2/dx^2 + W0 cos^2(x) per quasimomentum, lowest band only.

    In the plane-wave basis the operator is tridiagonal: diagonal (q + 2l)^2 +
    W0/2 and first off-diagonal -|W0|/4 in the site-centered frame (the sign
    flip for W0 > 0 is the a/2 shift of the site centers).
    """
    m_cut = spec.planewave_cutoff_M
    nq = spec.quasimomentum_samples_Nq
    ls = np.arange(-m_cut, m_cut + 1)
    qs = _quasimomentum_grid(nq)
    offdiag = np.full(2 * m_cut, -abs(spec.depth_W0) / 4.0)
    energies = np.empty(nq)
    vecs = np.empty((nq, 2 * m_cut + 1))
    for j, q in enumerate(qs):
        diag = (q + 2.0 * ls) ** 2 + spec.depth_W0 / 2.0
        try:
            w, v = eigh_tridiagonal(diag, offdiag, select="i", select_range=(0, 0))
        except Exception as exc:
            raise BandSolveError(
                f"plane-wave eigensolve failed at q = {q:.6f} k0"
            ) from exc
        energies[j] = w[0]
        vecs[j] = v[:, 0]
    return BlochBand(quasimomenta=qs, energies=energies, eigenvectors=vecs,
                     depth_W0=spec.depth_W0)


def build_wannier(band: BlochBand, spec: LatticeSpec) -> WannierBasis:
    """Construct the real, even, site-centered Wannier orbital and constants.

    Bloch phases are fixed so that every Bloch function is real and positive
    at the site center; for a symmetric 1D band this phase choice yields the
    maximally localized Wannier orbital.  The orbital is evaluated as a plane
    wave sum, so its second derivative is available exactly.
    """
    m_cut = spec.planewave_cutoff_M
    nq = spec.quasimomentum_samples_Nq
    ls = np.arange(-m_cut, m_cut + 1)
    qs = band.quasimomenta

    # u_q(0) = sum of plane-wave coefficients; fix its sign to +.
    coeffs = band.eigenvectors.copy()
    at_center = coeffs.sum(axis=1)
    bad = np.abs(at_center) < 1e-12
    if np.any(bad):
        qbad = qs[np.argmax(bad)]
        raise BandSolveError(
            f"phase fixing failed at q = {qbad:.6f} k0: Bloch function vanishes "
            "at the site center (degenerate band point)"
        )
    coeffs[at_center < 0] *= -1.0

    step = LATTICE_CONSTANT / spec.points_per_site
    half = spec.window_sites * spec.points_per_site
    grid = np.arange(-half, half + 1) * step

    # w0(x) = (1 / (Nq sqrt(pi))) sum_{q,l} c_{q,l} cos((q + 2l) x); the sine
    # parts cancel exactly on the +-q symmetric grid.
    kvec = (qs[:, None] + 2.0 * ls[None, :]).ravel()
    cvec = coeffs.ravel() / (nq * np.sqrt(np.pi))
    phases = np.cos(np.outer(grid, kvec))
    w0 = phases @ cvec
    w0_lap = phases @ (-(kvec ** 2) * cvec)

    weights = np.full(grid.shape, step)
    weights[0] = weights[-1] = step / 2.0

    t_band = tunneling_from_band(band)
    a_const, b_const, alpha = _correction_integrals(grid, w0, weights, spec.beta)
    t_int = _tunneling_integral(grid, w0, w0_lap, weights, spec)

    return WannierBasis(
        grid=grid, w0_samples=w0, w0_laplacian=w0_lap, quad_weights=weights,
        site_spacing_a=LATTICE_CONSTANT, t=t_int, t_band=t_band,
        A=a_const, B=b_const, alpha=alpha, beta=spec.beta,
        depth_W0=spec.depth_W0, spec=spec,
    )


def tunneling_from_band(band: BlochBand) -> float:
    """Hopping t = -(1/Nq) sum_q E(q) cos(q a); positive for the lowest band."""
    return float(-np.mean(band.energies * np.cos(band.quasimomenta * LATTICE_CONSTANT)))


def band_tightbinding_residual(band: BlochBand) -> float:
    """Deviation of E(q) from the single-harmonic tight-binding dispersion.

    Returns max_q |E(q) - (eps0 - 2t cos(q a))| / max(bandwidth, tiny).  Small
    in the tight-binding regime; order unity for a free particle (W0 = 0),
    where the hopping reconstruction is out of regime.
    """
    t = tunneling_from_band(band)
    eps0 = float(np.mean(band.energies))
    model = eps0 - 2.0 * t * np.cos(band.quasimomenta * LATTICE_CONSTANT)
    width = float(band.energies.max() - band.energies.min())
    return float(np.max(np.abs(band.energies - model)) / max(width, 1e-300))


def _tunneling_integral(grid, w0, w0_lap, weights, spec: LatticeSpec) -> float:
    p = spec.points_per_site
    # Neighbor orbital w0(x - a) is an exact index shift of p samples; the
    # overlap region carries the whole integrand (tails are below 1e-12).
    w1 = np.zeros_like(w0)
    w1[p:] = w0[:-p]
    w1_lap = np.zeros_like(w0_lap)
    w1_lap[p:] = w0_lap[:-p]
    # Site-centered frame: W(x) = W0/2 - (|W0|/2) cos(2x).
    pot = spec.depth_W0 / 2.0 - abs(spec.depth_W0) / 2.0 * np.cos(2.0 * grid)
    integrand = w0 * (-w1_lap + pot * w1)
    # Sign convention: t > 0 so the chain Hamiltonian carries -t off-diagonal.
    return float(-np.dot(weights, integrand))


def tunneling_from_integral(wb: WannierBasis, spec: LatticeSpec) -> float:
    """Hopping from the real-space matrix element between neighbor orbitals."""
    if spec.window_sites < 2:
        raise ValueError("window too small: need window_sites >= 2 for the overlap")
    return _tunneling_integral(wb.grid, wb.w0_samples, wb.w0_laplacian,
                               wb.quad_weights, spec)


def _correction_integrals(grid, w0, weights, beta):
    dens = w0 * w0 * weights
    a_const = float(-np.dot(dens, np.sin(2.0 * beta * grid)))
    b_const = float(np.dot(dens, np.cos(2.0 * beta * grid)))
    return a_const, b_const, float(np.hypot(a_const, b_const))


def correction_constants(wb: WannierBasis, beta: float | None = None) -> tuple[float, float, float]:
    """Smearing constants (A, B, alpha) of the first incommensurate harmonic.

    A = -int w0^2(x) sin(2 beta x) dx, B = int w0^2(x) cos(2 beta x) dx,
    alpha = sqrt(A^2 + B^2), all centered on the Wannier center.  A vanishes
    for the even orbital; B tends to 1 from below in the deep-lattice limit.
    """
    b = wb.beta if beta is None else float(beta)
    return _correction_integrals(wb.grid, wb.w0_samples, wb.quad_weights, b)


def cavity_tunneling_corrections(wb: WannierBasis, pot: "EffectivePotential",
                                 L: int) -> np.ndarray:
    """Bond integrals t_n = int w_n(x) V_eff(x) w_{n+1}(x) dx for n = 1..L-1.

    Used only to verify that the cavity potential contributes negligibly to
    the hopping; the chain model keeps a uniform t.
    """
    from .model import f_eval  # local import: model depends on this module

    if pot.mode == "aa":
        raise ValueError("cavity_tunneling_corrections requires a cavity-mode potential")
    if L < 2:
        raise ValueError("need at least two sites")
    p = wb.spec.points_per_site
    a = wb.site_spacing_a
    # In the bond frame v = x - n a the product w_n w_{n+1} is w0(v) w0(v - a),
    # supported on the overlap of the shifted grids.
    pair = wb.w0_samples[p:] * wb.w0_samples[:-p]
    step = LATTICE_CONSTANT / p
    wts = np.full(pair.shape, step)
    wts[0] = wts[-1] = step / 2.0
    vgrid = wb.grid[p:]
    out = np.empty(L - 1)
    for n in range(1, L):
        out[n - 1] = float(np.dot(pair * wts, f_eval(pot, vgrid + n * a)))
    return pot.v0 * out
