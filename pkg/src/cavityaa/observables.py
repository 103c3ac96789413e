"""Localization diagnostics, critical-point estimates, and the photon number.

The inverse participation ratio and the Lyapunov exponent of the density
decay characterize the extended/localized phases; the transition point is
extracted from the steepest slope of log IPR versus log v0, and the small-C
dual-model prediction (4t/alpha)(delta'^2+1)/|C| provides the analytic
comparison line.  The mean intracavity photon number follows from the
quasi-steady cavity field averaged over the atomic density.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .lattice import WannierBasis

#: Identifier of the transition estimator, recorded in output metadata.
TRANSITION_METHOD = "max_dlogipr_dlogv0"


def _amplitudes(state) -> np.ndarray:
    amp = getattr(state, "amplitudes", state)
    return np.asarray(amp, dtype=np.float64)


def ipr(state) -> float:
    """Inverse participation ratio sum_n |psi_n|^4 of a normalized state."""
    amp = _amplitudes(state)
    dens = amp * amp
    return float(np.sum(dens * dens))


@dataclass(frozen=True)
class FitOptions:
    """Tuning of the exponential-decay fit."""

    background_factor: float = 10.0  # density threshold over the background
    min_window_sites: int = 10
    min_r2: float = 0.9
    asymmetry_tol: float = 0.2  # per-side slope mismatch that flags the state


@dataclass(frozen=True)
class LocalizationMetrics:
    """Outcome of the density-decay analysis for one state.

    lyapunov_gamma is None in the extended or unresolved phase (window too
    small or poor fit).  Per-side slopes and their average are kept for
    inspection; edge effects show up as left/right asymmetry.
    """

    ipr: float
    lyapunov_gamma: float | None
    gamma_stderr: float | None
    fit_r2: float
    peak_site: int  # 1-based
    background_level: float
    window_sites: int
    left_gamma: float | None = None
    right_gamma: float | None = None
    side_average_gamma: float | None = None
    asymmetric: bool = False


def lyapunov_fit(state, opts: FitOptions = FitOptions()) -> LocalizationMetrics:
    """Exponential decay rate of the density around its peak.

    The background is the median density over the quarter of sites farthest
    from the peak; the fit window is the contiguous run around the peak where
    the density exceeds background_factor times that level.  The decay rate
    gamma comes from the least-squares fit log|psi_n|^2 = c - 2 gamma |n-n0|
    over the window (the factor 2 is the density convention); gamma is
    reported only when the window spans at least min_window_sites sites and
    the fit reaches min_r2.
    """
    amp = _amplitudes(state)
    dens = amp * amp
    L = dens.shape[0]
    n0 = int(np.argmax(dens))
    dist = np.abs(np.arange(L) - n0)
    far = np.argsort(dist, kind="stable")[-(L // 4):]
    background = float(np.median(dens[far]))
    threshold = opts.background_factor * background

    lo = n0
    while lo - 1 >= 0 and dens[lo - 1] > threshold:
        lo -= 1
    hi = n0
    while hi + 1 < L and dens[hi + 1] > threshold:
        hi += 1
    window = np.arange(lo, hi + 1)
    base = dict(ipr=ipr(amp), peak_site=n0 + 1, background_level=background,
                window_sites=window.shape[0])

    if window.shape[0] < opts.min_window_sites:
        return LocalizationMetrics(lyapunov_gamma=None, gamma_stderr=None,
                                   fit_r2=0.0, **base)

    y = np.log(dens[window])
    x = np.abs(window - n0).astype(np.float64)
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    gamma = -coef[1] / 2.0

    # slope standard error from the least-squares covariance
    m = x.shape[0]
    stderr = None
    if m > 2:
        sigma2 = ss_res / (m - 2)
        sxx = float(np.sum((x - x.mean()) ** 2))
        if sxx > 0.0:
            stderr = float(np.sqrt(sigma2 / sxx) / 2.0)

    def _side_slope(side):
        if side.shape[0] < 4:
            return None
        xs = np.abs(side - n0).astype(np.float64)
        ys = np.log(dens[side])
        return float(-np.polyfit(xs, ys, 1)[0] / 2.0)

    left = _side_slope(window[window < n0])
    right = _side_slope(window[window > n0])
    side_avg = None
    asym = False
    if left is not None and right is not None:
        side_avg = 0.5 * (left + right)
        ref = max(abs(left), abs(right))
        asym = ref > 0.0 and abs(left - right) > opts.asymmetry_tol * ref

    if r2 < opts.min_r2:
        return LocalizationMetrics(lyapunov_gamma=None, gamma_stderr=None,
                                   fit_r2=r2, left_gamma=left, right_gamma=right,
                                   side_average_gamma=side_avg, asymmetric=asym,
                                   **base)
    return LocalizationMetrics(lyapunov_gamma=float(gamma), gamma_stderr=stderr,
                               fit_r2=r2, left_gamma=left, right_gamma=right,
                               side_average_gamma=side_avg, asymmetric=asym,
                               **base)


def thouless_reference(v0: float, v_c: float) -> float:
    """Localized-phase reference decay rate log(v0 / v_c)."""
    if not (v0 > v_c > 0.0):
        raise ValueError("thouless_reference requires v0 > v_c > 0 (localized phase)")
    return float(np.log(v0 / v_c))


def critical_v_cav(t: float, alpha: float, delta_c_prime: float, C: float) -> float:
    """Dual-model critical strength (4 t / alpha) (delta'^2 + 1) / |C|."""
    if C == 0.0:
        raise ValueError("C = 0: no cavity potential, no cavity critical point")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    return float((4.0 * t / alpha) * (delta_c_prime ** 2 + 1.0) / abs(C))


@dataclass(frozen=True)
class TransitionEstimate:
    """Numerical transition point from an IPR-versus-v0 scan."""

    v_c_numerical: float
    v_c_analytic: float | None
    grid: np.ndarray
    method: str
    unresolved: bool

    def __post_init__(self):
        self.grid.setflags(write=False)


def detect_transition(v0_grid, ipr_values, *, hopping: float | None = None,
                      alpha: float | None = None, C: float | None = None,
                      delta_c_prime: float = 0.0) -> TransitionEstimate:
    """Locate the transition as the steepest interval of log IPR vs log v0.

    The grid must be log-spaced with at least 20 points spanning at least one
    decade.  The estimate is the geometric midpoint of the steepest interval;
    a maximum at either grid boundary marks the estimate unresolved.  When
    hopping, alpha and C are supplied the dual-model critical value is
    attached for comparison.
    """
    v0 = np.asarray(v0_grid, dtype=np.float64)
    vals = np.asarray(ipr_values, dtype=np.float64)
    if v0.shape != vals.shape or v0.ndim != 1:
        raise ValueError("grid and IPR arrays must be 1-D with equal length")
    if v0.shape[0] < 20:
        raise ValueError("need at least 20 grid points")
    if np.any(v0 <= 0.0) or np.any(np.diff(v0) <= 0.0):
        raise ValueError("grid must be positive and strictly increasing")
    logs = np.log(v0)
    steps = np.diff(logs)
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-12):
        raise ValueError("grid must be log-spaced")
    if logs[-1] - logs[0] < np.log(10.0) * (1.0 - 1e-9):
        raise ValueError("grid must span at least one decade")

    slopes = np.diff(np.log(vals)) / steps
    k = int(np.argmax(slopes))
    unresolved = k == 0 or k == slopes.shape[0] - 1
    v_c = float(np.sqrt(v0[k] * v0[k + 1]))

    analytic = None
    if hopping is not None and alpha is not None and C not in (None, 0.0):
        analytic = critical_v_cav(hopping, alpha, delta_c_prime, C)
    return TransitionEstimate(v_c_numerical=v_c, v_c_analytic=analytic,
                              grid=v0.copy(), method=TRANSITION_METHOD,
                              unresolved=unresolved)


@dataclass(frozen=True)
class PumpField:
    """Pump amplitude profile entering the photon number.

    kind "cavity_pumped": constant amplitude (the pump rate eta).
    kind "atom_pumped": amplitude modulated by the cavity mode function,
    zeta(z) = amplitude * cos(beta k0 z) with amplitude = Omega g / Delta_a.
    """

    kind: str
    amplitude: float

    def __post_init__(self):
        if self.kind not in ("cavity_pumped", "atom_pumped"):
            raise ValueError("kind must be cavity_pumped or atom_pumped")


@dataclass(frozen=True)
class CavityObservables:
    mean_photon_number: float

    def __post_init__(self):
        if self.mean_photon_number < 0.0:
            raise ValueError("photon number cannot be negative")


def photon_number(state, wb: "WannierBasis", zeta: PumpField, delta_c: float,
                  U0: float, kappa: float = 1.0) -> CavityObservables:
    """Mean intracavity photon number of the quasi-steady field.

    n = sum_m |psi_m|^2 int w0(z - z_m)^2 zeta(z)^2 /
        [(delta_c - U0 cos^2(beta k0 z))^2 + kappa^2] dz,
    evaluated per occupied site (density above 1e-12).  All frequencies are
    taken relative to kappa, so the result is dimensionless and bounded by
    (max zeta / kappa)^2.
    """
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    amp = _amplitudes(state)
    dens = amp * amp
    dcp = delta_c / kappa
    coop = U0 / kappa
    amp_z = zeta.amplitude / kappa
    wdens = wb.density_weights
    grid = wb.grid
    a = wb.site_spacing_a
    total = 0.0
    for m in np.nonzero(dens > 1e-12)[0]:
        z = grid + (m + 1) * a
        mode = np.cos(wb.beta * z)
        zeta_sq = amp_z * amp_z * (mode * mode if zeta.kind == "atom_pumped" else 1.0)
        lorentz = zeta_sq / ((dcp - coop * mode * mode) ** 2 + 1.0)
        total += dens[m] * float(np.dot(wdens, lorentz))
    return CavityObservables(mean_photon_number=total)
