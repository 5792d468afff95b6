"""The propagator ``exp(itH) P_ac`` and its decay in time.

The continuous part of the propagator is evaluated from the spectral
integral in the angle variable,

    K_t[n, m] = (i / pi) int_{-pi}^{pi} exp(it(2 - 2 cos theta))
                psi+_q(theta) psi-_p(theta) sin(theta) / W(theta) d theta,

with ``p = min(n, m)`` and ``q = max(n, m)``.  For a potential without edge
resonances the integrand is smooth and 2 pi-periodic, so the trapezoid rule
on a uniform grid converges geometrically.  Outside the support of V the
Jost solutions are combinations of ``mu^{+-n}`` and every kernel entry is a
Fourier coefficient of one of a handful of functions of theta, all of which
are obtained with a single FFT each.

An independent route diagonalises the Dirichlet-truncated H.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import ConvergenceError, NonGenericError, ValidationError
from .jost import is_generic, support_jost
from .lattice import LatticeKernel, LatticeWindow, Potential, hamiltonian_bands, kernel_norm
from .quadrature import fourier_integrals, next_pow2, theta_grid
from .spectrum import BAND_MARGIN, BOUNDARY_DECAY, SpectralDecomposition

#: Absolute agreement required between the grid of size M and 2M.
QUAD_TOL = 1e-10
#: Grid doublings allowed.  A bound state at distance ~kappa^2 from a band
#: edge puts a pole of 1/W at Im theta ~ kappa, so the grid must reach ~1/kappa.
MAX_REFINEMENTS = 10
#: Extra sites between the light cone |n - m| = 2t and the window edge.
WINDOW_MARGIN = 50


@dataclass(frozen=True)
class EvolutionKernel:
    """Propagator kernel at time ``t``."""

    t: float
    kernel: LatticeKernel = field(repr=False)
    achieved_error: float = 0.0
    route: str = "theta"

    @property
    def window(self) -> LatticeWindow:
        return self.kernel.window

    @property
    def entries(self) -> np.ndarray:
        return self.kernel.entries


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise ValidationError(f"time must be finite and nonnegative, got {t}")
    return t


def _grid_size(window: LatticeWindow, t: float, extra: int = 0) -> int:
    kmax = 2 * max(abs(window.n_min), abs(window.n_max)) + 2
    return next_pow2(kmax + 2 * t + 64 + extra)


def evolve_free_kernel(t: float, window: LatticeWindow) -> EvolutionKernel:
    """``exp(-it Delta)`` kernel ``(1/2pi) int exp(it(2 - 2cos theta) + i theta (n-m)) d theta``."""
    t = _check_time(t)
    m = _grid_size(window, t)
    k = np.arange(window.size)
    for _ in range(MAX_REFINEMENTS + 1):
        th = theta_grid(2 * m)
        g = np.exp(1j * t * (2 - 2 * np.cos(th)))
        fine = fourier_integrals(g, k) / (2 * np.pi)
        coarse = fourier_integrals(g[::2], k) / (2 * np.pi)
        err = float(np.abs(fine - coarse).max())
        if err <= QUAD_TOL:
            break
        m *= 2
    else:
        raise ConvergenceError(f"free propagator quadrature did not converge (error {err:.2e})",
                               achieved_error=err)
    return EvolutionKernel(t, LatticeKernel(window, la.toeplitz(fine, fine)), err, "theta")


def _require_generic(V: Potential) -> None:
    if V.is_zero:
        return
    for edge in (0, 4):
        flag, w0, _ = is_generic(V, edge)
        if not flag:
            raise NonGenericError(
                f"potential has a resonance at the band edge {edge} (W = {w0:.3e}); "
                "the spectral integrand is singular there")


class _ThetaIntegrands:
    """Samples of the functions whose Fourier coefficients build the kernel."""

    def __init__(self, V: Potential, t: float, theta: np.ndarray, spectral_filter):
        sj = support_jost(V, theta)
        s = np.sin(theta)
        pref = (1j / np.pi) * np.exp(1j * t * (2 - 2 * np.cos(theta)))
        if spectral_filter is not None:
            pref = pref * spectral_filter(theta)
        if V.is_zero:
            e = pref / 2j
            zero = np.zeros_like(e)
            rows = [e, e, zero, e, zero]
        else:
            w = sj.wronskian
            if np.abs(w).min() < 1e-12:
                raise NonGenericError("Wronskian vanishes on the angle grid")
            inv_w = pref / w
            e = inv_w * s
            a = inv_w * (s + sj.s0 / 2j)
            rows = [e, a, -inv_w * sj.s2_plus / 2j, a, -inv_w * sj.s2_minus / 2j]
        self.scalar = np.array(rows)
        if V.is_zero:
            self.minus_rows = np.zeros((0, theta.size), dtype=complex)
            self.plus_rows = self.minus_rows
            self.block = np.zeros((0, 0), dtype=complex)
            return
        self.minus_rows = (e[:, None] * sj.psi_minus_support()).T
        self.plus_rows = (e[:, None] * sj.psi_plus_support()).T
        # trapezoid sums for pairs of sites inside the support
        pp = sj.psi_plus_support()
        self.block = (2 * np.pi / theta.size) * np.einsum(
            "j,jq,jp->pq", e, pp, sj.psi_minus_support())


def _fourier_table(rows: np.ndarray, kmax: int) -> np.ndarray:
    ks = np.arange(-kmax, kmax + 1)
    return fourier_integrals(rows, ks)


def evolve_ac_kernel(V: Potential, t: float, window: LatticeWindow,
                     spectral_filter=None, tol: float = QUAD_TOL) -> EvolutionKernel:
    """Kernel of ``exp(itH) P_ac`` (optionally times ``phi(H)``) on ``window``.

    Parameters
    ----------
    V : Potential
        Must have no resonance at either band edge (``V = 0`` is accepted,
        its integrand being ``1/(2i)`` times the phase).
    t : float
        Nonnegative time.
    window : LatticeWindow
        Entries are computed for all sites of the window; the values are
        those of the infinite lattice (no truncation is involved).
    spectral_filter : callable, optional
        ``phi(theta)``; multiplies the integrand, e.g. an energy cutoff.
    tol : float
        Required agreement between grids of size M and 2M.
    """
    t = _check_time(t)
    V.on_window(window)
    _require_generic(V)
    reach = 0 if V.is_zero else 2 * max(abs(V.first), abs(V.last))
    m = _grid_size(window, t, reach)
    kmax = 2 * max(abs(window.n_min), abs(window.n_max)) + 1
    for _ in range(MAX_REFINEMENTS + 1):
        th = theta_grid(2 * m)
        fine = _ThetaIntegrands(V, t, th, spectral_filter)
        coarse = _ThetaIntegrands(V, t, th[::2], spectral_filter)
        rows_f = np.vstack([fine.scalar, fine.minus_rows, fine.plus_rows])
        rows_c = np.vstack([coarse.scalar, coarse.minus_rows, coarse.plus_rows])
        tab = _fourier_table(rows_f, kmax)
        err = float(np.abs(tab - _fourier_table(rows_c, kmax)).max())
        if fine.block.size:
            err = max(err, float(np.abs(fine.block - coarse.block).max()))
        if err <= tol:
            break
        m *= 2
    else:
        raise ConvergenceError(
            f"spectral quadrature did not reach {tol:.1e} (achieved {err:.2e})",
            achieved_error=err)
    k = _assemble(V, window, tab, fine.block, kmax)
    return EvolutionKernel(t, LatticeKernel(window, k), err, "theta")


def _assemble(V: Potential, window: LatticeWindow, tab: np.ndarray, block: np.ndarray,
              kmax: int) -> np.ndarray:
    """Build the kernel from Fourier coefficients ``tab[row, k + kmax]``."""
    def coef(row, k):
        return tab[row, np.asarray(k) + kmax]

    n = window.sites
    toe = coef(0, np.arange(window.size))
    k = la.toeplitz(toe, toe)
    if V.is_zero:
        return k
    a, b = V.first, V.last
    ia, ib = a - window.n_min, b - window.n_min
    s = V.values.size

    # both sites at or left of the support
    nl = n[:ia + 1]
    dl = np.abs(nl[:, None] - nl[None, :])
    k[:ia + 1, :ia + 1] = coef(1, dl) + coef(2, -(nl[:, None] + nl[None, :]))
    # both sites at or right of the support
    nr = n[ib:]
    dr = np.abs(nr[:, None] - nr[None, :])
    k[ib:, ib:] = coef(3, dr) + coef(4, nr[:, None] + nr[None, :])
    # one site inside the support
    for i in range(s):
        right = coef(5 + i, nr)           # F[E psi-_p](q), q >= b
        k[ia + i, ib:] = right
        k[ib:, ia + i] = right
        left = coef(5 + s + i, -nl)       # F[E psi+_q](-p), p <= a
        k[:ia + 1, ia + i] = left
        k[ia + i, :ia + 1] = left
    # both sites inside the support
    for i in range(s):
        for j in range(i, s):
            k[ia + i, ia + j] = k[ia + j, ia + i] = block[i, j]
    return k


def truncated_eigensystem(V: Potential, window: LatticeWindow):
    """All eigenpairs of the Dirichlet-truncated H and a bound-state mask."""
    diag, off = hamiltonian_bands(V, window)
    w, u = la.eigh_tridiagonal(diag, off)
    outside = (w < -BAND_MARGIN) | (w > 4 + BAND_MARGIN)
    edge = np.maximum(np.abs(u[0]), np.abs(u[-1]))
    bound = outside & (edge <= BOUNDARY_DECAY)
    return w, u, bound


def evolve_ac_kernel_eig(V: Potential, t: float, window: LatticeWindow) -> EvolutionKernel:
    """``U diag(exp(it omega)) U^T`` over the non-bound modes of the truncated H.

    Trustworthy on ``|n|, |m| <= window.half_width - 2t`` (or so) because
    nothing travels faster than speed 2.
    """
    t = _check_time(t)
    w, u, bound = truncated_eigensystem(V, window)
    keep = ~bound
    uk = u[:, keep]
    k = (uk * np.exp(1j * t * w[keep])) @ uk.T
    return EvolutionKernel(t, LatticeKernel(window, k), 0.0, "eig")


def evolve_full_kernel_eig(V: Potential, t: float, window: LatticeWindow) -> EvolutionKernel:
    """Full truncated propagator ``exp(itH_N)``."""
    t = _check_time(t)
    w, u, _ = truncated_eigensystem(V, window)
    return EvolutionKernel(t, LatticeKernel(window, (u * np.exp(1j * t * w)) @ u.T), 0.0, "eig")


def restore_bound_states(ev: EvolutionKernel, spectrum: SpectralDecomposition
                         ) -> EvolutionKernel:
    """Add ``sum_j exp(it omega_j) v_j v_j^T`` to a continuous-part kernel."""
    if spectrum.window != ev.window:
        raise ValidationError("spectrum and kernel live on different windows")
    k = ev.entries.copy()
    for pair in spectrum.pairs:
        k += np.exp(1j * ev.t * pair.omega) * np.outer(pair.vector, pair.vector)
    return EvolutionKernel(ev.t, LatticeKernel(ev.window, k), ev.achieved_error, ev.route)


def window_for_time(t: float, V: Potential | None = None, margin: int = WINDOW_MARGIN) -> LatticeWindow:
    """Smallest symmetric window holding the light cone of time ``t``."""
    n = math.ceil(2 * t) + margin
    if V is not None and not V.is_zero:
        n = max(n, abs(V.first) + margin, abs(V.last) + margin)
    return LatticeWindow.symmetric(n)


NORM_KINDS = ("weighted", "l1_inf")


@dataclass(frozen=True)
class DecaySeries:
    """Norm samples ``||exp(itH) P_ac||`` and a power-law fit ``C t^slope``."""

    times: np.ndarray
    norms: np.ndarray
    kind: str
    sigma: float
    slope: float
    intercept: float
    fit_window: tuple
    residual: float
    windows: tuple = ()

    @property
    def constant(self) -> float:
        return math.exp(self.intercept)

    def bound_constant(self, t_ref: float, exponent: float | None = None) -> float:
        """``C`` with ``norm(t_ref) = C t_ref^exponent`` (fitted slope by default)."""
        e = self.slope if exponent is None else exponent
        i = int(np.argmin(np.abs(self.times - t_ref)))
        return float(self.norms[i] / self.times[i] ** e)

    def summary(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma, "slope": self.slope,
                "intercept": self.intercept, "constant": self.constant,
                "fit_window": list(self.fit_window), "residual": self.residual}

    def write_csv(self, path, comments=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["t", "norm", "kind", "sigma"])
            for t, v in zip(self.times, self.norms):
                w.writerow([repr(float(t)), repr(float(v)), self.kind, repr(float(self.sigma))])

    def write_json(self, path, extra=None) -> None:
        data = self.summary()
        if extra:
            data.update(extra)
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def fit_power_law(times, norms, fit_window=(50.0, math.inf)):
    """Least-squares fit of ``log norm = intercept + slope log t`` inside ``fit_window``."""
    times, norms = np.asarray(times, float), np.asarray(norms, float)
    sel = (times >= fit_window[0]) & (times <= fit_window[1])
    if sel.sum() < 2:
        raise ValidationError("fit window contains fewer than two samples")
    x, y = np.log(times[sel]), np.log(norms[sel])
    a = np.column_stack([x, np.ones_like(x)])
    coef, res, _, _ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.sqrt(np.mean((a @ coef - y) ** 2)))
    return float(coef[0]), float(coef[1]), resid


def decay_series(V: Potential, sigma: float, times, norm_kind: str = "weighted",
                 window: LatticeWindow | None = None, fit_window=(50.0, math.inf),
                 margin: int = WINDOW_MARGIN, spectral_filter=None) -> DecaySeries:
    """Sample ``||exp(itH) P_ac||`` over ``times`` and fit a power law.

    Parameters
    ----------
    V : Potential
    sigma : float
        Weight exponent for ``norm_kind='weighted'`` (the B(sigma, -sigma)
        norm); ignored for ``'l1_inf'``.
    times : sequence of float
        Positive, increasing.
    norm_kind : {'weighted', 'l1_inf'}
    window : LatticeWindow, optional
        Fixed window; must satisfy ``N >= 2 max(t) + margin``.  By default a
        window ``N_t = ceil(2t) + margin`` is used for each sample.
    fit_window : (float, float)
        Only samples with ``t`` inside are fitted.
    """
    if norm_kind not in NORM_KINDS:
        raise ValidationError(f"unknown norm kind {norm_kind!r}; expected one of {NORM_KINDS}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValidationError("times must be positive and strictly increasing")
    if norm_kind == "weighted" and not sigma > 2.5:
        raise ValidationError(f"weighted decay needs sigma > 5/2, got {sigma}")
    if window is not None and window.half_width < 2 * times[-1] + margin:
        raise ValidationError(
            f"window half-width {window.half_width} < 2 max(t) + margin = "
            f"{2 * times[-1] + margin:g}: the light cone leaves the window")
    norms, wins = [], []
    for t in times:
        win = window or window_for_time(t, V, margin)
        k = evolve_ac_kernel(V, t, win, spectral_filter).kernel
        if norm_kind == "weighted":
            norms.append(kernel_norm(k, "b_sigma_minus_sigma", sigma))
        else:
            norms.append(kernel_norm(k, "b1_inf"))
        wins.append(win.half_width)
        del k
    norms = np.array(norms)
    slope, intercept, resid = fit_power_law(times, norms, fit_window)
    return DecaySeries(times, norms, norm_kind, float(sigma), slope, intercept,
                       tuple(float(x) for x in fit_window), resid, tuple(wins))
