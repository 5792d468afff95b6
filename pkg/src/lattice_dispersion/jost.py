"""Jost solutions, Wronskians, scattering data and the genericity test.

For ``mu = exp(-i theta)`` the right Jost solution is ``psi+_n = mu^n f+_n``
with ``f+_n -> 1`` as ``n -> +inf``.  It solves the summation equation

    f+_n = 1 + sum_{m > n} c_{m-n} V_m f+_m,
    c_k  = (1 - mu^(2k)) / (mu^-1 - mu) = sum_{j<k} mu^(2j+1),

which is an explicit right-to-left recursion because ``c_0 = 0``.  The second
form of ``c_k`` stays finite at the band edges, so the same code produces the
zero-energy solutions (``mu = 1``) and the ``lambda = 4`` solutions
(``mu = -1``).  The left solution ``psi-_n = mu^-n f-_n`` is obtained from the
reflected potential ``n -> V_{-n}``.

With ``D = mu^-1 - mu`` the Wronskian is

    W = psi+_n psi-_{n+1} - psi+_{n+1} psi-_n = D + sum_m V_m f+_m
      = D + sum_m V_m f-_m.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .edge import SpectralPoint, point_from_theta, resolve_branch
from .errors import EdgeSingularityError, ValidationError
from .lattice import LatticeWindow, Potential

#: Relative threshold on W(0) below which a potential counts as resonant.
GENERIC_TOL = 1e-8

# below this |mu^-1 - mu| the coefficients are summed instead of divided
_CLOSED_FORM_MIN_D = 0.5


def coefficient_table(mu, kmax: int, derivative: bool = False):
    """Tables ``c_k`` and ``dc_k/dtheta`` for ``k = 0..kmax``.

    ``mu`` may be a scalar or a 1-D array; the result has shape
    ``mu.shape + (kmax + 1,)``.
    """
    mu = np.asarray(mu, dtype=complex)
    scalar = mu.ndim == 0
    mu = np.atleast_1d(mu)[:, None]
    k = np.arange(kmax + 1)
    d = 1 / mu - mu
    closed = np.abs(d[:, 0]) >= _CLOSED_FORM_MIN_D

    c = np.empty((mu.shape[0], kmax + 1), dtype=complex)
    dc = np.empty_like(c) if derivative else None
    if closed.any():
        m, dd = mu[closed], d[closed]
        p = m ** (2 * k)
        c[closed] = (1 - p) / dd
        if derivative:
            ddd = 1j * (1 / m + m)
            dc[closed] = (2j * k * p * dd - (1 - p) * ddd) / (dd * dd)
    if (~closed).any():
        m = mu[~closed]
        odd = 2 * np.arange(kmax) + 1
        terms = m ** odd
        c[~closed, 0] = 0
        c[~closed, 1:] = np.cumsum(terms, axis=1)
        if derivative:
            dc[~closed, 0] = 0
            dc[~closed, 1:] = np.cumsum(-1j * odd * terms, axis=1)
    if scalar:
        c = c[0]
        dc = dc[0] if derivative else None
    return c, dc


def _support_recursion(values: np.ndarray, c: np.ndarray, dc=None):
    """``f+`` (and ``df+``) on the support, vectorised over the leading axis.

    ``c`` has shape ``(M, K)`` with ``K > len(values)``.
    """
    s = values.size
    m_count = c.shape[0]
    f = np.ones((m_count, s), dtype=complex)
    df = np.zeros((m_count, s), dtype=complex) if dc is not None else None
    for i in range(s - 2, -1, -1):
        k = np.arange(1, s - i)
        vf = values[i + 1:] * f[:, i + 1:]
        f[:, i] = 1 + np.sum(c[:, k] * vf, axis=1)
        if dc is not None:
            df[:, i] = np.sum(dc[:, k] * vf + c[:, k] * values[i + 1:] * df[:, i + 1:], axis=1)
    return f, df


def _f_plus_window(V: Potential, mu: complex, n_lo: int, n_hi: int, derivative: bool):
    """``f+`` over sites ``n_lo..n_hi`` (which must contain the support)."""
    size = n_hi - n_lo + 1
    f = np.ones(size, dtype=complex)
    df = np.zeros(size, dtype=complex) if derivative else None
    if V.is_zero:
        return f, df
    a, b = V.first, V.last
    kmax = b - n_lo
    c, dc = coefficient_table(mu, kmax, derivative)
    fs, dfs = _support_recursion(V.values, c[None, :], None if dc is None else dc[None, :])
    fs, dfs = fs[0], (None if dfs is None else dfs[0])
    ia = a - n_lo
    f[ia:ia + V.values.size] = fs
    if derivative:
        df[ia:ia + V.values.size] = dfs
    if ia > 0:
        # left exterior: f+_n = 1 + sum over the whole support
        n_ext = np.arange(n_lo, a)
        idx = V.sites[None, :] - n_ext[:, None]
        vf = V.values * fs
        f[:ia] = 1 + c[idx] @ vf
        if derivative:
            df[:ia] = dc[idx] @ vf + c[idx] @ (V.values * dfs)
    return f, df


def _jost_sequences(V: Potential, mu: complex, window: LatticeWindow, derivative: bool):
    fp, dfp = _f_plus_window(V, mu, window.n_min, window.n_max, derivative)
    # f-_n(V) = f+_{-n}(V reflected)
    fm, dfm = _f_plus_window(V.reflected(), mu, -window.n_max, -window.n_min, derivative)
    fm = fm[::-1].copy()
    if derivative:
        dfm = dfm[::-1].copy()
    return fp, fm, dfp, dfm


def _check_window(V: Potential, window: LatticeWindow) -> None:
    # on_window raises with a suggested size when the support does not fit
    V.on_window(window)


@dataclass(frozen=True)
class JostData:
    """Jost solutions and their normalised forms on a window."""

    theta: complex
    mu: complex
    window: LatticeWindow
    f_plus: np.ndarray = field(repr=False)
    f_minus: np.ndarray = field(repr=False)
    df_plus: np.ndarray = field(repr=False)
    df_minus: np.ndarray = field(repr=False)
    wronskian: complex

    @property
    def psi_plus(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.mu ** self.window.sites * self.f_plus

    @property
    def psi_minus(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.mu ** (-self.window.sites) * self.f_minus

    def wronskian_profile(self) -> np.ndarray:
        """``psi+_n psi-_{n+1} - psi+_{n+1} psi-_n`` for each ``n`` but the last."""
        p, m = self.psi_plus, self.psi_minus
        return p[:-1] * m[1:] - p[1:] * m[:-1]


def jost_pair(V: Potential, pt, window: LatticeWindow, derivative: bool = True) -> JostData:
    """Jost solutions ``psi+-`` at the spectral point ``pt``.

    Parameters
    ----------
    V : Potential
    pt : SpectralPoint or complex
        A resolved spectral point, or ``theta`` itself.
    window : LatticeWindow
        Must contain the support of ``V``.
    derivative : bool
        Also compute ``d f+- / d theta``.
    """
    if not isinstance(pt, SpectralPoint):
        pt = point_from_theta(pt)
    if pt.edge is not None or abs(cmath.sin(pt.theta)) < 1e-14:
        raise EdgeSingularityError(
            "Jost solutions coincide at a band edge (sin theta = 0); use zero_energy_jost")
    _check_window(V, window)
    fp, fm, dfp, dfm = _jost_sequences(V, pt.mu, window, derivative)
    if not derivative:
        dfp = dfm = np.full(window.size, np.nan + 0j)
    w = wronskian(V, pt.mu)
    return JostData(pt.theta, pt.mu, window, fp, fm, dfp, dfm, w)


def _support_f(values: np.ndarray, mu: np.ndarray, derivative: bool = False):
    c, dc = coefficient_table(mu, max(values.size, 1), derivative)
    return _support_recursion(values, c, dc)


def wronskian(V: Potential, mu) -> complex:
    """``W = mu^-1 - mu + sum V_m f+_m`` (scalar ``mu``)."""
    if V.is_zero:
        return complex(1 / mu - mu)
    f, _ = _support_f(V.values, np.asarray([mu]))
    return complex((1 / mu - mu) + math.fsum((V.values * f[0]).real)
                   + 1j * math.fsum((V.values * f[0]).imag))


@dataclass(frozen=True)
class SupportJost:
    """Jost data on the support of V, vectorised over a grid of ``theta``.

    ``f_plus[j, i]`` is ``f+`` at site ``V.first + i`` and ``theta[j]``.
    """

    theta: np.ndarray
    mu: np.ndarray
    sites: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    d: np.ndarray
    s0: np.ndarray
    s2_plus: np.ndarray
    s2_minus: np.ndarray

    @property
    def wronskian(self) -> np.ndarray:
        return self.d + self.s0

    def psi_plus_support(self) -> np.ndarray:
        return self.mu[:, None] ** self.sites[None, :] * self.f_plus

    def psi_minus_support(self) -> np.ndarray:
        return self.mu[:, None] ** (-self.sites[None, :]) * self.f_minus


def support_jost(V: Potential, thetas) -> SupportJost:
    """Vectorised Jost data on the support of ``V`` for real ``thetas``.

    Outside the support the solutions have the closed forms (with
    ``D = mu^-1 - mu``)

        psi+_q = (D + S0) / D mu^q - S2+ / D mu^-q        for q <= first site,
        psi-_p = (D + S0) / D mu^-p - S2- / D mu^p        for p >= last site,

    where ``S0 = sum V_m f+_m``, ``S2+ = sum mu^(2m) V_m f+_m`` and
    ``S2- = sum mu^(-2m) V_m f-_m``.
    """
    theta = np.asarray(thetas, dtype=float)
    mu = np.exp(-1j * theta)
    d = 1 / mu - mu
    if V.is_zero:
        z = np.zeros_like(mu)
        empty = np.zeros((theta.size, 0), dtype=complex)
        return SupportJost(theta, mu, np.zeros(0, dtype=int), empty, empty, d, z, z, z)
    vals, sites = V.values, V.sites
    fp, _ = _support_f(vals, mu)
    fm, _ = _support_f(vals[::-1].copy(), mu)
    fm = fm[:, ::-1]
    s0 = fp @ vals
    mu2 = mu[:, None] ** (2 * sites[None, :])
    s2p = (mu2 * fp) @ vals
    s2m = (fm / mu2) @ vals
    return SupportJost(theta, mu, sites, fp, fm, d, s0, s2p, s2m)


@dataclass(frozen=True)
class ScatteringData:
    """Coefficients of ``psi-(theta) = a psi+(theta) + b psi+(-theta)``."""

    theta: float
    a: complex
    b: complex


def _scattering_window(V: Potential) -> LatticeWindow:
    lo = min(V.first, 0) - 2
    hi = max(V.last, 0) + 2
    return LatticeWindow(lo, hi)


def scattering_coeffs(V: Potential, theta: float, window: LatticeWindow | None = None
                      ) -> ScatteringData:
    """Scattering coefficients from Wronskians.

    ``a = W[psi-(theta), psi+(-theta)] / (2i sin theta)`` and
    ``b = W[psi+(theta), psi-(theta)] / (2i sin theta)``.
    """
    theta = float(theta)
    s = math.sin(theta)
    if abs(s) < 1e-14:
        raise EdgeSingularityError("scattering coefficients are singular at sin theta = 0")
    win = window or _scattering_window(V)
    j = jost_pair(V, theta, win, derivative=False)
    jr = jost_pair(V, -theta, win, derivative=False)
    pm, pr = j.psi_minus, jr.psi_plus
    # evaluate at the centre of the window, away from the ends
    n = win.size // 2
    w_a = pm[n] * pr[n + 1] - pm[n + 1] * pr[n]
    denom = 2j * s
    return ScatteringData(theta, complex(w_a / denom), complex(j.wronskian / denom))


@dataclass(frozen=True)
class ZeroEnergyData:
    """Edge solutions (``lambda = 0`` or ``4``) and their pairings with V."""

    edge: int
    window: LatticeWindow
    psi_plus: np.ndarray = field(repr=False)
    psi_minus: np.ndarray = field(repr=False)
    pairing_plus: float
    pairing_minus: float

    def wronskian_profile(self) -> np.ndarray:
        p, m = self.psi_plus, self.psi_minus
        return p[:-1] * m[1:] - p[1:] * m[:-1]


def _edge_mu(edge: int) -> float:
    if edge not in (0, 4):
        raise ValidationError("edge must be 0 or 4")
    return 1.0 if edge == 0 else -1.0


def zero_energy_jost(V: Potential, window: LatticeWindow, edge: int = 0) -> ZeroEnergyData:
    """Solutions of ``H psi = 0`` (or ``= 4 psi``) normalised at infinity.

    At ``edge=0`` these are ``psi+_n = 1 + sum_{m>n} (m - n) V_m psi+_m`` and
    its mirror image.  At ``edge=4`` the solutions tend to ``(-1)^n``.
    The pairings are ``<V, f+>`` and ``<V, f->`` with ``f = mu^-n psi``
    (equal to ``<V, psi>`` at ``edge=0``).
    """
    _check_window(V, window)
    mu = _edge_mu(edge)
    fp, fm, _, _ = _jost_sequences(V, mu, window, derivative=False)
    fp, fm = fp.real, fm.real
    sign = mu ** window.sites
    v = V.on_window(window)
    return ZeroEnergyData(edge, window, sign * fp, sign * fm,
                          math.fsum(v * fp), math.fsum(v * fm))


def is_generic(V: Potential, edge: int = 0):
    """Genericity test at a band edge.

    Returns
    -------
    flag : bool
        ``|w0| > GENERIC_TOL * (1 + ||V||_{l1_1})``.
    w0 : float
        Wronskian of the edge solutions, evaluated from the sequences.
    v_pairing : float
        ``<V, f+>`` at the edge; equals ``w0`` up to rounding.
    """
    lo = min(V.first, 0) - 2
    hi = max(V.last, 0) + 2
    z = zero_energy_jost(V, LatticeWindow(lo, hi), edge)
    # the Wronskian just right of the support
    i = V.last + 1 - lo if not V.is_zero else 0
    p, m = z.psi_plus, z.psi_minus
    w0 = float(p[i] * m[i + 1] - p[i + 1] * m[i])
    tol = GENERIC_TOL * (1 + V.l1_norm(1))
    return abs(w0) > tol, w0, z.pairing_plus


def generic_at_both_edges(V: Potential) -> bool:
    return is_generic(V, 0)[0] and is_generic(V, 4)[0]


def theta_plus(omega: float) -> float:
    """``theta`` of the upper boundary value at ``omega``."""
    return resolve_branch(omega, "plus").theta.real
