"""Oscillatory integrals with the lattice phase and the cutoff partition.

The phase family is ``h(theta) = 2 - 2 cos(theta) - a theta``.  Its
stationary points solve ``2 sin(theta) = a``; at ``a = +-2`` they merge at
``theta = +-pi/2`` where ``h'' = 0`` and ``|h'''| = 2``, which slows the decay of
``sup_a |int exp(it h) g|`` from ``t^-1/2`` to ``t^-1/3``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ValidationError
from .evolution import DecaySeries, decay_series, fit_power_law
from .lattice import Potential
from .quadrature import composite_gauss_legendre

GL_ORDER = 12
MAX_DOUBLINGS = 4
RTOL = 1e-9
ATOL = 1e-12
# re-anchor the a-recurrence this often to stop rounding from accumulating
_ANCHOR_EVERY = 32


@dataclass(frozen=True)
class PhaseSpec:
    """Phase ``h(theta) = 2 - 2 cos(theta) - a theta``.

    ``dh``, ``d2h`` and ``d3h`` are the derivatives of ``h``.  The
    ``scaled_dh`` / ``scaled_d2h`` pair is the alternative normalisation
    ``4 sin(theta) - a`` and ``4 cos(theta)`` for which
    ``scaled_dh^2 + scaled_d2h^2 = 16 - 8 a sin(theta) + a^2``.
    """

    a: float

    def h(self, theta):
        return 2 - 2 * np.cos(theta) - self.a * theta

    def dh(self, theta):
        return 2 * np.sin(theta) - self.a

    def d2h(self, theta):
        return 2 * np.cos(theta)

    def d3h(self, theta):
        return -2 * np.sin(theta)

    def scaled_dh(self, theta):
        return 4 * np.sin(theta) - self.a

    def scaled_d2h(self, theta):
        return 4 * np.cos(theta)

    def stationary_points(self, lo: float = -math.pi, hi: float = math.pi) -> list:
        """Solutions of ``2 sin(theta) = a`` inside ``[lo, hi]``."""
        s = 0.5 * self.a
        if abs(s) > 1:
            return []
        base = math.asin(s)
        cands = {base, math.pi - base, base - 2 * math.pi, -math.pi - base}
        return sorted(x for x in cands if lo <= x <= hi)


def _e(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    # -1/x overflows to -inf for subnormal x, which correctly gives 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    a, b = _e(x), _e(1 - x)
    return a / (a + b)


def _smooth_pair(x):
    """``(1 - S(x), S(x))`` computed so that the pair sums to one."""
    x = np.asarray(x, dtype=float)
    a, b = _e(x), _e(1 - x)
    return b / (a + b), a / (a + b)


@dataclass(frozen=True)
class CutoffPair:
    """Partition ``chi0 + chi = 1`` on ``[-pi, pi]``.

    ``chi0`` equals 1 within ``theta0/2`` of the band-edge angles
    ``{0, -pi, pi}`` and vanishes farther than ``theta0`` from them.
    """

    theta0: float

    def _x(self, theta):
        th = np.abs(np.asarray(theta, dtype=float))
        d = np.minimum(th, math.pi - th)
        half = 0.5 * self.theta0
        return (d - half) / half

    def chi0(self, theta):
        return _smooth_pair(self._x(theta))[0]

    def chi(self, theta):
        return _smooth_pair(self._x(theta))[1]

    def chi_support(self) -> list:
        """Intervals outside which ``chi`` vanishes."""
        h = 0.5 * self.theta0
        return [(-math.pi + h, -h), (h, math.pi - h)]

    def chi0_support(self) -> list:
        t0 = self.theta0
        return [(-math.pi, -math.pi + t0), (-t0, t0), (math.pi - t0, math.pi)]


def build_cutoffs(theta0: float = math.pi / 4) -> CutoffPair:
    """Smooth cutoffs around the band-edge angles.

    ``theta0`` above ``pi/4`` is reduced to ``pi/4`` with a warning.
    """
    theta0 = float(theta0)
    if not theta0 > 0 or not math.isfinite(theta0):
        raise ValidationError(f"theta0 must be positive, got {theta0}")
    if theta0 > math.pi / 4:
        warnings.warn(f"theta0={theta0} exceeds pi/4; using pi/4", stacklevel=2)
        theta0 = math.pi / 4
    return CutoffPair(theta0)


def energy_cutoffs():
    """``(chi1, chi2)`` on ``[0, 4]``: ``chi1 = 1`` for ``omega <= 1``, 0 for ``omega >= 3``."""
    def chi1(omega):
        return _smooth_pair((np.asarray(omega, dtype=float) - 1.0) / 2.0)[0]

    def chi2(omega):
        return _smooth_pair((np.asarray(omega, dtype=float) - 1.0) / 2.0)[1]

    return chi1, chi2


@dataclass(frozen=True)
class OscillatoryResult:
    value: complex
    error: float
    converged: bool
    panels: int


def _panel_count(t: float, length: float) -> int:
    return max(4, math.ceil(max(64.0, math.ceil(8 * t)) * length / (2 * math.pi)))


def _breaks(lo: float, hi: float, panels: int, seeds=()) -> np.ndarray:
    pts = np.linspace(lo, hi, panels + 1)
    extra = [s for s in seeds if lo < s < hi]
    if extra:
        pts = np.unique(np.concatenate([pts, extra]))
    return pts


def _as_intervals(interval):
    if interval is None:
        return [(-math.pi, math.pi)]
    if len(interval) == 2 and np.isscalar(interval[0]):
        return [tuple(map(float, interval))]
    return [tuple(map(float, iv)) for iv in interval]


def _nodes(t, intervals, factor, seeds_for):
    xs, ws = [], []
    for lo, hi in intervals:
        p = _panel_count(t, hi - lo) * factor
        x, w = composite_gauss_legendre(_breaks(lo, hi, p, seeds_for(lo, hi)), GL_ORDER)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _roundoff_floor(w, gx) -> float:
    return 64 * np.finfo(float).eps * float(np.sum(w * np.abs(gx)))


def oscillatory_integral(t: float, phase: PhaseSpec, g, interval=None,
                         rtol: float = RTOL, atol: float = ATOL) -> OscillatoryResult:
    """``int exp(i t h(theta)) g(theta) d theta`` by composite Gauss-Legendre.

    Panels start at ``max(64, ceil(8t))`` per ``2 pi`` of interval length with
    the stationary points of ``h`` (and ``+-pi/2``) as mandatory break points,
    and are doubled until two successive results agree to ``rtol``/``atol``.
    After :data:`MAX_DOUBLINGS` doublings the best value is returned with
    ``converged=False``.

    Parameters
    ----------
    t : float
        Nonnegative frequency.
    phase : PhaseSpec
    g : callable
        Smooth amplitude, vectorised over theta.
    interval : (lo, hi) or list of (lo, hi), optional
        Integration range, ``[-pi, pi]`` by default.
    """
    t = float(t)
    if t < 0:
        raise ValidationError("t must be nonnegative")
    intervals = _as_intervals(interval)

    def seeds(lo, hi):
        return phase.stationary_points(lo, hi) + [-math.pi / 2, math.pi / 2]

    def evaluate(factor):
        x, w = _nodes(t, intervals, factor, seeds)
        gx = g(x)
        return np.sum(w * gx * np.exp(1j * t * phase.h(x))), _roundoff_floor(w, gx), x.size

    prev, floor, _ = evaluate(1)
    factor, err = 1, math.inf
    for _ in range(MAX_DOUBLINGS):
        factor *= 2
        cur, floor, n = evaluate(factor)
        err = abs(cur - prev) + floor
        if abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return OscillatoryResult(complex(cur), float(err), True, n // GL_ORDER)
        prev = cur
    return OscillatoryResult(complex(prev), err, False, n // GL_ORDER)


def _grid_integrals(t, a_grid, x, w, gx):
    """``sum_j w_j g_j exp(it(2 - 2cos x_j - a x_j))`` for every ``a`` in a uniform grid."""
    a_grid = np.asarray(a_grid, dtype=float)
    base = w * gx * np.exp(1j * t * (2 - 2 * np.cos(x)))
    out = np.empty(a_grid.size, dtype=complex)
    step = a_grid[1] - a_grid[0] if a_grid.size > 1 else 0.0
    uniform = a_grid.size > 2 and np.allclose(np.diff(a_grid), step, rtol=1e-9, atol=1e-15)
    if not uniform:
        for k, a in enumerate(a_grid):
            out[k] = np.sum(base * np.exp(-1j * t * a * x))
        return out
    ratio = np.exp(-1j * t * step * x)
    for k, a in enumerate(a_grid):
        if k % _ANCHOR_EVERY == 0:
            cur = base * np.exp(-1j * t * a * x)
        else:
            cur *= ratio
        out[k] = np.sum(cur)
    return out


@dataclass(frozen=True)
class SupScan:
    """Values of ``|I(a)|`` on a grid and the located supremum."""

    t: float
    a_grid: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    sup: float
    argmax: float


def default_a_grid(step: float = 0.01) -> np.ndarray:
    n = int(round(8 / step))
    return np.linspace(-4.0, 4.0, n + 1)


def oscillatory_integrals_on_grid(t: float, g, a_grid, interval=None,
                                  rtol: float = RTOL, atol: float = ATOL):
    """Integrals for every ``a`` in ``a_grid`` with error estimates.

    The nodes are shared across ``a``; panels are doubled (at most
    :data:`MAX_DOUBLINGS` times) until every integral has converged.

    Returns
    -------
    values : complex ndarray
    errors : float ndarray
    converged : bool
    """
    t = float(t)
    intervals = _as_intervals(interval)

    def seeds(lo, hi):
        return [-math.pi / 2, math.pi / 2]

    x, w = _nodes(t, intervals, 1, seeds)
    gx = g(x)
    prev = _grid_integrals(t, a_grid, x, w, gx)
    factor = 1
    for _ in range(MAX_DOUBLINGS):
        factor *= 2
        x, w = _nodes(t, intervals, factor, seeds)
        gx = g(x)
        cur = _grid_integrals(t, a_grid, x, w, gx)
        diff = np.abs(cur - prev)
        errors = diff + _roundoff_floor(w, gx)
        if np.all(diff <= np.maximum(atol, rtol * np.abs(cur))):
            return cur, errors, True
        prev = cur
    return prev, errors, False


def sup_over_a_scan(t: float, g, a_grid=None, interval=None, refine: bool = True,
                    candidates: int = 3) -> SupScan:
    """``sup_a |int exp(it(2 - 2cos theta - a theta)) g(theta) d theta|``.

    The grid maximum is optionally refined by a bounded scalar search
    between the neighbours of the best ``candidates`` grid points; near the
    degenerate point ``a = +-2`` the peak in ``a`` is only ``~t^-2/3`` wide.
    """
    a_grid = default_a_grid() if a_grid is None else np.asarray(a_grid, dtype=float)
    vals, errs, _ = oscillatory_integrals_on_grid(t, g, a_grid, interval)
    mag = np.abs(vals)
    best_i = int(np.argmax(mag))
    best, best_a = float(mag[best_i]), float(a_grid[best_i])
    if refine and t > 0 and a_grid.size > 2:
        order = np.argsort(mag)[::-1][:candidates]
        for i in order:
            lo = a_grid[max(i - 1, 0)]
            hi = a_grid[min(i + 1, a_grid.size - 1)]

            def neg(a):
                return -abs(oscillatory_integral(t, PhaseSpec(a), g, interval).value)

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-3 * (hi - lo)})
            if -res.fun > best:
                best, best_a = float(-res.fun), float(res.x)
    return SupScan(float(t), a_grid, mag, errs, best, best_a)


def sup_over_a_decay(t: float, g, a_grid=None, interval=None, refine: bool = True) -> float:
    """Supremum over ``a`` of the oscillatory integral magnitude (see :func:`sup_over_a_scan`)."""
    return sup_over_a_scan(t, g, a_grid, interval, refine).sup


@dataclass(frozen=True)
class DecayClass:
    """Power-law fit of ``sup(t)`` and the spread of ``sup * t^(1/k)``."""

    times: np.ndarray
    sups: np.ndarray
    slope: float
    k: int
    spread_half: float
    spread_third: float


def classify_decay(times, sups) -> DecayClass:
    """Fit ``sup ~ t^slope`` and pick the van der Corput order ``k`` in {2, 3}.

    ``spread_*`` is ``max/min`` of ``sup * t^(1/2)`` and ``sup * t^(1/3)``.
    """
    times, sups = np.asarray(times, float), np.asarray(sups, float)
    slope, _, _ = fit_power_law(times, sups, (0, math.inf))
    k = 2 if abs(slope + 0.5) < abs(slope + 1 / 3) else 3
    p2, p3 = sups * np.sqrt(times), sups * np.cbrt(times)
    return DecayClass(times, sups, slope, k, float(p2.max() / p2.min()),
                      float(p3.max() / p3.min()))


def jensen_kato_series(V: Potential, times, sigma: float = 3.0, window=None,
                       fit_window=(50.0, math.inf)) -> DecaySeries:
    """Weighted norms of ``int_0^3 exp(it omega) Im R(omega) chi1(omega) d omega``.

    This equals ``pi exp(itH) P_ac chi1(H)``; it is evaluated through the
    angle-variable spectral integral with the energy cutoff as a filter.
    """
    chi1, _ = energy_cutoffs()

    def filt(theta):
        return chi1(2 - 2 * np.cos(theta))

    s = decay_series(V, sigma, times, "weighted", window, fit_window, spectral_filter=filt)
    norms = math.pi * s.norms
    slope, intercept, resid = fit_power_law(s.times, norms, fit_window)
    return DecaySeries(s.times, norms, s.kind, s.sigma, slope, intercept,
                       s.fit_window, resid, s.windows)
