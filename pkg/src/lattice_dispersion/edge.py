"""Branch resolution, the free resolvent and its band-edge expansion.

The spectral parameter ``lambda`` of ``-Delta`` is written as
``lambda = 2 - 2 cos(theta)`` with ``mu = exp(-i theta)``, so ``mu`` is a root
of ``mu^2 - (2 - lambda) mu + 1 = 0``.  Off the cut ``[0, 4]`` the root with
``|mu| < 1`` is used; on the cut the boundary value from above (``plus``) has
``theta in (-pi, 0)`` and the one from below (``minus``) has ``theta in (0, pi)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import BranchAmbiguityError, EdgeSingularityError, ValidationError
from .lattice import LatticeKernel, LatticeWindow

EDGE_TOL = 1e-14
SIDES = ("plus", "minus", "off_axis")


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter together with its resolved branch data."""

    lam: complex
    side: str
    theta: complex
    mu: complex

    @property
    def sin_theta(self) -> complex:
        return cmath.sin(self.theta)

    @property
    def edge(self):
        """0 or 4 if the point is a band edge, otherwise ``None``."""
        if abs(self.lam) < EDGE_TOL:
            return 0
        if abs(self.lam - 4) < EDGE_TOL:
            return 4
        return None

    @property
    def is_real_theta(self) -> bool:
        return self.side in ("plus", "minus") or self.edge is not None


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValidationError(f"unknown side {side!r}; expected one of {SIDES}")


def resolve_branch(lam: complex, side: str = "off_axis") -> SpectralPoint:
    """Resolve ``theta`` and ``mu`` for the spectral parameter ``lam``.

    Parameters
    ----------
    lam : complex
        Spectral parameter.  Real values in ``(0, 4)`` require
        ``side='plus'`` or ``side='minus'``.
    side : {'plus', 'minus', 'off_axis'}
        Which boundary value to take on the cut.

    Returns
    -------
    SpectralPoint
    """
    _check_side(side)
    lam = complex(lam)
    if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
        raise ValidationError("spectral parameter must be finite")

    if abs(lam) < EDGE_TOL:
        return SpectralPoint(lam, side, 0j, 1 + 0j)
    if abs(lam - 4) < EDGE_TOL:
        theta = math.pi if side == "minus" else -math.pi
        return SpectralPoint(lam, side, complex(theta), -1 + 0j)

    on_cut = lam.imag == 0 and 0 < lam.real < 4
    if side == "off_axis":
        if on_cut:
            raise BranchAmbiguityError(
                f"lambda={lam.real} lies on the cut (0, 4); pass side='plus' or 'minus'")
        b = 2 - lam
        s = cmath.sqrt(b * b - 4)
        r1, r2 = 0.5 * (b + s), 0.5 * (b - s)
        big = r1 if abs(r1) >= abs(r2) else r2
        # the small root as 1/big avoids cancellation
        mu = 1 / big
        theta = 1j * cmath.log(mu)
        return SpectralPoint(lam, side, theta, mu)

    if not on_cut:
        raise ValidationError(
            f"side={side!r} requires a real omega in [0, 4]; got lambda={lam}")
    theta = -math.acos(1 - 0.5 * lam.real)
    if side == "minus":
        theta = -theta
    return SpectralPoint(lam, side, complex(theta), cmath.exp(-1j * theta))


def point_from_theta(theta: complex) -> SpectralPoint:
    """Spectral point for a given ``theta`` (real or in the lower half-plane)."""
    theta = complex(theta)
    lam = 2 - 2 * cmath.cos(theta)
    if theta.imag == 0:
        th = theta.real
        if th == 0 or abs(th) == math.pi:
            side = "minus" if th > 0 else "plus"
        else:
            side = "plus" if th < 0 else "minus"
        lam = complex(lam.real)
    else:
        side = "off_axis"
    return SpectralPoint(lam, side, theta, cmath.exp(-1j * theta))


def free_resolvent_column(pt: SpectralPoint, kmax: int) -> np.ndarray:
    """``mu^(k+1) / (1 - mu^2)`` for ``k = 0..kmax``."""
    if pt.edge is not None:
        raise EdgeSingularityError(
            f"free resolvent is singular at the band edge lambda={pt.edge}; "
            "use puiseux_free_terms")
    mu = pt.mu
    powers = mu ** np.arange(1, kmax + 2)
    return powers / (1 - mu * mu)


def free_resolvent_kernel(pt: SpectralPoint, window: LatticeWindow) -> LatticeKernel:
    """Kernel of ``(-Delta - lambda)^{-1}``: ``mu^(|n-m|+1) / (1 - mu^2)``."""
    col = free_resolvent_column(pt, window.size - 1)
    return LatticeKernel(window, toeplitz(col, col))


def _signed(window: LatticeWindow) -> np.ndarray:
    return np.where(window.sites % 2 == 0, 1.0, -1.0)


def _abs_distance_sum(f: np.ndarray, n: np.ndarray) -> np.ndarray:
    """``sum_m |n - m| f_m`` in O(N) via prefix sums."""
    fm = np.cumsum(f)
    gm = np.cumsum(n * f)
    ftot, gtot = fm[-1], gm[-1]
    return n * fm - gm + (gtot - gm) - n * (ftot - fm)


def puiseux_free_terms(f, window: LatticeWindow, edge: int = 0):
    """Leading band-edge terms of the free resolvent applied to ``f``.

    At ``edge=0`` the boundary values satisfy
    ``R0(omega +- i0) f = +- i (R_{-1} f) / sqrt(omega) + R_0 f + O(sqrt(omega))`` with

        (R_{-1} f)_n = 1/2 sum_m f_m
        (R_0 f)_n    = -1/2 sum_m |n - m| f_m.

    At ``edge=4`` the same form holds in ``delta = 4 - omega`` after the
    staggering ``n -> (-1)^n``: ``R_{-1} -> U R_{-1} U`` and ``R_0 -> -U R_0 U``.

    Returns
    -------
    r_minus1, r0 : ndarray
    """
    f = np.asarray(f)
    f = f.astype(np.result_type(f, float))
    if f.shape != (window.size,):
        raise ValidationError(f"sequence length {f.shape} != window size {window.size}")
    if edge not in (0, 4):
        raise ValidationError("edge must be 0 or 4")
    n = window.sites.astype(float)
    if edge == 4:
        u = _signed(window)
        g = u * f
        return u * (0.5 * np.sum(g)), u * (0.5 * _abs_distance_sum(g, n))
    rm1 = np.full(f.shape, 0.5 * np.sum(f), dtype=f.dtype)
    r0 = -0.5 * _abs_distance_sum(f, n)
    return rm1, r0


def puiseux_free_kernels(window: LatticeWindow, edge: int = 0):
    """Kernels of the two leading edge terms (see :func:`puiseux_free_terms`)."""
    if edge not in (0, 4):
        raise ValidationError("edge must be 0 or 4")
    n = window.sites
    rm1 = np.full((window.size, window.size), 0.5)
    r0 = -0.5 * np.abs(n[:, None] - n[None, :]).astype(float)
    if edge == 4:
        u = _signed(window)
        uu = u[:, None] * u[None, :]
        rm1, r0 = uu * rm1, -uu * r0
    return LatticeKernel(window, rm1), LatticeKernel(window, r0)


def edge_distance(omega: float, edge: int = 0) -> float:
    """Distance ``omega`` or ``4 - omega`` from the chosen edge."""
    return omega if edge == 0 else 4.0 - omega


def puiseux_free_approx(f, window: LatticeWindow, omega: float, side: str = "plus",
                        edge: int = 0) -> np.ndarray:
    """Two-term approximation ``+- i R_{-1} f / sqrt(d) + R_0 f``."""
    rm1, r0 = puiseux_free_terms(f, window, edge)
    sign = 1 if side == "plus" else -1
    return sign * 1j * rm1 / math.sqrt(edge_distance(omega, edge)) + r0
