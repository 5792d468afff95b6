"""Quadrature rules: composite Gauss-Legendre and the periodic trapezoid."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(breaks, order: int = 12):
    """Nodes and weights of ``order``-point Gauss-Legendre on each panel.

    ``breaks`` is an increasing sequence of panel end points.
    """
    breaks = np.asarray(breaks, dtype=float)
    x, w = _gauss_legendre(order)
    left, right = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (right - left)
    nodes = (left + right) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def theta_grid(m: int) -> np.ndarray:
    """Uniform periodic grid ``theta_j = -pi + 2 pi j / m``."""
    return -np.pi + 2 * np.pi * np.arange(m) / m


def fourier_integrals(values: np.ndarray, ks) -> np.ndarray:
    """``int_{-pi}^{pi} g(theta) exp(-i k theta) d theta`` by the trapezoid rule.

    ``values`` samples a smooth 2 pi-periodic ``g`` on :func:`theta_grid`;
    the rule is exact for trigonometric polynomials of degree below the
    grid size and converges geometrically for analytic ``g``.  Works along
    the last axis.
    """
    values = np.asarray(values)
    m = values.shape[-1]
    ks = np.asarray(ks)
    spec = np.fft.fft(values, axis=-1)
    sign = np.where(ks % 2 == 0, 1.0, -1.0)
    return (2 * np.pi / m) * sign * np.take(spec, ks % m, axis=-1)


def next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 1).bit_length()
