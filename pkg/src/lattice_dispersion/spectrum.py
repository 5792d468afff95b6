"""Discrete spectrum of H and the projection onto the continuous part."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import WindowTooSmallError
from .lattice import LatticeKernel, LatticeWindow, Potential, hamiltonian_bands

#: Eigenvalues within this distance of [0, 4] are treated as continuum.
BAND_MARGIN = 1e-9
#: Boundary entries of an accepted eigenvector must be below this fraction of its norm.
BOUNDARY_DECAY = 1e-10
#: Eigenvalues closer than this form one multiplicity block.
CLUSTER_GAP = 1e-10


@dataclass(frozen=True)
class EigenPair:
    """Bound state with unit l2 eigenvector on the window."""

    omega: float
    vector: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Bound states and the continuous-spectrum projection ``I - sum v v^T``."""

    window: LatticeWindow
    pairs: tuple
    p_ac: LatticeKernel = field(repr=False)

    @property
    def eigenvalues(self) -> list:
        return [p.omega for p in self.pairs]

    def to_json(self) -> str:
        return json.dumps({"eigenvalues": self.eigenvalues,
                           "window": self.window.half_width})


def spectral_bounds(V: Potential):
    """``(omega_min, omega_max) = (min(0, V_n), max(4, 4 + V_n))``."""
    return min(0.0, V.min_value()), max(4.0, 4.0 + V.max_value())


def _decay_rate(omega: float) -> float:
    d = -omega if omega < 0 else omega - 4
    # |mu| = exp(-kappa) with 2 cosh(kappa) = 2 + d
    return math.acosh(1 + 0.5 * d)


def _suggest_window(window: LatticeWindow, omega: float) -> int:
    kappa = _decay_rate(omega)
    need = math.ceil(-math.log(BOUNDARY_DECAY) / max(kappa, 1e-12)) + 10
    return max(2 * window.half_width, need + window.half_width)


def discrete_spectrum(V: Potential, window: LatticeWindow) -> SpectralDecomposition:
    """Eigenvalues of the truncated H outside the band ``[0, 4]``.

    Eigenvalues are found by bisection with inverse iteration on the two
    intervals ``(omega_min - 1, -BAND_MARGIN)`` and
    ``(4 + BAND_MARGIN, omega_max + 1)``.  Each eigenvector must decay to the
    window boundary; otherwise :class:`WindowTooSmallError` is raised with a
    suggested window half-width.
    """
    diag, off = hamiltonian_bands(V, window)
    lo, hi = spectral_bounds(V)
    omegas, vecs = [], []
    for a, b in ((lo - 1.0, -BAND_MARGIN), (4.0 + BAND_MARGIN, hi + 1.0)):
        w, v = la.eigh_tridiagonal(diag, off, select="v", select_range=(a, b))
        omegas.extend(w.tolist())
        vecs.extend(v.T)

    pairs = []
    for w, v in sorted(zip(omegas, vecs), key=lambda p: p[0]):
        nrm = np.linalg.norm(v)
        edge = max(abs(v[0]), abs(v[-1]))
        if edge > BOUNDARY_DECAY * nrm:
            raise WindowTooSmallError(
                f"eigenvector at omega={w:.12g} has not decayed at the window boundary "
                f"(|v_boundary|/||v|| = {edge / nrm:.2e}); enlarge the window",
                suggested_n=_suggest_window(window, w))
        # fix the sign so the largest entry is positive
        v = v / nrm
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        pairs.append([w, v])

    pairs = _orthonormalize_clusters(pairs)
    p_ac = np.eye(window.size)
    for _, v in pairs:
        p_ac -= np.outer(v, v)
    # exact symmetry by construction
    p_ac = 0.5 * (p_ac + p_ac.T)
    return SpectralDecomposition(window, tuple(EigenPair(float(w), v) for w, v in pairs),
                                 LatticeKernel(window, p_ac))


def _orthonormalize_clusters(pairs):
    out, i = [], 0
    while i < len(pairs):
        j = i + 1
        while j < len(pairs) and pairs[j][0] - pairs[j - 1][0] < CLUSTER_GAP:
            j += 1
        block = pairs[i:j]
        if len(block) > 1:
            q, _ = np.linalg.qr(np.column_stack([v for _, v in block]))
            block = [[w, q[:, k]] for k, (w, _) in enumerate(block)]
        out.extend(block)
        i = j
    return out
