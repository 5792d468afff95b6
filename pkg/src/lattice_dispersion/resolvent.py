"""The perturbed resolvent ``R(lambda) = (H - lambda)^{-1}``.

Two independent routes are provided:

* :func:`resolvent_kernel_jost` builds the Green function from Jost
  solutions, ``R[n, m] = psi+_max(n,m) psi-_min(n,m) / W``.
* :func:`resolvent_truncated_solve` solves the tridiagonal system on a
  window.  With ``boundary='transparent'`` the end rows carry the exact
  exterior condition ``u_{N+1} = mu u_N`` so the result is the restriction of
  the infinite-lattice resolvent, including the boundary values on the cut.

The band-edge part implements the operators

    (T_{-1} f)_n = 1/2 sum_m V_m f_m
    (T_0 f)_n    = f_n - 1/2 sum_m |n - m| V_m f_m,   S_0 = T_0^{-1},

and the edge value
``R(0) psi = S0 R0 psi + (<1, psi> - <V, S0 R0 psi>) / <V, S0 1> * S0 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .edge import SpectralPoint, free_resolvent_kernel, puiseux_free_kernels, resolve_branch
from .errors import NonGenericError, SingularResolventError, ValidationError
from .jost import GENERIC_TOL, _jost_sequences, wronskian
from .lattice import LatticeKernel, LatticeWindow, Potential, hamiltonian_bands, kernel_norm

#: Condition number of the T0 support block above which it is reported singular.
T0_COND_LIMIT = 1e12

BOUNDARIES = ("dirichlet", "transparent")


def _as_point(lam, side) -> SpectralPoint:
    if isinstance(lam, SpectralPoint):
        return lam
    return resolve_branch(lam, side)


def resolvent_kernel_jost(V: Potential, omega, window: LatticeWindow,
                          side: str = "plus") -> LatticeKernel:
    """Green function ``psi+_max psi-_min / W`` on ``window``.

    ``omega`` may be a real number on the cut (with ``side``), any complex
    ``lambda`` off the cut (``side='off_axis'``) or a resolved
    :class:`SpectralPoint`.  Entries are evaluated as
    ``mu^|n-m| f+_max f-_min / W`` which avoids overflow off the cut.
    """
    pt = _as_point(omega, side)
    if pt.edge is not None:
        raise SingularResolventError(
            "the resolvent boundary value is singular at a band edge; use resolvent_at_zero",
            nearest_eigenvalue=None)
    V.on_window(window)
    fp, fm, _, _ = _jost_sequences(V, pt.mu, window, derivative=False)
    w = wronskian(V, pt.mu)
    if abs(w) < 1e-12 * (1 + V.l1_norm(0)):
        raise SingularResolventError(
            f"Wronskian vanishes at lambda={pt.lam}: lambda is an eigenvalue",
            nearest_eigenvalue=pt.lam.real)
    with np.errstate(under="ignore"):
        powers = pt.mu ** np.arange(window.size)
    dist = la.toeplitz(powers, powers)
    upper = np.outer(fm, fp)  # row n <= column m: f-_n f+_m
    k = np.triu(upper) + np.tril(upper.T, -1)
    return LatticeKernel(window, dist * k / w)


def _banded_system(V: Potential, lam: complex, window: LatticeWindow, boundary: str, side):
    if boundary not in BOUNDARIES:
        raise ValidationError(f"unknown boundary {boundary!r}; expected one of {BOUNDARIES}")
    diag, off = hamiltonian_bands(V, window)
    ab = np.zeros((3, window.size), dtype=complex)
    ab[0, 1:] = off
    ab[1] = diag - lam
    ab[2, :-1] = off
    if boundary == "transparent":
        v = V.on_window(window)
        if v[0] != 0 or v[-1] != 0:
            raise ValidationError("transparent boundary requires V = 0 at the window ends")
        mu = resolve_branch(lam, side or "off_axis").mu
        ab[1, 0] -= mu
        ab[1, -1] -= mu
    return ab


def _nearest_eigenvalue(V: Potential, lam: complex, window: LatticeWindow) -> float:
    diag, off = hamiltonian_bands(V, window)
    ev = la.eigvalsh_tridiagonal(diag, off)
    return float(ev[np.argmin(np.abs(ev - lam))])


def _solve(V, lam, window, boundary, side, rhs):
    lam = complex(lam)
    ab = _banded_system(V, lam, window, boundary, side)
    try:
        x = la.solve_banded((1, 1), ab, rhs)
    except la.LinAlgError as exc:
        raise SingularResolventError(
            f"truncated system is singular at lambda={lam}",
            nearest_eigenvalue=_nearest_eigenvalue(V, lam, window)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularResolventError(
            f"truncated system is singular at lambda={lam}",
            nearest_eigenvalue=_nearest_eigenvalue(V, lam, window))
    return x


def resolvent_truncated_solve(V: Potential, lam, window: LatticeWindow,
                              boundary: str = "dirichlet", side: str | None = None
                              ) -> LatticeKernel:
    """Kernel of ``(H_N - lambda)^{-1}`` by a banded solve with identity right-hand side.

    Parameters
    ----------
    V : Potential
    lam : complex
        Spectral parameter.  With ``boundary='transparent'`` a real value on
        the cut needs ``side`` to select the boundary value.
    window : LatticeWindow
    boundary : {'dirichlet', 'transparent'}
        Dirichlet truncation, or exact outgoing/decaying exterior condition.
    side : {'plus', 'minus', 'off_axis'}, optional
    """
    x = _solve(V, lam, window, boundary, side, np.eye(window.size))
    return LatticeKernel(window, x)


def resolvent_truncated_apply(V: Potential, lam, f, window: LatticeWindow,
                              boundary: str = "dirichlet", side: str | None = None
                              ) -> np.ndarray:
    """``(H_N - lambda)^{-1} f`` for a single sequence (or a stack of columns)."""
    return _solve(V, lam, window, boundary, side, np.asarray(f, dtype=complex))


@dataclass(frozen=True)
class TOperators:
    """Band-edge operators ``T_{-1}``, ``T_0`` and ``S_0 = T_0^{-1}`` on a window."""

    t_minus1: LatticeKernel
    t0: LatticeKernel
    s0: LatticeKernel | None
    support_cond: float
    u: np.ndarray | None = field(repr=False)
    pairing: float | None

    @property
    def singular(self) -> bool:
        return self.s0 is None


def _support_block(V: Potential) -> np.ndarray:
    n = V.sites
    dist = np.abs(n[:, None] - n[None, :]).astype(float)
    return np.eye(n.size) - 0.5 * dist * V.values[None, :]


def t_operators(V: Potential, window: LatticeWindow) -> TOperators:
    """Assemble ``T_{-1}``, ``T_0`` and (if ``T_0`` is invertible) ``S_0``.

    ``T_0`` acts as the identity on columns outside the support of V, so its
    invertibility is decided by the support block.  When that block has
    condition number above :data:`T0_COND_LIMIT` the operator is reported
    singular (``s0``, ``u`` and ``pairing`` are ``None``) instead of raising.
    """
    v = V.on_window(window)
    n = window.sites
    t_m1 = np.broadcast_to(0.5 * v[None, :], (window.size, window.size)).copy()
    t0 = np.eye(window.size) - 0.5 * np.abs(n[:, None] - n[None, :]) * v[None, :]
    cond = float(np.linalg.cond(_support_block(V))) if not V.is_zero else 1.0
    if not math.isfinite(cond) or cond > T0_COND_LIMIT:
        return TOperators(LatticeKernel(window, t_m1), LatticeKernel(window, t0), None,
                          cond, None, None)
    s0 = la.solve(t0, np.eye(window.size))
    u = apply_s0(V, np.ones(window.size), window)
    return TOperators(LatticeKernel(window, t_m1), LatticeKernel(window, t0),
                      LatticeKernel(window, s0), cond, u, float(v @ u))


def apply_s0(V: Potential, y, window: LatticeWindow) -> np.ndarray:
    """``S_0 y`` using only the support block of ``T_0``.

    Writing ``x = S_0 y`` gives ``x = y + 1/2 sum_{m in supp V} |n - m| V_m x_m``
    with ``x`` on the support solving the small block system.
    """
    y = np.asarray(y)
    if V.is_zero:
        return y.copy()
    idx = V.sites - window.n_min
    V.on_window(window)
    block = _support_block(V)
    x_s = la.solve(block, y[idx])
    dist = np.abs(window.sites[:, None] - V.sites[None, :]).astype(float)
    vx = V.values[:, None] * x_s if y.ndim > 1 else V.values * x_s
    return y + 0.5 * dist @ vx


@dataclass(frozen=True)
class T0Genericity:
    """Outcome of the ``T_0`` genericity test."""

    generic: bool
    pairing: float | None
    cond: float
    needs_review: bool


def genericity_t0(V: Potential) -> T0Genericity:
    """Generic iff ``T_0`` is invertible and ``<V, T_0^{-1} 1> != 0``.

    A support block with condition number above :data:`T0_COND_LIMIT` is
    reported with ``needs_review=True`` and ``generic=False``.
    """
    if V.is_zero:
        return T0Genericity(False, 0.0, 1.0, False)
    block = _support_block(V)
    cond = float(np.linalg.cond(block))
    if not math.isfinite(cond) or cond > T0_COND_LIMIT:
        return T0Genericity(False, None, cond, True)
    u_s = la.solve(block, np.ones(V.values.size))
    pairing = math.fsum(V.values * u_s)
    tol = GENERIC_TOL * (1 + V.l1_norm(1))
    return T0Genericity(abs(pairing) > tol, pairing, cond, False)


def _r0_dense(window: LatticeWindow) -> np.ndarray:
    return puiseux_free_kernels(window, 0)[1].entries


def _zero_energy_parts(V: Potential, window: LatticeWindow):
    g = genericity_t0(V)
    if not g.generic:
        why = ("T_0 is numerically singular" if g.needs_review
               else "<V, S_0 1> vanishes (zero-energy resonance)")
        raise NonGenericError(f"R(0) requires a generic potential: {why}")
    V.on_window(window)
    s0_one = apply_s0(V, np.ones(window.size), window)
    p = float(V.on_window(window) @ s0_one)
    return s0_one, p


def resolvent_at_zero(V: Potential, psi, window: LatticeWindow) -> np.ndarray:
    """``R(0) psi`` for a generic potential and finitely supported ``psi``."""
    from .edge import puiseux_free_terms

    psi = np.asarray(psi)
    s0_one, p = _zero_energy_parts(V, window)
    v = V.on_window(window)
    _, r0psi = puiseux_free_terms(psi, window, 0)
    x = apply_s0(V, r0psi, window)
    coeff = (np.sum(psi) - v @ x) / p
    return x + coeff * s0_one


def resolvent_at_zero_kernel(V: Potential, window: LatticeWindow) -> LatticeKernel:
    """Kernel of ``R(0)`` on ``window`` for a generic potential."""
    s0_one, p = _zero_energy_parts(V, window)
    v = V.on_window(window)
    x = apply_s0(V, _r0_dense(window), window)
    row = (np.ones(window.size) - v @ x) / p
    return LatticeKernel(window, x + np.outer(s0_one, row))


def resolvent_at_edge_kernel(V: Potential, window: LatticeWindow, edge: int = 0
                             ) -> LatticeKernel:
    """``R(0)`` or ``R(4)``; the latter is ``-U R_{-V}(0) U`` with ``U = (-1)^n``."""
    if edge == 0:
        return resolvent_at_zero_kernel(V, window)
    if edge != 4:
        raise ValidationError("edge must be 0 or 4")
    u = np.where(window.sites % 2 == 0, 1.0, -1.0)
    k = resolvent_at_zero_kernel(-V, window).entries
    return LatticeKernel(window, -(u[:, None] * k * u[None, :]))


def limiting_absorption_sweep(V: Potential, omega: float, eps, window: LatticeWindow,
                              side: str = "plus", sigma: float = 1.0, successive: bool = True):
    """Distances of ``R(omega +- i eps)`` from the boundary value ``R+-(omega)``.

    Returns
    -------
    to_limit : ndarray
        ``||R(omega +- i eps_k) - R+-(omega)||_{B(sigma, -sigma)}``.
    successive : ndarray
        ``||R(omega +- i eps_k) - R(omega +- i eps_k / 2)||``; empty unless
        ``successive`` is true.
    """
    sign = 1 if side == "plus" else -1
    limit = resolvent_kernel_jost(V, omega, window, side)
    to_limit, succ = [], []
    for e in eps:
        a = resolvent_truncated_solve(V, omega + sign * 1j * e, window, "transparent")
        to_limit.append(kernel_norm(a - limit, "b_sigma_minus_sigma", sigma))
        if successive:
            b = resolvent_truncated_solve(V, omega + sign * 0.5j * e, window, "transparent")
            succ.append(kernel_norm(a - b, "b_sigma_minus_sigma", sigma))
    return np.array(to_limit), np.array(succ)


def born_residuals(V: Potential, omega: float, window: LatticeWindow, side: str = "plus"):
    """Relative residuals of the finite Born series and the first resolvent identity."""
    r0 = free_resolvent_kernel(resolve_branch(omega, side), window).entries
    r = resolvent_kernel_jost(V, omega, window, side).entries
    v = V.on_window(window)
    r0v = r0 * v[None, :]
    born = r0 - r0v @ r0 + r0v @ (r * v[None, :]) @ r0
    scale = np.abs(r).max()
    first = r + r0v @ r
    return (float(np.abs(born - r).max() / scale),
            float(np.abs(first - r0).max() / np.abs(r0).max()))
