"""Lattice sequences, the operator H = -Delta + V, and weighted norms.

Everything infinite is realised on a finite window ``[n_min, n_max]`` of the
integer lattice.  Sequences are plain numpy arrays aligned with a window;
entries outside the window are taken to be zero (Dirichlet convention).

The weighted spaces use the weights

    ||u||_{l2_sigma}^2 = sum (1 + n^2)^sigma |u_n|^2
    ||u||_{l1_sigma}   = sum (1 + n^2)^(sigma/2) |u_n|

and B(sigma, -sigma) operator norms are largest singular values of
``D_{-sigma} K D_{-sigma}`` with ``D_s = diag((1 + n^2)^(s/2))``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as la
from scipy.sparse.linalg import ArpackNoConvergence, svds

from .errors import ValidationError, WindowTooSmallError

#: Matrices with more rows than this use ARPACK for the largest singular value.
DENSE_SVD_LIMIT = 400

NORM_SPACES = ("l2_sigma", "l1_sigma", "linf")
KERNEL_NORMS = ("b_sigma_minus_sigma", "b1_inf", "frobenius")


@dataclass(frozen=True)
class LatticeWindow:
    """Finite window ``[n_min, n_max]`` of the integer lattice."""

    n_min: int
    n_max: int

    def __post_init__(self):
        if int(self.n_min) != self.n_min or int(self.n_max) != self.n_max:
            raise ValidationError("window bounds must be integers")
        object.__setattr__(self, "n_min", int(self.n_min))
        object.__setattr__(self, "n_max", int(self.n_max))
        if self.n_min >= self.n_max:
            raise ValidationError(
                f"empty window: n_min={self.n_min} must be < n_max={self.n_max}")

    @classmethod
    def symmetric(cls, n: int) -> "LatticeWindow":
        return cls(-int(n), int(n))

    @property
    def size(self) -> int:
        return self.n_max - self.n_min + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def half_width(self) -> int:
        return min(-self.n_min, self.n_max)

    def index(self, n: int) -> int:
        if not self.n_min <= n <= self.n_max:
            raise WindowTooSmallError(f"site {n} outside window [{self.n_min}, {self.n_max}]")
        return n - self.n_min

    def contains(self, first: int, last: int) -> bool:
        return self.n_min <= first and last <= self.n_max

    def delta(self, n: int, dtype=float) -> np.ndarray:
        u = np.zeros(self.size, dtype=dtype)
        u[self.index(n)] = 1
        return u

    def weights(self, s: float) -> np.ndarray:
        """Diagonal of ``D_s``: ``(1 + n^2)^(s/2)``."""
        n = self.sites.astype(float)
        return (1.0 + n * n) ** (0.5 * s)


@dataclass(frozen=True)
class Potential:
    """Finitely supported real potential.

    ``values[k]`` is the value at site ``offset + k``.  Leading and trailing
    zeros are stripped on construction so ``offset`` is always the first
    nonzero site; the zero potential has an empty ``values`` array.
    """

    offset: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(vals)):
            raise ValidationError("potential values must be finite reals")
        nz = np.flatnonzero(vals)
        offset = int(self.offset)
        if nz.size == 0:
            vals, offset = np.zeros(0), 0
        else:
            offset += int(nz[0])
            vals = vals[nz[0]:nz[-1] + 1].copy()
        vals.setflags(write=False)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "values", vals)

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls) -> "Potential":
        return cls(0, [])

    @classmethod
    def delta(cls, site: int, value: float) -> "Potential":
        return cls(site, [value])

    @classmethod
    def from_dict(cls, data: dict) -> "Potential":
        try:
            return cls(int(data["offset"]), list(data["values"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(
                'potential must be an object {"offset": int, "values": [real, ...]}') from exc

    @classmethod
    def load(cls, path) -> "Potential":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {"offset": self.offset, "values": [float(v) for v in self.values]}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    # accessors --------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.values.size == 0

    @property
    def first(self) -> int:
        return self.offset

    @property
    def last(self) -> int:
        return self.offset + max(self.values.size, 1) - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.values.size)

    def __neg__(self) -> "Potential":
        return Potential(self.offset, -self.values)

    def reflected(self) -> "Potential":
        """The potential ``n -> V_{-n}``."""
        return Potential(-self.last, self.values[::-1])

    def on_window(self, window: LatticeWindow) -> np.ndarray:
        """Dense copy of V over ``window``."""
        if not window.contains(self.first, self.last):
            raise WindowTooSmallError(
                f"window [{window.n_min}, {window.n_max}] does not contain the support "
                f"[{self.first}, {self.last}] of V",
                suggested_n=max(abs(self.first), abs(self.last)) + 1)
        out = np.zeros(window.size)
        if not self.is_zero:
            i0 = self.offset - window.n_min
            out[i0:i0 + self.values.size] = self.values
        return out

    def l1_norm(self, sigma: float = 0.0) -> float:
        n = self.sites.astype(float)
        return math.fsum((1.0 + n * n) ** (0.5 * sigma) * np.abs(self.values))

    def min_value(self) -> float:
        return float(self.values.min()) if self.values.size else 0.0

    def max_value(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0


@dataclass(frozen=True)
class LatticeKernel:
    """Dense matrix ``K[n, m]`` indexed by sites of a window."""

    window: LatticeWindow
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = np.asarray(self.entries)
        if k.shape != (self.window.size, self.window.size):
            raise ValidationError(
                f"kernel shape {k.shape} inconsistent with window of size {self.window.size}")
        if not np.all(np.isfinite(k)):
            raise ValidationError("kernel entries must be finite")
        object.__setattr__(self, "entries", k)

    @classmethod
    def identity(cls, window: LatticeWindow) -> "LatticeKernel":
        return cls(window, np.eye(window.size))

    def __getitem__(self, nm):
        n, m = nm
        return self.entries[self.window.index(n), self.window.index(m)]

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.entries @ np.asarray(f)

    def __matmul__(self, other):
        if isinstance(other, LatticeKernel):
            if other.window != self.window:
                raise ValidationError("kernels live on different windows")
            return LatticeKernel(self.window, self.entries @ other.entries)
        return self.apply(other)

    def __add__(self, other: "LatticeKernel") -> "LatticeKernel":
        return LatticeKernel(self.window, self.entries + other.entries)

    def __sub__(self, other: "LatticeKernel") -> "LatticeKernel":
        return LatticeKernel(self.window, self.entries - other.entries)

    def conj(self) -> "LatticeKernel":
        return LatticeKernel(self.window, self.entries.conj())

    @property
    def T(self) -> "LatticeKernel":
        return LatticeKernel(self.window, self.entries.T)

    def restrict(self, window: LatticeWindow) -> "LatticeKernel":
        if not self.window.contains(window.n_min, window.n_max):
            raise WindowTooSmallError("restriction window exceeds kernel window")
        i0 = window.n_min - self.window.n_min
        sl = slice(i0, i0 + window.size)
        return LatticeKernel(window, self.entries[sl, sl])

    def norm(self, kind: str = "b_sigma_minus_sigma", sigma: float = 0.0) -> float:
        return kernel_norm(self, kind, sigma)


def apply_h(V: Potential, u: np.ndarray, window: LatticeWindow) -> np.ndarray:
    """``(H u)_n = -(u_{n+1} + u_{n-1} - 2 u_n) + V_n u_n`` on ``window``.

    Entries of ``u`` outside the window are treated as zero.
    """
    u = np.asarray(u)
    if u.shape[0] != window.size:
        raise ValidationError(f"sequence length {u.shape[0]} != window size {window.size}")
    v = V.on_window(window)
    if u.ndim > 1:
        v = v.reshape((-1,) + (1,) * (u.ndim - 1))
    out = (2.0 + v) * u
    out[:-1] -= u[1:]
    out[1:] -= u[:-1]
    return out


def hamiltonian_bands(V: Potential, window: LatticeWindow):
    """Diagonal and off-diagonal of the Dirichlet-truncated H."""
    return 2.0 + V.on_window(window), -np.ones(window.size - 1)


def weighted_norm(u: np.ndarray, sigma: float, space: str, window: LatticeWindow) -> float:
    """Norm of ``u`` in ``l2_sigma``, ``l1_sigma`` or ``linf``."""
    a = np.abs(np.asarray(u))
    if a.shape[0] != window.size:
        raise ValidationError(f"sequence length {a.shape[0]} != window size {window.size}")
    if space == "l2_sigma":
        # numpy sums pairwise, so the result does not depend on blocking
        return float(np.sqrt(np.sum(window.weights(2.0 * sigma) * a * a)))
    if space == "l1_sigma":
        return float(np.sum(window.weights(sigma) * a))
    if space == "linf":
        return float(a.max()) if a.size else 0.0
    raise ValidationError(f"unknown space {space!r}; expected one of {NORM_SPACES}")


def largest_singular_value(a: np.ndarray) -> float:
    if min(a.shape) <= DENSE_SVD_LIMIT:
        return float(la.svdvals(a)[0]) if a.size else 0.0
    # fixed start vector keeps ARPACK deterministic
    v0 = np.ones(a.shape[1], dtype=a.dtype)
    try:
        s = svds(a, k=1, tol=0, v0=v0, return_singular_vectors=False)
        return float(s[0])
    except ArpackNoConvergence:
        return float(la.svdvals(a)[0])


def weighted_matrix(K: LatticeKernel, sigma: float) -> np.ndarray:
    w = K.window.weights(-sigma)
    return w[:, None] * K.entries * w[None, :]


def kernel_norm(K: LatticeKernel, kind: str = "b_sigma_minus_sigma", sigma: float = 0.0) -> float:
    """Operator norms of a lattice kernel.

    ``b_sigma_minus_sigma``
        norm in B(sigma, -sigma): largest singular value of
        ``D_{-sigma} K D_{-sigma}``.
    ``b1_inf``
        norm in B(1, inf) = ``max |K[n, m]|``.
    ``frobenius``
        Hilbert-Schmidt norm of the weighted matrix.
    """
    if kind == "b1_inf":
        return float(np.abs(K.entries).max())
    if kind == "b_sigma_minus_sigma":
        return largest_singular_value(weighted_matrix(K, sigma))
    if kind == "frobenius":
        a = np.abs(weighted_matrix(K, sigma)).ravel()
        return float(np.sqrt(np.sum(a * a)))
    raise ValidationError(f"unknown kernel norm {kind!r}; expected one of {KERNEL_NORMS}")


def write_sequence_csv(path, window: LatticeWindow, u: np.ndarray, comments=()) -> None:
    """Export a sequence as CSV with columns ``n,re,im``."""
    u = np.asarray(u, dtype=complex)
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["n", "re", "im"])
        for n, z in zip(window.sites, u):
            w.writerow([int(n), repr(float(z.real)), repr(float(z.imag))])


def read_sequence_csv(path):
    """Inverse of :func:`write_sequence_csv`; returns ``(window, values)``."""
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    body = rows[1:]
    n = np.array([int(r[0]) for r in body])
    u = np.array([float(r[1]) + 1j * float(r[2]) for r in body])
    return LatticeWindow(int(n[0]), int(n[-1])), u
