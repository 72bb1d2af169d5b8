"""Graphon kernels, discretization, degrees, and algebraic connectivity.

A kernel is a symmetric measurable map [0,1]^2 -> [0,1] describing the
interaction topology over a continuum of nodes.  The discretized operator
uses the midpoint grid p_i = (i - 1/2)/N and 1/N quadrature weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DomainError, NumericsError

DENSE_EIG_LIMIT = 512
CONNECTIVITY_TOL = 1e-8


def _check_coords(*coords):
    for c in coords:
        arr = np.asarray(c, dtype=float)
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("graphon coordinate outside [0, 1]")


class GraphonKernel:
    """Base class; subclasses implement _eval on validated coordinates."""

    def eval(self, p, q):
        _check_coords(p, q)
        return self._eval(np.asarray(p, dtype=float), np.asarray(q, dtype=float))

    def _eval(self, p, q):
        raise NotImplementedError

    def degree(self, p, n_quad: int) -> float:
        """Midpoint-quadrature estimate of the degree function at p."""
        if n_quad < 1:
            raise DomainError("n_quad must be >= 1")
        _check_coords(p)
        grid = (np.arange(n_quad) + 0.5) / n_quad
        vals = self.eval(np.full(n_quad, float(p)), grid)
        return float(np.mean(vals))


@dataclass(frozen=True)
class ConstantKernel(GraphonKernel):
    c: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise DomainError("constant kernel weight must lie in [0, 1]")

    def _eval(self, p, q):
        return np.broadcast_to(self.c, np.broadcast(p, q).shape).copy()


@dataclass(frozen=True)
class BlockModelKernel(GraphonKernel):
    """Stochastic-block-model kernel: K blocks with a symmetric weight matrix."""

    cuts: tuple
    weights: tuple  # K x K nested tuple

    def __post_init__(self):
        cuts = np.asarray(self.cuts, dtype=float)
        if cuts[0] != 0.0 or cuts[-1] != 1.0 or np.any(np.diff(cuts) <= 0):
            raise DomainError("cuts must increase strictly from 0 to 1")
        w = np.asarray(self.weights, dtype=float)
        k = len(cuts) - 1
        if w.shape != (k, k):
            raise DomainError("weights must be K x K for K blocks")
        if not np.array_equal(w, w.T):
            raise DomainError("block weight matrix must be symmetric")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise DomainError("block weights must lie in [0, 1]")

    @property
    def weight_matrix(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @property
    def n_blocks(self) -> int:
        return len(self.cuts) - 1

    def block_index(self, p):
        cuts = np.asarray(self.cuts)
        return np.clip(np.searchsorted(cuts, p, side="right") - 1, 0, len(cuts) - 2)

    def block_lengths(self) -> np.ndarray:
        return np.diff(np.asarray(self.cuts, dtype=float))

    def _eval(self, p, q):
        w = self.weight_matrix
        return w[self.block_index(p), self.block_index(q)]

    def degree(self, p, n_quad: int = 0) -> float:
        """Exact degree: blockwise integration needs no quadrature."""
        _check_coords(p)
        w = self.weight_matrix
        return float(w[int(self.block_index(p))] @ self.block_lengths())


@dataclass(frozen=True)
class MinKernel(GraphonKernel):
    def _eval(self, p, q):
        return np.minimum(p, q)


@dataclass(frozen=True)
class ProductKernel(GraphonKernel):
    def _eval(self, p, q):
        return p * q


_CUSTOM_FORMS = {
    # name -> (fn(p, q, params), required params)
    "exp_distance": (lambda p, q, a: np.exp(-a * np.abs(p - q)), ("a",)),
    "gaussian": (lambda p, q, a: np.exp(-a * (p - q) ** 2), ("a",)),
    "cosine": (lambda p, q, a: 0.5 + 0.5 * np.cos(a * math.pi * (p - q)), ("a",)),
}


@dataclass(frozen=True)
class CustomKernel(GraphonKernel):
    """Named closed-form kernel; symmetry and range sampled on a 32x32 grid."""

    name: str
    params: tuple = ()

    def __post_init__(self):
        if self.name not in _CUSTOM_FORMS:
            raise DomainError(f"unknown custom kernel {self.name!r}")
        fn, required = _CUSTOM_FORMS[self.name]
        if len(self.params) != len(required):
            raise DomainError(f"kernel {self.name!r} needs params {required}")
        grid = (np.arange(32) + 0.5) / 32
        pp, qq = np.meshgrid(grid, grid)
        vals = fn(pp, qq, *self.params)
        if not np.allclose(vals, vals.T, atol=1e-12):
            raise DomainError(f"kernel {self.name!r} is not symmetric")
        if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
            raise DomainError(f"kernel {self.name!r} leaves [0, 1]")

    def _eval(self, p, q):
        fn, _ = _CUSTOM_FORMS[self.name]
        return np.clip(fn(p, q, *self.params), 0.0, 1.0)


@dataclass(frozen=True)
class DiscretizedGraphon:
    """Sampled kernel on the midpoint grid with 1/N quadrature weights."""

    n_grid: int
    node_coords: np.ndarray
    weight_matrix: np.ndarray
    degrees: np.ndarray
    kernel: GraphonKernel = None

    @property
    def min_degree(self) -> float:
        return float(np.min(self.degrees))


def midpoint_grid(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def discretize(kernel: GraphonKernel, n_grid: int) -> DiscretizedGraphon:
    if n_grid < 1:
        raise DomainError("n_grid must be >= 1")
    coords = midpoint_grid(n_grid)
    w = np.zeros((n_grid, n_grid))
    iu = np.triu_indices(n_grid)
    # assemble one triangle and mirror so symmetry is exact
    w[iu] = kernel.eval(coords[iu[0]], coords[iu[1]])
    w = np.triu(w) + np.triu(w, 1).T
    degrees = w.mean(axis=1)
    return DiscretizedGraphon(n_grid, coords, w, degrees, kernel)


def laplacian_matrix(disc: DiscretizedGraphon) -> np.ndarray:
    """L = diag(degrees) - W/N; the constant vector lies in its kernel."""
    return np.diag(disc.degrees) - disc.weight_matrix / disc.n_grid


def rayleigh_quotient(disc: DiscretizedGraphon, z: np.ndarray) -> float:
    """Quotient <Lz, z>/<z, z> after removing the grid mean of z."""
    z = np.asarray(z, dtype=float)
    z = z - z.mean()
    denom = float(z @ z)
    if denom == 0.0:
        raise DomainError("Rayleigh quotient undefined for constant vectors")
    lz = laplacian_matrix(disc) @ z
    return float(z @ lz) / denom


def algebraic_connectivity(disc: DiscretizedGraphon, method: str = "auto",
                           tol: float = 1e-10) -> float:
    """Smallest Laplacian eigenvalue restricted to the zero-mean subspace.

    The constant direction is deflated by shifting it up with a rank-one
    term; a dense symmetric eigensolve handles N <= 512, Lanczos beyond.
    """
    n = disc.n_grid
    if n < 2:
        raise DomainError("algebraic connectivity needs n_grid >= 2")
    lap = laplacian_matrix(disc)
    shift = 2.0 * float(np.max(disc.degrees)) + 1.0

    if method == "dense" or (method == "auto" and n <= DENSE_EIG_LIMIT):
        deflated = lap + shift * np.full((n, n), 1.0 / n)
        lam = float(np.linalg.eigvalsh(deflated)[0])
    else:
        ones = np.full(n, 1.0 / math.sqrt(n))

        def matvec(z):
            return lap @ z + shift * ones * (ones @ z)

        op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
        try:
            vals, vecs = spla.eigsh(op, k=1, which="SA", tol=tol, maxiter=50 * n)
        except spla.ArpackNoConvergence as exc:  # pragma: no cover - rare
            raise NumericsError(f"eigen-iteration did not converge: {exc}") from exc
        lam = float(vals[0])
        v = vecs[:, 0]
        residual = float(np.linalg.norm(matvec(v) - lam * v))
        if residual > 1e-8 * max(1.0, abs(lam)):
            raise NumericsError(
                f"eigenpair residual {residual:.3e} above tolerance")
    return max(lam, 0.0) if lam > -1e-10 else lam


def is_connected(kernel: GraphonKernel, n_grid: int,
                 tol: float = CONNECTIVITY_TOL) -> dict:
    """Spectral connectivity certificate: positive min degree and lambda_2."""
    if n_grid < 2:
        raise DomainError("n_grid must be >= 2")
    disc = discretize(kernel, n_grid)
    lam2 = algebraic_connectivity(disc)
    connected = bool(disc.min_degree > tol and lam2 > tol)
    return {"connected": connected, "min_degree": disc.min_degree,
            "lambda2": lam2}
