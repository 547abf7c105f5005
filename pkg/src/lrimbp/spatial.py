"""
Uniform tensor grids and the central finite-difference Laplacian.

The 1D second-difference matrix is assembled with ghost-point reflection for
homogeneous Neumann conditions (nodes include both endpoints) or as a
circulant for periodic conditions (node at one endpoint only).  In d
dimensions the operator is the Kronecker sum of the per-axis matrices.

Fields are plain ``numpy`` arrays of shape ``grid.shape``; flattening in C
order gives the row-major unknown ordering used by the dense assembly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

BCS = ("neumann", "periodic")


def _check_bc(bc):
    if bc not in BCS:
        raise ValueError(f"unknown boundary condition {bc!r}; expected one of {BCS}")


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid on a box ``[origin, origin + length]`` per axis."""

    n_axis: tuple[int, ...]
    length_axis: tuple[float, ...]
    bc: str
    origin_axis: tuple[float, ...] | None = None

    def __post_init__(self):
        _check_bc(self.bc)
        n_axis = tuple(int(n) for n in self.n_axis)
        length_axis = tuple(float(L) for L in self.length_axis)
        if not 1 <= len(n_axis) <= 3:
            raise ValueError("grid dimension must be 1, 2 or 3")
        if len(length_axis) != len(n_axis):
            raise ValueError("n_axis and length_axis must have the same length")
        if any(n < 3 for n in n_axis):
            raise ValueError(f"need at least 3 points per axis, got {n_axis}")
        if any(not L > 0 for L in length_axis):
            raise ValueError("axis lengths must be positive")
        origin = self.origin_axis
        origin = (0.0,) * len(n_axis) if origin is None else tuple(float(o) for o in origin)
        if len(origin) != len(n_axis):
            raise ValueError("origin_axis must match the grid dimension")
        object.__setattr__(self, "n_axis", n_axis)
        object.__setattr__(self, "length_axis", length_axis)
        object.__setattr__(self, "origin_axis", origin)

    @classmethod
    def from_spacing(cls, dim, h, bc, length=1.0, origin=0.0):
        """Equal axes with nominal spacing ``h``.

        Neumann grids get ``round(length/h) + 1`` nodes, periodic grids
        ``round(length/h)``, so that the realised spacing equals ``h`` when
        ``length/h`` is an integer.
        """
        _check_bc(bc)
        m = int(round(length / h))
        n = m + 1 if bc == "neumann" else m
        return cls((n,) * dim, (length,) * dim, bc, (origin,) * dim)

    @property
    def dim(self):
        return len(self.n_axis)

    @property
    def shape(self):
        return self.n_axis

    @property
    def size(self):
        return int(np.prod(self.n_axis))

    @property
    def h_axis(self):
        if self.bc == "neumann":
            return tuple(L / (n - 1) for n, L in zip(self.n_axis, self.length_axis))
        return tuple(L / n for n, L in zip(self.n_axis, self.length_axis))

    def coords(self, axis):
        n, h, o = self.n_axis[axis], self.h_axis[axis], self.origin_axis[axis]
        return o + h * np.arange(n)

    def mesh(self):
        return np.meshgrid(*(self.coords(a) for a in range(self.dim)), indexing="ij")

    def check_field(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != self.shape:
            if u.ndim == 1 and u.size == self.size:
                return u.reshape(self.shape)
            raise ValueError(f"field shape {u.shape} does not match grid {self.shape}")
        return u

    def axes(self):
        """Per-axis Laplacian factors (cached per distinct (n, h))."""
        return tuple(build_axis(n, h, self.bc) for n, h in zip(self.n_axis, self.h_axis))


def dense_laplacian_1d(n, h, bc):
    """Dense 1D second-difference matrix, scaled by ``1/h**2``."""
    _check_bc(bc)
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    if not h > 0:
        raise ValueError("h must be positive")
    L = np.zeros((n, n))
    idx = np.arange(n)
    L[idx, idx] = -2.0
    L[idx[:-1], idx[1:]] = 1.0
    L[idx[1:], idx[:-1]] = 1.0
    if bc == "neumann":
        L[0, 1] = 2.0
        L[-1, -2] = 2.0
    else:
        L[0, -1] = 1.0
        L[-1, 0] = 1.0
    return L / h**2


def _cosine_basis(n):
    j = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    return np.cos(np.pi * j * k / (n - 1))


def _fourier_basis(n):
    # Column k: cos for k <= n/2, sin for k > n/2; the sin column pairs with
    # the cos column of n-k, which has the same eigenvalue.
    j = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    arg = 2 * np.pi * j * k / n
    return np.where(k <= n // 2, np.cos(arg), np.sin(arg))


@dataclass(frozen=True, eq=False)
class LaplacianAxis:
    """Eigen-decomposition ``lambda_h = V diag(mu) V^{-1}`` of one axis."""

    n: int
    h: float
    bc: str
    mu: np.ndarray

    @cached_property
    def V(self):
        return _cosine_basis(self.n) if self.bc == "neumann" else _fourier_basis(self.n)

    @cached_property
    def Vinv(self):
        Vinv = np.linalg.inv(self.V)
        recon = (self.V * self.mu) @ Vinv
        err = np.max(np.abs(recon - self.dense()))
        if err > 1e-12 * max(self.n, 16) / self.h**2:
            raise ArithmeticError(f"eigen-reconstruction error {err:.3e} for n={self.n}")
        return Vinv

    def dense(self):
        return dense_laplacian_1d(self.n, self.h, self.bc)

    def max_abs_row_sum(self):
        # Every row of either stencil has absolute sum 4/h^2.
        return 4.0 / self.h**2


_AXIS_CACHE: dict = {}


def build_axis(n, h, bc):
    """Closed-form eigenvalues of the 1D stencil; eigenvectors are built lazily.

    Neumann: ``mu_k = (2 cos(k pi/(n-1)) - 2)/h^2`` with cosine modes.
    Periodic: ``mu_k = (2 cos(2 pi k/n) - 2)/h^2`` with a real Fourier basis.
    """
    _check_bc(bc)
    n = int(n)
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    if not h > 0:
        raise ValueError("h must be positive")
    key = (n, float(h), bc)
    axis = _AXIS_CACHE.get(key)
    if axis is None:
        k = np.arange(n)
        theta = np.pi * k / (n - 1) if bc == "neumann" else 2 * np.pi * k / n
        # 2cos - 2 = -4 sin^2(theta/2); exact zero at k = 0
        mu = -4.0 * np.sin(theta / 2) ** 2 / h**2
        mu.setflags(write=False)
        axis = LaplacianAxis(n, float(h), bc, mu)
        _AXIS_CACHE[key] = axis
    return axis


def dense_laplacian(grid):
    """Kronecker-sum assembly of ``D_h`` in row-major unknown order (oracle use)."""
    mats = [dense_laplacian_1d(n, h, grid.bc) for n, h in zip(grid.n_axis, grid.h_axis)]
    N = grid.size
    D = np.zeros((N, N))
    for a, lam in enumerate(mats):
        term = np.ones((1, 1))
        for b, n in enumerate(grid.n_axis):
            term = np.kron(term, lam if a == b else np.eye(n))
        D += term
    return D


def _second_difference(u, axis, h, bc):
    mode = "reflect" if bc == "neumann" else "wrap"
    pad = [(0, 0)] * u.ndim
    pad[axis] = (1, 1)
    up = np.pad(u, pad, mode=mode)
    n = u.shape[axis]
    lo = np.take(up, np.arange(0, n), axis=axis)
    mid = np.take(up, np.arange(1, n + 1), axis=axis)
    hi = np.take(up, np.arange(2, n + 2), axis=axis)
    return (lo - 2.0 * mid + hi) / h**2


def apply_laplacian(grid, u):
    """``D_h u`` by direct stencil application along each axis."""
    u = grid.check_field(u)
    out = np.zeros_like(u)
    for a, h in enumerate(grid.h_axis):
        out += _second_difference(u, a, h, grid.bc)
    return out


def operator_inf_norm(grid, eps, axes=None):
    """``||eps^2 D_h||_inf`` without dense assembly.

    Rows of a Kronecker sum add the diagonal entries of the factors (all of
    one sign) and place off-diagonals in disjoint columns, so the maximal
    absolute row sum is the sum of the per-axis maxima.
    """
    if axes is None:
        axes = grid.axes()
    return eps**2 * sum(ax.max_abs_row_sum() for ax in axes)
