"""
Actions of exp(tA) and phi_k(tA) for A = eps^2 D_h.

``D_h`` is a Kronecker sum of 1D factors that share one eigenbasis per
axis, so every matrix function of A is diagonal in the tensor eigenbasis:
transform forward along each axis, scale pointwise by g(t * s) on the joint
eigenvalue grid ``s = eps^2 * sum_axis mu``, transform back.

Two transform back-ends are provided:

``"fft"``
    DCT-I (Neumann) or real FFT (periodic) via :mod:`scipy.fft`.  Default.
``"matrix"``
    Explicit per-axis multiplication by ``V^{-1}`` and ``V``.  Reference
    path, O(n) more expensive per line.

Dense oracles (:func:`dense_expm`, :func:`dense_phi_action`) live here too;
they are independent of the transforms and are used for verification.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as sfft

from .spatial import GridSpec

_PHI2_SWITCH = 1e-2
# 1/(j+2)! for j = 0..8, highest degree first for Horner
_PHI2_TAYLOR = [1.0 / math.factorial(j + 2) for j in range(8, -1, -1)]


def phi(k, z):
    """Vectorised phi_1 / phi_2 with their limits at z = 0."""
    z = np.asarray(z, dtype=float)
    if k == 1:
        out = np.ones_like(z)
        nz = z != 0
        out[nz] = np.expm1(z[nz]) / z[nz]
        return out
    if k == 2:
        out = np.empty_like(z)
        small = np.abs(z) < _PHI2_SWITCH
        zs = z[small]
        acc = np.full_like(zs, _PHI2_TAYLOR[0])
        for c in _PHI2_TAYLOR[1:]:
            acc = acc * zs + c
        out[small] = acc
        zl = z[~small]
        out[~small] = (np.expm1(zl) - zl) / zl**2
        return out
    raise ValueError(f"phi_k only implemented for k in (1, 2), got {k}")


def phi_scalar(k, z):
    return float(phi(k, np.array([z], dtype=float))[0])


def _apply_along(mat, arr, axis):
    out = np.tensordot(mat, arr, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


class Propagator:
    """Cached spectral factors of exp(tA), phi_1(tA), phi_2(tA) for fixed t.

    Build one per (scheme, dt) and reuse it for every step.
    """

    def __init__(self, grid: GridSpec, eps, t, method="fft", workers=1):
        if t < 0:
            raise ValueError(f"propagator time must be non-negative, got {t}")
        if method not in ("fft", "matrix"):
            raise ValueError(f"unknown transform method {method!r}")
        self.grid = grid
        self.axes = grid.axes()
        self.eps = float(eps)
        self.t = float(t)
        self.method = method
        self.workers = workers

        mus = [ax.mu for ax in self.axes]
        if method == "fft" and grid.bc == "periodic":
            mus[-1] = mus[-1][: grid.n_axis[-1] // 2 + 1]
        # exp factors per axis, and the joint eigenvalue grid for phi
        self.axis_factors = tuple(np.exp(self.t * self.eps**2 * mu) for mu in mus)
        s = np.zeros([len(mu) for mu in mus])
        for a, mu in enumerate(mus):
            shape = [1] * grid.dim
            shape[a] = len(mu)
            s = s + mu.reshape(shape)
        self.eig = self.eps**2 * s
        self.exp_factor = np.exp(self.t * self.eig)
        self._phi = {}

    def phi_factor(self, k):
        if k not in self._phi:
            self._phi[k] = phi(k, self.t * self.eig)
        return self._phi[k]

    def forward(self, u):
        u = self.grid.check_field(u)
        if self.method == "matrix":
            for a, ax in enumerate(self.axes):
                u = _apply_along(ax.Vinv, u, a)
            return u
        if self.grid.bc == "neumann":
            return sfft.dctn(u, type=1, workers=self.workers)
        return sfft.rfftn(u, workers=self.workers)

    def inverse(self, c):
        if self.method == "matrix":
            for a, ax in enumerate(self.axes):
                c = _apply_along(ax.V, c, a)
            return c
        if self.grid.bc == "neumann":
            return sfft.idctn(c, type=1, workers=self.workers)
        return sfft.irfftn(c, s=self.grid.shape, workers=self.workers)

    def apply_exp(self, u):
        return self.inverse(self.exp_factor * self.forward(u))

    def apply_phi(self, k, u):
        return self.inverse(self.phi_factor(k) * self.forward(u))


def apply_exp(prop, u):
    """exp(tA) u by per-axis transforms."""
    return prop.apply_exp(u)


def apply_phi(prop, k, u):
    """phi_k(tA) u, k in {1, 2}."""
    if k not in (1, 2):
        raise ValueError(f"unsupported phi index {k}")
    return prop.apply_phi(k, u)


# Pade(13) coefficients for scaling and squaring
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152

DENSE_CAP = 1024


def dense_expm(matrix, t=1.0):
    """exp(t M) by scaling and squaring with a degree-13 Pade core.

    Oracle only: O(n^3) and capped at ``DENSE_CAP`` rows.
    """
    M = np.asarray(matrix, dtype=float) * t
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError("dense_expm needs a square matrix")
    if n > DENSE_CAP:
        raise ValueError(f"dense_expm size {n} exceeds cap {DENSE_CAP}")
    norm1 = np.max(np.sum(np.abs(M), axis=0)) if n else 0.0
    s = 0
    if norm1 > _THETA13:
        s = int(math.ceil(math.log2(norm1 / _THETA13)))
    M = M / 2.0**s
    b = _PADE13
    I = np.eye(n)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M4 @ M2
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
             + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * I)
    V = M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2) + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * I
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    return E


def dense_phi_action(matrix, t, k, v):
    """phi_k(t M) v from the exponential of an augmented block matrix.

    With ``B = [[tM, v, 0], [0, 0, 1], [0, 0, 0]]`` the last column of
    ``exp(B)`` holds ``phi_2(tM) v`` and the middle one ``phi_1(tM) v``.
    """
    M = np.asarray(matrix, dtype=float)
    v = np.asarray(v, dtype=float).ravel()
    n = M.shape[0]
    B = np.zeros((n + k, n + k))
    B[:n, :n] = t * M
    B[:n, n] = v
    for j in range(1, k):
        B[n + j - 1, n + j] = 1.0
    E = dense_expm(B)
    return E[:n, n + k - 1]


def dense_expm_extended(matrix, t=1.0, theta=0.25):
    """exp(t M) by scaling and squaring a Taylor core in ``np.longdouble``.

    Slower than :func:`dense_expm` but carries about three extra digits on
    x86, enough to resolve quantities near 1 to well below 1e-12 after the
    many squarings a stiff diffusion matrix needs.  Returned as ``longdouble``.
    """
    M = np.asarray(matrix, dtype=np.longdouble) * np.longdouble(t)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError("dense_expm_extended needs a square matrix")
    if n > DENSE_CAP:
        raise ValueError(f"dense_expm_extended size {n} exceeds cap {DENSE_CAP}")
    norm = float(np.max(np.sum(np.abs(M), axis=1))) if n else 0.0
    s = int(math.ceil(math.log2(norm / theta))) if norm > theta else 0
    M = M / np.longdouble(2) ** s
    E = np.eye(n, dtype=np.longdouble)
    term = E.copy()
    tiny = np.finfo(np.longdouble).eps * 1e-3
    for k in range(1, 40):
        term = term @ M / np.longdouble(k)
        E = E + term
        if np.max(np.abs(term)) < tiny:
            break
    for _ in range(s):
        E = E @ E
    return E
