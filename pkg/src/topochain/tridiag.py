"""Eigensolver for real symmetric tridiagonal matrices.

Implicit-shift QL with eigenvector accumulation, the classic `tqli`
routine (Numerical Recipes ch. 11).  A dense general solver is never
needed here: every Hamiltonian in this package is tridiagonal and small
(N <= ~30), and the propagator calls this once per time step, so the
routine is numba-compiled and the eigenvectors are stored in ROWS of
the work matrix to keep the Givens updates contiguous.

Conventions:
  diag[i]    = H[i, i],        length n
  offdiag[i] = H[i, i+1],      length n-1 (symmetric)
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import NumericalError

_EPS = float(np.finfo(np.float64).eps)
_MAX_SWEEPS = 50


@njit(cache=True)
def _tqli(d, e, V):
    """In-place implicit-QL sweep; returns 0 on success, -1 on stall.

    d : (n,) diagonal, replaced by eigenvalues (unsorted).
    e : (n,) subdiagonal in e[0:n-1]; e[n-1] is scratch. Destroyed.
    V : (n, n) preset to identity; ROW j becomes the eigenvector of d[j].
    """
    n = d.shape[0]
    if n == 1:
        return 0
    for l in range(n):
        sweeps = 0
        while True:
            # Find the first negligible subdiagonal element at or after l;
            # the block [l..m] is then an unreduced tridiagonal problem.
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > _MAX_SWEEPS:
                return -1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            sg = r if g >= 0.0 else -r
            g = d[m] - d[l] + e[l] / (g + sg)
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            r = 1.0
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    # Underflow recovery: split the problem and restart.
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r2 = (d[i] - g) * s + 2.0 * c * b
                p = s * r2
                d[i + 1] = g + p
                g = c * r2 - b
                for k in range(n):
                    f2 = V[i + 1, k]
                    V[i + 1, k] = s * V[i, k] + c * f2
                    V[i, k] = c * V[i, k] - s * f2
                i -= 1
            if r == 0.0 and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


@njit(cache=True, fastmath={"contract", "reassoc", "arcp"})
def _tqli_rot(d, e, rot_c, rot_s, rot_i):
    """Implicit-QL sweep recording Givens rotations instead of vectors.

    Same iteration as _tqli, but the orthogonal factor is kept as the
    recorded rotation sequence: rotation r mixes coordinates (i, i+1)
    via the block [[c, -s], [s, c]].  Applying them in recorded order
    reproduces V @ x (V rows = eigenvectors of the unsorted d); applying
    the transposed blocks in reverse order gives V.T @ x.  This is what
    a propagation step needs and costs O(1) per rotation per vector
    instead of the O(n) row update of full accumulation.

    Unlike the accumulating variant this one assumes well-scaled input
    (|entries| far below 1e150, true for any chain Hamiltonian here) and
    uses plain sqrt(f^2 + g^2) in place of the overflow-guarded hypot.

    Returns the rotation count, or -1 if an eigenvalue failed to deflate.
    """
    n = d.shape[0]
    n_rot = 0
    if n == 1:
        return 0
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > _MAX_SWEEPS:
                return -1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.sqrt(g * g + 1.0)
            sg = r if g >= 0.0 else -r
            g = d[m] - d[l] + e[l] / (g + sg)
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            r = 1.0
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.sqrt(f * f + g * g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r2 = (d[i] - g) * s + 2.0 * c * b
                p = s * r2
                d[i + 1] = g + p
                g = c * r2 - b
                rot_c[n_rot] = c
                rot_s[n_rot] = s
                rot_i[n_rot] = i
                n_rot += 1
                i -= 1
            if r == 0.0 and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return n_rot


def rotation_capacity(n: int) -> int:
    """Upper bound on rotations _tqli_rot can emit for an n x n matrix."""
    # At most _MAX_SWEEPS sweeps per deflation target l, each with fewer
    # than (n - l) rotations.
    return _MAX_SWEEPS * (n * (n + 1)) // 2


@njit(cache=True)
def _eig_tridiag(diag, offdiag, d, e, V):
    """Fill work arrays, run _tqli, and sort eigenpairs ascending in place."""
    n = diag.shape[0]
    for i in range(n):
        d[i] = diag[i]
        for j in range(n):
            V[i, j] = 0.0
        V[i, i] = 1.0
    for i in range(n - 1):
        e[i] = offdiag[i]
    e[n - 1] = 0.0
    status = _tqli(d, e, V)
    if status != 0:
        return status
    # Insertion sort by eigenvalue, carrying eigenvector rows along.
    for i in range(1, n):
        key = d[i]
        for k in range(n):
            e[k] = V[i, k]
        j = i - 1
        while j >= 0 and d[j] > key:
            d[j + 1] = d[j]
            for k in range(n):
                V[j + 1, k] = V[j, k]
            j -= 1
        d[j + 1] = key
        for k in range(n):
            V[j + 1, k] = e[k]
    return 0


def tridiag_eigh(diag: np.ndarray, offdiag: np.ndarray, eigvecs: bool = True):
    """Eigendecomposition of a real symmetric tridiagonal matrix.

    Returns eigenvalues ascending, and (if ``eigvecs``) the orthogonal
    matrix whose COLUMNS are the matching eigenvectors (the usual
    numpy.linalg.eigh convention).
    """
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    offdiag = np.ascontiguousarray(offdiag, dtype=np.float64)
    n = diag.shape[0]
    if offdiag.shape[0] != n - 1:
        raise ValueError(f"offdiag must have length {n - 1}, got {offdiag.shape[0]}")
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
        raise ValueError("matrix entries must be finite")
    d = np.empty(n, dtype=np.float64)
    e = np.empty(n, dtype=np.float64)
    V = np.empty((n, n), dtype=np.float64)
    if _eig_tridiag(diag, offdiag, d, e, V) != 0:
        raise NumericalError("implicit-QL iteration failed to converge")
    if eigvecs:
        return d, V.T.copy()
    return d
