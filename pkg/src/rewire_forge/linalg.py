"""Symmetric eigenvalue routines.

Dense matrices go through Householder tridiagonalization followed by the
implicit QL iteration with Wilkinson shifts. Past ``DENSE_LIMIT`` rows the
extreme eigenvalues come from scipy's Lanczos (ARPACK) driver instead.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import NumericError

DENSE_LIMIT = 512
QL_MAX_ITER = 60


def tridiagonalize(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduction of a symmetric matrix.

    Returns ``(diag, off)`` with ``off[i]`` coupling rows ``i`` and ``i+1``.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    off = np.zeros(max(n - 1, 0))
    for k in range(n - 2):
        x = a[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            off[k] = 0.0
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm2 = v @ v
        if vnorm2 == 0.0:
            off[k] = alpha
            continue
        # A' = H A H on the trailing block with H = I - 2 v v^T / (v^T v)
        sub = a[k + 1:, k + 1:]
        p = sub @ v * (2.0 / vnorm2)
        kfac = (v @ p) / vnorm2
        w = p - kfac * v
        sub -= np.outer(v, w) + np.outer(w, v)
        off[k] = alpha
    if n >= 2:
        off[n - 2] = a[n - 1, n - 2]
    return np.diag(a).copy(), off


def tridiagonal_ql(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric tridiagonal matrix, sorted ascending."""
    d = [float(x) for x in diag]
    n = len(d)
    e = [float(x) for x in off] + [0.0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 1e-15 * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > QL_MAX_ITER:
                raise NumericError(f"QL iteration did not converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))


def symmetric_eigenvalues(a: np.ndarray) -> np.ndarray:
    """All eigenvalues of a dense symmetric matrix, ascending."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix has non-finite entries")
    return tridiagonal_ql(*tridiagonalize(a))


def largest_eigenvalue(a: np.ndarray) -> float:
    n = a.shape[0]
    if n == 0:
        return 0.0
    if n <= DENSE_LIMIT:
        return float(symmetric_eigenvalues(a)[-1])
    return float(_lanczos(a, 1, "LA")[-1])


def smallest_eigenvalues(a: np.ndarray, k: int) -> np.ndarray:
    n = a.shape[0]
    if n <= DENSE_LIMIT:
        return symmetric_eigenvalues(a)[:k]
    return np.sort(_lanczos(a, k, "SA"))


def _lanczos(a: np.ndarray, k: int, which: str) -> np.ndarray:
    try:
        vals = scipy.sparse.linalg.eigsh(
            scipy.sparse.csr_matrix(a), k=k, which=which, tol=1e-12, maxiter=20 * a.shape[0]
        )[0]
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise NumericError(f"Lanczos did not converge: {exc}") from exc
    return vals
