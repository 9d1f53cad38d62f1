"""Symmetric tridiagonal eigenvalues by Sturm-sequence bisection."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded


@dataclass(frozen=True)
class TridiagonalOperator:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        off = np.asarray(self.offdiag, dtype=float)
        if off.shape[0] != max(diag.shape[0] - 1, 0):
            raise ValueError(f"need {diag.shape[0] - 1} off-diagonal entries, got {off.shape[0]}")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", off)

    @property
    def size(self):
        return self.diag.shape[0]

    def dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def affine(self, scale, shift):
        """``scale * T + shift * 1``."""
        return TridiagonalOperator(scale * self.diag + shift, scale * self.offdiag)

    def gershgorin(self):
        r = np.zeros(self.size)
        r[:-1] += np.abs(self.offdiag)
        r[1:] += np.abs(self.offdiag)
        return float((self.diag - r).min()), float((self.diag + r).max())


def sturm_count(t: TridiagonalOperator, x):
    """Number of eigenvalues of ``t`` strictly below ``x``."""
    x = float(x)
    diag = t.diag.tolist()
    off2 = (t.offdiag**2).tolist()
    # tiny pivots are pushed to -pivmin so 1/q never overflows
    pivmin = float(np.finfo(float).tiny * max(1.0, max(off2, default=0.0)) / np.finfo(float).eps)
    q = diag[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    count = int(q < 0)
    for a, b2 in zip(diag[1:], off2):
        q = a - x - b2 / q
        if abs(q) < pivmin:
            q = -pivmin
        count += q < 0
    return int(count)


def kth_eigenvalue(t: TridiagonalOperator, k, tol=None):
    """The ``k``-th smallest eigenvalue (0-based) by bisection on the Sturm count."""
    lo, hi = t.gershgorin()
    span = max(hi - lo, 1.0)
    tol = 4 * np.finfo(float).eps * span if tol is None else tol
    lo -= tol
    hi += tol
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if sturm_count(t, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def max_eigenvalue(t: TridiagonalOperator):
    return kth_eigenvalue(t, t.size - 1)


def inverse_iteration(t: TridiagonalOperator, value, iterations=4):
    """Unit eigenvector for an eigenvalue estimate ``value``, sign fixed so the sum is positive."""
    n = t.size
    if n == 1:
        return np.ones(1)
    shift = value + 1e-10 * max(1.0, abs(value))
    bands = np.zeros((3, n))
    bands[0, 1:] = t.offdiag
    bands[1] = t.diag - shift
    bands[2, :-1] = t.offdiag
    x = np.ones(n) / np.sqrt(n)
    for _ in range(iterations):
        x = solve_banded((1, 1), bands, x)
        x /= np.linalg.norm(x)
    return x if x.sum() >= 0 else -x
