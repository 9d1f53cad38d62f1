"""Dense complex linear algebra used throughout covest.

Operators are plain ``numpy`` arrays of shape ``(dim, dim)``. Multipartite
spaces follow one index convention everywhere: the leftmost tensor factor is
the most significant, so ``|j>|k>`` on ``d x d`` sits at row ``j*d + k``.
"""

from functools import lru_cache
from itertools import permutations
from math import comb, factorial, prod
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NegativeEigenvalue,
    NoConvergence,
    NotHermitian,
    SingularForNegativePower,
    SizeCapExceeded,
)

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-12
MAX_SWEEPS = 60
SIZE_CAP = 4096


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_dim: int

    @property
    def top(self):
        return self.eigenvalues[-1], self.eigenvectors[:, -1]


def dag(m):
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m, tol=HERMITIAN_TOL):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = 1.0 + (np.abs(m).max() if m.size else 0.0)
    return bool(np.abs(m - dag(m)).max(initial=0.0) <= tol * scale)


def hermitize(m, tol=HERMITIAN_TOL):
    """Return ``(m + m^dagger)/2`` after checking ``m`` is Hermitian within ``tol``."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        raise NotHermitian(f"matrix of shape {m.shape} is not Hermitian within {tol:g}")
    return 0.5 * (m + dag(m))


def ket(index, dim):
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


@lru_cache(maxsize=None)
def _round_robin(n):
    # Disjoint (p, q) pairs per round; n-1 rounds cover every pair once.
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_max(a):
    off = np.abs(a - np.diag(np.diag(a)))
    return off.max(initial=0.0)


def eigh(m, max_sweeps=MAX_SWEEPS):
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Each sweep visits every off-diagonal pair once using a round-robin
    schedule, so the ``n/2`` disjoint rotations of a round are applied as one
    vectorized update. Eigenvalues are returned ascending; each eigenvector
    is phase-fixed so its largest-magnitude component is real and positive.
    """
    a = hermitize(m).copy()
    n = a.shape[0]
    if n == 0:
        raise DimensionMismatch("empty matrix")
    v = np.eye(n, dtype=complex)
    fro = np.linalg.norm(a)
    eps = np.finfo(float).eps
    thresh = eps * fro
    if n > 1 and fro > 0:
        rounds = _round_robin(n)
        previous = np.inf
        for sweep in range(max_sweeps):
            off = _off_max(a)
            # roundoff can leave pairs just above thresh; stop once a sweep stalls there
            if off <= thresh or (off >= previous and off <= n * thresh):
                break
            previous = off
            for p, q in rounds:
                apq = a[p, q]
                r = np.abs(apq)
                act = r > thresh
                if not act.any():
                    continue
                p, q, apq, r = p[act], q[act], apq[act], r[act]
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                cs = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * cs
                e = np.conj(apq) / r
                ap, aq = a[:, p], a[:, q]
                a[:, p] = cs * ap - sn * e * aq
                a[:, q] = sn * ap + cs * e * aq
                ap, aq = a[p, :], a[q, :]
                ec = np.conj(e)[:, None]
                a[p, :] = cs[:, None] * ap - (sn[:, None] * ec) * aq
                a[q, :] = sn[:, None] * ap + (cs[:, None] * ec) * aq
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p], v[:, q]
                v[:, p] = cs * vp - sn * e * vq
                v[:, q] = sn * vp + cs * e * vq
        else:
            if _off_max(a) > n * thresh:
                raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (n={n})")
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    lead = np.argmax(np.abs(v), axis=0)
    ph = v[lead, np.arange(n)]
    v = v * (np.abs(ph) / ph)[None, :]
    return EigenDecomposition(w, v, n)


def eigvalsh(m):
    return eigh(m).eigenvalues


def lambda_max(m):
    return eigh(m).eigenvalues[-1]


def lambda_min(m):
    return eigh(m).eigenvalues[0]


def mat_pow(m, p):
    """``m**p`` for a Hermitian positive semidefinite ``m`` via its spectrum."""
    dec = eigh(m)
    w, u = dec.eigenvalues, dec.eigenvectors
    radius = np.abs(w).max()
    if w[0] < -PSD_TOL * radius:
        raise NegativeEigenvalue(f"smallest eigenvalue {w[0]:.3e} is negative")
    if p < 0 and w[0] <= PSD_TOL * radius:
        raise SingularForNegativePower(
            f"smallest eigenvalue {w[0]:.3e} too small for exponent {p}"
        )
    w = np.clip(w, 0.0, None)
    with np.errstate(divide="ignore"):
        f = np.where(w > 0, w ** float(p), 0.0 if p != 0 else 1.0)
    out = (u * f) @ dag(u)
    return 0.5 * (out + dag(out))


def _check_dims(m, dims, subsystem=None):
    dims = tuple(int(x) for x in dims)
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or prod(dims) != m.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not factor a matrix of shape {m.shape}")
    if subsystem is not None and not 0 <= subsystem < len(dims):
        raise DimensionMismatch(f"subsystem {subsystem} out of range for {len(dims)} factors")
    return m, dims


def partial_transpose(m, subsystem, dims):
    """Transpose tensor factor ``subsystem`` (0-based) of ``m``."""
    m, dims = _check_dims(m, dims, subsystem)
    k = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * k))
    axes[subsystem], axes[k + subsystem] = axes[k + subsystem], axes[subsystem]
    return t.transpose(axes).reshape(m.shape)


def partial_trace(m, subsystem, dims):
    """Trace out tensor factor ``subsystem`` (0-based) of ``m``."""
    m, dims = _check_dims(m, dims, subsystem)
    k = len(dims)
    t = m.reshape(dims + dims)
    t = np.trace(t, axis1=subsystem, axis2=k + subsystem)
    rest = prod(dims) // dims[subsystem]
    return t.reshape(rest, rest)


def permutation_operator(perm, d):
    """Operator sending factor ``i`` of ``|x_0...x_{n-1}>`` to position ``perm[i]``."""
    n = len(perm)
    size = d**n
    cols = np.eye(size, dtype=complex).reshape((d,) * n + (size,))
    return np.moveaxis(cols, range(n), perm).reshape(size, size)


def symmetric_projector(n, d, cap=SIZE_CAP):
    """Projector ``(1/n!) sum_sigma P_sigma`` onto the symmetric subspace of ``n`` qudits."""
    if n < 1 or d < 2:
        raise ValueError(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    size = d**n
    if size > cap:
        raise SizeCapExceeded(f"d**n = {size} exceeds cap {cap}")
    idx = np.arange(size).reshape((d,) * n)
    cols = np.arange(size)
    out = np.zeros((size, size))
    for sigma in permutations(range(n)):
        out[np.transpose(idx, sigma).ravel(), cols] += 1.0
    return (out / factorial(n)).astype(complex)


def symmetric_dimension(n, d):
    return comb(n + d - 1, n)


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + dag(g))


def kron_all(ops: Sequence[np.ndarray]):
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out
