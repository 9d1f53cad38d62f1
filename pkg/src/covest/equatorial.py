"""Phase-covariant estimation of an equatorial qubit from ``N`` copies.

The input ``|psi(phi)>^N`` with ``|psi(phi)> = (|0> + e^{i phi}|1>)/sqrt(2)``
lives in the ``N+1``-dimensional symmetric subspace with basis ``|N;k>``
(``k`` qubits in ``|1>``). In that basis the averaged operator ``A`` is
diagonal with binomial weights, ``R`` is tridiagonal, and
``M = A^{-1/2} R A^{-1/2} = 1/2 + (1/4)(shift + shift^dagger)``, so its
spectrum is that of a path graph: ``4M - 2`` has largest eigenvalue
``2 cos(pi/(N+2))`` with eigenvector ``c_k ~ sin((k+1) pi/(N+2))``.
"""

from dataclasses import dataclass
from math import comb, cos, lgamma, log, pi, sin
from typing import NamedTuple

import numpy as np

from . import covariant, tridiag
from .covariant import CovariantPOVM, OperatorPair
from .errors import CapExceeded

DENSE_CAP = 200
DIAGONAL_CAP = 10_000
EXACT_BINOMIAL_MAX = 60
LN2 = log(2.0)


def _check_n(n, cap):
    if int(n) != n or n < 1:
        raise ValueError(f"number of copies must be an integer >= 1, got {n}")
    if n > cap:
        raise CapExceeded(f"N = {n} exceeds cap {cap}")
    return int(n)


def log_binomials(n):
    """``log C(n, k)`` for ``k = 0..n``; exact integers up to ``n = 60``, log-gamma beyond."""
    if n <= EXACT_BINOMIAL_MAX:
        return np.log([float(comb(n, k)) for k in range(n + 1)])
    g = lgamma(n + 1)
    return np.array([g - lgamma(k + 1) - lgamma(n - k + 1) for k in range(n + 1)])


def basis_weights(n, cap=DIAGONAL_CAP):
    """Diagonal of ``A``: ``C(n, k) / 2^n``."""
    n = _check_n(n, cap)
    return np.exp(log_binomials(n) - n * LN2)


def _neighbour_weights(n):
    # sqrt(C(n,k) C(n,k-1)) / 2^n for k = 1..n
    lb = log_binomials(n)
    return np.exp(0.5 * (lb[1:] + lb[:-1]) - n * LN2)


def equatorial_A(n, cap=DENSE_CAP):
    n = _check_n(n, cap)
    return np.diag(basis_weights(n)).astype(complex)


def equatorial_R(n, cap=DENSE_CAP):
    n = _check_n(n, cap)
    off = 0.25 * _neighbour_weights(n)
    r = np.diag(0.5 * basis_weights(n)) + np.diag(off, 1) + np.diag(off, -1)
    return r.astype(complex)


def equatorial_pair(n, cap=DENSE_CAP):
    return OperatorPair(equatorial_A(n, cap), equatorial_R(n, cap))


def equatorial_M(n):
    n = _check_n(n, DIAGONAL_CAP)
    return tridiag.TridiagonalOperator(np.full(n + 1, 0.5), np.full(n, 0.25))


def equatorial_M_tilde(n):
    """``4M - 2``: zero diagonal, unit off-diagonal."""
    return equatorial_M(n).affine(4.0, -2.0)


class TopEigenvalue(NamedTuple):
    closed_form: float
    sturm: float


def tridiag_max_eigenvalue(n):
    """Largest eigenvalue of ``4M - 2``, in closed form and from Sturm bisection."""
    n = _check_n(n, DIAGONAL_CAP)
    return TopEigenvalue(2.0 * cos(pi / (n + 2)), tridiag.max_eigenvalue(equatorial_M_tilde(n)))


def top_eigenvector(n):
    """Normalized ``c_k`` of the top eigenvector of ``M`` (Sturm value plus inverse iteration)."""
    t = equatorial_M_tilde(n)
    return tridiag.inverse_iteration(t, tridiag.max_eigenvalue(t))


def sine_eigenvector(n):
    k = np.arange(n + 1)
    c = np.sin((k + 1) * pi / (n + 2))
    return c / np.linalg.norm(c)


def probabilistic_fidelity_eq(n):
    n = _check_n(n, DIAGONAL_CAP)
    return 0.5 * (1.0 + cos(pi / (n + 2)))


def deterministic_fidelity_eq(n):
    n = _check_n(n, DIAGONAL_CAP)
    return 0.5 + 0.5 * float(_neighbour_weights(n).sum())


def fidelity_gap(n):
    return probabilistic_fidelity_eq(n) - deterministic_fidelity_eq(n)


def log_normalization_eq(n):
    """``log N`` with ``N = 2^n max_k |c_k|^2 / C(n, k)``."""
    n = _check_n(n, DIAGONAL_CAP)
    c = top_eigenvector(n)
    with np.errstate(divide="ignore"):
        terms = 2.0 * np.log(np.abs(c)) - log_binomials(n)
    return n * LN2 + float(terms.max())


def povm_normalization_eq(n):
    return float(np.exp(log_normalization_eq(n)))


@dataclass(frozen=True)
class EquatorialModel:
    n_copies: int

    def __post_init__(self):
        _check_n(self.n_copies, DIAGONAL_CAP)

    @property
    def dim(self):
        return self.n_copies + 1

    @property
    def basis_weights(self):
        return basis_weights(self.n_copies)

    @property
    def c(self):
        return top_eigenvector(self.n_copies)

    @property
    def seed_state(self):
        return np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)

    fiducial = seed_state

    def lift(self, psi):
        """``psi^N`` written in the ``|N;k>`` basis, for a batch of qubit states."""
        psi = np.asarray(psi, dtype=complex)
        n = self.n_copies
        k = np.arange(n + 1)
        amp = np.exp(0.5 * log_binomials(n))
        return amp * psi[..., :1] ** (n - k) * psi[..., 1:2] ** k

    def representation(self, phase):
        """``diag(e^{i k phase})`` on the symmetric subspace."""
        phase = np.asarray(phase, dtype=float)
        k = np.arange(self.dim)
        phases = np.exp(1j * phase[..., None] * k)
        out = np.zeros(phase.shape + (self.dim, self.dim), dtype=complex)
        idx = np.arange(self.dim)
        out[..., idx, idx] = phases
        return out

    @staticmethod
    def twirl(x):
        """Phase average: only the diagonal in ``|N;k>`` survives."""
        return np.diag(np.diag(x))

    def pair(self):
        return equatorial_pair(self.n_copies)


def probabilistic_povm_eq(n):
    """Optimal rank-one element ``A^{-1/2}|c><c|A^{-1/2} / N`` (dense, ``n <= 200``)."""
    n = _check_n(n, DENSE_CAP)
    v = top_eigenvector(n) / np.sqrt(basis_weights(n))
    return CovariantPOVM.rank_one(v, EquatorialModel.twirl, povm_normalization_eq(n))


def deterministic_povm_eq(n):
    """Optimal deterministic element, ``|e><e|`` with ``e = sum_k |N;k>``."""
    n = _check_n(n, DENSE_CAP)
    return CovariantPOVM.rank_one(np.ones(n + 1), EquatorialModel.twirl, 1.0)


def success_probability_eq(n):
    """Prior-averaged success probability ``Tr[Pi_C A]`` of the optimal probabilistic POVM.

    Evaluated through the covariant POVM for ``n <= 200``. Beyond that only
    the log-space identity ``P = 1/N`` is used, which holds because
    ``<c|c> = 1``.
    """
    n = _check_n(n, DIAGONAL_CAP)
    if n <= DENSE_CAP:
        povm = probabilistic_povm_eq(n)
        return covariant.success_probability(povm, equatorial_pair(n))
    return float(np.exp(-log_normalization_eq(n)))


class AsymptoticReport(NamedTuple):
    n_max: int
    prob_coefficient: float
    det_exponent: float
    success_slope: float
    success_r2: float


def _linear_fit(x, y):
    slope, icpt = np.polyfit(x, y, 1)
    pred = slope * x + icpt
    r2 = 1.0 - np.sum((y - pred) ** 2) / np.sum((y - y.mean()) ** 2)
    return float(slope), float(r2)


def asymptotic_check(n_max, success_range=(5, 40)):
    """Large-``N`` behaviour of both fidelities and of the success probability.

    ``prob_coefficient`` is ``(1 - F_prob)(N+2)^2`` at ``n_max``;
    ``det_exponent`` is the log-log slope of ``1 - F_det`` over
    ``[n_max/2, n_max]``; the success fit is ``log P`` against ``N``.
    """
    n_max = _check_n(n_max, DIAGONAL_CAP)
    if n_max < 100:
        raise ValueError("asymptotic check needs n_max >= 100")
    coeff = (1.0 - probabilistic_fidelity_eq(n_max)) * (n_max + 2) ** 2
    ns = np.arange(n_max // 2, n_max + 1)
    det = np.array([1.0 - deterministic_fidelity_eq(int(k)) for k in ns])
    exponent, _ = _linear_fit(np.log(ns), np.log(det))
    lo, hi = success_range
    sn = np.arange(lo, hi + 1)
    logp = np.array([-log_normalization_eq(int(k)) for k in sn])
    slope, r2 = _linear_fit(sn.astype(float), logp)
    return AsymptoticReport(n_max, float(coeff), exponent, slope, r2)
