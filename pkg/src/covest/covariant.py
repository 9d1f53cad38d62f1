"""Optimal probabilistic covariant estimation for a given pair of averaged operators.

With ``A`` the orbit average of the lifted input projectors and ``R`` the
same average weighted by the fidelity with the reference estimate, a
covariant seed element ``Pi`` gives the conditional fidelity
``Tr[R Pi] / Tr[A Pi]``. Its supremum is the largest eigenvalue of
``M = A^{-1/2} R A^{-1/2}`` and, for a non-degenerate top eigenvalue, it is
reached by the rank-one element ``A^{-1/2}|mu><mu|A^{-1/2} / N``.

Group averaging is model specific, so it is passed in as a ``twirl``
callable computing ``X -> int V(g) X V(g)^dagger dg`` exactly.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import qmat
from .errors import (
    DegenerateEigenspace,
    NormalizationInfeasible,
    SingularA,
    ZeroSuccessProbability,
)

ANALYTIC = "analytic"
MONTE_CARLO = "monte_carlo"

SUPPORT_CUTOFF = 1e-12
DEGENERACY_REL = 1e-8
POVM_TOL = 1e-9
ZERO_PI0 = 1e-12


@dataclass(frozen=True)
class OperatorPair:
    A: np.ndarray
    R: np.ndarray
    provenance: str = ANALYTIC
    se_A: Optional[np.ndarray] = None
    se_R: Optional[np.ndarray] = None
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "A", qmat.hermitize(self.A, 1e-10))
        object.__setattr__(self, "R", qmat.hermitize(self.R, 1e-10))
        if self.A.shape != self.R.shape:
            raise ValueError(f"A {self.A.shape} and R {self.R.shape} differ in shape")
        if self.validate:
            self.check()

    @property
    def dim(self):
        return self.A.shape[0]

    @property
    def std_error(self):
        if self.se_A is None:
            return 0.0
        return float(max(self.se_A.max(), self.se_R.max()))

    def check(self):
        tol = 1e-10 if self.provenance == ANALYTIC else 3.0 * max(self.std_error, 1e-15)
        tr = np.trace(self.A).real
        if abs(tr - 1.0) > tol * (1 if self.provenance == ANALYTIC else self.dim):
            raise ValueError(f"Tr A = {tr:.15g}, expected 1")
        gap = qmat.lambda_min(self.A - self.R)
        scale = 1e-10 if self.provenance == ANALYTIC else tol
        if gap < -scale:
            raise ValueError(f"A - R has eigenvalue {gap:.3e} < 0")


@dataclass(frozen=True)
class FidelityResult:
    f_max: float
    eigen_gap: float
    degenerate: bool
    eigenvector: np.ndarray
    success_prob: Optional[float] = None
    std_error: float = 0.0


@dataclass(frozen=True)
class CovariantPOVM:
    """Seed element ``Pi_C`` of a covariant POVM plus its inconclusive element."""

    pi_matrix: np.ndarray
    normalization: float
    pi0: np.ndarray
    pi_vector: Optional[np.ndarray] = None

    @property
    def deterministic(self):
        return not np.any(self.pi0)

    @classmethod
    def rank_one(cls, vector, twirl, normalization=1.0):
        """Element ``|v><v| / normalization`` with ``Pi_0 = 1 - twirl(Pi_C)``."""
        v = np.asarray(vector, dtype=complex) / np.sqrt(normalization)
        pi = qmat.projector(v)
        return cls(pi, float(normalization), inconclusive_element(pi, twirl), v)

    def scaled(self, s):
        """The strategy that applies this POVM with probability ``s`` and abstains otherwise."""
        eye = np.eye(self.pi0.shape[0], dtype=complex)
        vec = None if self.pi_vector is None else np.sqrt(s) * self.pi_vector
        norm = self.normalization / s if s > 0 else np.inf
        return replace(self, pi_matrix=s * self.pi_matrix, pi0=(1 - s) * eye + s * self.pi0,
                       pi_vector=vec, normalization=norm)


def inconclusive_element(pi, twirl, tol=POVM_TOL):
    """``1 - twirl(pi)``, validated PSD; snapped to exact zero below ``ZERO_PI0``."""
    avg = qmat.hermitize(twirl(pi), 1e-10)
    pi0 = np.eye(avg.shape[0], dtype=complex) - avg
    if np.abs(pi0).max() <= ZERO_PI0:
        return np.zeros_like(pi0)
    low = qmat.lambda_min(pi0)
    if low < -tol:
        raise NormalizationInfeasible(
            f"covariant average exceeds the identity (Pi_0 eigenvalue {low:.3e})"
        )
    return pi0


def whitening(A):
    """Isometry ``W`` and ``A^{-1/2}`` on the support of ``A``: returns ``(W, w^{-1/2})``."""
    dec = qmat.eigh(A)
    w, u = dec.eigenvalues, dec.eigenvectors
    keep = w > SUPPORT_CUTOFF * np.abs(w).max()
    return u[:, keep], w[keep] ** -0.5


def build_M(pair: OperatorPair):
    """``A^{-1/2} R A^{-1/2}``, expressed on the support of ``A``.

    For full-rank ``A`` this is the ordinary ``dim x dim`` operator (written
    in the standard basis). For singular ``A`` the result lives in the
    eigenbasis of the support, and ``R`` must not leak outside it.
    """
    W, s = whitening(pair.A)
    R = pair.R
    if W.shape[1] < pair.dim:
        P = W @ qmat.dag(W)
        leak = np.abs(R - P @ R @ P).max()
        if leak > 1e-10:
            raise SingularA(f"R has weight {leak:.3e} outside the support of A")
        m = (s[:, None] * (qmat.dag(W) @ R @ W)) * s[None, :]
    else:
        inv_sqrt = (W * s) @ qmat.dag(W)
        m = inv_sqrt @ R @ inv_sqrt
    return 0.5 * (m + qmat.dag(m))


def _lift_vector(A, mu):
    # A^{-1/2} applied to an eigenvector of M (support coordinates when A is singular).
    W, s = whitening(A)
    if W.shape[1] < A.shape[0]:
        return W @ (s * mu)
    return (W * s) @ (qmat.dag(W) @ mu)


def optimal_fidelity(pair: OperatorPair):
    dec = qmat.eigh(build_M(pair))
    w = dec.eigenvalues
    mu_max, vec = dec.top
    gap = float(mu_max - w[-2]) if len(w) > 1 else np.inf
    degenerate = gap < DEGENERACY_REL * abs(mu_max)
    err = 0.0
    if pair.se_A is not None:
        # First-order bound: d mu = <v|dR - mu dA|v> with v = A^{-1/2}|mu>.
        v = np.abs(_lift_vector(pair.A, vec))
        err = float(v @ (pair.se_R + mu_max * pair.se_A) @ v)
    return FidelityResult(float(mu_max), gap, bool(degenerate), vec, std_error=err)


def build_rank_one_povm(pair: OperatorPair, twirl: Callable[[np.ndarray], np.ndarray]):
    """The optimal rank-one covariant element with the smallest feasible normalization.

    ``twirl`` is the exact group average. The normalization is the largest
    eigenvalue of ``twirl(|v><v|)`` for ``v = A^{-1/2}|mu_max>``, which is the
    smallest constant keeping ``int V Pi_C V^dagger <= 1``.
    """
    res = optimal_fidelity(pair)
    if res.degenerate:
        raise DegenerateEigenspace(
            f"top eigenvalue {res.f_max:.12g} is degenerate (gap {res.eigen_gap:.3e}); "
            "the optimal element needs a semidefinite program over the eigenspace"
        )
    v = _lift_vector(pair.A, res.eigenvector)
    norm = qmat.lambda_max(twirl(qmat.projector(v)))
    if not norm > 0:
        raise NormalizationInfeasible(f"normalization bound {norm:.3e} is not positive")
    return CovariantPOVM.rank_one(v, twirl, norm)


def success_probability(povm: CovariantPOVM, pair: OperatorPair):
    return float(np.trace(povm.pi_matrix @ pair.A).real)


def conditional_fidelity(povm: CovariantPOVM, pair: OperatorPair):
    p = success_probability(povm, pair)
    if p <= 1e-14:
        raise ZeroSuccessProbability(f"Tr[A Pi_C] = {p:.3e}")
    return float(np.trace(pair.R @ povm.pi_matrix).real) / p
