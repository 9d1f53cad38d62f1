"""Estimating a qudit ``|psi>`` from the conjugate pair ``|psi>|psi*>``.

The prior is Haar on ``SU(d)``; the group acts on the pair as ``U (x) U*``.
Every operator of the model is a combination of six terms,

    1,  Phi+,  |Phi+><00|,  |00><Phi+|,  1 (x) |0><0|,  |0><0| (x) 1,

which all preserve the split of ``C^d (x) C^d`` into ``span{|jj>}`` and the
``d^2 - d`` vectors ``|jk>`` with ``j != k`` (where they are diagonal).
:class:`PairOperator` stores those six coefficients, so spectra for large
``d`` reduce to a ``d x d`` eigenproblem plus a diagonal.

Eigenvalue labels: ``mu1 = 1/(d+2)``, ``mu2 = 2/(d+2)``, ``mu3``/``mu4`` the
plus/minus branch of ``(2/(d+2))(1 +- sqrt(d/(2(d+1))))``.
"""

from dataclasses import dataclass
from math import sqrt
from typing import NamedTuple

import numpy as np

from . import qmat
from .covariant import CovariantPOVM, OperatorPair
from .errors import CertificateFailed, OverlapOutOfRange

CLUSTER_TOL = 1e-8


def phi_plus(d):
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0 / sqrt(d)
    return v


def ket00(d):
    return qmat.ket(0, d * d)


@dataclass(frozen=True)
class PairOperator:
    """``identity*1 + phi*Phi+ + phi_00*|Phi+><00| + zero_phi*|00><Phi+| + id_x_0*(1(x)|0><0|) + zero_x_id*(|0><0|(x)1)``."""

    d: int
    identity: float = 0.0
    phi: float = 0.0
    phi_00: float = 0.0
    zero_phi: float = 0.0
    id_x_0: float = 0.0
    zero_x_id: float = 0.0

    _FIELDS = ("identity", "phi", "phi_00", "zero_phi", "id_x_0", "zero_x_id")

    def _coeffs(self):
        return np.array([getattr(self, f) for f in self._FIELDS])

    def _new(self, coeffs):
        return PairOperator(self.d, *map(float, coeffs))

    def __add__(self, other):
        return self._new(self._coeffs() + other._coeffs())

    def __sub__(self, other):
        return self._new(self._coeffs() - other._coeffs())

    def __mul__(self, s):
        return self._new(self._coeffs() * s)

    __rmul__ = __mul__

    def dense(self):
        d = self.d
        p, e = phi_plus(d), ket00(d)
        z = np.zeros((d, d), dtype=complex)
        z[0, 0] = 1.0
        eye = np.eye(d, dtype=complex)
        return (
            self.identity * np.eye(d * d)
            + self.phi * np.outer(p, p)
            + self.phi_00 * np.outer(p, e)
            + self.zero_phi * np.outer(e, p)
            + self.id_x_0 * np.kron(eye, z)
            + self.zero_x_id * np.kron(z, eye)
        ).astype(complex)

    def matvec(self, v):
        d = self.d
        v = np.asarray(v, dtype=complex)
        p = phi_plus(d)
        grid = v.reshape(d, d)
        out = self.identity * v + self.phi * p * np.vdot(p, v) + self.phi_00 * p * v[0]
        out = out.copy()
        out[0] += self.zero_phi * np.vdot(p, v)
        local = np.zeros((d, d), dtype=complex)
        local[:, 0] += self.id_x_0 * grid[:, 0]
        local[0, :] += self.zero_x_id * grid[0, :]
        return out + local.ravel()

    def blocks(self):
        """``(block, diagonal)``: the operator on ``span{|jj>}`` and its diagonal on ``|jk>, j != k``."""
        d = self.d
        s = 1.0 / sqrt(d)
        block = self.identity * np.eye(d) + self.phi / d * np.ones((d, d))
        block[:, 0] += self.phi_00 * s
        block[0, :] += self.zero_phi * s
        block[0, 0] += self.id_x_0 + self.zero_x_id
        j, k = np.divmod(np.arange(d * d), d)
        off = j != k
        diag = self.identity + self.id_x_0 * (k[off] == 0) + self.zero_x_id * (j[off] == 0)
        return block.astype(complex), diag.astype(float)

    def eigenvalues(self):
        """Full spectrum (ascending) from the block reduction."""
        block, diag = self.blocks()
        return np.sort(np.concatenate([qmat.eigvalsh(block), diag]))


def _check_d(d):
    if int(d) != d or d < 2:
        raise ValueError(f"local dimension must be an integer >= 2, got {d}")
    return int(d)


def structured_A(d):
    d = _check_d(d)
    c = 1.0 / (d * (d + 1))
    return PairOperator(d, identity=c, phi=d * c)


def structured_R(d):
    d = _check_d(d)
    c = 1.0 / (d * (d + 1) * (d + 2))
    return PairOperator(d, c, d * c, sqrt(d) * c, sqrt(d) * c, c, c)


def analytic_A(d):
    return structured_A(d).dense()


def analytic_R(d):
    return structured_R(d).dense()


def symmetric_dimension3(d):
    return d * (d + 1) * (d + 2) // 6


def construct_R_from_projector(d, cap=qmat.SIZE_CAP):
    """``R`` rebuilt from the three-qudit symmetric projector.

    Partially transpose qudit 2, multiply by ``|0><0|`` on qudit 3, trace
    qudit 3 out, and normalize by the symmetric-subspace dimension.
    """
    d = _check_d(d)
    dims = (d, d, d)
    sym = qmat.symmetric_projector(3, d, cap=cap)
    sym_t2 = qmat.partial_transpose(sym, 1, dims)
    z = np.zeros((d, d), dtype=complex)
    z[0, 0] = 1.0
    weighted = np.kron(np.eye(d * d), z) @ sym_t2
    return qmat.partial_trace(weighted, 2, dims) / symmetric_dimension3(d)


@dataclass(frozen=True)
class ConjugateModel:
    d: int

    def __post_init__(self):
        _check_d(self.d)

    @property
    def dim(self):
        return self.d * self.d

    @property
    def phi_plus(self):
        return phi_plus(self.d)

    @property
    def fiducial(self):
        return qmat.ket(0, self.d)

    @property
    def lifted_fiducial(self):
        return ket00(self.d)

    def lift(self, psi):
        """``|psi>|psi*>`` for a batch of states ``(m, d)`` (or a single state)."""
        psi = np.asarray(psi, dtype=complex)
        out = psi[..., :, None] * psi.conj()[..., None, :]
        return out.reshape(psi.shape[:-1] + (self.dim,))

    def representation(self, u):
        u = np.asarray(u)
        return np.einsum("...ij,...kl->...ikjl", u, u.conj()).reshape(u.shape[:-2] + (self.dim, self.dim))

    def twirl(self, x):
        """Exact average of ``(U(x)U*) X (U(x)U*)^dagger`` over Haar ``U``.

        ``U (x) U*`` splits into the invariant line ``Phi+`` and its
        irreducible complement, so the average is ``a(1 - Phi+) + b Phi+``.
        """
        p = self.phi_plus
        b = np.vdot(p, x @ p)
        a = (np.trace(x) - b) / (self.dim - 1)
        proj = np.outer(p, p.conj())
        return a * (np.eye(self.dim) - proj) + b * proj

    def pair(self):
        return OperatorPair(analytic_A(self.d), analytic_R(self.d))


class Eigenvalue(NamedTuple):
    label: str
    value: float
    multiplicity: int


def spectrum_RAinv(d):
    """The distinct eigenvalues of ``R A^{-1}`` with multiplicities; absent ones are omitted."""
    d = _check_d(d)
    root = sqrt(d / (2.0 * (d + 1)))
    out = [
        Eigenvalue("mu1", 1.0 / (d + 2), d * (d - 2)),
        Eigenvalue("mu2", 2.0 / (d + 2), 2 * d - 2),
        Eigenvalue("mu3", 2.0 / (d + 2) * (1 + root), 1),
        Eigenvalue("mu4", 2.0 / (d + 2) * (1 - root), 1),
    ]
    return [e for e in out if e.multiplicity > 0]


def cluster_eigenvalues(values, tol=CLUSTER_TOL):
    """Group sorted eigenvalues whose neighbours differ by less than ``tol`` (relative)."""
    values = np.sort(np.asarray(values, dtype=float))
    scale = max(np.abs(values).max(), 1e-300)
    groups = [[values[0]]]
    for x in values[1:]:
        if x - groups[-1][-1] <= tol * scale:
            groups[-1].append(x)
        else:
            groups.append([x])
    return [(float(np.mean(g)), len(g)) for g in groups]


def probabilistic_fidelity(d):
    d = _check_d(d)
    return 2.0 / (d + 2) * (1 + sqrt(d / (2.0 * (d + 1))))


def probabilistic_vector(d):
    """Unnormalized optimal probabilistic seed vector, ``|00> - c |Phi+>``."""
    d = _check_d(d)
    c = sqrt(2.0 * d / (d + 1)) * (sqrt(2.0 * (d + 1)) - sqrt(d)) / (d + 2)
    return ket00(d) - c * phi_plus(d)


def probabilistic_povm(d):
    model = ConjugateModel(_check_d(d))
    v = probabilistic_vector(d)
    norm = qmat.lambda_max(model.twirl(qmat.projector(v)))
    return CovariantPOVM.rank_one(v, model.twirl, norm)


def probabilistic_success(d):
    """Prior-averaged success probability ``Tr[Pi_C A]`` of the optimal probabilistic strategy.

    Evaluated on the two-dimensional span of ``|00>`` and ``|Phi+>`` so it
    stays cheap for large ``d``; the twirl eigenvalues follow from the two
    traces ``Tr Pi`` and ``<Phi+|Pi|Phi+>``.
    """
    d = _check_d(d)
    c = sqrt(2.0 * d / (d + 1)) * (sqrt(2.0 * (d + 1)) - sqrt(d)) / (d + 2)
    s = 1.0 / sqrt(d)
    norm_sq = 1.0 - 2.0 * c * s + c * c
    on_phi = (s - c) ** 2
    off = (norm_sq - on_phi) / (d * d - 1)
    n = max(on_phi, off)
    a_weight = (norm_sq + d * on_phi) / (d * (d + 1))
    return a_weight / n


def deterministic_vector(d):
    d = _check_d(d)
    return sqrt(d * (d + 1)) * ket00(d) - (sqrt(d + 1) - 1) * phi_plus(d)


def deterministic_povm(d):
    """The optimal deterministic element; ``Pi_0 = 0`` by construction."""
    model = ConjugateModel(_check_d(d))
    return CovariantPOVM.rank_one(deterministic_vector(d), model.twirl, 1.0)


def deterministic_fidelity(d):
    d = _check_d(d)
    return (3 * d * d - 4 * d + 4 + (2 * d * d + 2 * d - 4) / sqrt(d + 1)) / (d * d * (d + 2))


def lagrange_multipliers(d):
    d = _check_d(d)
    den = d * (d + 1) * (d + 2)
    lam1 = (4 - (1 - sqrt(1.0 / (d + 1))) * (1 + 2.0 / d)) / den
    lam2 = ((d**3 + 2 * d * d - 2 * d - 4) / (d * sqrt(d + 1)) + 4.0 / d + d) / den
    return lam1, lam2


@dataclass(frozen=True)
class Certificate:
    d: int
    lambda1: float
    lambda2: float
    extremal_residual: float
    dual_min_eig: float
    trace_K: float
    trace_K_formula: float
    dual_bound: float
    fidelity: float

    def failures(self, tol=1e-10):
        bad = []
        if not self.extremal_residual <= tol:
            bad.append(("extremal", f"residual {self.extremal_residual:.3e} > {tol:g}"))
        if not self.dual_min_eig >= -tol:
            bad.append(("dual", f"dual operator eigenvalue {self.dual_min_eig:.3e} < 0"))
        if not self.trace_K > 0:
            bad.append(("trace_k", f"Tr K = {self.trace_K:.3e} is not positive"))
        if not abs(self.trace_K - self.trace_K_formula) <= 1e-12:
            bad.append(("trace_k_formula", f"Tr K {self.trace_K:.15g} vs formula {self.trace_K_formula:.15g}"))
        if not self.dual_bound >= self.fidelity - tol:
            bad.append(("dual_bound", f"bound {self.dual_bound:.15g} below fidelity {self.fidelity:.15g}"))
        return bad

    @property
    def passed(self):
        return not self.failures()

    def check(self):
        bad = self.failures()
        if bad:
            raise CertificateFailed(*bad[0])
        return self


def certify_deterministic(d, pi_vector=None, check=True):
    """Optimality certificate for a deterministic seed vector (default: the optimal one).

    Checks the extremal equation ``(R - l1 1 - l2 Phi+) Pi_C = 0`` and that
    the dual operator ``l1 1 + l2 Phi+ - R`` is positive semidefinite, plus
    the trace of its compression ``K`` onto ``span{|00>, |Phi+>}``.
    """
    d = _check_d(d)
    lam1, lam2 = lagrange_multipliers(d)
    R = structured_R(d)
    dual = PairOperator(d, identity=lam1, phi=lam2) - R
    pi = deterministic_vector(d) if pi_vector is None else np.asarray(pi_vector, dtype=complex)
    # ||X |pi><pi|||_F = ||X pi|| ||pi||
    residual = float(np.linalg.norm(dual.matvec(pi)) * np.linalg.norm(pi))
    dual_min = float(dual.eigenvalues()[0])

    e0 = ket00(d)
    rest = phi_plus(d) - e0 / sqrt(d)
    basis = [e0, rest / np.linalg.norm(rest)]
    trace_k = float(sum(np.vdot(b, dual.matvec(b)).real for b in basis))
    formula = 2 * lam1 + lam2 - (d + 6) / (d * (d + 1) * (d + 2))
    fidelity = float(np.vdot(pi, R.matvec(pi)).real)
    cert = Certificate(d, lam1, lam2, residual, dual_min, trace_k, formula,
                       lam1 * d * d + lam2, fidelity)
    return cert.check() if check else cert


def _check_overlap(overlap):
    if not 0.0 <= overlap <= 1.0:
        raise OverlapOutOfRange(f"overlap {overlap} outside [0, 1]")


def guess_probability_conjugate(d, overlap):
    """Outcome density of the estimate ``|0>`` for input ``|psi psi*>`` (deterministic optimum).

    A density with respect to the invariant measure over estimates, so it
    can exceed one.
    """
    d = _check_d(d)
    _check_overlap(overlap)
    r = sqrt(d + 1)
    return abs(d * r * overlap - r + 1) ** 2 / d


def zero_overlap_conjugate(d):
    r = sqrt(d + 1)
    return (r - 1) / (d * r)


def guess_probability_identical(d, overlap):
    """Same density for the identical pair ``|psi psi>``, seed ``sqrt(d(d+1)/2)|00>``."""
    d = _check_d(d)
    _check_overlap(overlap)
    return 0.5 * d * (d + 1) * overlap**2
