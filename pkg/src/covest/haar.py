"""Invariant-measure sampling and Monte-Carlo estimates of averaged operators.

Two groups are supported: Haar-random ``SU(d)`` and the phase group ``U(1)``
acting on a qubit as ``diag(1, exp(i phi))``. Random numbers come from
Philox streams keyed by ``(seed, stream id)``. Monte-Carlo averages are cut
into fixed-size blocks with one stream each, and block sums are merged in
block order, so a result depends only on the seed and the sample count,
never on the number of worker threads.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, OrthogonalFiducial

BLOCK = 1 << 14


def make_rng(seed, stream=0):
    ss = np.random.SeedSequence(entropy=int(seed) % (1 << 64), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def haar_unitaries(d, n, rng):
    """``n`` Haar-random ``SU(d)`` matrices, shape ``(n, d, d)``.

    QR of a complex Ginibre matrix with the diagonal of ``R`` rotated onto
    the positive reals, then the determinant phase divided out.
    """
    z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (diag / np.abs(diag))[:, None, :]
    det = np.linalg.det(q)
    return q / (det ** (1.0 / d))[:, None, None]


def phase_unitaries(phases):
    phases = np.asarray(phases, dtype=float)
    out = np.zeros(phases.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = np.exp(1j * phases)
    return out


@dataclass
class GroupSampler:
    """A compact group with its invariant measure and a reproducible RNG.

    ``kind`` is ``"haar"`` (``SU(dim)``) or ``"phase"`` (``U(1)`` on a qubit).
    """

    kind: str
    dim: int = 2
    rng_seed: int = 0
    draws: int = 0
    _blocks: int = field(default=0, repr=False)
    _rng: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("haar", "phase"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "phase" and self.dim != 2:
            raise DimensionMismatch("the phase group acts on a qubit")
        if self.kind == "haar" and self.dim < 2:
            raise DimensionMismatch("SU(d) needs d >= 2")
        self._rng = make_rng(self.rng_seed, 0)

    @classmethod
    def haar(cls, d, seed=0):
        return cls("haar", d, seed)

    @classmethod
    def phase(cls, seed=0):
        return cls("phase", 2, seed)

    def block_rngs(self, count):
        """Fresh, never-reused streams for ``count`` consecutive sample blocks."""
        start = self._blocks + 1
        self._blocks += count
        return [make_rng(self.rng_seed, start + i) for i in range(count)]

    def elements(self, n, rng=None):
        """``n`` group parameters: unitaries for Haar, angles for the phase group."""
        rng = self._rng if rng is None else rng
        self.draws += n
        if self.kind == "haar":
            return haar_unitaries(self.dim, n, rng)
        return rng.uniform(0.0, 2.0 * np.pi, size=n)

    def unitaries(self, elements):
        if self.kind == "haar":
            return np.asarray(elements)
        return phase_unitaries(elements)

    def act(self, elements, state):
        state = _as_state(state, self.dim)
        return self.unitaries(elements) @ state

    def orbit_weight(self, seed_state, fiducial):
        """Orbit average of ``|<psi|fiducial>|^2``; zero iff the fiducial is orthogonal to the orbit."""
        seed_state = _as_state(seed_state, self.dim)
        fiducial = _as_state(fiducial, self.dim)
        if self.kind == "haar":
            return float(np.vdot(fiducial, fiducial).real) / self.dim
        return float(np.sum(np.abs(seed_state) ** 2 * np.abs(fiducial) ** 2))


def _as_state(state, dim):
    state = np.asarray(state, dtype=complex).reshape(-1)
    if state.shape[0] != dim:
        raise DimensionMismatch(f"state of length {state.shape[0]} for a group acting on C^{dim}")
    return state


def _check_normalized(state, what):
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"{what} is not normalized (norm {norm:.12g})")


def sample_state(g, seed_state):
    """One draw ``U(psi)|seed>`` from the group orbit of ``seed_state``."""
    seed_state = _as_state(seed_state, g.dim)
    _check_normalized(seed_state, "seed state")
    return g.act(g.elements(1), seed_state)[0]


def sample_states(g, seed_state, n, rng=None):
    seed_state = _as_state(seed_state, g.dim)
    return g.act(g.elements(n, rng), seed_state)


@dataclass(frozen=True)
class MonteCarloOperator:
    estimate: np.ndarray
    samples: int
    std_error: float
    component_error: np.ndarray

    def within(self, exact, sigmas=3.0):
        """Largest deviation from ``exact`` in units of ``std_error``."""
        dev = np.abs(self.estimate - exact).max()
        if self.std_error == 0:
            return 0.0 if dev == 0 else np.inf
        return dev / self.std_error


def _block_sums(lift, g, seed_state, fiducial, size, rng):
    psi = sample_states(g, seed_state, size, rng)
    big = lift(psi)
    if fiducial is None:
        w = None
    else:
        w = np.abs(psi @ fiducial.conj()) ** 2
    outer = big[:, :, None] * big[:, None, :].conj()
    if w is not None:
        outer = outer * w[:, None, None]
    return outer.sum(axis=0), (np.abs(outer) ** 2).sum(axis=0)


def _mc_mean(lift, g, seed_state, fiducial, n, workers):
    if n < 1:
        raise ValueError("need at least one sample")
    if n < 1000:
        warnings.warn(f"only {n} samples; std_error is not meaningful", stacklevel=3)
    seed_state = _as_state(seed_state, g.dim)
    _check_normalized(seed_state, "seed state")
    sizes = [BLOCK] * (n // BLOCK) + ([n % BLOCK] if n % BLOCK else [])
    rngs = g.block_rngs(len(sizes))

    def job(i):
        return _block_sums(lift, g, seed_state, fiducial, sizes[i], rngs[i])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / n
    mean = 0.5 * (mean + mean.conj().T)
    if n > 1:
        var = np.clip(total_sq / n - np.abs(total / n) ** 2, 0.0, None) * n / (n - 1)
        comp = np.sqrt(var / n)
    else:
        comp = np.zeros(mean.shape)
    return MonteCarloOperator(mean, n, float(comp.max()), comp)


def mc_operator_A(lift, g, seed_state, n, workers=1):
    """Sample mean of ``|Psi(psi)><Psi(psi)|`` over the orbit of ``seed_state``.

    ``lift`` maps a batch of states ``(m, dim)`` to lifted vectors ``(m, D)``.
    """
    return _mc_mean(lift, g, seed_state, None, n, workers)


def mc_operator_R(lift, g, seed_state, fiducial, n, workers=1):
    """Sample mean of ``|Psi(psi)><Psi(psi)| |<psi|fiducial>|^2``."""
    fiducial = _as_state(fiducial, g.dim)
    _check_normalized(fiducial, "fiducial")
    if g.orbit_weight(seed_state, fiducial) < 1e-12:
        raise OrthogonalFiducial("fiducial is orthogonal to every state in the orbit")
    return _mc_mean(lift, g, seed_state, fiducial, n, workers)
