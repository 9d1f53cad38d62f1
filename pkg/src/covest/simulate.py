"""Monte-Carlo simulation of a covariant measurement, trial by trial.

Each trial draws a true state from the prior, decides between inconclusive
and conclusive with probability ``<Psi|Pi_0|Psi>``, and for a conclusive
trial draws an estimate from the outcome density
``p(phi|psi) = <Psi(psi)|V(phi) Pi_C V(phi)^dagger|Psi(psi)>`` relative to the
invariant measure. Estimates come from rejection sampling against the
invariant measure, or, for the phase model with few copies, from an
inverse-CDF table of the exact trigonometric-polynomial density.

Trials are processed in fixed blocks, each with its own Philox stream, so
results depend only on ``(seed, samples)`` and not on the worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import conjugate, covariant, equatorial
from .covariant import CovariantPOVM
from .errors import EnvelopeViolation, ZeroConclusive
from .haar import haar_unitaries, make_rng

PROBABILISTIC = "probabilistic"
DETERMINISTIC = "deterministic"
TRIAL_BLOCK = 1 << 13
TABLE_SIZE = 1 << 14
INVERSE_CDF_MAX_N = 64
SCAN_POINTS = 1000
SAFETY = 1.01


@dataclass(frozen=True)
class ConjugateSim:
    d: int
    name = "conjugate"

    @property
    def model(self):
        return conjugate.ConjugateModel(self.d)

    def pair(self):
        return self.model.pair()

    def povm(self, strategy):
        if strategy == DETERMINISTIC:
            return conjugate.deterministic_povm(self.d)
        return conjugate.probabilistic_povm(self.d)

    def sample_elements(self, n, rng):
        return haar_unitaries(self.d, n, rng)

    def states(self, elements):
        return elements[..., :, 0]

    def lift(self, psi):
        return self.model.lift(psi)

    def relative_lift(self, est, psi):
        # V(phi)^dagger |Psi(psi)> = |chi>|chi*> with chi = U_phi^dagger psi
        chi = np.einsum("...ji,...j->...i", est.conj(), psi)
        return self.model.lift(chi), np.abs(chi[..., 0]) ** 2

    def scan_relative(self, rng):
        """Relative states for the envelope scan: Haar draws plus the overlap line through |0>."""
        haar = haar_unitaries(self.d, SCAN_POINTS, rng)[..., :, 0]
        t = np.linspace(0.0, 1.0, SCAN_POINTS)
        line = np.zeros((SCAN_POINTS, self.d), dtype=complex)
        line[:, 0] = np.sqrt(t)
        line[:, 1] = np.sqrt(1.0 - t)
        return self.model.lift(np.concatenate([haar, line]))


@dataclass(frozen=True)
class EquatorialSim:
    n: int
    name = "equatorial"

    @property
    def model(self):
        return equatorial.EquatorialModel(self.n)

    def pair(self):
        return equatorial.equatorial_pair(self.n)

    def povm(self, strategy):
        if strategy == DETERMINISTIC:
            return equatorial.deterministic_povm_eq(self.n)
        return equatorial.probabilistic_povm_eq(self.n)

    def sample_elements(self, n, rng):
        return rng.uniform(0.0, 2.0 * np.pi, size=n)

    def states(self, phases):
        return np.stack([np.ones_like(phases), np.exp(1j * phases)], axis=-1) / np.sqrt(2.0)

    def lift(self, psi):
        return self.model.lift(psi)

    def relative_lift(self, est, psi):
        # The density depends only on the phase difference theta = psi - phi.
        theta = np.angle(psi[..., 1] / psi[..., 0]) - est
        return self.lift(self.states(theta)), 0.5 * (1.0 + np.cos(theta))

    def scan_relative(self, rng):
        theta = np.linspace(0.0, 2.0 * np.pi, max(SCAN_POINTS, 64 * (self.n + 1)), endpoint=False)
        return self.lift(self.states(theta))


def make_model(model, param):
    if model == "conjugate":
        return ConjugateSim(int(param))
    if model == "equatorial":
        return EquatorialSim(int(param))
    raise ValueError(f"unknown model {model!r}")


def outcome_density(model, povm: CovariantPOVM, psi, phi):
    """``<Psi(psi)|V(phi) Pi_C V(phi)^dagger|Psi(psi)>`` for group elements ``psi`` and ``phi``.

    Elements are unitaries for the conjugate model and angles for the
    equatorial one; batched inputs broadcast.
    """
    sim = model if isinstance(model, (ConjugateSim, EquatorialSim)) else _wrap(model)
    state = sim.states(np.asarray(psi))
    big, _ = sim.relative_lift(np.asarray(phi), state)
    return _density(povm, big)


def _wrap(model):
    if isinstance(model, conjugate.ConjugateModel):
        return ConjugateSim(model.d)
    if isinstance(model, equatorial.EquatorialModel):
        return EquatorialSim(model.n_copies)
    raise TypeError(f"unsupported model {model!r}")


def _density(povm, big):
    if povm.pi_vector is not None:
        return np.abs(big @ povm.pi_vector.conj()) ** 2
    return np.einsum("...i,ij,...j->...", big.conj(), povm.pi_matrix, big).real


@dataclass(frozen=True)
class SimulationConfig:
    model: str
    param: int
    strategy: str = PROBABILISTIC
    samples: int = 100_000
    rng_seed: int = 0
    rejection_bound: Optional[float] = None
    method: str = "auto"
    workers: int = 1
    povm: Optional[CovariantPOVM] = None


@dataclass(frozen=True)
class SimulationReport:
    empirical_fidelity: float
    fidelity_error: float
    empirical_success: float
    success_error: float
    samples_used: int
    conclusive: int
    rejection_efficiency: float
    analytic_fidelity: float
    analytic_success: float

    def fidelity_sigmas(self):
        return _sigmas(self.empirical_fidelity - self.analytic_fidelity, self.fidelity_error)

    def success_sigmas(self):
        return _sigmas(self.empirical_success - self.analytic_success, self.success_error)


def _sigmas(diff, err):
    if abs(diff) <= 1e-12:
        return 0.0
    if err == 0:
        return np.inf
    return abs(diff) / err


def envelope(sim, povm, rng):
    """Rejection bound: 1.01 x the scanned maximum, never above the Cauchy-Schwarz ceiling."""
    ceiling = float(np.trace(povm.pi_matrix).real)
    scanned = float(_density(povm, sim.scan_relative(rng)).max())
    return min(ceiling, SAFETY * scanned)


class _InverseCDF:
    """Sampler for the phase difference from its exact trigonometric-polynomial density."""

    def __init__(self, sim, povm):
        n = sim.n
        # Fourier coefficients of p(theta) = |sum_k a_k e^{ik theta}|^2 from the lifted seed.
        a = sim.lift(sim.states(np.zeros(1)))[0] * povm.pi_vector.conj() if povm.pi_vector is not None else None
        grid = np.linspace(0.0, 2.0 * np.pi, TABLE_SIZE + 1)
        if a is not None:
            m = np.arange(-n, n + 1)
            coef = np.array([np.sum(a[max(0, j):n + 1 + min(0, j)] * a[max(0, -j):n + 1 - max(0, j)].conj())
                             for j in m])
            cdf = coef[n].real * grid
            for j, cj in zip(m, coef):
                if j:
                    cdf = cdf + (cj * (np.exp(1j * j * grid) - 1.0) / (1j * j)).real
            cdf = cdf / (2.0 * np.pi)
        else:
            mid = 0.5 * (grid[1:] + grid[:-1])
            dens = _density(povm, sim.lift(sim.states(mid)))
            cdf = np.concatenate([[0.0], np.cumsum(dens) / TABLE_SIZE])
        total = cdf[-1]
        self.grid = grid
        self.cdf = np.maximum.accumulate(cdf / total)

    def draw(self, u):
        return np.interp(u, self.cdf, self.grid)


def _run_block(sim, povm, bound, table, size, rng):
    elements = sim.sample_elements(size, rng)
    psi = sim.states(elements)
    big = sim.lift(psi)
    if np.any(povm.pi0):
        p_fail = np.einsum("...i,ij,...j->...", big.conj(), povm.pi0, big).real
        conclusive = rng.uniform(size=size) >= np.clip(p_fail, 0.0, 1.0)
    else:
        conclusive = np.ones(size, dtype=bool)
    idx = np.flatnonzero(conclusive)
    overlaps = np.empty(idx.size)
    proposals = 0
    if table is not None:
        theta = table.draw(rng.uniform(size=idx.size))
        overlaps[:] = 0.5 * (1.0 + np.cos(theta))
        proposals = idx.size
    else:
        pending = np.arange(idx.size)
        while pending.size:
            est = sim.sample_elements(pending.size, rng)
            rel, ovl = sim.relative_lift(est, psi[idx[pending]])
            dens = _density(povm, rel)
            proposals += pending.size
            if dens.max(initial=0.0) > bound * (1 + 1e-12):
                raise EnvelopeViolation(f"density {dens.max():.6g} exceeds rejection bound {bound:.6g}")
            accept = rng.uniform(size=pending.size) * bound < dens
            overlaps[pending[accept]] = ovl[accept]
            pending = pending[~accept]
    return overlaps, proposals


def run_simulation(cfg: SimulationConfig):
    sim = make_model(cfg.model, cfg.param)
    povm = cfg.povm if cfg.povm is not None else sim.povm(cfg.strategy)
    pair = sim.pair()
    sizes = [TRIAL_BLOCK] * (cfg.samples // TRIAL_BLOCK)
    if cfg.samples % TRIAL_BLOCK:
        sizes.append(cfg.samples % TRIAL_BLOCK)
    rngs = [make_rng(cfg.rng_seed, 1 + i) for i in range(len(sizes))]

    method = cfg.method
    if method == "auto":
        method = "inverse_cdf" if isinstance(sim, EquatorialSim) and sim.n <= INVERSE_CDF_MAX_N else "rejection"
    if method == "inverse_cdf" and not isinstance(sim, EquatorialSim):
        raise ValueError("inverse-CDF sampling is only available for the equatorial model")

    success_analytic = covariant.success_probability(povm, pair)
    if success_analytic <= 0:
        raise ZeroConclusive("the POVM never produces an estimate")
    table = None
    bound = None
    if method == "inverse_cdf":
        table = _InverseCDF(sim, povm)
    else:
        bound = cfg.rejection_bound or envelope(sim, povm, make_rng(cfg.rng_seed, 0))

    def job(i):
        return _run_block(sim, povm, bound, table, sizes[i], rngs[i])

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    overlaps = np.concatenate([p[0] for p in parts])
    proposals = sum(p[1] for p in parts)
    k = overlaps.size
    if k == 0:
        raise ZeroConclusive(f"no conclusive outcome in {cfg.samples} trials")
    fid = float(overlaps.mean())
    fid_err = float(overlaps.std(ddof=1) / np.sqrt(k)) if k > 1 else np.inf
    succ = k / cfg.samples
    succ_err = float(np.sqrt(succ * (1 - succ) / cfg.samples))
    return SimulationReport(
        empirical_fidelity=fid,
        fidelity_error=fid_err,
        empirical_success=succ,
        success_error=succ_err,
        samples_used=cfg.samples,
        conclusive=k,
        rejection_efficiency=k / proposals if proposals else 1.0,
        analytic_fidelity=covariant.conditional_fidelity(povm, pair),
        analytic_success=success_analytic,
    )
