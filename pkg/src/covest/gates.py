"""Named verification gates run by ``covest verify``.

Each gate returns a :class:`GateResult`; ``perturb`` adds a small offset to
the gate's key quantity so the failure path can be exercised.
"""

from dataclasses import dataclass, replace
from typing import Callable, Dict

import numpy as np

from . import conjugate as cj
from . import covariant, equatorial as eq, haar, qmat
from .simulate import DETERMINISTIC, PROBABILISTIC, SimulationConfig, run_simulation


@dataclass(frozen=True)
class GateResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class Options:
    seed: int = 0
    quick: bool = False
    d_max: int = 64
    threads: int = 1
    perturb: float = 0.0


def _closed_forms(opt):
    worst = 0.0
    for d in range(2, 11):
        f = covariant.optimal_fidelity(cj.ConjugateModel(d).pair()).f_max + opt.perturb
        fdet = float(np.vdot(cj.deterministic_vector(d), cj.analytic_R(d) @ cj.deterministic_vector(d)).real)
        worst = max(worst, abs(f - cj.probabilistic_fidelity(d)), abs(fdet - cj.deterministic_fidelity(d)))
    return worst <= 1e-10, f"max deviation {worst:.2e} over d=2..10"


def _spectrum(opt):
    for d in range(2, 11):
        m = covariant.build_M(cj.ConjugateModel(d).pair())
        got = cj.cluster_eigenvalues(qmat.eigvalsh(m) + opt.perturb * np.arange(d * d))
        want = sorted((e.value, e.multiplicity) for e in cj.spectrum_RAinv(d))
        if len(got) != len(want) or any(
            g[1] != w[1] or abs(g[0] - w[0]) > 1e-10 for g, w in zip(got, want)
        ):
            return False, f"spectrum mismatch at d={d}"
    return True, "four-eigenvalue structure holds for d=2..10"


def _r_construction(opt):
    worst = max(
        np.abs(cj.analytic_R(d) - cj.construct_R_from_projector(d)).max() for d in range(2, 7)
    ) + opt.perturb
    return worst <= 1e-12, f"max element deviation {worst:.2e} over d=2..6"


def _certificate(opt):
    certs = [cj.certify_deterministic(d, check=False) for d in range(2, opt.d_max + 1)]
    if opt.perturb:
        certs = [replace(c, extremal_residual=c.extremal_residual + opt.perturb) for c in certs]
    bad = [(c.d, c.failures()) for c in certs if c.failures()]
    scaled = [c.trace_K * c.d * (c.d + 1) * (c.d + 2) for c in certs]
    growing = all(b > a for a, b in zip(scaled, scaled[1:]))
    if bad:
        d, why = bad[0]
        return False, f"d={d}: {why[0][0]}: {why[0][1]}"
    if not growing:
        return False, "d(d+1)(d+2) Tr K is not increasing"
    return True, f"certificate holds for d=2..{opt.d_max}; min Tr K = {min(c.trace_K for c in certs):.3e}"


def _mc_operators(opt):
    n = 10**6
    worst = 0.0
    for d in (2, 3):
        model = cj.ConjugateModel(d)
        for build, exact in ((haar.mc_operator_A, cj.analytic_A(d)), (haar.mc_operator_R, cj.analytic_R(d))):
            g = haar.GroupSampler.haar(d, opt.seed)
            args = (model.lift, g, model.fiducial) + (() if build is haar.mc_operator_A else (model.fiducial,))
            est = build(*args, n, workers=opt.threads)
            worst = max(worst, est.within(exact + opt.perturb))
    for n_copies in (2, 3):
        model = eq.EquatorialModel(n_copies)
        for build, exact in ((haar.mc_operator_A, eq.equatorial_A(n_copies)), (haar.mc_operator_R, eq.equatorial_R(n_copies))):
            g = haar.GroupSampler.phase(opt.seed)
            args = (model.lift, g, model.seed_state) + (() if build is haar.mc_operator_A else (model.fiducial,))
            est = build(*args, n, workers=opt.threads)
            worst = max(worst, est.within(exact + opt.perturb))
    return worst <= 3.0, f"largest deviation {worst:.2f} standard errors"


def _equatorial_spectral(opt):
    dev = max(abs(t.closed_form - t.sturm) for t in map(eq.tridiag_max_eigenvalue, range(1, 101)))
    dev += opt.perturb
    gaps = [eq.fidelity_gap(n) for n in range(1, 101)]
    ok = dev <= 1e-12 and abs(gaps[0]) <= 1e-12 and abs(gaps[1]) <= 1e-12 and min(gaps[2:]) > 1e-6
    return ok, f"Sturm deviation {dev:.2e}; min gap for N>=3 {min(gaps[2:]):.3e}"


def _asymptotics(opt):
    rep = eq.asymptotic_check(200)
    coeff = rep.prob_coefficient + opt.perturb * 100
    ok = (abs(coeff / (np.pi**2 / 4) - 1) <= 0.01 and abs(rep.det_exponent + 1) <= 0.1
          and rep.success_slope < 0 and rep.success_r2 > 0.99)
    return ok, (f"(1-F)(N+2)^2={coeff:.6f}, det exponent {rep.det_exponent:.4f}, "
                f"log P slope {rep.success_slope:.4f} (R^2={rep.success_r2:.4f})")


def _simulation(opt):
    samples = 20_000 if opt.quick else 100_000
    runs = [("conjugate", d, s) for d in (2, 3) for s in (DETERMINISTIC, PROBABILISTIC)]
    runs += [("equatorial", n, PROBABILISTIC) for n in (3, 5)]
    worst = 0.0
    for model, param, strategy in runs:
        rep = run_simulation(SimulationConfig(model, param, strategy, samples, opt.seed, workers=opt.threads))
        worst = max(worst, rep.fidelity_sigmas() + opt.perturb * 1e4, rep.success_sigmas())
        if strategy == DETERMINISTIC and rep.empirical_success != 1.0:
            return False, f"{model}({param}) deterministic success {rep.empirical_success}"
    return worst <= 3.0, f"largest deviation {worst:.2f} sigma over {len(runs)} runs of {samples}"


def _figures(opt):
    rows = [(n, eq.fidelity_gap(n), eq.success_probability_eq(n)) for n in range(1, 31)]
    gap = np.array([r[1] for r in rows]) + opt.perturb
    p = np.array([r[2] for r in rows])
    peak = int(np.argmax(gap))
    unimodal = all(np.diff(gap[2:peak + 1]) > 0) and all(np.diff(gap[peak:]) < 0)
    ok = (np.all(np.abs(gap[:2]) <= 1e-12) and np.all(gap[2:] > 0) and 2 < peak < 29 and unimodal
          and np.all(np.diff(p[1:]) < 0))
    return ok, f"Delta F peaks at N={rows[peak][0]}; P decreasing from N=2"


GATES: Dict[str, Callable] = {
    "closed-forms": _closed_forms,
    "spectrum": _spectrum,
    "r-construction": _r_construction,
    "certificate": _certificate,
    "mc-operators": _mc_operators,
    "equatorial-spectral": _equatorial_spectral,
    "asymptotics": _asymptotics,
    "simulation": _simulation,
    "figures": _figures,
}
HEAVY = {"mc-operators"}


def run_gates(names=None, opt=Options(), inject=None):
    names = list(GATES) if not names else list(names)
    unknown = [n for n in names if n not in GATES]
    if unknown:
        raise KeyError(f"unknown gate(s): {', '.join(unknown)}")
    out = []
    for name in names:
        if opt.quick and name in HEAVY:
            out.append(GateResult(name, True, "skipped (--quick)"))
            continue
        gate_opt = Options(opt.seed, opt.quick, opt.d_max, opt.threads, 1e-3 if name == inject else 0.0)
        ok, detail = GATES[name](gate_opt)
        out.append(GateResult(name, bool(ok), detail))
    return out
