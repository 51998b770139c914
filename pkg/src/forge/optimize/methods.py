"""Schedule-optimization drivers: dQA-LIN, F-CRAB / C-CRAB, INTERP, LogINTERP
and the three FOURIER variants."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from forge.optimize.bfgs import BFGSResult, bfgs_minimize
from forge.optimize.gradient import Problem, energy, energy_and_angle_gradient
from forge.quantum import AngleSchedule, evolve, expectation_z, fidelity
from forge.schedules import (
    Basis,
    CrabCoefficients,
    FourierZhouCoefficients,
    crab_angle_jacobian,
    crab_angles,
    fourier_zhou_angles,
    fourier_zhou_jacobian,
    linear_dqa_angles,
    sample_noise,
)

log = logging.getLogger(__name__)

METHODS = ("lin", "fcrab", "ccrab", "interp", "loginterp", "fourier-a", "fourier-b", "fourier-c")


@dataclass
class OptimizerOptions:
    gtol: float = 1e-8
    ftol: float = 1e-12
    max_iter: int = 1000


@dataclass
class OptimizationResult:
    method_tag: str
    final_angles: AngleSchedule
    energy: float
    residual: float
    fidelity: float
    grad_norm: float
    n_evaluations: int
    trace: list[tuple[int, float]] = field(default_factory=list)
    final_coeffs: Any = None
    seed_ledger: list[int] = field(default_factory=list)
    degraded: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.final_angles.p

    def to_dict(self) -> dict:
        coeffs = self.final_coeffs
        if hasattr(coeffs, "to_dict"):
            coeffs = coeffs.to_dict()
        return {
            "method": self.method_tag,
            "p": self.p,
            "energy": self.energy,
            "residual": self.residual,
            "fidelity": self.fidelity,
            "grad_norm": self.grad_norm,
            "n_evaluations": self.n_evaluations,
            "degraded": self.degraded,
            "schedule": self.final_angles.to_dict(),
            "coeffs": coeffs,
            "seed_ledger": list(self.seed_ledger),
            "trace": [[int(i), float(e)] for i, e in self.trace],
            **self.extra,
        }


def _finalize(problem: Problem, tag, angles, bres: BFGSResult, coeffs=None, ledger=(), n_eval=None, extra=None):
    psi = evolve(problem.diag, angles)
    e = expectation_z(psi, problem.diag)
    return OptimizationResult(
        method_tag=tag,
        final_angles=angles,
        energy=e,
        residual=problem.residual(e),
        fidelity=fidelity(psi, problem.solution),
        grad_norm=bres.grad_norm,
        n_evaluations=bres.n_evaluations if n_eval is None else n_eval,
        trace=list(bres.trace),
        final_coeffs=coeffs,
        seed_ledger=list(ledger),
        degraded=bres.degraded,
        extra=extra or {},
    )


def _select(candidates):
    """Lowest energy, ties by gradient norm, then first seen."""
    return min(range(len(candidates)), key=lambda k: (candidates[k].fun, candidates[k].grad_norm, k))


def _draw_seed(rng: np.random.Generator, ledger: list) -> int:
    s = int(rng.integers(0, 2**63 - 1))
    ledger.append(s)
    return s


# --- objectives -------------------------------------------------------------


def angle_objective(problem: Problem):
    def fg(x):
        return energy_and_angle_gradient(problem, AngleSchedule.from_vector(x))
    return fg


def crab_objective(problem: Problem, template: CrabCoefficients):
    jac = crab_angle_jacobian(template)

    def fg(x):
        e, g = energy_and_angle_gradient(problem, AngleSchedule.from_vector(jac @ x))
        return e, jac.T @ g
    return fg


def zhou_objective(problem: Problem, p: int, nc: int):
    jac = fourier_zhou_jacobian(p, nc)

    def fg(x):
        e, g = energy_and_angle_gradient(problem, AngleSchedule.from_vector(jac @ x))
        return e, jac.T @ g
    return fg


def optimize_angles(problem, x0: AngleSchedule, opts: OptimizerOptions | None = None) -> BFGSResult:
    opts = opts or OptimizerOptions()
    return bfgs_minimize(angle_objective(Problem.of(problem)), x0.as_vector(),
                         gtol=opts.gtol, ftol=opts.ftol, max_iter=opts.max_iter)


def optimize_crab(problem, start: CrabCoefficients, opts: OptimizerOptions | None = None) -> BFGSResult:
    opts = opts or OptimizerOptions()
    return bfgs_minimize(crab_objective(Problem.of(problem), start), start.as_vector(),
                         gtol=opts.gtol, ftol=opts.ftol, max_iter=opts.max_iter)


# --- dQA-LIN ----------------------------------------------------------------


def run_linear(problem, p: int, dt_grid=None, opts: OptimizerOptions | None = None) -> OptimizationResult:
    """Linear-ramp dQA with the time step as the only variational parameter.

    A coarse scan over ``dt_grid`` picks the starting point (the 1-D landscape
    is oscillatory at large P), then BFGS polishes it.
    """
    problem = Problem.of(problem)
    if dt_grid is None:
        dt_grid = np.arange(0.05, 2.0001, 0.05)
    scan = [energy(problem, linear_dqa_angles(p, dt)) for dt in dt_grid]
    dt0 = float(dt_grid[int(np.argmin(scan))])
    start = CrabCoefficients.linear(p, [], Basis.CHEBYSHEV_SIGNOMIAL, c0=dt0)
    bres = optimize_crab(problem, start, opts)
    coeffs = start.with_vector(bres.x)
    return _finalize(problem, "lin", crab_angles(coeffs), bres, coeffs, extra={"dt": coeffs.c0})


# --- CRAB -------------------------------------------------------------------


def run_crab_direct(problem, p: int, nc: int, n_r: int = 10, seed=0, basis=Basis.CHEBYSHEV_SIGNOMIAL,
                    opts: OptimizerOptions | None = None, tag: str | None = None) -> OptimizationResult:
    """Best of ``n_r`` frequency draws, each optimized from the linear-dQA point
    (C0 = 1, all other coefficients zero)."""
    problem = Problem.of(problem)
    basis = Basis(basis)
    tag = tag or ("ccrab" if basis is Basis.CHEBYSHEV_SIGNOMIAL else "fcrab-direct")
    rng = np.random.default_rng(seed)
    ledger: list[int] = []
    draws = 1 if nc == 0 else n_r
    runs, starts = [], []
    for _ in range(draws):
        noise = sample_noise(nc, _draw_seed(rng, ledger))
        start = CrabCoefficients.linear(p, noise, basis)
        starts.append(start)
        runs.append(optimize_crab(problem, start, opts))
    k = _select(runs)
    coeffs = starts[k].with_vector(runs[k].x)
    total = sum(r.n_evaluations for r in runs)
    return _finalize(problem, tag, crab_angles(coeffs), runs[k], coeffs, ledger, n_eval=total)


def run_ccrab_direct(problem, p: int, nc: int, n_r: int = 10, seed=0, opts=None) -> OptimizationResult:
    return run_crab_direct(problem, p, nc, n_r, seed, Basis.CHEBYSHEV_SIGNOMIAL, opts, tag="ccrab")


def run_fcrab_iterative(problem, p: int, nc_max: int | None = None, nc_step: int = 10, n_r: int = 10, seed=0,
                        nc_start: int = 2, opts: OptimizerOptions | None = None,
                        basis=Basis.FOURIER_SINE) -> OptimizationResult:
    """Warm-started CRAB: grow the number of modes, keeping old frequencies fixed.

    Round one optimizes ``nc_start`` modes for ``n_r`` random frequency draws.
    Each later round appends up to ``nc_step`` zero-coefficient modes whose
    frequencies are drawn ``n_r`` times, warm-starting from the previous best.
    """
    problem = Problem.of(problem)
    if nc_max is None:
        nc_max = max(p // 2, 1)
    nc_start = min(nc_start, nc_max)
    rng = np.random.default_rng(seed)
    ledger: list[int] = []
    total = 0
    rounds = []

    runs, starts = [], []
    for _ in range(n_r):
        start = CrabCoefficients.linear(p, sample_noise(nc_start, _draw_seed(rng, ledger)), basis)
        starts.append(start)
        runs.append(optimize_crab(problem, start, opts))
    total += sum(r.n_evaluations for r in runs)
    k = _select(runs)
    best, best_run = starts[k].with_vector(runs[k].x), runs[k]
    rounds.append({"nc": best.nc, "energy": best_run.fun})
    trace = list(best_run.trace)

    while best.nc < nc_max:
        extra_modes = min(nc_step, nc_max - best.nc)
        runs, starts = [], []
        for _ in range(n_r):
            start = best.extended(sample_noise(extra_modes, _draw_seed(rng, ledger)))
            starts.append(start)
            runs.append(optimize_crab(problem, start, opts))
        total += sum(r.n_evaluations for r in runs)
        k = _select(runs)
        best, best_run = starts[k].with_vector(runs[k].x), runs[k]
        rounds.append({"nc": best.nc, "energy": best_run.fun})
        offset = trace[-1][0] + 1 if trace else 0
        trace.extend((offset + i, e) for i, e in best_run.trace)
        log.debug("fcrab p=%d nc=%d energy=%.10f", p, best.nc, best_run.fun)

    res = _finalize(problem, "fcrab", crab_angles(best), best_run, best, ledger, n_eval=total,
                    extra={"rounds": rounds})
    res.trace = trace
    return res


# --- QAOA interpolation schemes -------------------------------------------


def interp_seed(theta: np.ndarray) -> np.ndarray:
    """INTERP guess for depth P+1 from an optimum at depth P."""
    theta = np.asarray(theta, dtype=np.float64)
    p = theta.size
    padded = np.concatenate([[0.0], theta, [0.0]])
    m = np.arange(1, p + 2)
    return (m - 1) / p * padded[m - 1] + (p - m + 1) / p * padded[m]


def loginterp_seed_start_zero(theta: np.ndarray) -> np.ndarray:
    """Doubling guess for angles that vanish at the start (theta_0 = 0)."""
    theta = np.asarray(theta, dtype=np.float64)
    prev = np.concatenate([[0.0], theta[:-1]])
    out = np.empty(2 * theta.size)
    out[1::2] = theta
    out[0::2] = 0.5 * (prev + theta)
    return out


def loginterp_seed_end_zero(theta: np.ndarray) -> np.ndarray:
    """Doubling guess for angles that vanish at the end (theta_{P+1} = 0)."""
    theta = np.asarray(theta, dtype=np.float64)
    nxt = np.concatenate([theta[1:], [0.0]])
    out = np.empty(2 * theta.size)
    out[0::2] = theta
    out[1::2] = 0.5 * (theta + nxt)
    return out


def _angles_result(problem, tag, bres, seed_energy=None, ledger=()):
    angles = AngleSchedule.from_vector(bres.x)
    extra = {} if seed_energy is None else {"seed_energy": seed_energy}
    return _finalize(problem, tag, angles, bres, None, ledger, extra=extra)


def run_interp(problem, p_max: int, seed=0, p_start: int = 2,
               opts: OptimizerOptions | None = None) -> dict[int, OptimizationResult]:
    problem = Problem.of(problem)
    start = linear_dqa_angles(p_start, 1.0)
    bres = optimize_angles(problem, start, opts)
    results = {p_start: _angles_result(problem, "interp", bres, energy(problem, start))}
    theta = AngleSchedule.from_vector(bres.x)
    for p in range(p_start + 1, p_max + 1):
        guess = AngleSchedule(interp_seed(theta.theta_x), interp_seed(theta.theta_z))
        bres = optimize_angles(problem, guess, opts)
        results[p] = _angles_result(problem, "interp", bres, energy(problem, guess))
        theta = AngleSchedule.from_vector(bres.x)
    return results


def run_loginterp(problem, p_max: int, seed=0, p_start: int = 2,
                  opts: OptimizerOptions | None = None) -> dict[int, OptimizationResult]:
    problem = Problem.of(problem)
    ladder = [p_start]
    while ladder[-1] < p_max:
        ladder.append(2 * ladder[-1])
    if ladder[-1] != p_max:
        raise ValueError(f"p_max={p_max} is not on the doubling ladder from {p_start}")
    start = linear_dqa_angles(p_start, 1.0)
    bres = optimize_angles(problem, start, opts)
    results = {p_start: _angles_result(problem, "loginterp", bres, energy(problem, start))}
    theta = AngleSchedule.from_vector(bres.x)
    for p in ladder[1:]:
        guess = AngleSchedule(loginterp_seed_end_zero(theta.theta_x), loginterp_seed_start_zero(theta.theta_z))
        bres = optimize_angles(problem, guess, opts)
        results[p] = _angles_result(problem, "loginterp", bres, energy(problem, guess))
        theta = AngleSchedule.from_vector(bres.x)
    return results


# --- FOURIER ------------------------------------------------------------------


def run_fourier_zhou(problem, p_max: int, variant: str = "b", nc_fixed: int | None = None, r: int = 10,
                     alpha: float = 0.6, seed=0, opts: OptimizerOptions | None = None,
                     c_init: float = 0.5 * np.sqrt(2.0)) -> dict[int, OptimizationResult]:
    """FOURIER heuristic with the star (padded) and best (perturbed) lineages.

    ``variant`` ``'a'``: Nc = P, padding only. ``'b'``: Nc = P plus ``r``
    perturbed restarts from the best lineage. ``'c'``: as ``'b'`` until
    P = ``nc_fixed``, then Nc stays fixed.
    """
    problem = Problem.of(problem)
    if variant not in ("a", "b", "c"):
        raise ValueError(f"unknown FOURIER variant {variant!r}")
    if variant == "c" and not nc_fixed:
        raise ValueError("variant c needs nc_fixed")
    if r < 0 or alpha < 0:
        raise ValueError("r and alpha must be non-negative")
    rng = np.random.default_rng(seed)
    ledger: list[int] = []
    tag = f"fourier-{variant}"

    def optimize(p, vec):
        nc = vec.size // 2
        return bfgs_minimize(zhou_objective(problem, p, nc), vec, **_opts_kw(opts))

    def pad(vec, nc_new):
        nc = vec.size // 2
        if nc_new == nc:
            return vec.copy()
        z = np.zeros(nc_new - nc)
        return np.concatenate([vec[:nc], z, vec[nc:], z])

    def result(p, bres, extra):
        coeffs = FourierZhouCoefficients(bres.x[: bres.x.size // 2], bres.x[bres.x.size // 2:], p)
        return _finalize(problem, tag, fourier_zhou_angles(coeffs), bres, coeffs, list(ledger), extra=extra)

    first = optimize(1, np.array([c_init, c_init]))
    star = best = first.x
    star_run = best_run = first
    results = {1: result(1, first, {"star": first.x.tolist(), "best": first.x.tolist()})}
    for p in range(2, p_max + 1):
        nc_prev = star.size // 2
        nc_new = nc_prev + 1 if (variant != "c" or nc_prev < nc_fixed) else nc_prev
        star_run = optimize(p, pad(star, nc_new))
        candidates = [star_run]
        if variant in ("b", "c"):
            sigma = np.abs(star)  # std of the gaussian kick: |C*_n|
            sub = np.random.default_rng(_draw_seed(rng, ledger))
            kicks = [np.zeros_like(best)] + [alpha * sub.normal(0.0, 1.0, best.size) * sigma for _ in range(r)]
            for kick in kicks:
                candidates.append(optimize(p, pad(best + kick, nc_new)))
        k = _select(candidates)
        best_run = candidates[k]
        star, best = star_run.x, best_run.x
        extra = {"star": star.tolist(), "best": best.tolist(), "star_energy": star_run.fun}
        results[p] = result(p, best_run, extra)
    return results


def _opts_kw(opts: OptimizerOptions | None) -> dict:
    opts = opts or OptimizerOptions()
    return {"gtol": opts.gtol, "ftol": opts.ftol, "max_iter": opts.max_iter}


def run_method(problem, method: str, p_max: int, seed=0, nc: int | None = None, n_r: int = 10,
               alpha: float = 0.6, r: int = 10, nc_step: int = 10,
               opts: OptimizerOptions | None = None) -> dict[int, OptimizationResult]:
    """Dispatch by method tag. Per-depth methods return a one-entry dict."""
    if method == "lin":
        out = {p_max: run_linear(problem, p_max, opts=opts)}
    elif method == "fcrab":
        out = {p_max: run_fcrab_iterative(problem, p_max, nc_max=nc, nc_step=nc_step, n_r=n_r, seed=seed, opts=opts)}
    elif method == "ccrab":
        out = {p_max: run_ccrab_direct(problem, p_max, nc if nc is not None else p_max // 2, n_r, seed, opts)}
    elif method == "interp":
        out = run_interp(problem, p_max, seed, opts=opts)
    elif method == "loginterp":
        out = run_loginterp(problem, p_max, seed, opts=opts)
    elif method.startswith("fourier-"):
        out = run_fourier_zhou(problem, p_max, method[-1], nc_fixed=nc, r=r, alpha=alpha, seed=seed, opts=opts)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return out
