"""End-to-end studies: method comparison, population diagnostics, transferability,
smooth vs irregular continuum transfer and landscape (Hessian) analysis."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from forge.continuum import ContinuumTrace, continuum_residual, integrate_schrodinger, interpolate_controls
from forge.graph import GraphInstance
from forge.io import ExperimentConfig, derive_seed
from forge.optimize.gradient import Problem, energy, energy_and_angle_gradient
from forge.optimize.methods import (
    OptimizationResult,
    OptimizerOptions,
    optimize_angles,
    run_crab_direct,
    run_fcrab_iterative,
    run_loginterp,
    run_method,
)
from forge.quantum import AngleSchedule
from forge.schedules import Basis
from forge.spectral import PopulationTrace, ScreenResult, digital_population_trace, hardness_screen

log = logging.getLogger(__name__)

LADDER_METHODS = ("interp", "loginterp", "fourier-a", "fourier-b", "fourier-c")


def options_from(config: ExperimentConfig) -> OptimizerOptions:
    return OptimizerOptions(gtol=config.gtol, ftol=config.ftol, max_iter=config.max_iter)


def screen(config: ExperimentConfig, progress=None) -> ScreenResult:
    return hardness_screen(config.pool, config.n, config.degree, config.gap_threshold, config.seed,
                           n_grid=config.n_grid, sector=config.sector, progress=progress)


def hard_set(result: ScreenResult, limit: int) -> list[GraphInstance]:
    """Hardest ``limit`` instances of a screen, smallest gap first."""
    return result.hard_instances()[:limit]


# --- method comparison ------------------------------------------------------


@dataclass
class MethodComparison:
    label: str
    results: dict[tuple[str, int], OptimizationResult]

    def rows(self) -> list[tuple]:
        return [(self.label, m, p, r.residual, 1.0 - r.fidelity, r.n_evaluations)
                for (m, p), r in sorted(self.results.items())]

    def residual(self, method: str, p: int) -> float:
        return self.results[(method, p)].residual

    def rank_agreement(self) -> float:
        """Spearman correlation of residual and infidelity over all (method, P) rows."""
        rows = self.rows()
        if len(rows) < 3:
            return float("nan")
        rho = spearmanr([r[3] for r in rows], [r[4] for r in rows]).statistic
        return float(rho)


def _ladder_start(p_list) -> int:
    p_min = min(p_list)
    return p_min if p_min >= 2 else 2


def compare_methods(instance: GraphInstance, p_list, methods, seed: int = 0, n_r: int = 10, nc_step: int = 10,
                    opts: OptimizerOptions | None = None, problem: Problem | None = None) -> MethodComparison:
    """Run each method at each depth and keep residual and infidelity of the same final state."""
    problem = problem or Problem(instance)
    p_list = sorted(set(int(p) for p in p_list))
    results: dict[tuple[str, int], OptimizationResult] = {}
    for method in methods:
        if method in LADDER_METHODS:
            s = derive_seed(seed, instance.label, method)
            if method == "loginterp":
                ladder = run_loginterp(problem, p_list[-1], s, p_start=_ladder_start(p_list), opts=opts)
            else:
                ladder = run_method(problem, method, p_list[-1], seed=s, n_r=n_r, nc_step=nc_step, opts=opts)
            for p in p_list:
                if p not in ladder:
                    raise ValueError(f"{method} ladder does not contain P={p}")
                results[(method, p)] = ladder[p]
        else:
            for p in p_list:
                s = derive_seed(seed, instance.label, method, p)
                out = run_method(problem, method, p, seed=s, n_r=n_r, nc_step=nc_step, opts=opts)
                results[(method, p)] = out[p]
        log.info("%s %s done", instance.label, method)
    return MethodComparison(instance.label, results)


# --- population diagnostics -------------------------------------------------


def sta_signature(trace: PopulationTrace) -> dict:
    """Population-inversion summary of a digital trace.

    ``inversions`` counts sign changes of ``p1 - p0`` (exact ties skipped);
    ``p1_exceeds_before_gap`` tells whether ``p1 > p0`` somewhere before the
    minimum-gap layer.
    """
    d = trace.p(1) - trace.p(0)
    signs = np.sign(d)
    signs = signs[signs != 0]
    inversions = int(np.count_nonzero(signs[1:] != signs[:-1]))
    marker = trace.min_gap_marker
    before = trace.m_grid < marker
    return {
        "inversions": inversions,
        "p1_exceeds_before_gap": bool(np.any(d[before] > 0)),
        "p0_final": float(trace.p(0)[-1]),
        "p1_final": float(trace.p(1)[-1]),
        "min_gap_layer": float(marker),
    }


# --- transferability --------------------------------------------------------


@dataclass
class TransferRow:
    target_label: str
    eps_native: float
    eps_trans: float
    eps_lo: float


@dataclass
class TransferReport:
    source_label: str
    method: str
    p: int
    rows: list[TransferRow] = field(default_factory=list)

    def _diffs(self, attr):
        return np.array([getattr(r, attr) - r.eps_native for r in self.rows])

    @staticmethod
    def _sem(x):
        return float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else float("nan")

    @property
    def delta_trans(self) -> float:
        return float(np.mean(self._diffs("eps_trans")))

    @property
    def delta_lo(self) -> float:
        return float(np.mean(self._diffs("eps_lo")))

    @property
    def sem_trans(self) -> float:
        return self._sem(self._diffs("eps_trans"))

    @property
    def sem_lo(self) -> float:
        return self._sem(self._diffs("eps_lo"))

    def to_dict(self) -> dict:
        return {
            "source_label": self.source_label,
            "method": self.method,
            "p": self.p,
            "rows": [vars(r) for r in self.rows],
            "delta_trans": self.delta_trans,
            "delta_lo": self.delta_lo,
            "sem_trans": self.sem_trans,
            "sem_lo": self.sem_lo,
        }


def native_result(instance: GraphInstance, method: str, p: int, seed: int, n_r: int = 10, nc_step: int = 10,
                  opts: OptimizerOptions | None = None, problem: Problem | None = None) -> OptimizationResult:
    problem = problem or Problem(instance)
    if method == "loginterp":
        start = p
        while start > 2 and start % 2 == 0:
            start //= 2
        return run_loginterp(problem, p, seed, p_start=start, opts=opts)[p]
    return run_method(problem, method, p, seed=seed, n_r=n_r, nc_step=nc_step, opts=opts)[p]


def run_transferability(source_result: OptimizationResult, target_instances, seed: int = 0,
                        native_results: dict | None = None, source_label: str = "",
                        opts: OptimizerOptions | None = None, n_r: int = 10, nc_step: int = 10) -> TransferReport:
    """Evaluate the source optimum on every target, then refine it locally.

    ``native_results`` maps target labels to their own optimum at the same depth;
    missing entries are computed with the source's method.
    """
    theta = source_result.final_angles
    p = theta.p
    method = source_result.method_tag
    report = TransferReport(source_label, method, p)
    for target in target_instances:
        problem = Problem(target)
        native = (native_results or {}).get(target.label)
        if native is None:
            native = native_result(target, method, p, derive_seed(seed, target.label, method, p), n_r, nc_step,
                                   opts, problem)
        eps_trans = problem.residual(energy(problem, theta))
        bres = optimize_angles(problem, theta, opts)
        eps_lo = problem.residual(energy(problem, AngleSchedule.from_vector(bres.x)))
        # line-search steps only ever decrease the energy; guard against roundoff in the recompute
        eps_lo = min(eps_lo, eps_trans)
        report.rows.append(TransferRow(target.label, native.residual, eps_trans, eps_lo))
    return report


# --- landscape --------------------------------------------------------------


@dataclass
class HessianReport:
    method_tag: str
    residual: float
    lambda_max: float
    lambda_min: float
    asymmetry: float
    mu: np.ndarray
    eps_mu: np.ndarray
    nu: np.ndarray
    eps_nu: np.ndarray

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in vars(self).items()}


@dataclass
class ConvexPath:
    tags: tuple[str, str]
    lam: np.ndarray
    eps: np.ndarray

    @property
    def barrier_ratio(self) -> float:
        ends = max(self.eps[0], self.eps[-1])
        return float(np.max(self.eps) / ends) if ends > 0 else float("inf")

    def to_dict(self) -> dict:
        return {"tags": list(self.tags), "lam": self.lam.tolist(), "eps": self.eps.tolist(),
                "barrier_ratio": self.barrier_ratio}


@dataclass
class LandscapeReport:
    hessians: list[HessianReport]
    paths: list[ConvexPath]

    def to_dict(self) -> dict:
        return {"hessians": [h.to_dict() for h in self.hessians], "paths": [c.to_dict() for c in self.paths]}


def fd_hessian(problem: Problem, theta: AngleSchedule, step: float = 1e-4) -> np.ndarray:
    """Central differences of the analytic gradient, one column per angle."""
    x0 = theta.as_vector()
    k = x0.size
    hess = np.empty((k, k))
    for i in range(k):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += step
        xm[i] -= step
        _, gp = energy_and_angle_gradient(problem, AngleSchedule.from_vector(xp))
        _, gm = energy_and_angle_gradient(problem, AngleSchedule.from_vector(xm))
        hess[:, i] = (gp - gm) / (2.0 * step)
    return hess


def _residual_along(problem, x0, direction, grid):
    return np.array([problem.residual(energy(problem, AngleSchedule.from_vector(x0 + t * direction)))
                     for t in grid])


def run_hessian_analysis(instance: GraphInstance, results, fd_step: float = 1e-4, scan_width: float = 0.5,
                         n_scan: int = 41, n_path: int = 51, problem: Problem | None = None) -> LandscapeReport:
    """Hessian extremes with 1-D scans along the extreme-curvature directions,
    plus residual profiles along convex combinations of every pair of minima."""
    results = list(results)
    if len(results) < 2:
        raise ValueError("landscape analysis needs at least two optimization results")
    problem = problem or Problem(instance)
    grid = np.linspace(-scan_width, scan_width, n_scan)
    hessians = []
    for res in results:
        hess = fd_hessian(problem, res.final_angles, fd_step)
        asym = float(np.max(np.abs(hess - hess.T)))
        w, v = np.linalg.eigh(0.5 * (hess + hess.T))
        x0 = res.final_angles.as_vector()
        hessians.append(HessianReport(
            res.method_tag, res.residual, float(w[-1]), float(w[0]), asym,
            grid, _residual_along(problem, x0, v[:, -1], grid),
            grid, _residual_along(problem, x0, v[:, 0], grid),
        ))
    lam = np.linspace(0.0, 1.0, n_path)
    paths = []
    for a, b in itertools.combinations(results, 2):
        if a.p != b.p:
            continue
        xa, xb = a.final_angles.as_vector(), b.final_angles.as_vector()
        eps = np.array([problem.residual(energy(problem, AngleSchedule.from_vector((1 - t) * xa + t * xb)))
                        for t in lam])
        eps[0], eps[-1] = a.residual, b.residual
        paths.append(ConvexPath((a.method_tag, b.method_tag), lam, eps))
    return LandscapeReport(hessians, paths)


# --- smoothness and continuum transfer -------------------------------------


def smoothness(schedule: AngleSchedule) -> dict:
    """Total quadratic variation of each angle family."""
    sx = float(np.sum(np.diff(schedule.theta_x) ** 2))
    sz = float(np.sum(np.diff(schedule.theta_z) ** 2))
    return {"x": sx, "z": sz, "total": sx + sz}


@dataclass
class SmoothIrregularReport:
    label: str
    smooth: OptimizationResult
    irregular: OptimizationResult
    continuum_smooth: float
    continuum_irregular: float
    digital_traces: dict[str, PopulationTrace]
    continuum_traces: dict[str, ContinuumTrace]

    @property
    def digital_ratio(self) -> float:
        return self.irregular.residual / self.smooth.residual

    @property
    def continuum_ratio(self) -> float:
        return self.continuum_irregular / self.continuum_smooth

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "p": self.smooth.p,
            "digital": {"smooth": self.smooth.residual, "irregular": self.irregular.residual},
            "continuum": {"smooth": self.continuum_smooth, "irregular": self.continuum_irregular},
            "smoothness": {"smooth": smoothness(self.smooth.final_angles),
                           "irregular": smoothness(self.irregular.final_angles)},
            "schedules": {"smooth": self.smooth.final_angles.to_dict(),
                          "irregular": self.irregular.final_angles.to_dict()},
        }


def run_smooth_vs_irregular(instance: GraphInstance, p: int = 64, seed: int = 0, smooth: OptimizationResult | None = None,
                            n_r: int = 10, nc_step: int = 10, dt_c: float = 0.1, k_levels: int = 3,
                            stride: int = 0, opts: OptimizerOptions | None = None,
                            problem: Problem | None = None) -> SmoothIrregularReport:
    """Smooth: iterative F-CRAB with Nc = P/2. Irregular: F-CRAB with Nc = P from
    the linear start (no warm start). Both are transferred to continuous time."""
    problem = problem or Problem(instance)
    if smooth is None:
        smooth = run_fcrab_iterative(problem, p, nc_max=p // 2, nc_step=nc_step, n_r=n_r,
                                     seed=derive_seed(seed, instance.label, "fcrab", p), opts=opts)
    irregular = run_crab_direct(problem, p, p, n_r, derive_seed(seed, instance.label, "fcrab-irregular", p),
                                Basis.FOURIER_SINE, opts, tag="fcrab-irregular")
    digital, cont, eps_c = {}, {}, {}
    for name, res in (("smooth", smooth), ("irregular", irregular)):
        controls = interpolate_controls(res.final_angles)
        eps_c[name] = continuum_residual(instance, controls, dt_c, problem.solution)
        digital[name] = digital_population_trace(instance, res.final_angles, k=k_levels)
        if stride > 0:
            _, cont[name] = integrate_schrodinger(instance, controls, dt_c, k_levels=2, stride=stride)
    return SmoothIrregularReport(instance.label, smooth, irregular, eps_c["smooth"], eps_c["irregular"],
                                 digital, cont)
