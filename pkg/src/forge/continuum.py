"""Continuous-time transfer of a digitized schedule.

The layer angles become piecewise-linear controls on knots ``t_m = (m - 1/2) tau / P``
with ``tau = sum_m (theta^x_m + theta^z_m)``. The generator is

    H(t) = r(t) [(1 - s(t)) H_x + s(t) H_z],   s = theta^z / (theta^x + theta^z),

with rate ``r(t) = (P / tau) (theta^x(t) + theta^z(t))`` (``rate="angles"``), so the
time integrals of both coefficients reproduce the angle sums, or ``r = 1``
(``rate="unit"``). Each step applies ``exp(-i H(t + dt/2) dt)`` through a
truncated Taylor series on scaled substeps.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from forge import kernels
from forge.graph import GraphInstance, exact_extrema, problem_diagonal, residual_energy
from forge.quantum import AngleSchedule, initial_state
from forge.spectral import Sector, SectorOperators, clustered_populations, lowest_eigenpairs

TAYLOR_TOL = 1e-14
MAX_TERMS = 40
MAX_BISECTIONS = 6
RATES = ("angles", "unit")


class DegenerateScheduleError(ValueError):
    pass


class TaylorConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ContinuumControls:
    tau: float
    knots_t: np.ndarray
    knots_x: np.ndarray
    knots_z: np.ndarray
    rate: str = "angles"

    @property
    def p(self) -> int:
        return self.knots_t.size

    def theta(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Interpolated ``(theta^x(t), theta^z(t))``; flat beyond the end knots."""
        return (np.interp(t, self.knots_t, self.knots_x), np.interp(t, self.knots_t, self.knots_z))

    def s_of_t(self, t):
        tx, tz = self.theta(t)
        return tz / (tx + tz)

    def coefficients(self, t: float) -> tuple[float, float]:
        """``(c_x, c_z)`` with ``H(t) = c_x H_x + c_z H_z``."""
        tx, tz = (float(v) for v in self.theta(t))
        total = tx + tz
        if total <= 0.0:
            raise DegenerateScheduleError(f"theta_x + theta_z = {total} at t={t}")
        if self.rate == "angles":
            scale = self.p / self.tau
            return scale * tx, scale * tz
        return tx / total, tz / total

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "rate": self.rate,
            "knots": [[float(t), float(x), float(z)] for t, x, z in zip(self.knots_t, self.knots_x, self.knots_z)],
            "s_of_t": [float(v) for v in self.s_of_t(self.knots_t)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ContinuumControls":
        k = np.asarray(data["knots"], dtype=np.float64)
        return cls(float(data["tau"]), k[:, 0], k[:, 1], k[:, 2], data.get("rate", "angles"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def interpolate_controls(schedule: AngleSchedule, rate: str = "angles") -> ContinuumControls:
    if schedule.p < 2:
        raise ValueError("need at least two layers to interpolate")
    if rate not in RATES:
        raise ValueError(f"rate must be one of {RATES}")
    tx, tz = schedule.theta_x, schedule.theta_z
    if np.any(tx + tz <= 0.0):
        # piecewise-linear interpolation of a positive sequence stays positive, so knots decide
        raise DegenerateScheduleError("theta_x + theta_z must be positive at every layer")
    tau = float(np.sum(tx + tz))
    p = schedule.p
    t = (np.arange(1, p + 1) - 0.5) * tau / p
    return ContinuumControls(tau, t, tx.copy(), tz.copy(), rate)


def taylor_step(psi: np.ndarray, cx: float, cz: float, diag: np.ndarray, n: int, dt: float,
                norm_bound: float) -> np.ndarray:
    """``exp(-i (cx H_x + cz H_z) dt) psi`` by truncated Taylor series on substeps
    short enough that the scaled generator norm is at most one."""
    substeps = max(1, math.ceil(abs(dt) * norm_bound))
    for attempt in range(MAX_BISECTIONS + 1):
        try:
            return _taylor_substeps(psi, cx, cz, diag, n, dt, substeps)
        except TaylorConvergenceError:
            substeps *= 2
    raise TaylorConvergenceError(f"Taylor series failed to converge after {MAX_BISECTIONS} bisections")


def _taylor_substeps(psi, cx, cz, diag, n, dt, substeps):
    h = dt / substeps
    out = psi.copy()
    term = np.empty_like(psi)
    work = np.empty_like(psi)
    for _ in range(substeps):
        term[:] = out
        acc = out.copy()
        for k in range(1, MAX_TERMS + 1):
            kernels.hamiltonian_apply(term, n, cx, cz, diag, work)
            np.multiply(work, -1j * h / k, out=term)
            acc += term
            if np.linalg.norm(term) < TAYLOR_TOL:
                break
        else:
            raise TaylorConvergenceError("term budget exhausted")
        out = acc
    return out


@dataclass
class ContinuumTrace:
    t: np.ndarray
    populations: np.ndarray
    energy: np.ndarray
    norm_defect: np.ndarray

    def write_csv(self, path) -> None:
        k = self.populations.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"p{j}" for j in range(k)] + ["energy", "norm_defect"])
            for i in range(self.t.size):
                w.writerow([repr(float(self.t[i]))] + [repr(float(x)) for x in self.populations[i]]
                           + [repr(float(self.energy[i])), repr(float(self.norm_defect[i]))])


def time_grid(controls: ContinuumControls, dt_c: float) -> np.ndarray:
    """Step boundaries: every knot is a boundary and each segment between
    knots gets equal steps no longer than ``dt_c``, so the controls are linear
    within every step and the midpoint rule keeps its second order."""
    if controls.tau <= 0:
        return np.array([0.0])
    edges = np.unique(np.clip(np.concatenate([[0.0], controls.knots_t, [controls.tau]]), 0.0, controls.tau))
    pieces = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        steps = max(1, math.ceil((b - a) / dt_c - 1e-12))
        pieces.append(np.linspace(a, b, steps + 1)[1:])
    return np.concatenate(pieces)


def integrate_schrodinger(instance: GraphInstance, controls: ContinuumControls, dt_c: float = 0.1,
                          k_levels: int = 2, stride: int = 0, psi0: np.ndarray | None = None,
                          sector=Sector.PARITY_EVEN) -> tuple[np.ndarray, ContinuumTrace | None]:
    """Integrate the controlled Schrödinger equation from ``|+>^n`` to ``tau``.

    With ``stride > 0`` populations of the ``k_levels`` lowest eigenstates of
    the instantaneous annealing Hamiltonian ``(1 - s) H_x + s H_z`` are sampled
    every ``stride`` steps (and at the end).
    """
    if dt_c <= 0:
        raise ValueError("dt_c must be positive")
    n = instance.n_vertices
    diag = problem_diagonal(instance)
    psi = initial_state(n) if psi0 is None else np.array(psi0, dtype=np.complex128)
    max_diag = float(np.max(np.abs(diag)))
    grid = time_grid(controls, dt_c)
    ops = SectorOperators(instance, sector, diag=diag) if stride > 0 else None
    rows_t, rows_p, rows_e, rows_d = [], [], [], []

    def sample(t):
        s = float(controls.s_of_t(t))
        w, v = lowest_eigenpairs(ops.annealing(s), k_levels + 2, dense=ops.dense)
        pops, _ = clustered_populations(w, v, ops.project(psi), k_levels)
        rows_t.append(t)
        rows_p.append(pops)
        rows_e.append(float(np.real(np.vdot(psi, diag * psi))))
        rows_d.append(abs(float(np.linalg.norm(psi)) - 1.0))

    if ops is not None:
        sample(0.0)
    for i in range(grid.size - 1):
        t0, t1 = grid[i], grid[i + 1]
        cx, cz = controls.coefficients(0.5 * (t0 + t1))
        psi = taylor_step(psi, cx, cz, diag, n, t1 - t0, abs(cx) * n + abs(cz) * max_diag)
        if ops is not None and ((i + 1) % stride == 0 or i + 1 == grid.size - 1):
            sample(float(t1))
    trace = None
    if ops is not None:
        trace = ContinuumTrace(np.array(rows_t), np.array(rows_p), np.array(rows_e), np.array(rows_d))
    return psi, trace


def continuum_energy(instance: GraphInstance, controls: ContinuumControls, dt_c: float = 0.1) -> float:
    psi, _ = integrate_schrodinger(instance, controls, dt_c)
    return float(np.real(np.vdot(psi, problem_diagonal(instance) * psi)))


def continuum_residual(instance: GraphInstance, controls: ContinuumControls, dt_c: float = 0.1,
                       solution=None) -> float:
    sol = solution or exact_extrema(instance)
    return residual_energy(continuum_energy(instance, controls, dt_c), sol)
