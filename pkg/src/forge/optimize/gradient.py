"""Adjoint (costate) gradient of the digitized variational energy."""

from __future__ import annotations

import numpy as np

from forge import kernels
from forge.graph import ExactSolution, GraphInstance, exact_extrema, problem_diagonal
from forge.quantum import AngleSchedule, initial_state
from forge.schedules import CrabCoefficients, crab_angle_jacobian, crab_angles


class Problem:
    """An instance together with its cached diagonal and exact extrema."""

    def __init__(self, instance: GraphInstance, solution: ExactSolution | None = None):
        self.instance = instance
        self.n = instance.n_vertices
        self.diag = problem_diagonal(instance)
        self.solution = solution if solution is not None else exact_extrema(instance)

    @classmethod
    def of(cls, obj) -> "Problem":
        return obj if isinstance(obj, cls) else cls(obj)

    def residual(self, energy: float) -> float:
        sol = self.solution
        return (energy - sol.e_min) / (sol.e_max - sol.e_min)


def energy(problem, schedule: AngleSchedule) -> float:
    problem = Problem.of(problem)
    n, diag = problem.n, problem.diag
    psi = initial_state(n)
    factors = np.empty_like(psi)
    for tx, tz in zip(schedule.theta_x, schedule.theta_z):
        kernels.phase_factors(float(tz), diag, factors)
        psi *= factors
        kernels.mixer_inplace(psi, float(tx), n)
    return float(np.dot(diag, psi.real ** 2 + psi.imag ** 2))


def energy_and_angle_gradient(problem, schedule: AngleSchedule) -> tuple[float, np.ndarray]:
    """Energy and ``dE/d(theta_x, theta_z)`` in O(P) gate applications.

    The forward sweep keeps the per-layer phase factors; the backward sweep
    rewinds the state and carries the costate
    ``lam_m = U_{m+1}^dag ... U_P^dag H_z psi_P``, giving
    ``dE/dtheta_x_m = 2 Im <lam_m|H_x|psi_m>`` and
    ``dE/dtheta_z_m = 2 Im <lam_{m-1}|H_z|psi_{m-1}>``.
    """
    problem = Problem.of(problem)
    n, diag = problem.n, problem.diag
    p = schedule.p
    if p < 1:
        raise ValueError("schedule must have at least one layer")
    tx, tz = schedule.theta_x, schedule.theta_z

    factors = np.empty((p, diag.size), dtype=np.complex128)
    psi = initial_state(n)
    for m in range(p):
        kernels.phase_factors(float(tz[m]), diag, factors[m])
        psi *= factors[m]
        kernels.mixer_inplace(psi, float(tx[m]), n)

    e = float(np.dot(diag, psi.real ** 2 + psi.imag ** 2))
    lam = diag * psi
    gx = np.empty(p)
    gz = np.empty(p)
    for m in range(p - 1, -1, -1):
        hx, hz = kernels.backward_layer(lam, psi, float(tx[m]), factors[m], diag, n)
        gx[m] = 2.0 * hx.imag
        gz[m] = 2.0 * hz.imag
    return e, np.concatenate([gx, gz])


def energy_and_coeff_gradient(problem, coeffs: CrabCoefficients) -> tuple[float, np.ndarray]:
    """Chain rule through the (constant) CRAB angle Jacobian."""
    e, g = energy_and_angle_gradient(problem, crab_angles(coeffs))
    return e, crab_angle_jacobian(coeffs).T @ g
