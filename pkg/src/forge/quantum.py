"""Dense state vectors and the digitized (first-order Trotter) evolution.

States are plain complex128 numpy arrays of length ``2**n``; index ``b`` is the
computational basis state whose bit ``k`` is the value of qubit ``k``.
The driver is ``H_x = -sum_j X_j`` and the problem Hamiltonian ``H_z`` is the
diagonal returned by :func:`forge.graph.problem_diagonal`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from forge import kernels
from forge.graph import MAX_BRUTE_FORCE_N, ExactSolution, GraphInstance, problem_diagonal


@dataclass(frozen=True)
class AngleSchedule:
    """Per-layer mixer angles ``theta_x`` and problem angles ``theta_z``."""

    theta_x: np.ndarray
    theta_z: np.ndarray

    def __post_init__(self):
        tx = np.array(self.theta_x, dtype=np.float64).ravel()
        tz = np.array(self.theta_z, dtype=np.float64).ravel()
        if tx.shape != tz.shape:
            raise ValueError(f"theta_x has {tx.size} entries but theta_z has {tz.size}")
        if not (np.all(np.isfinite(tx)) and np.all(np.isfinite(tz))):
            raise ValueError("non-finite angle")
        tx.flags.writeable = False
        tz.flags.writeable = False
        object.__setattr__(self, "theta_x", tx)
        object.__setattr__(self, "theta_z", tz)

    @property
    def p(self) -> int:
        return self.theta_x.size

    def as_vector(self) -> np.ndarray:
        """``(theta_x_1..P, theta_z_1..P)`` as one flat array."""
        return np.concatenate([self.theta_x, self.theta_z])

    @classmethod
    def from_vector(cls, vec) -> "AngleSchedule":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size % 2:
            raise ValueError("angle vector must have even length")
        p = vec.size // 2
        return cls(vec[:p], vec[p:])

    def to_dict(self) -> dict:
        return {"p": self.p, "theta_x": self.theta_x.tolist(), "theta_z": self.theta_z.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "AngleSchedule":
        sched = cls(data["theta_x"], data["theta_z"])
        if "p" in data and int(data["p"]) != sched.p:
            raise ValueError(f"p={data['p']} does not match {sched.p} angles")
        return sched

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "AngleSchedule":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _n_qubits(state: np.ndarray) -> int:
    n = state.size.bit_length() - 1
    if state.ndim != 1 or (1 << n) != state.size:
        raise ValueError(f"state length {state.size} is not a power of two")
    return n


def initial_state(n: int) -> np.ndarray:
    """Uniform superposition, the ground state of H_x."""
    if not 1 <= n <= MAX_BRUTE_FORCE_N:
        raise ValueError(f"n={n} outside [1, {MAX_BRUTE_FORCE_N}]")
    return np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)


def apply_phase(state: np.ndarray, theta_z: float, diag: np.ndarray, inplace: bool = False) -> np.ndarray:
    """``exp(-i theta_z H_z) state``."""
    if state.shape != diag.shape:
        raise ValueError(f"state length {state.size} does not match diagonal length {diag.size}")
    out = state if inplace else state.copy()
    factors = np.empty_like(out)
    kernels.phase_factors(float(theta_z), diag, factors)
    out *= factors
    return out


def apply_mixer(state: np.ndarray, theta_x: float, inplace: bool = False) -> np.ndarray:
    """``exp(-i theta_x H_x) state = prod_j exp(+i theta_x X_j) state``."""
    n = _n_qubits(state)
    out = state if inplace else np.ascontiguousarray(state, dtype=np.complex128).copy()
    kernels.mixer_inplace(out, float(theta_x), n)
    return out


def apply_hx(state: np.ndarray) -> np.ndarray:
    out = np.empty_like(state)
    kernels.hx_apply(state, _n_qubits(state), out)
    return out


def evolve(diag: np.ndarray, schedule: AngleSchedule, record_intermediate: bool = False):
    """Run the digitized circuit on the uniform superposition.

    Returns the final state, or the list ``[psi_0, ..., psi_P]`` when
    ``record_intermediate`` is set.
    """
    n = _n_qubits(diag)
    psi = initial_state(n)
    states = [psi.copy()] if record_intermediate else None
    factors = np.empty_like(psi)
    for tx, tz in zip(schedule.theta_x, schedule.theta_z):
        kernels.phase_factors(float(tz), diag, factors)
        psi *= factors
        kernels.mixer_inplace(psi, float(tx), n)
        if record_intermediate:
            states.append(psi.copy())
    return states if record_intermediate else psi


def evolve_digitized(instance: GraphInstance, schedule: AngleSchedule, record_intermediate: bool = False):
    if schedule.p < 1:
        raise ValueError("schedule must have at least one layer")
    return evolve(problem_diagonal(instance), schedule, record_intermediate)


def expectation_z(state: np.ndarray, diag: np.ndarray) -> float:
    if state.shape != diag.shape:
        raise ValueError(f"state length {state.size} does not match diagonal length {diag.size}")
    return float(np.dot(diag, state.real ** 2 + state.imag ** 2))


def expectation_x(state: np.ndarray) -> float:
    return float(np.vdot(state, apply_hx(state)).real)


def fidelity(state: np.ndarray, sol: ExactSolution) -> float:
    """Population of the (possibly degenerate) ground manifold."""
    amps = state[sol.ground_indices]
    return float(np.sum(amps.real ** 2 + amps.imag ** 2))


def parity_flip(state: np.ndarray) -> np.ndarray:
    """Apply the global spin flip prod_j X_j (index b -> b XOR all-ones)."""
    return state[::-1].copy()
