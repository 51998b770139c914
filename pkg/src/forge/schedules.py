"""Schedule parameterizations: linear dQA, CRAB (Fourier / Chebyshev) and the
fixed-frequency Fourier ansatz, with their (constant) angle Jacobians."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from forge.quantum import AngleSchedule


class Basis(str, enum.Enum):
    FOURIER_SINE = "fourier_sine"
    CHEBYSHEV_SIGNOMIAL = "chebyshev_signomial"


def basis_value(basis: Basis, n: int, r_n: float, t: float, tau: float) -> float:
    if n < 1:
        raise ValueError("mode index starts at 1")
    if not 0.0 <= t <= tau:
        raise ValueError(f"t={t} outside [0, {tau}]")
    return float(basis_matrix(basis, np.array([r_n]), np.array([t]), tau, first_mode=n)[0, 0])


def basis_matrix(basis: Basis, noise: np.ndarray, t: np.ndarray, tau: float, first_mode: int = 1) -> np.ndarray:
    """``F[m, k] = f_{first_mode + k}(t_m)`` with randomized frequencies ``noise[k]``."""
    basis = Basis(basis)
    noise = np.asarray(noise, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    modes = np.arange(first_mode, first_mode + noise.size)
    freq = modes * (1.0 + noise)
    if basis is Basis.FOURIER_SINE:
        return np.sin(np.outer(t, np.pi * freq / tau))
    x = np.clip(t / tau, -1.0, 1.0)
    return np.cos(np.outer(np.arccos(x), freq))


def layer_ramps(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear envelopes ``((P - (m - 1/2)) / P, (m - 1/2) / P)`` for m = 1..P."""
    mid = np.arange(1, p + 1) - 0.5
    return (p - mid) / p, mid / p


def sample_noise(nc: int, seed) -> np.ndarray:
    """Frequency noise r_n, i.i.d. uniform on [-1/2, 1/2]."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.uniform(-0.5, 0.5, size=nc)


@dataclass(frozen=True)
class CrabCoefficients:
    c0: float
    cx: np.ndarray
    cz: np.ndarray
    noise: np.ndarray
    basis: Basis
    p: int

    def __post_init__(self):
        cx = np.array(self.cx, dtype=np.float64).ravel()
        cz = np.array(self.cz, dtype=np.float64).ravel()
        noise = np.array(self.noise, dtype=np.float64).ravel()
        if not (cx.size == cz.size == noise.size):
            raise ValueError("cx, cz and noise must have the same length")
        if np.any(np.abs(noise) > 0.5):
            raise ValueError("frequency noise must lie in [-1/2, 1/2]")
        if self.p < 1:
            raise ValueError("p must be positive")
        object.__setattr__(self, "cx", cx)
        object.__setattr__(self, "cz", cz)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "basis", Basis(self.basis))
        object.__setattr__(self, "c0", float(self.c0))

    @property
    def nc(self) -> int:
        return self.cx.size

    @classmethod
    def linear(cls, p: int, noise, basis: Basis, c0: float = 1.0) -> "CrabCoefficients":
        noise = np.asarray(noise, dtype=np.float64)
        return cls(c0, np.zeros(noise.size), np.zeros(noise.size), noise, basis, p)

    def as_vector(self) -> np.ndarray:
        """``(C0, C^x_1..Nc, C^z_1..Nc)``."""
        return np.concatenate([[self.c0], self.cx, self.cz])

    def with_vector(self, vec) -> "CrabCoefficients":
        vec = np.asarray(vec, dtype=np.float64)
        nc = self.nc
        if vec.size != 2 * nc + 1:
            raise ValueError(f"expected {2 * nc + 1} coefficients, got {vec.size}")
        return replace(self, c0=vec[0], cx=vec[1:nc + 1], cz=vec[nc + 1:])

    def extended(self, new_noise) -> "CrabCoefficients":
        """Append modes with zero coefficients; existing frequencies unchanged."""
        new_noise = np.asarray(new_noise, dtype=np.float64)
        k = new_noise.size
        return replace(
            self,
            cx=np.concatenate([self.cx, np.zeros(k)]),
            cz=np.concatenate([self.cz, np.zeros(k)]),
            noise=np.concatenate([self.noise, new_noise]),
        )

    def to_dict(self) -> dict:
        return {
            "c0": self.c0,
            "cx": self.cx.tolist(),
            "cz": self.cz.tolist(),
            "noise": self.noise.tolist(),
            "basis": self.basis.value,
            "p": self.p,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CrabCoefficients":
        return cls(data["c0"], data["cx"], data["cz"], data["noise"], Basis(data["basis"]), int(data["p"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def _crab_basis_on_grid(coeffs: CrabCoefficients) -> np.ndarray:
    p = coeffs.p
    t = np.arange(1, p + 1) - 0.5  # Delta_t = 1, tau = P
    return basis_matrix(coeffs.basis, coeffs.noise, t, float(p))


def crab_angles(coeffs: CrabCoefficients) -> AngleSchedule:
    ramp_x, ramp_z = layer_ramps(coeffs.p)
    f = _crab_basis_on_grid(coeffs)
    return AngleSchedule(ramp_x * (coeffs.c0 + f @ coeffs.cx), ramp_z * (coeffs.c0 + f @ coeffs.cz))


def crab_angle_jacobian(coeffs: CrabCoefficients) -> np.ndarray:
    """d(theta_x, theta_z) / d(C0, C^x, C^z), shape ``(2P, 2Nc + 1)``."""
    p, nc = coeffs.p, coeffs.nc
    ramp_x, ramp_z = layer_ramps(p)
    f = _crab_basis_on_grid(coeffs)
    jac = np.zeros((2 * p, 2 * nc + 1))
    jac[:p, 0] = ramp_x
    jac[p:, 0] = ramp_z
    jac[:p, 1:nc + 1] = ramp_x[:, None] * f
    jac[p:, nc + 1:] = ramp_z[:, None] * f
    return jac


@dataclass(frozen=True)
class FourierZhouCoefficients:
    cx: np.ndarray
    cz: np.ndarray
    p: int

    def __post_init__(self):
        cx = np.array(self.cx, dtype=np.float64).ravel()
        cz = np.array(self.cz, dtype=np.float64).ravel()
        if cx.size != cz.size:
            raise ValueError("cx and cz must have the same length")
        if cx.size > self.p:
            raise ValueError(f"Nc={cx.size} exceeds p={self.p}")
        object.__setattr__(self, "cx", cx)
        object.__setattr__(self, "cz", cz)

    @property
    def nc(self) -> int:
        return self.cx.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.cx, self.cz])

    def with_vector(self, vec) -> "FourierZhouCoefficients":
        vec = np.asarray(vec, dtype=np.float64)
        return replace(self, cx=vec[: self.nc], cz=vec[self.nc:])

    def to_dict(self) -> dict:
        return {"cx": self.cx.tolist(), "cz": self.cz.tolist(), "p": self.p}


def fourier_zhou_matrices(p: int, nc: int) -> tuple[np.ndarray, np.ndarray]:
    """``(cos, sin)`` design matrices, entry ``[m-1, n-1]`` at phase (n-1/2)(m-1/2)pi/P."""
    m = np.arange(1, p + 1) - 0.5
    k = np.arange(1, nc + 1) - 0.5
    arg = np.outer(m, k) * np.pi / p
    return np.cos(arg), np.sin(arg)


def fourier_zhou_angles(coeffs: FourierZhouCoefficients) -> AngleSchedule:
    cos_m, sin_m = fourier_zhou_matrices(coeffs.p, coeffs.nc)
    return AngleSchedule(cos_m @ coeffs.cx, sin_m @ coeffs.cz)


def fourier_zhou_jacobian(p: int, nc: int) -> np.ndarray:
    cos_m, sin_m = fourier_zhou_matrices(p, nc)
    jac = np.zeros((2 * p, 2 * nc))
    jac[:p, :nc] = cos_m
    jac[p:, nc:] = sin_m
    return jac


def linear_dqa_angles(p: int, dt: float = 1.0) -> AngleSchedule:
    ramp_x, ramp_z = layer_ramps(p)
    return AngleSchedule(dt * ramp_x, dt * ramp_z)
