"""Hot state-vector kernels.

Every kernel exists twice: a numba-compiled loop (``*_nb``) and a vectorised
numpy version (``*_np``). The unsuffixed names point at whichever backend is
active (see :mod:`forge._accel`). Kernels work on contiguous complex128 arrays
of length ``2**n`` with qubit 0 the least significant bit.
"""

import numpy as np

from forge._accel import HAVE_NUMBA, USE_NUMBA, njit

__all__ = [
    "BACKEND",
    "phase_factors",
    "mixer_inplace",
    "hx_apply",
    "hx_inner",
    "hamiltonian_apply",
    "backward_layer",
]


# --- numpy ----------------------------------------------------------------


def phase_factors_np(theta, diag, out):
    np.exp((-1j * theta) * diag, out=out)


def mixer_inplace_np(psi, theta, n):
    # exp(+i theta X_j) on every qubit
    c = np.cos(theta)
    s = 1j * np.sin(theta)
    for j in range(n):
        v = psi.reshape(-1, 2, 1 << j)
        a = v[:, 0, :].copy()
        b = v[:, 1, :]
        v[:, 0, :] = c * a + s * b
        v[:, 1, :] = s * a + c * b


def hx_apply_np(psi, n, out):
    # out = -sum_j X_j psi
    out[:] = 0.0
    for j in range(n):
        v = psi.reshape(-1, 2, 1 << j)
        w = out.reshape(-1, 2, 1 << j)
        w[:, 0, :] -= v[:, 1, :]
        w[:, 1, :] -= v[:, 0, :]


def hx_inner_np(lam, psi, n):
    tmp = np.empty_like(psi)
    hx_apply_np(psi, n, tmp)
    return np.vdot(lam, tmp)


def hamiltonian_apply_np(psi, n, cx, cz, diag, out):
    # out = cx * Hx psi + cz * diag * psi
    hx_apply_np(psi, n, out)
    out *= cx
    out += (cz * diag) * psi


def backward_layer_np(lam, psi, theta_x, factors, diag, n):
    # undo one layer on both vectors; returns (<lam|H_x|psi>, <lam'|H_z|psi'>)
    hx = hx_inner_np(lam, psi, n)
    mixer_inplace_np(lam, -theta_x, n)
    mixer_inplace_np(psi, -theta_x, n)
    cf = factors.conj()
    lam *= cf
    psi *= cf
    return hx, np.vdot(lam, diag * psi)


# --- numba ----------------------------------------------------------------


def _phase_factors(theta, diag, out):
    for b in range(diag.shape[0]):
        a = -theta * diag[b]
        out[b] = complex(np.cos(a), np.sin(a))


def _mixer_inplace(psi, theta, n):
    c = np.cos(theta)
    s = np.sin(theta)
    dim = psi.shape[0]
    for j in range(n):
        stride = 1 << j
        for i0 in range(0, dim, 2 * stride):
            for k in range(i0, i0 + stride):
                a = psi[k]
                b = psi[k + stride]
                psi[k] = complex(c * a.real - s * b.imag, c * a.imag + s * b.real)
                psi[k + stride] = complex(c * b.real - s * a.imag, c * b.imag + s * a.real)


def _hx_apply(psi, n, out):
    for b in range(psi.shape[0]):
        acc = 0j
        for j in range(n):
            acc += psi[b ^ (1 << j)]
        out[b] = -acc


def _hx_inner(lam, psi, n):
    total = 0j
    for b in range(psi.shape[0]):
        acc = 0j
        for j in range(n):
            acc += psi[b ^ (1 << j)]
        total -= lam[b].conjugate() * acc
    return total


def _hamiltonian_apply(psi, n, cx, cz, diag, out):
    for b in range(psi.shape[0]):
        acc = 0j
        for j in range(n):
            acc += psi[b ^ (1 << j)]
        out[b] = -cx * acc + cz * diag[b] * psi[b]


def _backward_layer(lam, psi, theta_x, factors, diag, n):
    # X_j commutes with every single-qubit x rotation, so <lam|X_j|psi> can be
    # read off mid-sweep while both vectors are rotated back together.
    c = np.cos(theta_x)
    s = -np.sin(theta_x)
    dim = psi.shape[0]
    hx = 0j
    for j in range(n):
        stride = 1 << j
        for i0 in range(0, dim, 2 * stride):
            for k in range(i0, i0 + stride):
                a = psi[k]
                b = psi[k + stride]
                la = lam[k]
                lb = lam[k + stride]
                hx -= la.conjugate() * b + lb.conjugate() * a
                psi[k] = complex(c * a.real - s * b.imag, c * a.imag + s * b.real)
                psi[k + stride] = complex(c * b.real - s * a.imag, c * b.imag + s * a.real)
                lam[k] = complex(c * la.real - s * lb.imag, c * la.imag + s * lb.real)
                lam[k + stride] = complex(c * lb.real - s * la.imag, c * lb.imag + s * la.real)
    hz = 0j
    for b in range(dim):
        f = factors[b].conjugate()
        lam[b] *= f
        psi[b] *= f
        hz += lam[b].conjugate() * diag[b] * psi[b]
    return hx, hz


if HAVE_NUMBA:
    backward_layer_nb = njit(_backward_layer)
    phase_factors_nb = njit(_phase_factors)
    mixer_inplace_nb = njit(_mixer_inplace)
    hx_apply_nb = njit(_hx_apply)
    hx_inner_nb = njit(_hx_inner)
    hamiltonian_apply_nb = njit(_hamiltonian_apply)
else:  # pragma: no cover
    backward_layer_nb = backward_layer_np
    phase_factors_nb = phase_factors_np
    mixer_inplace_nb = mixer_inplace_np
    hx_apply_nb = hx_apply_np
    hx_inner_nb = hx_inner_np
    hamiltonian_apply_nb = hamiltonian_apply_np


if USE_NUMBA:
    BACKEND = "numba"
    backward_layer = backward_layer_nb
    phase_factors = phase_factors_nb
    mixer_inplace = mixer_inplace_nb
    hx_apply = hx_apply_nb
    hx_inner = hx_inner_nb
    hamiltonian_apply = hamiltonian_apply_nb
else:
    BACKEND = "numpy"
    backward_layer = backward_layer_np
    phase_factors = phase_factors_np
    mixer_inplace = mixer_inplace_np
    hx_apply = hx_apply_np
    hx_inner = hx_inner_np
    hamiltonian_apply = hamiltonian_apply_np
