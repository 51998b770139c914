"""Spectra along the anneal: parity sectors, minimum-gap scans, BCH effective
Hamiltonians and instantaneous-eigenstate populations.

Small systems (``n <= DENSE_MAX_N``) are diagonalised densely; larger ones use
ARPACK's implicitly restarted Lanczos on sparse / matrix-free operators and
only the lowest few eigenpairs are extracted.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from forge.graph import GraphInstance, generate_regular_graph, problem_diagonal
from forge.quantum import AngleSchedule, evolve

DENSE_MAX_N = 11
MAX_SPECTRAL_N = 17
EIG_TOL = 1e-12
CLUSTER_RTOL = 1e-9


class Sector(str, enum.Enum):
    FULL = "full"
    PARITY_EVEN = "parity_even"


# --- operators ----------------------------------------------------------------


def _check_size(n: int, sector: Sector) -> None:
    limit = MAX_SPECTRAL_N if sector is Sector.PARITY_EVEN else MAX_SPECTRAL_N - 1
    if n > limit:
        raise ValueError(f"n={n} exceeds the spectral size guard ({limit}) for sector {sector.value}")


def hx_matrix(n: int, sector=Sector.PARITY_EVEN) -> sp.csr_matrix:
    """Sparse ``-sum_j X_j`` in the full space or in the parity-even block.

    The even block uses the basis ``(|b> + |~b>)/sqrt(2)`` with the top bit of
    ``b`` equal to zero.
    """
    sector = Sector(sector)
    if sector is Sector.FULL:
        dim = 1 << n
        rows = np.repeat(np.arange(dim), n)
        cols = (np.arange(dim)[:, None] ^ (1 << np.arange(n))[None, :]).ravel()
    else:
        if n < 2:
            raise ValueError("parity sector needs n >= 2")
        dim = 1 << (n - 1)
        b = np.arange(dim)
        flips = np.concatenate([1 << np.arange(n - 1), [dim - 1]])  # top-bit flip folds back via the complement
        rows = np.repeat(b, n)
        cols = (b[:, None] ^ flips[None, :]).ravel()
    vals = -np.ones(rows.size)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def sector_diagonal(diag: np.ndarray, sector=Sector.PARITY_EVEN) -> np.ndarray:
    if Sector(sector) is Sector.FULL:
        return diag
    return diag[: diag.size // 2]


def to_sector(state: np.ndarray) -> np.ndarray:
    """Even-sector coordinates of a full state vector."""
    half = state.size // 2
    return (state[:half] + state[::-1][:half]) / math.sqrt(2.0)


def from_sector(vec: np.ndarray) -> np.ndarray:
    """Full-space embedding of an even-sector vector."""
    full = np.concatenate([vec, vec[::-1]]) / math.sqrt(2.0)
    return full


class SectorOperators:
    """Cached ``H_x`` (sparse) and ``H_z`` (diagonal) for one instance and sector."""

    def __init__(self, instance: GraphInstance, sector=Sector.PARITY_EVEN, diag: np.ndarray | None = None):
        self.sector = Sector(sector)
        self.n = instance.n_vertices
        _check_size(self.n, self.sector)
        full_diag = problem_diagonal(instance) if diag is None else diag
        self.hz = np.ascontiguousarray(sector_diagonal(full_diag, self.sector))
        self.hx = hx_matrix(self.n, self.sector)
        self.dim = self.hz.size

    @property
    def dense(self) -> bool:
        return self.n <= DENSE_MAX_N

    def annealing(self, s: float) -> sp.csr_matrix:
        return (1.0 - s) * self.hx + sp.diags(s * self.hz)

    def project(self, state: np.ndarray) -> np.ndarray:
        return to_sector(state) if self.sector is Sector.PARITY_EVEN else state


def annealing_hamiltonian(instance: GraphInstance, s: float, sector=Sector.FULL, dense: bool = True):
    """``s H_z + (1 - s) H_x``; dense only up to ``DENSE_MAX_N + 1`` qubits."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    ops = SectorOperators(instance, sector)
    h = ops.annealing(s)
    if not dense:
        return h
    if ops.n > DENSE_MAX_N + 1:
        raise ValueError(f"dense matrix for n={ops.n} exceeds the size guard; use dense=False")
    return h.toarray()


# --- eigen-solvers ----------------------------------------------------------


def lowest_eigenpairs(h, k: int, v0=None, dense: bool | None = None):
    """The ``k`` lowest eigenpairs of a Hermitian matrix or operator, ascending."""
    dim = h.shape[0]
    if dense is None:
        dense = dim <= (1 << DENSE_MAX_N)
    k = min(k, dim)
    if dense or k >= dim - 1:
        mat = h.toarray() if sp.issparse(h) else (np.asarray(h) if not isinstance(h, LinearOperator) else
                                                   h @ np.eye(dim, dtype=h.dtype))
        w, v = scipy.linalg.eigh(mat, subset_by_index=[0, k - 1])
        return w, v
    ncv = min(dim, max(2 * k + 1, 24))
    if v0 is None:
        # ARPACK's own random start depends on call history; pin it for reproducibility
        v0 = np.random.default_rng(dim).standard_normal(dim)
    w, v = eigsh(h, k=k, which="SA", tol=EIG_TOL, ncv=ncv, v0=v0, maxiter=100 * dim)
    order = np.argsort(w)
    return w[order], v[:, order]


def residual_check(h, w, v) -> float:
    """max_j ||H v_j - w_j v_j||."""
    hv = h @ v
    return float(np.max(np.linalg.norm(hv - v * w[None, :], axis=0)))


# --- minimum gap -----------------------------------------------------------


# a refined minimum closer than this to the scan edge is pinned there
EDGE_TOL = 1e-6


@dataclass
class SpectralScan:
    grid: np.ndarray
    levels: np.ndarray
    min_gap: float
    s_at_min: float
    sector: Sector
    label: str = ""

    @property
    def interior(self) -> bool:
        """True when the minimum is an avoided crossing inside the scan, not the
        classical gap reached at a scan boundary."""
        return bool(self.grid[0] + EDGE_TOL < self.s_at_min < self.grid[-1] - EDGE_TOL)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "interior": self.interior,
            "sector": Sector(self.sector).value,
            "grid": np.asarray(self.grid).tolist(),
            "levels": np.asarray(self.levels).tolist(),
            "min_gap": self.min_gap,
            "s_at_min": self.s_at_min,
        }


class _GapFunction:
    def __init__(self, ops: SectorOperators, k: int):
        self.ops = ops
        self.k = max(k, 2)
        self.v0 = None

    def levels(self, s: float) -> np.ndarray:
        h = self.ops.annealing(s)
        w, v = lowest_eigenpairs(h, self.k, v0=self.v0, dense=self.ops.dense)
        if not self.ops.dense:
            self.v0 = v[:, 0].copy()
        return w

    def __call__(self, s: float) -> float:
        w = self.levels(s)
        return float(w[1] - w[0])


def golden_section(f, a: float, b: float, xtol: float):
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def min_gap_scan(instance: GraphInstance, n_grid: int = 64, refine: bool = True, s_lo: float = 0.02,
                 s_hi: float = 0.98, sector=Sector.PARITY_EVEN, k: int = 2, xtol: float = 1e-8,
                 ops: SectorOperators | None = None) -> SpectralScan:
    """Coarse scan of the ``E_1 - E_0`` gap, then golden-section refinement
    of the bracket around the coarse minimum."""
    if n_grid < 16:
        raise ValueError("n_grid must be at least 16")
    sector = Sector(sector)
    ops = ops or SectorOperators(instance, sector)
    gapf = _GapFunction(ops, k)
    grid = np.linspace(s_lo, s_hi, n_grid)
    levels = np.array([gapf.levels(s) for s in grid])
    gaps = levels[:, 1] - levels[:, 0]
    i = int(np.argmin(gaps))
    best_s, best_gap = float(grid[i]), float(gaps[i])
    if refine:
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, n_grid - 1)]
        gapf.v0 = None
        s_star, g_star = golden_section(gapf, float(a), float(b), xtol)
        if g_star < best_gap:
            best_s, best_gap = float(s_star), float(g_star)
    return SpectralScan(grid, levels, max(best_gap, 0.0), best_s, sector, instance.label)


@dataclass
class ScreenResult:
    instances: list[GraphInstance]
    scans: list[SpectralScan]
    gap_threshold: float
    hard: list[int] = field(default_factory=list)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([s.min_gap for s in self.scans])

    def cdf(self) -> tuple[np.ndarray, np.ndarray]:
        gaps = np.sort(self.gaps)
        return gaps, np.arange(1, gaps.size + 1) / gaps.size

    def hard_instances(self) -> list[GraphInstance]:
        """Hard instances, interior (avoided-crossing) minima first, then by gap."""
        order = sorted(self.hard, key=lambda i: (not self.scans[i].interior, self.scans[i].min_gap))
        return [self.instances[i] for i in order]

    def extend(self, other: "ScreenResult") -> "ScreenResult":
        """Concatenate a screen of further instances (e.g. ``start=count``)."""
        offset = len(self.instances)
        return ScreenResult(self.instances + other.instances, self.scans + other.scans, self.gap_threshold,
                            self.hard + [offset + i for i in other.hard])

    def write_cdf(self, path) -> None:
        gaps, frac = self.cdf()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gap", "fraction"])
            for g, f in zip(gaps, frac):
                w.writerow([repr(float(g)), repr(float(f))])


def instance_seeds(master_seed: int, count: int) -> list[int]:
    return [int(s) for s in np.random.default_rng(master_seed).integers(0, 2**31 - 1, size=count)]


def hardness_screen(count: int = 100, n: int = 14, degree: int = 3, gap_threshold: float = 5e-3, seed: int = 0,
                    n_grid: int = 64, sector=Sector.PARITY_EVEN, progress=None, start: int = 0) -> ScreenResult:
    """Scan instances ``start .. start+count-1`` of the seeded pool; the pool
    is a prefix-stable sequence, so screens can be extended piecewise."""
    instances, scans = [], []
    seeds = instance_seeds(seed, start + count)[start:]
    for idx, s in enumerate(seeds, start=start):
        inst = generate_regular_graph(n, degree, s, label=f"rr{degree}_n{n}_{idx:03d}")
        scans.append(min_gap_scan(inst, n_grid=n_grid, sector=sector))
        instances.append(inst)
        if progress is not None:
            progress(idx, inst, scans[-1])
    hard = [i for i, sc in enumerate(scans) if sc.min_gap <= gap_threshold]
    return ScreenResult(instances, scans, gap_threshold, hard)


# --- effective Hamiltonian --------------------------------------------------


def bch_coefficients(theta_x: float, theta_z: float, order: int) -> dict:
    """Weights of the BCH terms of ``log(exp(-i tx Hx) exp(-i tz Hz))``:
    ``H_eff = a Hx + b Hz + c (i[Hx,Hz]) + d [Hx,[Hx,Hz]] + e [Hz,[Hx,Hz]]``."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    coef = {"x": theta_x, "z": theta_z, "c1": 0.0, "xx": 0.0, "zz": 0.0}
    if order >= 2:
        coef["c1"] = -0.5 * theta_x * theta_z
    if order >= 3:
        coef["xx"] = -theta_x ** 2 * theta_z / 12.0
        coef["zz"] = theta_x * theta_z ** 2 / 12.0
    return coef


def effective_hamiltonian(instance: GraphInstance, theta_x: float, theta_z: float, order: int = 3,
                          sector=Sector.FULL, ops: SectorOperators | None = None) -> np.ndarray:
    """Dense truncated-BCH generator of one digitized layer."""
    ops = ops or SectorOperators(instance, sector)
    if ops.n > DENSE_MAX_N + 1:
        raise ValueError(f"dense effective Hamiltonian for n={ops.n} exceeds the size guard")
    coef = bch_coefficients(theta_x, theta_z, order)
    hx = ops.hx.toarray()
    hz = np.diag(ops.hz)
    h = (coef["x"] * hx + coef["z"] * hz).astype(np.complex128)
    if order >= 2:
        comm = hx @ hz - hz @ hx
        h += coef["c1"] * 1j * comm
        if order >= 3:
            h += coef["xx"] * (hx @ comm - comm @ hx) + coef["zz"] * (hz @ comm - comm @ hz)
    return 0.5 * (h + h.conj().T)


def effective_operator(ops: SectorOperators, theta_x: float, theta_z: float, order: int = 3) -> LinearOperator:
    """Matrix-free truncated-BCH generator."""
    coef = bch_coefficients(theta_x, theta_z, order)
    hx, hz = ops.hx, ops.hz

    def comm(v, hxv=None):
        hxv = hx @ v if hxv is None else hxv
        return hx @ (hz * v) - hz * hxv

    def matvec(v):
        v = np.asarray(v).reshape(-1)
        a = hx @ v
        out = coef["x"] * a + coef["z"] * (hz * v)
        if order >= 2:
            cv = comm(v, a)
            out = out + (1j * coef["c1"]) * cv
            if order >= 3:
                out = out + coef["xx"] * (hx @ cv - comm(a))
                out = out + coef["zz"] * (hz * cv - comm(hz * v))
        return out

    return LinearOperator((ops.dim, ops.dim), matvec=matvec, rmatvec=matvec, dtype=np.complex128)


# --- populations ------------------------------------------------------------


@dataclass
class PopulationTrace:
    m_grid: np.ndarray
    populations: np.ndarray   # (points, k)
    residual_tail: np.ndarray
    gaps: np.ndarray
    min_gap_marker: float
    energies: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.populations.shape[1]

    def p(self, j: int) -> np.ndarray:
        return self.populations[:, j]

    def write_csv(self, path, index_name: str = "m") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([index_name] + [f"p{j}" for j in range(self.k)] + ["tail"])
            for i, m in enumerate(self.m_grid):
                w.writerow([repr(float(m)) if index_name != "m" else int(m)]
                           + [repr(float(x)) for x in self.populations[i]] + [repr(float(self.residual_tail[i]))])

    def to_dict(self) -> dict:
        return {
            "m_grid": np.asarray(self.m_grid).tolist(),
            "populations": self.populations.tolist(),
            "residual_tail": self.residual_tail.tolist(),
            "gaps": self.gaps.tolist(),
            "min_gap_marker": self.min_gap_marker,
        }


def clustered_populations(w: np.ndarray, v: np.ndarray, state: np.ndarray, k: int,
                          rtol: float = CLUSTER_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Populations of the ``k`` lowest levels, degenerate eigenvectors pooled.

    Returns ``(populations, level_energies)``; levels beyond the computed
    eigenvectors are reported as zero population.
    """
    overlaps = np.abs(v.conj().T @ state) ** 2
    pops, energies = [], []
    scale = max(np.max(np.abs(w)), 1.0)
    j = 0
    while j < w.size and len(pops) < k:
        jj = j + 1
        while jj < w.size and abs(w[jj] - w[j]) <= rtol * scale:
            jj += 1
        pops.append(float(np.sum(overlaps[j:jj])))
        energies.append(float(w[j]))
        j = jj
    while len(pops) < k:
        pops.append(0.0)
        energies.append(float("nan"))
    return np.array(pops), np.array(energies)


def _level_gap(w: np.ndarray, rtol: float = CLUSTER_RTOL) -> float:
    scale = max(np.max(np.abs(w)), 1.0)
    for j in range(1, w.size):
        if w[j] - w[0] > rtol * scale:
            return float(w[j] - w[0])
    return 0.0


def digital_population_trace(instance: GraphInstance, schedule: AngleSchedule, k: int = 3, order: int = 3,
                             sector=Sector.PARITY_EVEN, extra_levels: int = 2) -> PopulationTrace:
    """Populations ``|<phi^j_m|psi_m>|^2`` of the lowest eigenstates of each
    layer's effective Hamiltonian (layer 1 is used for ``m = 0``)."""
    if k < 2:
        raise ValueError("track at least two levels")
    if np.all(schedule.theta_x == 0) and np.all(schedule.theta_z == 0):
        raise ValueError("population trace undefined for the all-zero schedule (H_eff = 0)")
    ops = SectorOperators(instance, sector)
    states = evolve(problem_diagonal(instance), schedule, record_intermediate=True)
    p = schedule.p
    n_eig = min(k + extra_levels, ops.dim)
    pops = np.zeros((p + 1, k))
    gaps = np.zeros(p)
    cache = {}
    for m in range(p + 1):
        layer = max(m, 1) - 1
        if layer not in cache:
            tx, tz = float(schedule.theta_x[layer]), float(schedule.theta_z[layer])
            if tx == 0.0 and tz == 0.0:
                raise ValueError(f"layer {layer + 1} has zero angles; H_eff undefined")
            if ops.dense:
                h = effective_hamiltonian(instance, tx, tz, order, ops=ops)
            else:
                h = effective_operator(ops, tx, tz, order)
            cache = {layer: lowest_eigenpairs(h, n_eig, dense=ops.dense)}
        w, v = cache[layer]
        if m >= 1:
            gaps[m - 1] = _level_gap(w)
        pops[m], _ = clustered_populations(w, v, ops.project(states[m]), k)
    tail = 1.0 - pops.sum(axis=1)
    marker = float(np.argmin(gaps) + 1)
    return PopulationTrace(np.arange(p + 1), pops, tail, gaps, marker)


def write_scan_json(scan: SpectralScan, path) -> None:
    Path(path).write_text(json.dumps(scan.to_dict()) + "\n")
