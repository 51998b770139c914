"""Weighted MaxCut instances: generation, serialization and brute-force solution."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MAX_BRUTE_FORCE_N = 24


class InfeasibleGraphError(ValueError):
    """Requested regular graph cannot exist."""


class GenerationError(RuntimeError):
    """Rejection sampling ran out of attempts."""


@dataclass(frozen=True)
class GraphInstance:
    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]
    label: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("n_vertices must be positive")
        norm = []
        seen = set()
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i and j < self.n_vertices):
                raise ValueError(f"edge ({i}, {j}) out of range")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not (0.0 < w <= 1.0):
                raise ValueError(f"weight {w} outside (0, 1]")
            seen.add((i, j))
            norm.append((i, j, w))
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n(self) -> int:
        return self.n_vertices

    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def is_regular(self, degree: int) -> bool:
        return all(d == degree for d in self.degrees())

    def permuted(self, perm: Sequence[int], label: str | None = None) -> "GraphInstance":
        """Relabel vertex ``v`` as ``perm[v]``."""
        edges = tuple((perm[i], perm[j], w) for i, j, w in self.edges)
        return GraphInstance(self.n_vertices, edges, self.label if label is None else label, self.seed)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n_vertices,
            "seed": self.seed,
            "edges": [[i, j, w] for i, j, w in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GraphInstance":
        return cls(
            n_vertices=int(data["n"]),
            edges=tuple((int(i), int(j), float(w)) for i, j, w in data["edges"]),
            label=str(data.get("label", "")),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class ExactSolution:
    e_min: float
    e_max: float
    ground_bitstrings: tuple[tuple[int, ...], ...]
    degeneracy: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "degeneracy", len(self.ground_bitstrings))

    @property
    def ground_indices(self) -> np.ndarray:
        return np.array([bits_to_index(b) for b in self.ground_bitstrings], dtype=np.int64)


def save_instance(instance: GraphInstance, path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=1) + "\n")


def load_instance(path) -> GraphInstance:
    return GraphInstance.from_dict(json.loads(Path(path).read_text()))


def bits_to_index(bits: Sequence[int]) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> k) & 1 for k in range(n))


def generate_regular_graph(n: int, degree: int, seed: int, label: str | None = None,
                           max_attempts: int = 10_000) -> GraphInstance:
    """Sample a simple ``degree``-regular graph with i.i.d. weights in (0, 1].

    Uses the pairing (configuration) model: the ``n * degree`` half-edges are
    shuffled and paired, and the whole matching is redrawn whenever it produces
    a self-loop or a repeated edge.
    """
    if n < 1 or degree < 0 or degree >= n or (n * degree) % 2:
        raise InfeasibleGraphError(f"no simple {degree}-regular graph on {n} vertices")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), degree)
    for _ in range(max_attempts):
        perm = rng.permutation(stubs)
        pairs = perm.reshape(-1, 2)
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        if np.any(lo == hi):
            continue
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue
        order = np.argsort(keys)
        weights = 1.0 - rng.random(order.size)  # (0, 1]
        edges = tuple((int(lo[k]), int(hi[k]), float(w)) for k, w in zip(order, weights))
        return GraphInstance(n, edges, label if label is not None else f"rr{degree}_n{n}_s{seed}", seed)
    raise GenerationError(f"pairing model failed after {max_attempts} attempts (seed={seed})")


def classical_energy(instance: GraphInstance, bits: Sequence[int]) -> float:
    """0.5 * sum_ij J_ij (s_i s_j - 1) with bit 0 -> s=+1, bit 1 -> s=-1."""
    if len(bits) != instance.n_vertices:
        raise ValueError(f"expected {instance.n_vertices} bits, got {len(bits)}")
    energy = 0.0
    for i, j, w in instance.edges:
        si = 1.0 - 2.0 * bits[i]
        sj = 1.0 - 2.0 * bits[j]
        energy += 0.5 * w * (si * sj - 1.0)
    return energy


def energies_of_indices(instance: GraphInstance, indices: np.ndarray) -> np.ndarray:
    """Classical energies for an array of basis-state indices (same arithmetic as
    :func:`classical_energy`, edge by edge)."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.zeros(indices.shape, dtype=np.float64)
    for i, j, w in instance.edges:
        si = 1.0 - 2.0 * ((indices >> i) & 1)
        sj = 1.0 - 2.0 * ((indices >> j) & 1)
        out += 0.5 * w * (si * sj - 1.0)
    return out


def problem_diagonal(instance: GraphInstance) -> np.ndarray:
    """The diagonal of H_z over all 2**n basis states."""
    if instance.n_vertices > MAX_BRUTE_FORCE_N:
        raise ValueError(f"n={instance.n_vertices} exceeds dense limit {MAX_BRUTE_FORCE_N}")
    return energies_of_indices(instance, np.arange(1 << instance.n_vertices))


def exact_extrema(instance: GraphInstance) -> ExactSolution:
    n = instance.n_vertices
    if n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"n={n} exceeds brute-force limit {MAX_BRUTE_FORCE_N}")
    # bit 0 pinned to 0; the spin flip supplies the other half
    half = np.arange(1 << (n - 1), dtype=np.int64) << 1
    energies = energies_of_indices(instance, half)
    e_min = float(energies.min())
    e_max = float(energies.max())
    full = (1 << n) - 1
    ground = []
    for idx in half[energies == e_min]:
        ground.append(int(idx))
        ground.append(int(idx) ^ full)
    ground.sort()
    return ExactSolution(e_min, e_max, tuple(index_to_bits(g, n) for g in ground))


def residual_energy(e_fin: float, sol: ExactSolution) -> float:
    span = sol.e_max - sol.e_min
    if not span > 0:
        raise ValueError("degenerate spectrum: e_max == e_min")
    return (e_fin - sol.e_min) / span
