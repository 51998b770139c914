"""Schedule optimization for digitized quantum annealing of weighted MaxCut."""

__version__ = "0.1.0"

from forge.graph import GraphInstance, exact_extrema, generate_regular_graph, residual_energy  # noqa: E402
from forge.quantum import AngleSchedule, evolve_digitized  # noqa: E402

__all__ = ["AngleSchedule", "GraphInstance", "evolve_digitized", "exact_extrema", "generate_regular_graph",
           "residual_energy", "__version__"]
