"""Local-degree adiabatic MIS solving on simulated Rydberg arrays."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.0.0"

from .detuning import DetuningProfile, engineer_detunings
from .dynamics import HamiltonianModel, IntegratorConfig, PulseSchedule, evolve, minimal_gap
from .graph import Graph, build_kings_graph, from_edge_list
from .mis import ISCatalog, enumerate_independent_sets, solve_mis

__all__ = [
    "DetuningProfile",
    "Graph",
    "HamiltonianModel",
    "ISCatalog",
    "IntegratorConfig",
    "PulseSchedule",
    "__version__",
    "build_kings_graph",
    "engineer_detunings",
    "enumerate_independent_sets",
    "evolve",
    "from_edge_list",
    "minimal_gap",
    "solve_mis",
]
