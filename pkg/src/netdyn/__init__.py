"""Composable dynamical systems on networks.

Build a right-hand side from per-vertex and per-edge component
functions on a graph, then integrate it: adaptive explicit RK for pure
ODE systems, an implicit stepper for algebraic constraints, method of
steps for constant-lag delays, continuous event handling throughout.
"""

from .components import (
    make_ode_vertex,
    make_static_vertex,
    make_static_edge,
    make_static_delay_edge,
    make_ode_edge,
    VertexModel,
    EdgeModel,
    DIRECTED,
    UNDIRECTED,
    SYMMETRIC,
    ANTISYMMETRIC,
    FIDUCIAL,
)
from .graphs import (
    Graph,
    watts_strogatz,
    oriented_incidence,
    adjacency,
    save_edge_list,
    load_edge_list,
)
from .network import (
    NetworkFunction,
    network_dynamics,
    evaluate_rhs,
    evaluate_rhs_delayed,
    resolve_param,
    syms_containing,
    idx_containing,
    coupling_sum,
)
from .solver import (
    SolverConfig,
    SolverError,
    Solution,
    EventSpec,
    integrate_dp5,
    integrate_mass_matrix,
    integrate_dde,
    detect_events,
    dense_eval,
)
from .fixpoints import find_fixpoint, find_valid_ic
from ._newton import ConvergenceError

__version__ = "0.1.0"

__all__ = [
    "make_ode_vertex", "make_static_vertex", "make_static_edge",
    "make_static_delay_edge", "make_ode_edge", "VertexModel", "EdgeModel",
    "DIRECTED", "UNDIRECTED", "SYMMETRIC", "ANTISYMMETRIC", "FIDUCIAL",
    "Graph", "watts_strogatz", "oriented_incidence", "adjacency",
    "save_edge_list", "load_edge_list",
    "NetworkFunction", "network_dynamics", "evaluate_rhs",
    "evaluate_rhs_delayed", "resolve_param", "syms_containing",
    "idx_containing", "coupling_sum",
    "SolverConfig", "SolverError", "Solution", "EventSpec",
    "integrate_dp5", "integrate_mass_matrix", "integrate_dde",
    "detect_events", "dense_eval",
    "find_fixpoint", "find_valid_ic",
    "ConvergenceError",
    "__version__",
]
