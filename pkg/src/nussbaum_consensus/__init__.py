"""Nussbaum-type nonlinear-PI consensus under switching directed topologies."""
from .config import load_scenario
from .digraph import (
    DiGraph,
    basis_bicomponents,
    has_jointly_strongly_connected_basis,
    laplacian,
    laplacian_rank,
    left_null_vector,
    load_graph,
    reduced_laplacian,
    strongly_connected_components,
    union_graph,
)
from .dynamics import ControllerParams
from .metrics import diagnose
from .schedule import SwitchSchedule, validate
from .simulate import Scenario, Trajectory, simulate, simulate_batch, simulate_fixed_graph

__all__ = [
    "ControllerParams",
    "DiGraph",
    "Scenario",
    "SwitchSchedule",
    "Trajectory",
    "basis_bicomponents",
    "diagnose",
    "has_jointly_strongly_connected_basis",
    "laplacian",
    "laplacian_rank",
    "left_null_vector",
    "load_graph",
    "load_scenario",
    "reduced_laplacian",
    "simulate",
    "simulate_batch",
    "simulate_fixed_graph",
    "strongly_connected_components",
    "union_graph",
    "validate",
]
