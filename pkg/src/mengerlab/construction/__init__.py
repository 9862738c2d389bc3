from .gamma import gamma, gamma_tilde
from .graph import CoverageReport, GraphFunction, build_graph, coverage_report, graph_distances
from .stopping import (
    StoppingParams,
    StoppingState,
    Transform,
    build_stopping_state,
    default_grid,
    normalize_measure,
)
from .whitney import WhitneyCheck, WhitneyCube, check_whitney, select_ball, whitney_decompose

__all__ = [
    "CoverageReport",
    "GraphFunction",
    "StoppingParams",
    "StoppingState",
    "Transform",
    "WhitneyCheck",
    "WhitneyCube",
    "build_graph",
    "build_stopping_state",
    "check_whitney",
    "coverage_report",
    "default_grid",
    "gamma",
    "gamma_tilde",
    "graph_distances",
    "normalize_measure",
    "select_ball",
    "whitney_decompose",
]
