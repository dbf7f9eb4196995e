"""Projection-based solvers and benchmarks for stochastic inverse variational inequalities."""

__version__ = "0.1.0"

from .feasible import BoxSet, PolyhedronSet, ProjectionError, project_box, project_polyhedron
from .numkit import RngStream, gaussian_vector, largest_eigenvalue
from .oracle import (
    BatchSchedule,
    StochasticOracle,
    additive_gaussian_oracle,
    batch_mean,
    batch_size,
    verify_variance_decay,
)
from .problems import (
    InnerViSolution,
    NetworkModel,
    build_example1,
    build_example2,
    build_network_model,
    inner_equilibrium_solve,
)
from .solver import (
    DivergedError,
    SiviProblem,
    SolverConfig,
    Trace,
    check_one_step_descent,
    estimate_cocoercivity_linear,
    gap,
    ipg_step,
    sampled_solution_residual,
    solve,
    theoretical_rate_bound,
)
from .harness import ReplicationStats, export_csv, run_replications, t_quantile_975

__all__ = [
    "BatchSchedule",
    "BoxSet",
    "DivergedError",
    "InnerViSolution",
    "NetworkModel",
    "PolyhedronSet",
    "ProjectionError",
    "ReplicationStats",
    "RngStream",
    "SiviProblem",
    "SolverConfig",
    "StochasticOracle",
    "Trace",
    "additive_gaussian_oracle",
    "batch_mean",
    "batch_size",
    "build_example1",
    "build_example2",
    "build_network_model",
    "check_one_step_descent",
    "estimate_cocoercivity_linear",
    "export_csv",
    "gap",
    "gaussian_vector",
    "inner_equilibrium_solve",
    "ipg_step",
    "largest_eigenvalue",
    "project_box",
    "project_polyhedron",
    "run_replications",
    "sampled_solution_residual",
    "solve",
    "t_quantile_975",
    "theoretical_rate_bound",
    "verify_variance_decay",
]
