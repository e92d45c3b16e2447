"""Suboptimal nonlinear MPC with input move-blocking."""

from mbmpc.blocking import BlockingPattern, expand, expand_offset, parse_pattern, uniform_pattern
from mbmpc.constraints import Box, ConstraintSet
from mbmpc.controller import (
    BUFFERED,
    OFFSET,
    PLAIN,
    ControllerConfig,
    ExtendedState,
    TrajectoryLog,
    controller_step,
    lyapunov_audit,
    make_initial_extended_state,
    simulate_closed_loop,
)
from mbmpc.dynamics import SystemModel, linearize, rollout, step, vdp_model
from mbmpc.nlp import SolverConfig, solve, solve_feasibility
from mbmpc.objective import CostSpec, stage_cost, terminal_cost, total_cost
from mbmpc.ocp import (
    assemble_blocked,
    assemble_offset,
    assemble_standard,
    brute_force_solve,
    evaluate_admissibility,
)
from mbmpc.terminal import (
    TerminalSet,
    calibrate_pi,
    design_terminal,
    solve_dare,
    validate_terminal_set,
)

__all__ = [
    "BUFFERED",
    "OFFSET",
    "PLAIN",
    "BlockingPattern",
    "Box",
    "ConstraintSet",
    "ControllerConfig",
    "CostSpec",
    "ExtendedState",
    "SolverConfig",
    "SystemModel",
    "TerminalSet",
    "TrajectoryLog",
    "assemble_blocked",
    "assemble_offset",
    "assemble_standard",
    "brute_force_solve",
    "calibrate_pi",
    "controller_step",
    "design_terminal",
    "evaluate_admissibility",
    "expand",
    "expand_offset",
    "linearize",
    "lyapunov_audit",
    "make_initial_extended_state",
    "parse_pattern",
    "rollout",
    "simulate_closed_loop",
    "solve",
    "solve_dare",
    "solve_feasibility",
    "stage_cost",
    "step",
    "terminal_cost",
    "total_cost",
    "uniform_pattern",
    "validate_terminal_set",
    "vdp_model",
]

__version__ = "0.1.0"
