"""Experiment configuration: flat ``section.key = value`` text, presets and resolution.

Example::

    # Van der Pol defaults
    model.ts = 0.03125
    cost.Q = 1, 0.1
    blocking.pattern = uniform: 2
    controller.mode = buffered-fallback

Values are echoed with ``repr`` so that a resolved config read back in
reproduces every float bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from mbmpc.blocking import BlockingPattern, parse_pattern
from mbmpc.constraints import Box, ConstraintSet
from mbmpc.controller import BUFFERED, MODES, OFFSET, PLAIN, ControllerConfig
from mbmpc.dynamics import SystemModel, vdp_model
from mbmpc.errors import ParameterError
from mbmpc.nlp import SolverConfig
from mbmpc.objective import CostSpec
from mbmpc.terminal import TerminalIngredients, TerminalSet, design_terminal

# The initial state used unless overridden.  (-0.6, 0.8) lies outside the
# N = 80 feasible set of the terminal constrained problem, so the default
# sits inside it instead.
DEFAULT_X0 = (-0.5, 0.5)


@dataclass(frozen=True)
class ExperimentConfig:
    ts: float = 2.0**-5
    Q: tuple = (1.0, 0.1)  # diagonal of the state weight
    R: float = 0.1
    rho: float = 1.001
    pi: float | str = 0.4856  # or "calibrate"
    samples: int = 10_000
    N: int = 80
    pattern: str = "uniform: 2"
    mode: str = BUFFERED
    max_iterations: int = 20
    eta: float = 1e-3
    state_bound: float = 1.0
    input_bound: float = 1.0
    x0: tuple = DEFAULT_X0
    steps: int = 200
    open_loop: bool = False
    out: str = "results"
    name: str = "run"
    repetitions: int = 100
    oracle_N: int = 4
    oracle_M: int = 2
    oracle_grid: int = 21
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"controller.mode must be one of {MODES}")
        if not (self.pi == "calibrate" or (isinstance(self.pi, float) and self.pi > 0)):
            raise ParameterError("terminal.pi must be a positive number or 'calibrate'")
        if self.N < 1 or self.steps < 0 or self.max_iterations < 0 or self.repetitions < 1:
            raise ParameterError("horizon, steps, iterations and repetitions must be nonnegative integers")


# dotted key -> (field, kind)
KEYS = {
    "model.ts": ("ts", "float"),
    "cost.Q": ("Q", "floats"),
    "cost.R": ("R", "float"),
    "terminal.rho": ("rho", "float"),
    "terminal.pi": ("pi", "pi"),
    "terminal.samples": ("samples", "int"),
    "horizon.N": ("N", "int"),
    "blocking.pattern": ("pattern", "str"),
    "controller.mode": ("mode", "str"),
    "controller.eta": ("eta", "float"),
    "solver.max_iterations": ("max_iterations", "int"),
    "bounds.state": ("state_bound", "float"),
    "bounds.input": ("input_bound", "float"),
    "run.x0": ("x0", "floats"),
    "run.steps": ("steps", "int"),
    "run.open_loop": ("open_loop", "bool"),
    "run.out": ("out", "str"),
    "run.name": ("name", "str"),
    "run.seed": ("seed", "optint"),
    "benchmark.repetitions": ("repetitions", "int"),
    "oracle.N": ("oracle_N", "int"),
    "oracle.M": ("oracle_M", "int"),
    "oracle.grid": ("oracle_grid", "int"),
}
FIELD_KEY = {f: k for k, (f, _) in KEYS.items()}

PRESETS = {
    "t0": {"blocking.pattern": "uniform: 2", "controller.mode": BUFFERED, "run.open_loop": "true"},
    "t1": {"blocking.pattern": "uniform: 2", "controller.mode": PLAIN},
    "t2": {"blocking.pattern": "uniform: 2", "controller.mode": BUFFERED},
    "t3": {"blocking.pattern": "uniform: 2", "controller.mode": OFFSET, "solver.max_iterations": "0"},
    "t4": {"blocking.pattern": "uniform: 2", "controller.mode": OFFSET, "solver.max_iterations": "3"},
    "t5": {"blocking.pattern": "uniform: 80", "controller.mode": BUFFERED},
    "t6": {"blocking.pattern": "uniform: 16", "controller.mode": OFFSET, "solver.max_iterations": "3"},
}


def _parse_value(kind, text: str):
    text = text.strip()
    if kind == "float":
        return float(text)
    if kind == "int":
        return int(text)
    if kind == "optint":
        return int(text) if text and text.lower() != "none" else None
    if kind == "floats":
        return tuple(float(v) for v in text.replace("(", "").replace(")", "").split(",") if v.strip())
    if kind == "bool":
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ParameterError(f"not a boolean: {text!r}")
        return low in ("true", "1", "yes")
    if kind == "pi":
        return "calibrate" if text == "calibrate" else float(text)
    return text


def _format_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return "" if value is None else str(value)


def parse_pairs(text: str) -> dict:
    """``key = value`` lines to a dict; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParameterError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def apply_pairs(cfg: ExperimentConfig, pairs: dict) -> ExperimentConfig:
    updates = {}
    for key, value in pairs.items():
        if key not in KEYS:
            raise ParameterError(f"unknown config key {key!r}")
        fname, kind = KEYS[key]
        updates[fname] = _parse_value(kind, value)
    return replace(cfg, **updates)


def load_config(path=None, preset: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the preset, then the file, then ``--set`` overrides."""
    cfg = ExperimentConfig()
    if preset is not None:
        if preset not in PRESETS:
            raise ParameterError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg = apply_pairs(cfg, {**PRESETS[preset], "run.name": preset})
    if path is not None:
        cfg = apply_pairs(cfg, parse_pairs(Path(path).read_text()))
    if overrides:
        cfg = apply_pairs(cfg, overrides)
    return cfg


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        lines.append(f"{FIELD_KEY[f.name]} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ building blocks


@dataclass(frozen=True)
class Setup:
    model: SystemModel
    spec: CostSpec
    ing: TerminalIngredients
    cons: ConstraintSet
    pattern: BlockingPattern
    controller: ControllerConfig


def build_terminal(cfg: ExperimentConfig, pi: float | None = None):
    model = vdp_model(cfg.ts)
    Q = np.diag(cfg.Q)
    R = np.array([[cfg.R]])
    level = pi if pi is not None else (1.0 if cfg.pi == "calibrate" else cfg.pi)
    ing = design_terminal(model, Q, R, cfg.rho, level)
    return model, CostSpec(Q, R, ing.P), ing


def boxes(cfg: ExperimentConfig):
    return Box.symmetric(cfg.state_bound, 2), Box.symmetric(cfg.input_bound, 1)


def build_setup(cfg: ExperimentConfig, pi: float | None = None) -> Setup:
    model, spec, ing = build_terminal(cfg, pi)
    state_box, input_box = boxes(cfg)
    cons = ConstraintSet(state_box, input_box, TerminalSet(ing))
    pattern = parse_pattern(cfg.pattern, cfg.N)
    ctrl = ControllerConfig(cfg.mode, pattern, SolverConfig(max_iterations=cfg.max_iterations), cfg.eta)
    return Setup(model, spec, ing, cons, pattern, ctrl)
