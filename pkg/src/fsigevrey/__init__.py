"""Finite element model of a viscous fluid coupled to a clamped elastic plate,
with Backward Euler time stepping and resolvent-based regularity estimates."""

from .assembly import ReducedSystem, apply_constraints
from .config import SimulationConfig, parse_config
from .mesh import build_plate_mesh, build_unit_square_mesh
from .spectral import build_generator, fit_decay_exponent, resolvent_sweep
from .timestepper import FsiState, make_initial_data, run_simulation, simulate

__version__ = "0.1.0"

__all__ = [
    "FsiState",
    "ReducedSystem",
    "SimulationConfig",
    "apply_constraints",
    "build_generator",
    "build_plate_mesh",
    "build_unit_square_mesh",
    "fit_decay_exponent",
    "make_initial_data",
    "parse_config",
    "resolvent_sweep",
    "run_simulation",
    "simulate",
]
