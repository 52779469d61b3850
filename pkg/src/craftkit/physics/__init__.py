"""Rigid-body simulation and the functional craft tests."""

from .engine import Contact, RevoluteJoint, RigidBody, World
from .functional import (
    FAILURE_REASONS,
    INSUFFICIENT_DISTANCE,
    INSUFFICIENT_ROTATION,
    MOVED_UNDER_LOAD,
    NEW_GROUND_CONTACT,
    PART_SEPARATED,
    PEG_MISSED,
    PEG_OUTSIDE_HOLE,
    VEERED,
    CompiledCraft,
    SimConfig,
    SimOutcome,
    check_common_failures,
    compile_craft,
    run_functional_test,
    run_hit_test,
    run_rolling_test,
    run_support_test,
)

__all__ = [
    "Contact", "RevoluteJoint", "RigidBody", "World",
    "FAILURE_REASONS", "INSUFFICIENT_DISTANCE", "INSUFFICIENT_ROTATION",
    "MOVED_UNDER_LOAD", "NEW_GROUND_CONTACT", "PART_SEPARATED",
    "PEG_MISSED", "PEG_OUTSIDE_HOLE", "VEERED",
    "CompiledCraft", "SimConfig", "SimOutcome",
    "check_common_failures", "compile_craft", "run_functional_test",
    "run_hit_test", "run_rolling_test", "run_support_test",
]
