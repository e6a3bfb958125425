"""Stochastic lot sizing with supplier-driven substitution and joint
service-level constraints: models, policies, simulation, and CLI."""

__version__ = "0.1.0"

from .core import DemandModel, Instance, SubstitutionGraph, SystemState
from .instance import GeneratorConfig, generate
from .policy import PeriodDecision, PolicyKind, decide
from .sim import SimConfig, SimulationReport, roll

__all__ = [
    "DemandModel",
    "Instance",
    "SubstitutionGraph",
    "SystemState",
    "GeneratorConfig",
    "generate",
    "PeriodDecision",
    "PolicyKind",
    "decide",
    "SimConfig",
    "SimulationReport",
    "roll",
    "__version__",
]
