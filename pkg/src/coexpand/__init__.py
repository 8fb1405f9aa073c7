"""Multi-region generation and transmission co-expansion planning."""
from .core import (ChronoSeries, GeneratorType, PlanningHorizon, Region, SystemDataset,
                   TransmissionInterface, interface_incidence, validate_dataset)
from .dispatch import gap_report, gap_value, lt_operate, st_operate
from .model import build_model, cost_breakdown, discount_factor, discount_factors
from .planner import ExpansionPlan, ExpansionPlanner, sequential_plan
from .scenarios import (ScenarioBuilder, ScenarioSet, build_nonsync_scenarios, build_scenarios,
                        per_hour_scenarios)
from .synthetic import desk_ei, toy_system

__version__ = "0.1.0"

__all__ = [
    "ChronoSeries",
    "ExpansionPlan",
    "ExpansionPlanner",
    "GeneratorType",
    "PlanningHorizon",
    "Region",
    "ScenarioBuilder",
    "ScenarioSet",
    "SystemDataset",
    "TransmissionInterface",
    "build_model",
    "build_nonsync_scenarios",
    "build_scenarios",
    "cost_breakdown",
    "desk_ei",
    "discount_factor",
    "discount_factors",
    "gap_report",
    "gap_value",
    "interface_incidence",
    "lt_operate",
    "per_hour_scenarios",
    "sequential_plan",
    "st_operate",
    "toy_system",
    "validate_dataset",
]
