"""Resource allocation and multi-target tracking simulation for
heterogeneous radar-communication networks."""

__version__ = "0.1.0"

from .scenario import (Scenario, ScenarioError, build_schedule,
                       default_scenario_path, load_scenario)

__all__ = ["Scenario", "ScenarioError", "build_schedule",
           "default_scenario_path", "load_scenario", "__version__"]
