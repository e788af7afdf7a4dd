"""Cluster-kinetics epidemic simulator for lockdown vs no-lockdown comparisons."""

__version__ = "0.1.0"

from .config import ScenarioConfig, load_config
from .engine import run_scenario, step_day
from .metrics import DailyMetrics, compare_runs
from .population import load_dataset
from .world import Policy, World

__all__ = ["ScenarioConfig", "load_config", "run_scenario", "step_day", "DailyMetrics",
           "compare_runs", "load_dataset", "Policy", "World", "__version__"]
