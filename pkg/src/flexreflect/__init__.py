"""Mentor-actor task planning with flexible self-reflection on a household text world."""

from .evaluation import MetricsReport, success_rate
from .harness import RunConfig, Strategy, inject_lesson, run
from .textworld import load_scenario, load_suite, solve_reference

__version__ = "0.1.0"

__all__ = [
    "MetricsReport",
    "RunConfig",
    "Strategy",
    "inject_lesson",
    "load_scenario",
    "load_suite",
    "run",
    "solve_reference",
    "success_rate",
]
