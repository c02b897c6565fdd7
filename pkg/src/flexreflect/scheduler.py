"""Difficulty-driven split of a task's trial budget into reflection intensities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

Ratio = Union[Fraction, float, int]


class ConfigurationError(ValueError):
    pass


class Intensity(str, Enum):
    SIMPLE = "Simple"
    IN_DEPTH = "InDepth"
    # single fixed-template reflection of the baseline strategy
    FIXED = "Fixed"


@dataclass(frozen=True)
class TaskMeta:
    task_type: str
    num_obj: int
    num_inter: int

    def __post_init__(self):
        if self.num_obj < 1 or self.num_inter < 1:
            raise ConfigurationError("num_obj and num_inter must be >= 1")

    @property
    def complexity(self) -> int:
        return self.num_obj + self.num_inter

    @classmethod
    def of(cls, scenario) -> "TaskMeta":
        return cls(scenario.task_type.value, scenario.num_obj, scenario.num_inter)


@dataclass(frozen=True)
class SuiteMeta:
    max_complexity: int

    @classmethod
    def from_tasks(cls, tasks: Iterable[TaskMeta]) -> "SuiteMeta":
        return cls(max((t.complexity for t in tasks), default=0))


@dataclass(frozen=True)
class EpisodeSchedule:
    ep_total: int
    k1: int
    k2: int
    difficulty: Fraction

    def __post_init__(self):
        assert self.k1 + self.k2 == self.ep_total and 1 <= self.k2 <= self.ep_total and self.k1 >= 0


def _exact(value: Ratio) -> Fraction:
    if isinstance(value, Rational):
        return Fraction(value)
    # shortest repr keeps 0.7 as 7/10 rather than its binary neighbour
    return Fraction(repr(float(value)))


def assess_difficulty(task: TaskMeta, suite: SuiteMeta) -> Fraction:
    """Task complexity relative to the most complex task of the suite."""
    if suite.max_complexity <= 0:
        raise ConfigurationError("suite max_complexity must be positive")
    if task.complexity > suite.max_complexity:
        raise ConfigurationError(
            f"task complexity {task.complexity} exceeds suite maximum {suite.max_complexity}"
        )
    return Fraction(task.complexity, suite.max_complexity)


def round_half_up(value: Fraction) -> int:
    return math.floor(value + Fraction(1, 2))


def allocate_episodes(difficulty: Ratio, ep_total: int) -> EpisodeSchedule:
    """In-depth count ``k2 = round_half_up(ep_total * difficulty)`` clamped to ``[1, ep_total]``."""
    if ep_total < 1:
        raise ConfigurationError("ep_total must be >= 1")
    d = _exact(difficulty)
    if not 0 < d <= 1:
        raise ConfigurationError(f"difficulty must lie in (0, 1], got {difficulty}")
    k2 = min(max(round_half_up(ep_total * d), 1), ep_total)
    return EpisodeSchedule(ep_total, ep_total - k2, k2, d)


def intensity_for_episode(schedule: EpisodeSchedule, failure_index: int) -> Intensity:
    # simple reflections first, in-depth once failures persist
    if not 1 <= failure_index <= schedule.ep_total:
        raise ConfigurationError(f"failure_index {failure_index} outside 1..{schedule.ep_total}")
    return Intensity.SIMPLE if failure_index <= schedule.k1 else Intensity.IN_DEPTH
