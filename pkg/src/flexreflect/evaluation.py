"""Success rate, reflection flexibility and reflection efficiency metrics.

Correct and erroneous actions of a failed trial are identified by aligning
its action strings with the reference solution (longest common
subsequence, exact string equality).
"""

from __future__ import annotations

import statistics
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .actor import Trajectory
from .memory import RunLog
from .mentor import ConstructedPlan, ReflectionRecord
from .textworld import TaskType

TYPE_ORDER = [t.value for t in TaskType]


class ReportError(ValueError):
    pass


class Label(str, Enum):
    CORRECT = "Correct"
    ERRONEOUS = "Erroneous"


@dataclass(frozen=True)
class ActionAlignment:
    actions: Tuple[str, ...]
    labels: Tuple[Label, ...]

    @property
    def correct(self) -> List[str]:
        return [a for a, l in zip(self.actions, self.labels) if l is Label.CORRECT]

    @property
    def erroneous(self) -> List[str]:
        return [a for a, l in zip(self.actions, self.labels) if l is Label.ERRONEOUS]

    @property
    def c_initial(self) -> int:
        return len(self.correct)

    @property
    def e_total(self) -> int:
        return len(self.erroneous)


def _suffix_lcs(a: Sequence[str], b: Sequence[str]) -> List[List[int]]:
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = table[i], table[i + 1]
        for j in range(m - 1, -1, -1):
            row[j] = below[j + 1] + 1 if a[i] == b[j] else max(below[j], row[j + 1])
    return table


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    return _suffix_lcs(a, b)[0][0] if a and b else 0


def _actions_of(failed) -> Tuple[str, ...]:
    return tuple(failed.actions if isinstance(failed, Trajectory) else failed)


def classify_actions(failed, reference: Sequence[str]) -> ActionAlignment:
    """Label each action of a failed trial Correct or Erroneous.

    Walks the failed actions in order and keeps an action whenever some
    match at or after the current reference position still completes an
    optimal alignment, taking the earliest such reference position.
    """
    if not reference:
        raise ValueError("reference solution must be non-empty")
    a, b = _actions_of(failed), tuple(str(r) for r in reference)
    table = _suffix_lcs(a, b)
    labels = []
    j = 0
    for i, action in enumerate(a):
        target = table[i][j]
        match = next(
            (jj for jj in range(j, len(b)) if b[jj] == action and 1 + table[i + 1][jj + 1] == target),
            None,
        )
        if match is None:
            labels.append(Label.ERRONEOUS)
        else:
            labels.append(Label.CORRECT)
            j = match + 1
    return ActionAlignment(a, tuple(labels))


def recall_counts(plan: ConstructedPlan, alignment: ActionAlignment) -> Tuple[int, int]:
    """(retained, initial): Correct actions kept in order by the plan."""
    return lcs_length(alignment.correct, plan.actions), alignment.c_initial


def precision_counts(plan: ConstructedPlan, alignment: ActionAlignment) -> Tuple[int, int]:
    """(corrected, total): Erroneous actions no longer present in the plan."""
    planned = set(plan.actions)
    return sum(1 for a in alignment.erroneous if a not in planned), alignment.e_total


def experience_recall(plan: ConstructedPlan, alignment: ActionAlignment, failed=None) -> Optional[Fraction]:
    """``None`` when the failed trial had no correct action."""
    retained, initial = recall_counts(plan, alignment)
    return Fraction(retained, initial) if initial else None


def correction_precision(plan: ConstructedPlan, alignment: ActionAlignment, failed=None) -> Optional[Fraction]:
    """``None`` when the failed trial had no erroneous action."""
    corrected, total = precision_counts(plan, alignment)
    return Fraction(corrected, total) if total else None


def flexibility_stats(records) -> Tuple[float, float]:
    """Mean and population standard deviation of reflection word counts."""
    counts = [r if isinstance(r, int) else r.word_count for r in records]
    if not counts:
        raise ValueError("flexibility_stats needs at least one reflection")
    return float(statistics.fmean(counts)), float(statistics.pstdev(counts))


@dataclass
class TaskRow:
    task: str
    task_type: str
    episodes_used: int
    success: bool
    recall: Optional[float]
    precision: Optional[float]
    reflection_lengths: List[int]
    error: Optional[str] = None


@dataclass
class MetricsReport:
    strategy: str
    ep_total: int
    n_tasks: int
    per_type: Dict[str, float]
    overall: float
    n_reflections: int
    flexibility_ave: Optional[float]
    flexibility_std: Optional[float]
    recall_exp: Optional[float]
    precision_corr: Optional[float]
    episode_curve: List[int]
    recall_by_episode: List[Optional[float]]
    precision_by_episode: List[Optional[float]]
    calls: int = 0
    tokens: int = 0
    tasks: List[TaskRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        d = dict(d)
        d["tasks"] = [TaskRow(**t) for t in d.get("tasks", ())]
        return cls(**d)


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def _check_complete(run: RunLog) -> None:
    if run.complete:
        return
    if not run.events:
        raise ReportError("incomplete trace: no event after the run header")
    last = run.events[-1]
    raise ReportError(
        f"incomplete trace: last valid event is #{len(run.events)} ({last['kind']}"
        + (f", task {last['task']}" if "task" in last else "")
        + ")"
    )


def success_rate(run: RunLog) -> MetricsReport:
    """Build the full metrics report of a completed run."""
    _check_complete(run)
    ep_total = int(run.header.get("ep_total", 1))
    starts = {e["task"]: e for e in run.of_kind("task-start")}
    ends = {e["task"]: e for e in run.of_kind("task-end")}
    trajectories = {
        (e["task"], e["trial"]): Trajectory.from_dict(e["trajectory"]) for e in run.of_kind("trajectory-commit")
    }
    records = [ReflectionRecord.from_dict(e["record"]) for e in run.of_kind("reflection")]

    by_type: Dict[str, List[bool]] = defaultdict(list)
    curve = [0] * ep_total
    for task, start in starts.items():
        end = ends.get(task)
        if end is None:
            raise ReportError(f"task {task!r} has no task-end event")
        by_type[start["task_type"]].append(bool(end["success"]))
        if end["success"]:
            for e in range(end["trials_used"] - 1, ep_total):
                curve[e] += 1

    per_record = []
    for rec in records:
        failed = trajectories.get((rec.task_id, rec.trial_index))
        if failed is None:
            raise ReportError(f"reflection without trajectory: {rec.task_id} trial {rec.trial_index}")
        alignment = classify_actions(failed, starts[rec.task_id]["reference"])
        per_record.append((rec, recall_counts(rec.plan, alignment), precision_counts(rec.plan, alignment)))

    def pooled(rows, which):
        num = sum(r[which][0] for r in rows)
        den = sum(r[which][1] for r in rows)
        return _ratio(num, den)

    by_episode = defaultdict(list)
    by_task = defaultdict(list)
    for row in per_record:
        by_episode[row[0].trial_index].append(row)
        by_task[row[0].task_id].append(row)

    rows = []
    for task, start in starts.items():
        end = ends[task]
        mine = by_task.get(task, [])
        rows.append(
            TaskRow(
                task,
                start["task_type"],
                end["trials_used"],
                bool(end["success"]),
                pooled(mine, 1),
                pooled(mine, 2),
                [r[0].word_count for r in mine],
                end.get("error"),
            )
        )

    per_type = {t: sum(v) / len(v) for t in TYPE_ORDER for v in [by_type.get(t)] if v}
    n_tasks = len(starts)
    successes = sum(sum(v) for v in by_type.values())
    if records:
        ave, std = flexibility_stats(records)
    else:
        ave = std = None
    end_event = run.events[-1]
    return MetricsReport(
        strategy=str(run.header.get("strategy", "")),
        ep_total=ep_total,
        n_tasks=n_tasks,
        per_type=per_type,
        overall=successes / n_tasks if n_tasks else 0.0,
        n_reflections=len(records),
        flexibility_ave=ave,
        flexibility_std=std,
        recall_exp=pooled(per_record, 1),
        precision_corr=pooled(per_record, 2),
        episode_curve=curve,
        recall_by_episode=[pooled(by_episode.get(e, []), 1) for e in range(1, ep_total + 1)],
        precision_by_episode=[pooled(by_episode.get(e, []), 2) for e in range(1, ep_total + 1)],
        calls=int(end_event.get("calls", 0)),
        tokens=int(end_event.get("tokens", 0)),
        tasks=rows,
    )
