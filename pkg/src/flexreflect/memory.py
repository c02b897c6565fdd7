"""Short-term trajectory store, long-term reflection store and the run trace.

The trace is JSON Lines: a ``run-header`` line followed by one event per
line, each tagged with its ``kind``.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Dict, List, Optional

from .actor import Step, Trajectory

HEADER_KIND = "run-header"
EVENT_KINDS = (
    "task-start",
    "schedule",
    "trajectory-step",
    "trajectory-commit",
    "reflection",
    "pool-update",
    "task-end",
    "run-end",
)


class UsageError(RuntimeError):
    """Raised when the store is driven out of order."""


class TraceError(ValueError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


@dataclass
class RunLog:
    header: dict = field(default_factory=dict)
    events: List[dict] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()
        self._sink: Optional[IO[str]] = None

    def __eq__(self, other) -> bool:
        return isinstance(other, RunLog) and self.header == other.header and self.events == other.events

    def emit(self, kind: str, **payload) -> dict:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        event = {"kind": kind, **payload}
        with self._lock:
            self.events.append(event)
            if self._sink is not None:
                self._sink.write(_dumps(event) + "\n")
                self._sink.flush()
        return event

    def extend(self, events: List[dict]) -> None:
        for event in events:
            payload = {k: v for k, v in event.items() if k != "kind"}
            self.emit(event["kind"], **payload)

    def stream_to(self, path) -> None:
        """Write the header and all events so far, then append new events as they come."""
        fh = open(path, "w", encoding="utf-8")
        fh.write(_dumps({"kind": HEADER_KIND, **self.header}) + "\n")
        for event in self.events:
            fh.write(_dumps(event) + "\n")
        fh.flush()
        self._sink = fh

    def close(self) -> None:
        if self._sink is not None:
            self._sink.close()
            self._sink = None

    def of_kind(self, kind: str) -> List[dict]:
        return [e for e in self.events if e["kind"] == kind]

    @property
    def complete(self) -> bool:
        return bool(self.events) and self.events[-1]["kind"] == "run-end"


def persist_run(log: RunLog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dumps({"kind": HEADER_KIND, **log.header}) + "\n")
        for event in log.events:
            fh.write(_dumps(event) + "\n")


def load_run(path) -> RunLog:
    path = Path(path)
    header = None
    events = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"{path.name}: corrupt line {lineno}: {exc.msg}") from None
            if not isinstance(obj, dict) or "kind" not in obj:
                raise TraceError(f"{path.name}: line {lineno} is not an event")
            if lineno == 1:
                if obj["kind"] != HEADER_KIND:
                    raise TraceError(f"{path.name}: line 1 must be the run header")
                header = {k: v for k, v in obj.items() if k != "kind"}
                continue
            if obj["kind"] not in EVENT_KINDS:
                raise TraceError(f"{path.name}: unknown event kind {obj['kind']!r} at line {lineno}")
            events.append(obj)
    if header is None:
        raise TraceError(f"{path.name}: empty trace")
    return RunLog(header, events)


class MemoryStore:
    """Trajectory and reflection memory for the tasks of one run.

    ``current`` holds the in-flight trial; reflections are append-only and
    kept per task in trial order.
    """

    def __init__(self, log: Optional[RunLog] = None):
        self.log = log if log is not None else RunLog()
        self.current: Optional[Trajectory] = None
        self.committed = 0
        self._last_trial: Dict[str, int] = {}
        self._reflections: Dict[str, list] = {}

    def begin_trial(self, task_id: str, trial_index: int) -> None:
        if self.current is not None:
            raise UsageError(f"trial {self.current.trial_index} of {self.current.task_id!r} not committed")
        expected = self._last_trial.get(task_id, 0) + 1
        if trial_index != expected:
            raise UsageError(f"task {task_id!r}: expected trial {expected}, got {trial_index}")
        self.current = Trajectory(task_id, trial_index)

    def record_step(self, step: Step) -> None:
        if self.current is None:
            raise UsageError("record_step outside a trial")
        self.current.steps.append(step)
        self.log.emit(
            "trajectory-step", task=self.current.task_id, trial=self.current.trial_index, step=step.to_dict()
        )

    def commit_trajectory(self, trajectory: Trajectory) -> None:
        cur = self.current
        if cur is None:
            raise UsageError("commit without begin")
        if (trajectory.task_id, trajectory.trial_index) != (cur.task_id, cur.trial_index):
            raise UsageError("committed trajectory does not match the begun trial")
        if cur.steps and cur.steps != trajectory.steps:
            raise UsageError("committed trajectory diverges from the recorded steps")
        if trajectory.terminal is None:
            raise UsageError("trajectory has no terminal status")
        self.log.emit(
            "trajectory-commit", task=trajectory.task_id, trial=trajectory.trial_index, trajectory=trajectory.to_dict()
        )
        self._last_trial[cur.task_id] = cur.trial_index
        self.current = None
        self.committed += 1

    def append_reflection(self, record) -> None:
        stored = self._reflections.setdefault(record.task_id, [])
        if any(r.trial_index == record.trial_index for r in stored):
            raise UsageError(f"task {record.task_id!r} already has a reflection for trial {record.trial_index}")
        if stored and record.trial_index < stored[-1].trial_index:
            raise UsageError("reflections must be appended in trial order")
        stored.append(record)
        self.log.emit("reflection", task=record.task_id, trial=record.trial_index, record=record.to_dict())

    def reflections(self, task_id: str) -> list:
        return list(self._reflections.get(task_id, ()))

    def recent_reflections(self, task_id: str, k: int) -> List[str]:
        if k < 0:
            raise ValueError("k must be >= 0")
        if k == 0:
            return []
        return [r.full_text for r in self._reflections.get(task_id, ())[-k:]]
