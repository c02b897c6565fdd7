"""The mentor: experience summary, lesson pool, plan construction.

A reflection on a failed trial always summarizes what was worth keeping and
turns it into a new plan. In-depth reflections additionally pull the best
fitting lesson out of the shared lesson pool before constructing the plan.
"""

from __future__ import annotations

import copy
import json
import logging
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

from .actor import Trajectory, parse_plan_lines
from .backend import Backend, BackendError, ChatMessage
from .prompts import numbered, render_prompt
from .scheduler import Intensity

logger = logging.getLogger(__name__)

DEFAULT_POOL_CAPACITY = 50
MENTOR_SUMMARIZED = "MentorSummarized"
HUMAN_INJECTED = "HumanInjected"

_FENCE = re.compile(r"```[A-Za-z_-]*[ \t]*\n(.*?)```", re.S)
_FIRST_INT = re.compile(r"\d+")
_PUNCT = str.maketrans("", "", string.punctuation)


class PlanConstructionError(ValueError):
    """No parseable action in the constructor's reply.

    ``partial`` carries the reflection assembled so far (with an empty
    plan) so the caller can fall back to text-only guidance.
    """

    def __init__(self, message: str, partial: "Optional[ReflectionRecord]" = None):
        super().__init__(message)
        self.partial = partial


def normalize_lesson(text: str) -> str:
    return " ".join(text.casefold().translate(_PUNCT).split())


def word_count(text: str) -> int:
    return len(text.split())


@dataclass
class Experience:
    summary: str = ""
    retained_actions: List[str] = field(default_factory=list)
    # the mentor's reply verbatim; already part of the record's full_text
    raw: str = field(default="", compare=False)

    def to_dict(self) -> dict:
        return {"summary": self.summary, "retained_actions": list(self.retained_actions)}

    @classmethod
    def from_dict(cls, d: dict) -> "Experience":
        return cls(d["summary"], list(d["retained_actions"]))

    def render(self) -> str:
        if not self.summary and not self.retained_actions:
            return "(none)"
        acts = "\n".join(self.retained_actions)
        return f"{self.summary}\nActions worth keeping:\n{acts}" if acts else self.summary


@dataclass
class Lesson:
    id: int
    text: str
    provenance: dict
    reference_count: int = 0

    def to_dict(self) -> dict:
        return {"id": self.id, "text": self.text, "provenance": dict(self.provenance), "reference_count": self.reference_count}

    @classmethod
    def from_dict(cls, d: dict) -> "Lesson":
        if not str(d.get("text", "")).strip():
            raise ValueError("lesson text must be non-empty")
        return cls(int(d["id"]), d["text"], dict(d["provenance"]), int(d.get("reference_count", 0)))


class LessonPool:
    """Ordered, bounded, deduplicated store of failure lessons.

    At capacity the oldest never-referenced lesson is evicted, or the
    oldest lesson if every lesson has been referenced.
    """

    def __init__(self, capacity: int = DEFAULT_POOL_CAPACITY, lessons: Iterable[Lesson] = ()):
        if capacity < 1:
            raise ValueError("pool capacity must be >= 1")
        self.capacity = capacity
        self.lessons: List[Lesson] = []
        self._next_id = 1
        self._journal: List[dict] = []
        for lesson in lessons:
            if normalize_lesson(lesson.text) in self._keys():
                raise ValueError(f"duplicate lesson {lesson.text!r}")
            self.lessons.append(lesson)
            self._next_id = max(self._next_id, lesson.id + 1)
        if len(self.lessons) > capacity:
            raise ValueError("pool exceeds its capacity")

    def __len__(self) -> int:
        return len(self.lessons)

    def __iter__(self):
        return iter(self.lessons)

    def _keys(self) -> set:
        return {normalize_lesson(l.text) for l in self.lessons}

    def add(self, text: str, provenance: dict) -> Optional[Lesson]:
        """Append a lesson; returns ``None`` when an equivalent one exists."""
        text = text.strip()
        if not text:
            raise ValueError("lesson text must be non-empty")
        if normalize_lesson(text) in self._keys():
            self._journal.append({"action": "duplicate", "text": text})
            return None
        if len(self.lessons) >= self.capacity:
            victim = next((l for l in self.lessons if l.reference_count == 0), self.lessons[0])
            self.lessons.remove(victim)
            self._journal.append({"action": "evicted", "lesson": victim.to_dict()})
        lesson = Lesson(self._next_id, text, dict(provenance))
        self._next_id += 1
        self.lessons.append(lesson)
        self._journal.append({"action": "added", "lesson": lesson.to_dict()})
        return lesson

    def reference(self, lesson: Lesson) -> None:
        lesson.reference_count += 1
        self._journal.append({"action": "referenced", "lesson": lesson.to_dict()})

    def drain_events(self) -> List[dict]:
        events, self._journal = self._journal, []
        return events

    def snapshot(self) -> "LessonPool":
        clone = LessonPool(self.capacity, copy.deepcopy(self.lessons))
        clone._next_id = self._next_id
        return clone

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for lesson in self.lessons:
                fh.write(json.dumps(lesson.to_dict(), ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path, capacity: int = DEFAULT_POOL_CAPACITY) -> "LessonPool":
        path = Path(path)
        lessons = []
        if path.exists():
            for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    lessons.append(Lesson.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                    raise ValueError(f"{path.name}: bad lesson at line {lineno}: {exc}") from None
        return cls(max(capacity, len(lessons)), lessons)


@dataclass
class ConstructedPlan:
    actions: List[str] = field(default_factory=list)
    rationale: str = ""

    def to_dict(self) -> dict:
        return {"actions": list(self.actions), "rationale": self.rationale}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstructedPlan":
        return cls(list(d["actions"]), d["rationale"])


@dataclass
class ReflectionRecord:
    task_id: str
    trial_index: int
    intensity: Intensity
    experience: Experience
    lesson: Optional[Lesson]
    plan: ConstructedPlan
    full_text: str

    def __post_init__(self):
        if self.intensity is Intensity.SIMPLE and self.lesson is not None:
            raise ValueError("simple reflections carry no lesson")

    @property
    def word_count(self) -> int:
        return word_count(self.full_text)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "trial_index": self.trial_index,
            "intensity": self.intensity.value,
            "experience": self.experience.to_dict(),
            "lesson": self.lesson.to_dict() if self.lesson else None,
            "plan": self.plan.to_dict(),
            "full_text": self.full_text,
            "word_count": self.word_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReflectionRecord":
        rec = cls(
            d["task_id"],
            d["trial_index"],
            Intensity(d["intensity"]),
            Experience.from_dict(d["experience"]),
            Lesson.from_dict(d["lesson"]) if d.get("lesson") else None,
            ConstructedPlan.from_dict(d["plan"]),
            d["full_text"],
        )
        if rec.word_count != d.get("word_count", rec.word_count):
            raise ValueError("word_count does not match full_text")
        return rec


# --------------------------------------------------------------------------
# submodules


def parse_experience(text: str, trajectory: Trajectory) -> Experience:
    block = _FENCE.search(text)
    summary = (_FENCE.sub("", text) if block else text).strip()
    if block is None:
        return Experience(summary, [], text)
    seen = set(trajectory.actions)
    retained = []
    for action in parse_plan_lines(block.group(1)):
        rendered = action.render()
        if rendered in seen:
            retained.append(rendered)
        else:
            logger.warning("dropping retained action %r absent from trajectory %s", rendered, trajectory.task_id)
    return Experience(summary, retained, text)


def summarize_experience(goal: str, trajectory: Trajectory, backend: Backend) -> Experience:
    messages = render_prompt("experience", {"goal": goal, "trajectory": trajectory.render()})
    reply = backend.complete(messages, task_id=trajectory.task_id, purpose="experience")
    return parse_experience(reply, trajectory)


def _lesson_sentence(text: str) -> str:
    line = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    line = re.sub(r"^(?:lesson\s*:\s*|[-*]\s+|\d+[.)]\s*)", "", line, flags=re.I)
    return line.strip().strip("\"'")


def maintain_lesson_pool(
    corrected: Sequence[Tuple[Trajectory, Trajectory]], pool: LessonPool, backend: Backend
) -> LessonPool:
    """Summarize one universal lesson per corrected (failed, succeeded) pair."""
    for failed, succeeded in corrected:
        if failed.task_id != succeeded.task_id or not succeeded.succeeded:
            raise ValueError("each pair must be a failed and a succeeded trial of the same task")
        messages = render_prompt(
            "lesson_maintain", {"goal": succeeded.task_id, "failed": failed.render(), "succeeded": succeeded.render()}
        )
        try:
            reply = backend.complete(messages, task_id=succeeded.task_id, purpose="lesson_maintain")
        except BackendError as exc:
            logger.warning("lesson pool update skipped for %s: %s", succeeded.task_id, exc)
            continue
        text = _lesson_sentence(reply)
        if not text:
            logger.warning("empty lesson from %s ignored", succeeded.task_id)
            continue
        pool.add(text, {"kind": MENTOR_SUMMARIZED, "task": succeeded.task_id, "trial": succeeded.trial_index})
    return pool


def _pick(reply: str, size: int) -> Optional[int]:
    m = _FIRST_INT.search(reply)
    if m is None:
        return None
    idx = int(m.group())
    return idx if 1 <= idx <= size else None


def extract_lesson(goal: str, trajectory: Trajectory, pool: LessonPool, backend: Backend) -> Optional[Lesson]:
    if not len(pool):
        return None
    lessons = list(pool)
    messages = render_prompt(
        "lesson_extract",
        {"goal": goal, "trajectory": trajectory.render(), "pool": numbered(l.text for l in lessons)},
    )
    reply = backend.complete(messages, task_id=trajectory.task_id, purpose="lesson_extract")
    idx = _pick(reply, len(lessons))
    if idx is None:
        retry = messages + [
            ChatMessage("assistant", reply or "(empty reply)"),
            ChatMessage("user", f"Reply with a single number between 1 and {len(lessons)}."),
        ]
        reply = backend.complete(retry, task_id=trajectory.task_id, purpose="lesson_extract")
        idx = _pick(reply, len(lessons))
        if idx is None:
            return None
    lesson = lessons[idx - 1]
    pool.reference(lesson)
    return lesson


def parse_plan(text: str) -> ConstructedPlan:
    actions, rationale = [], []
    for line in text.splitlines():
        parsed = parse_plan_lines(line)
        if parsed:
            actions.append(parsed[0].render())
        elif line.strip() and not line.strip().startswith("```"):
            rationale.append(line.strip())
    return ConstructedPlan(actions, "\n".join(rationale))


def construct_plan(
    goal: str, trajectory: Trajectory, experience: Experience, lesson: Optional[Lesson], backend: Backend
) -> Tuple[ConstructedPlan, str]:
    """Returns the plan and the raw reply (kept for reflection length)."""
    messages = render_prompt(
        "construct",
        {
            "goal": goal,
            "trajectory": trajectory.render(),
            "experience": experience.render(),
            "lesson": lesson.text if lesson else "(none)",
        },
    )
    reply = backend.complete(messages, task_id=trajectory.task_id, purpose="construct")
    plan = parse_plan(reply)
    if not plan.actions:
        raise PlanConstructionError(f"no executable action in constructed plan for {trajectory.task_id}")
    return plan, reply


def reflect(
    intensity: Intensity,
    goal: str,
    trajectory: Trajectory,
    pool: LessonPool,
    backend: Backend,
    use_experience: bool = True,
    use_lesson: bool = True,
) -> ReflectionRecord:
    """Reflect on a failed trial at the given intensity.

    ``use_experience`` / ``use_lesson`` switch off one submodule for
    ablations: the experience is then always empty, or no lesson is drawn.
    """
    if trajectory.succeeded:
        raise ValueError("reflect() needs a failed trajectory")
    intensity = Intensity(intensity)
    experience = summarize_experience(goal, trajectory, backend) if use_experience else Experience()
    lesson = None
    if intensity is Intensity.IN_DEPTH and use_lesson:
        lesson = extract_lesson(goal, trajectory, pool, backend)
    parts = [experience.raw.strip(), lesson.text if lesson else ""]
    try:
        plan, reply = construct_plan(goal, trajectory, experience, lesson, backend)
    except PlanConstructionError as exc:
        # keep what the mentor said so the next trial still gets text guidance
        exc.partial = ReflectionRecord(
            trajectory.task_id, trajectory.trial_index, intensity, experience,
            copy.deepcopy(lesson), ConstructedPlan([], ""), "\n\n".join(p for p in parts if p),
        )
        raise
    parts.append(reply.strip())
    return ReflectionRecord(
        trajectory.task_id,
        trajectory.trial_index,
        intensity,
        experience,
        copy.deepcopy(lesson),
        plan,
        "\n\n".join(p for p in parts if p),
    )


def baseline_reflect(goal: str, trajectory: Trajectory, backend: Backend) -> ReflectionRecord:
    """Single fixed-template reflection without experience/lesson split."""
    messages = render_prompt("reflect_baseline", {"goal": goal, "trajectory": trajectory.render()})
    reply = backend.complete(messages, task_id=trajectory.task_id, purpose="reflect_baseline")
    return ReflectionRecord(
        trajectory.task_id, trajectory.trial_index, Intensity.FIXED, Experience(), None, parse_plan(reply), reply.strip()
    )
