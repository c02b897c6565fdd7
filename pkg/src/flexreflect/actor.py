"""The actor: one planning trial against the text world."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Union

from .backend import Backend, BackendError, ChatMessage
from .prompts import FORMAT_REMINDER, render_prompt
from .textworld import Action, Scenario, reset, step, try_parse_action

DEFAULT_MAX_STEPS = 50
DEFAULT_K_WINDOW = 3


class Mode(str, Enum):
    REACT = "ReAct"
    ONE_SHOT = "OneShot"


class StepKind(str, Enum):
    THOUGHT = "thought"
    ACTION = "action"


class Terminal(str, Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"


@dataclass(frozen=True)
class Step:
    kind: StepKind
    text: str
    observation: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "text": self.text}
        if self.kind is StepKind.ACTION:
            d["observation"] = self.observation
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Step":
        return cls(StepKind(d["kind"]), d["text"], d.get("observation"))


@dataclass
class Trajectory:
    task_id: str
    trial_index: int
    steps: List[Step] = field(default_factory=list)
    terminal: Optional[Terminal] = None
    reason: Optional[str] = None
    first_prompt: str = ""

    @property
    def action_count(self) -> int:
        return sum(1 for s in self.steps if s.kind is StepKind.ACTION)

    @property
    def actions(self) -> List[str]:
        return [s.text for s in self.steps if s.kind is StepKind.ACTION]

    @property
    def succeeded(self) -> bool:
        return self.terminal is Terminal.SUCCESS

    def finish(self, terminal: Terminal, reason: Optional[str] = None) -> None:
        if self.terminal is not None:
            raise RuntimeError("trajectory terminal status already set")
        self.terminal = terminal
        self.reason = reason

    def render(self) -> str:
        """Transcript text as shown to the mentor."""
        lines = []
        for s in self.steps:
            if s.kind is StepKind.THOUGHT:
                lines.append(f"think: {s.text}")
            else:
                lines.append(f"> {s.text}\n{s.observation}")
        status = self.terminal.value if self.terminal else "unfinished"
        if self.reason:
            status += f" ({self.reason})"
        lines.append(f"[outcome: {status}]")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "trial_index": self.trial_index,
            "terminal": self.terminal.value if self.terminal else None,
            "reason": self.reason,
            "action_count": self.action_count,
            "first_prompt": self.first_prompt,
            "steps": [s.to_dict() for s in self.steps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        traj = cls(
            d["task_id"],
            d["trial_index"],
            [Step.from_dict(s) for s in d["steps"]],
            Terminal(d["terminal"]) if d["terminal"] else None,
            d.get("reason"),
            d.get("first_prompt", ""),
        )
        if traj.action_count != d.get("action_count", traj.action_count):
            raise ValueError("action_count does not match the recorded steps")
        return traj


@dataclass
class PlanContext:
    goal: str
    current_observation: str
    reflections: List[str] = field(default_factory=list)
    injected_plan: Optional[List[str]] = None
    k_window: int = DEFAULT_K_WINDOW

    def __post_init__(self):
        if len(self.reflections) > self.k_window:
            raise ValueError(f"{len(self.reflections)} reflections exceed window {self.k_window}")


@dataclass(frozen=True)
class Thought:
    text: str


@dataclass(frozen=True)
class GiveUp:
    pass


class UnparseableOutput(ValueError):
    pass


ActorOutput = Union[Thought, Action, GiveUp]

_ACTION_PREFIX = re.compile(r"^(?:action\s*:\s*|>\s*)", re.I)
_LIST_MARKER = re.compile(r"^(?:\d+[.)]\s*|[-*]\s+)")


def parse_actor_output(text: str) -> ActorOutput:
    """Interpret the first non-empty line of a model reply."""
    line = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    if not line:
        raise UnparseableOutput("empty reply")
    low = line.lower()
    if low.startswith("think:"):
        return Thought(line[len("think:"):].strip())
    if low.rstrip(".!") == "give up":
        return GiveUp()
    action = try_parse_action(_ACTION_PREFIX.sub("", line))
    if action is None:
        raise UnparseableOutput(line)
    return action


def parse_plan_lines(text: str) -> List[Action]:
    """Every line of ``text`` that parses as a command, in order."""
    out = []
    for line in text.splitlines():
        line = _LIST_MARKER.sub("", line.strip())
        action = try_parse_action(_ACTION_PREFIX.sub("", line)) if line else None
        if action is not None:
            out.append(action)
    return out


def _reflection_block(reflections: List[str]) -> str:
    if not reflections:
        return ""
    body = "\n".join(f"- {r}" for r in reflections)
    return f"\nYour memory of previous failed attempts:\n{body}\n"


def _plan_block(plan: Optional[List[str]]) -> str:
    if not plan:
        return ""
    return "\nSuggested plan from your mentor:\n" + "\n".join(plan) + "\n"


def run_trial(
    scenario: Scenario,
    context: PlanContext,
    backend: Backend,
    mode: Mode = Mode.REACT,
    max_steps: int = DEFAULT_MAX_STEPS,
    trial_index: int = 1,
    on_step: Optional[Callable[[Step], None]] = None,
) -> Trajectory:
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    traj = Trajectory(scenario.id, trial_index)

    def record(s: Step) -> None:
        traj.steps.append(s)
        if on_step is not None:
            on_step(s)

    if Mode(mode) is Mode.ONE_SHOT:
        return _run_one_shot(scenario, context, backend, max_steps, traj, record)

    state, _ = reset(scenario)
    history: List[str] = []
    for _ in range(max_steps):
        messages = render_prompt(
            "actor_step",
            {
                "goal": context.goal,
                "reflections": _reflection_block(context.reflections),
                "plan": _plan_block(context.injected_plan),
                "observation": context.current_observation,
                "history": "\n".join(history) or "(nothing yet)",
            },
        )
        if not traj.first_prompt:
            traj.first_prompt = messages[-1].content
        try:
            reply = backend.complete(messages, task_id=scenario.id, purpose="actor_step")
            try:
                parsed = parse_actor_output(reply)
            except UnparseableOutput:
                retry = messages + [
                    ChatMessage("assistant", reply or "(empty reply)"),
                    ChatMessage("user", FORMAT_REMINDER),
                ]
                reply = backend.complete(retry, task_id=scenario.id, purpose="actor_step")
                try:
                    parsed = parse_actor_output(reply)
                except UnparseableOutput:
                    parsed = Thought(reply.strip())
        except BackendError as exc:
            traj.finish(Terminal.FAILURE, f"backend-error: {exc}")
            return traj

        if isinstance(parsed, GiveUp):
            traj.finish(Terminal.FAILURE, "gave-up")
            return traj
        if isinstance(parsed, Thought):
            record(Step(StepKind.THOUGHT, parsed.text))
            history.append(f"think: {parsed.text}\nOK.")
            continue
        state, outcome = step(state, scenario, parsed)
        record(Step(StepKind.ACTION, parsed.render(), outcome.observation))
        history.append(f"> {parsed.render()}\n{outcome.observation}")
        if outcome.success:
            traj.finish(Terminal.SUCCESS)
            return traj
    traj.finish(Terminal.FAILURE, "step-limit")
    return traj


def _run_one_shot(scenario, context, backend, max_steps, traj, record) -> Trajectory:
    messages = render_prompt("actor_plan", {"goal": context.goal, "observation": context.current_observation})
    traj.first_prompt = messages[-1].content
    try:
        reply = backend.complete(messages, task_id=scenario.id, purpose="actor_plan")
    except BackendError as exc:
        traj.finish(Terminal.FAILURE, f"backend-error: {exc}")
        return traj
    plan = parse_plan_lines(reply)
    state, _ = reset(scenario)
    for action in plan[:max_steps]:
        state, outcome = step(state, scenario, action)
        record(Step(StepKind.ACTION, action.render(), outcome.observation))
        if outcome.success:
            traj.finish(Terminal.SUCCESS)
            return traj
    traj.finish(Terminal.FAILURE, "step-limit" if len(plan) > max_steps else "plan-exhausted")
    return traj

