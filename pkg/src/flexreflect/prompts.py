"""Prompt templates for the actor and the mentor.

Templates use ``string.Template`` placeholders. Every placeholder is a
required slot; ``render_prompt`` refuses to render with one missing.
"""

from __future__ import annotations

import re
from string import Template
from typing import Dict, List, Mapping, Tuple

from .backend import ChatMessage


class TemplateError(KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "template error"


COMMANDS = (
    "go to <recep>, open <recep>, close <recep>, take <obj> from <recep>, "
    "put <obj> in/on <recep>, clean <obj> with <recep>, heat <obj> with <recep>, "
    "cool <obj> with <recep>, use <recep>, examine <obj>"
)

FORMAT_REMINDER = (
    "Your reply could not be understood. Reply with exactly one line: "
    "'think: <your reasoning>', 'action: <command>' or 'give up'."
)

_ACTOR_SYSTEM = (
    "You are a household robot solving a task in a text-based room. You carry at most one object. "
    "At every turn reply with exactly one line: 'think: <reasoning>' to reason, "
    "'action: <command>' to act, or 'give up' to abandon the attempt.\n"
    f"Available commands: {COMMANDS}."
)

_MENTOR_SYSTEM = (
    "You are a mentor reviewing a household robot's failed attempt at a task. "
    "Be concrete and refer to objects and receptacles by their exact names."
)

TEMPLATES: Dict[str, Tuple[str, str]] = {
    "actor_step": (
        _ACTOR_SYSTEM,
        "Your task is to: $goal\n$reflections$plan\n"
        "Environment:\n$observation\n\nSo far:\n$history\n\nNext line:",
    ),
    "actor_plan": (
        "You are a household robot planner. Write the complete action sequence for the task, "
        f"one command per line, nothing else.\nAvailable commands: {COMMANDS}.",
        "Your task is to: $goal\n\nEnvironment:\n$observation\n\nAction sequence:",
    ),
    "experience": (
        _MENTOR_SYSTEM,
        "Task: $goal\n\nFailed trajectory:\n$trajectory\n\n"
        "Summarize the effective interaction attempts in this trajectory that are worth keeping. "
        "Write a short summary, then list the actions to keep, in order, inside a fenced block:\n"
        "```actions\n<one action per line>\n```",
    ),
    "lesson_maintain": (
        _MENTOR_SYSTEM,
        "Task: $goal\n\nFailed trajectory:\n$failed\n\nCorrected trajectory:\n$succeeded\n\n"
        "State one universal lesson, valid in any household scenario, that explains what the "
        "correction fixed. Reply with a single imperative sentence.",
    ),
    "lesson_extract": (
        _MENTOR_SYSTEM,
        "Task: $goal\n\nFailed trajectory:\n$trajectory\n\nLesson pool:\n$pool\n\n"
        "Which lesson best explains the cause of this failure? Reply with its number only.",
    ),
    "construct": (
        _MENTOR_SYSTEM,
        "Task: $goal\n\nFailed trajectory:\n$trajectory\n\nValuable experience:\n$experience\n\n"
        "Failure lesson:\n$lesson\n\n"
        "Combine the experience and the lesson into an improved plan for the next attempt. "
        "Give a brief rationale, then the full action sequence with one command per line.",
    ),
    "reflect_baseline": (
        _MENTOR_SYSTEM,
        "Task: $goal\n\nFailed trajectory:\n$trajectory\n\n"
        "In a few sentences, diagnose the reason for the failure and devise a new, concise, "
        "high-level plan that accounts for the mistake. Refer to specific actions.",
    ),
}


def required_slots(template_id: str) -> List[str]:
    if template_id not in TEMPLATES:
        raise TemplateError(f"unknown template {template_id!r}")
    names = []
    for text in TEMPLATES[template_id]:
        for m in Template.pattern.finditer(text):
            name = m.group("named") or m.group("braced")
            if name and name not in names:
                names.append(name)
    return names


def render_prompt(template_id: str, slots: Mapping[str, str]) -> List[ChatMessage]:
    for name in required_slots(template_id):
        if name not in slots:
            raise TemplateError(f"template {template_id!r} is missing slot {name!r}")
    system, user = TEMPLATES[template_id]
    return [
        ChatMessage("system", Template(system).substitute(slots)),
        ChatMessage("user", Template(user).substitute(slots)),
    ]


def numbered(lines, start: int = 1) -> str:
    return "\n".join(f"[{i}] {text}" for i, text in enumerate(lines, start)) or "(empty)"


_POOL_LINE = re.compile(r"^\[(\d+)\] (.*)$", re.M)


def parse_numbered(text: str) -> Dict[int, str]:
    """Inverse of :func:`numbered`; used by the fixture author."""
    return {int(m.group(1)): m.group(2) for m in _POOL_LINE.finditer(text)}
