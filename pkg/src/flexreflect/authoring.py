"""Author the bundled replay fixtures.

``OracleGuidedModel`` is a deterministic stand-in for a chat model. It
plays both the actor and the mentor, knows each scenario's reference
solution and a scripted first-attempt mistake, and only fixes "major"
mistakes when the mentor is handed the right lesson. Recording a harness
run against it yields a fixture that replays that run exactly.

    python -m flexreflect.authoring            # rewrite bundled fixtures
    python -m flexreflect.authoring --check    # verify they are current
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .backend import Backend, BackendConfig, Fixture, RecordingBackend, bundled_fixture_path
from .evaluation import classify_actions
from .mentor import normalize_lesson
from .prompts import parse_numbered
from .textworld import NOTHING_HAPPENS, Scenario, bundled_suite_path, execute, load_suite, parse_action, solve_reference

LESSONS = {
    "open": "Open a closed receptacle before trying to take an object from it or to put an object into it.",
    "lamp": "To look at an object under a lamp, hold the object and use the lamp; examining the object alone does nothing.",
    "clear": "When an appliance already holds something, take that item out and store it elsewhere before using the appliance.",
    "capacity": "You can carry only one object, so put the first object at its destination before picking up the second one.",
}

PROBLEMS = {
    "open": "the object sat in a closed receptacle that was never opened",
    "lamp": "the object was examined instead of using the desklamp while holding it",
    "clear": "the appliance was occupied, and the item inside was never moved out",
    "capacity": "a second object was taken while the first was still being carried",
}


@dataclass(frozen=True)
class Flaw:
    category: Optional[str]
    skip: Tuple[str, ...] = ()
    extra: Tuple[str, ...] = ()
    major: bool = False


# first-attempt mistakes; ``skip`` removes the first occurrence of each step
# from the reference, ``extra`` is appended when no step fails on its own
FLAWS: Dict[str, Flaw] = {
    "pick_place_01": Flaw(None),
    "pick_place_02": Flaw("open", skip=("open drawer 2",)),
    "examine_light_01": Flaw("lamp", skip=("use desklamp 1",), extra=("examine alarmclock 1",)),
    "examine_light_02": Flaw("open", skip=("open drawer 2",)),
    "clean_place_01": Flaw("clear", skip=("take plate 1 from sinkbasin 1", "put plate 1 in/on cabinet 2")),
    "heat_place_01": Flaw("clear", skip=("take potato 1 from microwave 1", "put potato 1 in/on cabinet 1"), major=True),
    "cool_place_01": Flaw("clear", skip=("take lettuce 1 from fridge 1", "put lettuce 1 in/on cabinet 2")),
    "heat_place_02": Flaw("clear", skip=("take mug 1 from microwave 1", "put mug 1 in/on fridge 1"), major=True),
    "cool_place_02": Flaw("clear", skip=("take tomato 1 from fridge 1", "put tomato 1 in/on stoveburner 1"), major=True),
    "clean_place_02": Flaw("clear", skip=("take pan 1 from sinkbasin 1", "put pan 1 in/on cabinet 1"), major=True),
    "pick_two_01": Flaw("capacity", skip=("go to dresser 1", "open dresser 1", "put pillow 1 in/on dresser 1")),
    "pick_two_02": Flaw(
        "capacity", skip=("go to cabinet 1", "open cabinet 1", "put soapbar 1 in/on cabinet 1"), major=True
    ),
}

FIXTURE_STRATEGIES = {
    "fcrf_demo": "FCRF",
    "rr_demo": "ReasoningReflection",
    "planning_only": "PlanningOnly",
    "reasoning_only": "ReasoningOnly",
    "fcrf_no_experience": "FcrfNoExperience",
    "fcrf_no_lesson": "FcrfNoLesson",
}


def _without(reference: List[str], skip) -> List[str]:
    out = list(reference)
    for s in skip:
        out.remove(s)
    return out


@dataclass
class _Script:
    scenario: Scenario
    flaw: Flaw
    reference: List[str]
    degraded: List[str]
    attempt: List[str]
    detour: str

    @classmethod
    def build(cls, scenario: Scenario, flaw: Flaw) -> "_Script":
        reference = [a.render() for a in solve_reference(scenario)]
        degraded = _without(reference, flaw.skip)
        detour = next(
            f"go to {r.name}"
            for r in scenario.receptacles
            if f"go to {r.name}" not in reference and r.name != scenario.goal.receptacle
        )
        if flaw.category is None:
            return cls(scenario, flaw, reference, degraded, [], detour)
        _, outcomes = execute(scenario, [parse_action(a) for a in degraded])
        stop = next((i for i, o in enumerate(outcomes) if o.observation == NOTHING_HAPPENS), None)
        attempt = [detour] + (degraded[: stop + 1] if stop is not None else degraded + list(flaw.extra))
        return cls(scenario, flaw, reference, degraded, attempt, detour)

    @property
    def target(self) -> str:
        return self.scenario.goal.targets[0].rsplit(" ", 1)[0]

    def first_attempt_lines(self) -> List[str]:
        if self.flaw.category is None:
            return [f"think: The {self.target} should be easy to find."] + [f"action: {a}" for a in self.reference]
        lines = [f"think: I need to find the {self.target} first."]
        lines += [f"action: {a}" for a in self.attempt]
        lines += ["think: That did not work and I do not see another way.", "give up"]
        return lines

    def wrong_plan(self) -> List[str]:
        if self.flaw.category is not None:
            return list(self.attempt)
        # right object, wrong destination
        wrong = self.detour[len("go to "):]
        return self.reference[:-2] + [f"go to {wrong}", f"put {self.scenario.goal.targets[0]} in/on {wrong}"]


def _plan_block(text: str) -> Optional[List[str]]:
    marker = "Suggested plan from your mentor:\n"
    if marker not in text:
        return None
    body = text.split(marker, 1)[1].split("\n\n", 1)[0]
    return [ln for ln in body.splitlines() if ln.strip()]


def _between(text: str, start: str, end: str) -> str:
    return text.split(start, 1)[1].split(end, 1)[0].strip()


@dataclass
class _TaskState:
    queue: List[str] = field(default_factory=list)
    last_plan: Optional[List[str]] = None


class OracleGuidedModel(Backend):
    """Deterministic actor + mentor used to author replay fixtures."""

    def __init__(self, scenarios: List[Scenario]):
        super().__init__(BackendConfig(endpoint="oracle"))
        self.scripts = {s.id: _Script.build(s, FLAWS[s.id]) for s in scenarios}
        self.state: Dict[str, _TaskState] = {s.id: _TaskState() for s in scenarios}

    def _complete(self, messages, task_id, purpose):
        script, state = self.scripts[task_id], self.state[task_id]
        user = messages[1].content if len(messages) > 1 else messages[-1].content
        handler = getattr(self, f"_on_{purpose}")
        return handler(script, state, user)

    # actor ---------------------------------------------------------------

    def _on_actor_step(self, script: _Script, state: _TaskState, prompt: str) -> str:
        if "So far:\n(nothing yet)" in prompt:
            plan = _plan_block(prompt)
            if plan is None and "previous failed attempts" in prompt:
                plan = state.last_plan
            if plan is None:
                state.queue = script.first_attempt_lines()
            else:
                state.queue = ["think: I will follow the revised plan step by step."]
                state.queue += [f"action: {a}" for a in plan] + ["give up"]
        return state.queue.pop(0) if state.queue else "give up"

    def _on_actor_plan(self, script: _Script, state: _TaskState, prompt: str) -> str:
        return "\n".join(script.wrong_plan())

    # mentor --------------------------------------------------------------

    def _on_experience(self, script: _Script, state: _TaskState, prompt: str) -> str:
        failed = [ln[2:] for ln in _between(prompt, "Failed trajectory:\n", "\n\nSummarize").splitlines() if ln.startswith("> ")]
        alignment = classify_actions(failed, script.reference)
        summary = (
            f"The attempt made real progress: {alignment.c_initial} of its {len(failed)} actions moved the task forward"
        )
        if alignment.erroneous:
            summary += f", while {', '.join(repr(a) for a in alignment.erroneous)} did not help"
        summary += ". The useful steps are kept in order."
        body = "\n".join(alignment.correct)
        return f"{summary}\n```actions\n{body}\n```"

    def _on_lesson_maintain(self, script: _Script, state: _TaskState, prompt: str) -> str:
        category = script.flaw.category or "open"
        return LESSONS[category]

    def _on_lesson_extract(self, script: _Script, state: _TaskState, prompt: str) -> str:
        pool = parse_numbered(_between(prompt, "Lesson pool:\n", "\n\nWhich lesson"))
        wanted = normalize_lesson(LESSONS[script.flaw.category]) if script.flaw.category else None
        for idx, text in pool.items():
            if normalize_lesson(text) == wanted:
                return str(idx)
        return "1"

    def _fixable(self, script: _Script, lesson: str) -> bool:
        if not script.flaw.major:
            return True
        return normalize_lesson(lesson) == normalize_lesson(LESSONS[script.flaw.category])

    def _on_construct(self, script: _Script, state: _TaskState, prompt: str) -> str:
        lesson = _between(prompt, "Failure lesson:\n", "\n\nCombine")
        has_lesson = lesson != "(none)"
        fixed = self._fixable(script, lesson)
        plan = script.reference if fixed else script.degraded
        state.last_plan = list(plan)
        if not has_lesson:
            if fixed:
                why = f"Rationale: keep the useful steps and repair the mistake, since {PROBLEMS[script.flaw.category]}."
            else:
                why = "Rationale: keep the useful steps and retry the same route more carefully."
            return why + "\n" + "\n".join(plan)
        if fixed and script.flaw.major:
            why = (
                "Rationale: the retrieved lesson explains this failure directly. "
                f"In the previous attempt {PROBLEMS[script.flaw.category]}, which is exactly the situation "
                "the lesson warns about. The steps that already worked are kept in the same order, and the "
                "missing steps are inserted where the lesson requires them, before the step that failed. "
                "Nothing else about the route changes, so the final placement stays as it was and the plan "
                "remains as short as possible."
            )
        elif fixed:
            why = (
                "Rationale: the retrieved lesson is only loosely related, so the plan relies mostly on the "
                f"experience. Looking at the trajectory, {PROBLEMS[script.flaw.category]}. The useful steps are "
                "kept in order and the missing steps are added right before the point where the attempt stalled, "
                "which should be enough to finish the task on the next attempt without extra detours."
            )
        else:
            why = (
                "Rationale: the retrieved lesson does not seem to match what went wrong here, so it is set aside. "
                "The useful steps are kept in order and the same route is retried carefully, checking every "
                "observation along the way before moving to the next receptacle."
            )
        return why + "\n" + "\n".join(plan)

    def _on_reflect_baseline(self, script: _Script, state: _TaskState, prompt: str) -> str:
        if script.flaw.major:
            plan = script.degraded
            text = "Diagnosis: the route looked right but the task still failed, so the same plan is retried more carefully."
        else:
            plan = script.reference
            text = f"Diagnosis: the task failed because {PROBLEMS[script.flaw.category]}."
        state.last_plan = list(plan)
        return text + "\nNew plan:\n" + "\n".join(plan)


def author_fixture(strategy: str, suite=None) -> Fixture:
    """Record one harness run of ``strategy`` against the oracle-guided model."""
    from .harness import RunConfig, run

    suite = suite or bundled_suite_path()
    recorder = RecordingBackend(OracleGuidedModel(load_suite(suite)))
    run(RunConfig(suite=suite, strategy=strategy, backend="oracle"), backend=recorder)
    return recorder.fixture()


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description="Regenerate or verify the bundled replay fixtures.")
    p.add_argument("--check", action="store_true", help="fail if a bundled fixture is out of date")
    p.add_argument("--out", default=None, help="write fixtures here instead of the package data directory")
    args = p.parse_args(argv)
    stale = []
    for name, strategy in FIXTURE_STRATEGIES.items():
        fixture = author_fixture(strategy)
        target = Path(args.out) / f"{name}.jsonl" if args.out else bundled_fixture_path(name)
        if args.check:
            if not target.exists() or Fixture.load(target).entries != fixture.entries:
                stale.append(name)
            continue
        target.parent.mkdir(parents=True, exist_ok=True)
        fixture.dump(target)
        print(f"{name}: {len(fixture)} responses -> {target}")
    if stale:
        print("stale fixtures: " + ", ".join(stale), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
