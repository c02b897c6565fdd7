import pytest

from flexreflect.actor import Step, StepKind, Terminal, Trajectory
from flexreflect.backend import BackendError
from flexreflect.mentor import (
    HUMAN_INJECTED,
    ConstructedPlan,
    Experience,
    LessonPool,
    PlanConstructionError,
    ReflectionRecord,
    baseline_reflect,
    extract_lesson,
    maintain_lesson_pool,
    normalize_lesson,
    parse_experience,
    parse_plan,
    reflect,
    word_count,
)
from flexreflect.scheduler import Intensity

from conftest import scripted


def traj(task="t", trial=1, actions=("go to desk 1", "take cd 1 from desk 1", "go to bed 1"), ok=False):
    t = Trajectory(task, trial, [Step(StepKind.ACTION, a, "OK.") for a in actions])
    t.finish(Terminal.SUCCESS if ok else Terminal.FAILURE, None if ok else "gave-up")
    return t


EXPERIENCE = "Getting the cd worked.\n```actions\ngo to desk 1\ntake cd 1 from desk 1\n```"
PLAN = "Rationale: use the lamp.\ngo to desk 1\ntake cd 1 from desk 1\ngo to desklamp 1\nuse desklamp 1"


def test_normalize_and_word_count():
    assert normalize_lesson("  Open the Drawer first! ") == normalize_lesson("open the drawer first")
    assert word_count("a  b\nc\t d") == 4 and word_count("") == 0


def test_parse_experience_keeps_only_trajectory_actions():
    exp = parse_experience("Good start.\n```actions\ngo to desk 1\nuse desklamp 1\n```", traj())
    assert exp.summary == "Good start." and exp.retained_actions == ["go to desk 1"]
    assert parse_experience("no block at all", traj()).retained_actions == []


def test_parse_plan_splits_rationale():
    plan = parse_plan(PLAN)
    assert plan.actions[-1] == "use desklamp 1" and plan.rationale == "Rationale: use the lamp."


def test_pool_dedup_and_journal():
    pool = LessonPool()
    a = pool.add("Open drawers first.", {"kind": HUMAN_INJECTED})
    assert pool.add("open drawers FIRST", {"kind": HUMAN_INJECTED}) is None
    assert len(pool) == 1 and a.id == 1
    assert [e["action"] for e in pool.drain_events()] == ["added", "duplicate"]
    assert pool.drain_events() == []


def test_pool_eviction_prefers_unreferenced():
    pool = LessonPool(capacity=2)
    first = pool.add("one", {})
    pool.add("two", {})
    pool.reference(first)
    pool.add("three", {})
    assert [l.text for l in pool] == ["one", "three"]
    pool.reference(pool.lessons[1])
    pool.add("four", {})
    assert [l.text for l in pool] == ["three", "four"]


def test_pool_save_load(tmp_path):
    pool = LessonPool()
    pool.add("Lesson A.", {"kind": HUMAN_INJECTED})
    pool.reference(pool.add("Lesson B.", {"kind": "MentorSummarized", "task": "t", "trial": 2}))
    path = tmp_path / "pool.jsonl"
    pool.save(path)
    back = LessonPool.load(path)
    assert [l.to_dict() for l in back] == [l.to_dict() for l in pool]
    assert back.add("Lesson C.", {}).id == 3
    assert len(LessonPool.load(tmp_path / "absent.jsonl")) == 0
    path.write_text("{oops\n")
    with pytest.raises(ValueError, match="line 1"):
        LessonPool.load(path)


def test_snapshot_is_independent():
    pool = LessonPool()
    pool.add("x", {})
    snap = pool.snapshot()
    snap.add("y", {})
    snap.reference(snap.lessons[0])
    assert len(pool) == 1 and pool.lessons[0].reference_count == 0


def test_maintain_adds_mentor_lesson():
    pool = LessonPool()
    backend = scripted({"t": ["Lesson: Use the lamp while holding the object.", "use the lamp while holding the object"]})
    pair = (traj(), traj(trial=2, ok=True))
    maintain_lesson_pool([pair], pool, backend)
    maintain_lesson_pool([pair], pool, backend)
    assert len(pool) == 1
    assert pool.lessons[0].provenance == {"kind": "MentorSummarized", "task": "t", "trial": 2}


def test_maintain_skips_backend_errors_and_bad_pairs():
    pool = LessonPool()
    maintain_lesson_pool([(traj(), traj(trial=2, ok=True))], pool, scripted({}))
    assert len(pool) == 0
    with pytest.raises(ValueError):
        maintain_lesson_pool([(traj(), traj(task="other", ok=True))], pool, scripted({}))


def test_extract_lesson_reprompts_once():
    pool = LessonPool()
    pool.add("one", {})
    pool.add("two", {})
    assert extract_lesson("g", traj(), pool, scripted({"t": ["Lesson 2 fits."]})).text == "two"
    assert pool.lessons[1].reference_count == 1
    assert extract_lesson("g", traj(), pool, scripted({"t": ["seven", "1"]})).text == "one"
    assert extract_lesson("g", traj(), pool, scripted({"t": ["9", "none"]})) is None
    assert extract_lesson("g", traj(), LessonPool(), scripted({})) is None


def test_simple_reflection_has_no_lesson():
    pool = LessonPool()
    pool.add("Use the lamp.", {})
    rec = reflect(Intensity.SIMPLE, "g", traj(), pool, scripted({"t": [EXPERIENCE, PLAN]}))
    assert rec.lesson is None and rec.intensity is Intensity.SIMPLE
    assert rec.experience.retained_actions == ["go to desk 1", "take cd 1 from desk 1"]
    assert rec.plan.actions[-1] == "use desklamp 1"
    assert rec.word_count == word_count(EXPERIENCE) + word_count(PLAN)


def test_in_depth_reflection_uses_lesson():
    pool = LessonPool()
    pool.add("Use the lamp.", {})
    rec = reflect(Intensity.IN_DEPTH, "g", traj(), pool, scripted({"t": [EXPERIENCE, "1", PLAN]}))
    assert rec.lesson.text == "Use the lamp." and "Use the lamp." in rec.full_text
    assert ReflectionRecord.from_dict(rec.to_dict()) == rec


def test_ablations_skip_submodules():
    pool = LessonPool()
    pool.add("Use the lamp.", {})
    no_exp = reflect(Intensity.IN_DEPTH, "g", traj(), pool, scripted({"t": ["1", PLAN]}), use_experience=False)
    assert no_exp.experience == Experience() and no_exp.lesson is not None
    no_les = reflect(Intensity.IN_DEPTH, "g", traj(), pool, scripted({"t": [EXPERIENCE, PLAN]}), use_lesson=False)
    assert no_les.lesson is None


def test_plan_construction_error_keeps_partial_text():
    with pytest.raises(PlanConstructionError) as err:
        reflect(Intensity.SIMPLE, "g", traj(), LessonPool(), scripted({"t": [EXPERIENCE, "I have no idea."]}))
    partial = err.value.partial
    assert partial.plan == ConstructedPlan() and partial.full_text.startswith("Getting the cd worked.")


def test_reflect_rejects_success_and_propagates_backend_errors():
    with pytest.raises(ValueError):
        reflect(Intensity.SIMPLE, "g", traj(ok=True), LessonPool(), scripted({}))
    with pytest.raises(BackendError):
        reflect(Intensity.SIMPLE, "g", traj(), LessonPool(), scripted({}))


def test_baseline_reflection():
    rec = baseline_reflect("g", traj(), scripted({"t": ["Diagnosis: forgot the lamp.\nNew plan:\nuse desklamp 1"]}))
    assert rec.intensity is Intensity.FIXED and rec.plan.actions == ["use desklamp 1"] and rec.lesson is None


def test_simple_record_cannot_carry_lesson():
    pool = LessonPool()
    lesson = pool.add("x", {})
    with pytest.raises(ValueError):
        ReflectionRecord("t", 1, Intensity.SIMPLE, Experience(), lesson, ConstructedPlan(), "x")
