import pytest

from flexreflect.prompts import TEMPLATES, TemplateError, numbered, parse_numbered, render_prompt, required_slots


def test_required_slots():
    assert required_slots("actor_step") == ["goal", "reflections", "plan", "observation", "history"]
    assert required_slots("lesson_extract") == ["goal", "trajectory", "pool"]


def test_every_template_renders():
    for tid in TEMPLATES:
        msgs = render_prompt(tid, {name: f"<{name}>" for name in required_slots(tid)})
        assert [m.role for m in msgs] == ["system", "user"]
        assert all("$" not in m.content for m in msgs)


def test_missing_slot_is_named():
    with pytest.raises(TemplateError, match="'history'"):
        render_prompt("actor_step", {"goal": "g", "reflections": "", "plan": "", "observation": "o"})


def test_unknown_template():
    with pytest.raises(TemplateError):
        render_prompt("nope", {})


def test_numbered_round_trip():
    lines = ["first lesson", "second: with [brackets]"]
    text = numbered(lines)
    assert text == "[1] first lesson\n[2] second: with [brackets]"
    assert parse_numbered(text) == {1: lines[0], 2: lines[1]}
    assert numbered([]) == "(empty)"
