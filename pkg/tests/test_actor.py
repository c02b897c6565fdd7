import pytest

from flexreflect.actor import (
    GiveUp,
    Mode,
    PlanContext,
    Step,
    StepKind,
    Terminal,
    Thought,
    Trajectory,
    UnparseableOutput,
    parse_actor_output,
    parse_plan_lines,
    run_trial,
)
from flexreflect.textworld import Verb, reset, solve_reference

from conftest import scripted


def ctx(scenario, **kw):
    _, obs = reset(scenario)
    return PlanContext(scenario.goal.text, obs, **kw)


@pytest.mark.parametrize(
    "reply, expected",
    [
        ("think: the book is on the table", Thought("the book is on the table")),
        ("give up", GiveUp()),
        ("Give up.", GiveUp()),
    ],
)
def test_parse_outputs(reply, expected):
    assert parse_actor_output(reply) == expected


def test_parse_action_lines():
    assert parse_actor_output("action: go to desk 1").verb is Verb.GO
    assert parse_actor_output("\n> open drawer 2\nsome trailing chatter").verb is Verb.OPEN
    with pytest.raises(UnparseableOutput):
        parse_actor_output("I would like to dance")
    with pytest.raises(UnparseableOutput):
        parse_actor_output("   \n")


def test_parse_plan_lines_skips_prose():
    text = "Here is the plan:\n1. go to desk 1\n- take cd 1 from desk 1\n* action: use desklamp 1\nDone."
    assert [a.render() for a in parse_plan_lines(text)] == ["go to desk 1", "take cd 1 from desk 1", "use desklamp 1"]


def test_react_success(scenarios):
    s = scenarios["pick_place_01"]
    lines = ["think: the book should be on the table"] + [f"action: {a.render()}" for a in solve_reference(s)]
    seen = []
    traj = run_trial(s, ctx(s), scripted({s.id: lines}), on_step=seen.append)
    assert traj.terminal is Terminal.SUCCESS and traj.reason is None
    assert traj.action_count == 4 and len(traj.steps) == 5 == len(seen)
    assert traj.steps[0] == Step(StepKind.THOUGHT, "the book should be on the table")
    assert "Your task is to: put a book in shelf 1." in traj.first_prompt


def test_react_give_up(scenarios):
    s = scenarios["pick_place_01"]
    traj = run_trial(s, ctx(s), scripted({s.id: ["action: go to shelf 1", "give up"]}))
    assert traj.terminal is Terminal.FAILURE and traj.reason == "gave-up" and traj.actions == ["go to shelf 1"]


def test_react_step_limit(scenarios):
    s = scenarios["pick_place_01"]
    traj = run_trial(s, ctx(s), scripted({s.id: ["think: hmm"] * 3}), max_steps=3)
    assert traj.reason == "step-limit" and len(traj.steps) == 3


def test_react_reprompts_once_then_records_thought(scenarios):
    s = scenarios["pick_place_01"]
    backend = scripted({s.id: ["gibberish", "action: go to shelf 1", "more gibberish", "still nothing", "give up"]})
    traj = run_trial(s, ctx(s), backend)
    assert traj.steps[0].text == "go to shelf 1"
    assert traj.steps[1] == Step(StepKind.THOUGHT, "still nothing")
    assert backend.calls == 5


def test_react_backend_error_ends_trial(scenarios):
    s = scenarios["pick_place_01"]
    traj = run_trial(s, ctx(s), scripted({s.id: ["action: go to shelf 1"]}))
    assert traj.terminal is Terminal.FAILURE and traj.reason.startswith("backend-error")


def test_injected_plan_and_reflections_reach_the_prompt(scenarios):
    s = scenarios["pick_place_01"]
    c = ctx(s, reflections=["I forgot the book."], injected_plan=["go to diningtable 1"])
    traj = run_trial(s, c, scripted({s.id: ["give up"]}))
    assert "I forgot the book." in traj.first_prompt
    assert "Suggested plan from your mentor:\ngo to diningtable 1" in traj.first_prompt


def test_reflection_window_enforced(scenarios):
    s = scenarios["pick_place_01"]
    with pytest.raises(ValueError):
        ctx(s, reflections=["a", "b"], k_window=1)


def test_one_shot_executes_plan(scenarios):
    s = scenarios["pick_place_02"]
    plan = "\n".join(a.render() for a in solve_reference(s))
    traj = run_trial(s, ctx(s), scripted({s.id: [plan]}), Mode.ONE_SHOT)
    assert traj.succeeded and traj.action_count == 5
    wrong = run_trial(s, ctx(s), scripted({s.id: ["go to bed 1\nput cellphone 1 in/on bed 1"]}), Mode.ONE_SHOT)
    assert wrong.reason == "plan-exhausted"
    long = run_trial(s, ctx(s), scripted({s.id: ["go to bed 1\n" * 10]}), Mode.ONE_SHOT, max_steps=4)
    assert long.reason == "step-limit" and long.action_count == 4


def test_trajectory_round_trip_and_single_finish(scenarios):
    s = scenarios["pick_place_01"]
    traj = run_trial(s, ctx(s), scripted({s.id: ["think: x", "action: go to shelf 1", "give up"]}))
    assert Trajectory.from_dict(traj.to_dict()) == traj
    with pytest.raises(RuntimeError):
        traj.finish(Terminal.SUCCESS)
    bad = traj.to_dict()
    bad["action_count"] = 7
    with pytest.raises(ValueError):
        Trajectory.from_dict(bad)


def test_render_shows_observations(scenarios):
    s = scenarios["pick_place_01"]
    traj = run_trial(s, ctx(s), scripted({s.id: ["action: go to shelf 1", "give up"]}))
    assert traj.render().splitlines()[0] == "> go to shelf 1"
    assert traj.render().endswith("[outcome: Failure (gave-up)]")
