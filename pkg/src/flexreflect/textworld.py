"""Deterministic household text world.

A scenario is a single room of named receptacles holding named objects.
The agent moves between receptacles, opens and closes them, carries one
object at a time and uses appliances (sink, microwave, fridge, desk lamp)
to change object properties. Every transition is a pure function of
``(state, scenario, action)``.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

NOTHING_HAPPENS = "Nothing happens."
INVENTORY = "inventory"
START = "start"
INVENTORY_CAPACITY = 1
MAX_SOLUTION_DEPTH = 40

_RESERVED = frozenset({"to", "from", "in", "on", "in/on", "with"})
_NAME_RE = re.compile(r"^[a-z0-9]+(?: [a-z0-9]+)*$")


class ScenarioError(ValueError):
    """Raised when a scenario file violates the schema."""


class UnsolvableScenario(RuntimeError):
    """Raised when breadth-first search finds no solution."""


class ActionParseError(ValueError):
    pass


class TaskType(str, Enum):
    PICK_PLACE = "PickPlace"
    EXAMINE_IN_LIGHT = "ExamineInLight"
    CLEAN_PLACE = "CleanPlace"
    HEAT_PLACE = "HeatPlace"
    COOL_PLACE = "CoolPlace"
    PICK_TWO_PLACE = "PickTwoPlace"


class Appliance(str, Enum):
    NONE = "none"
    CLEAN = "clean"
    HEAT = "heat"
    COOL = "cool"
    LIGHT = "light"


class Verb(str, Enum):
    GO = "go"
    OPEN = "open"
    CLOSE = "close"
    TAKE = "take"
    PUT = "put"
    CLEAN = "clean"
    HEAT = "heat"
    COOL = "cool"
    USE = "use"
    EXAMINE = "examine"


# property flag set by each appliance verb
PROPERTY_FOR_VERB = {
    Verb.CLEAN: "clean",
    Verb.HEAT: "heated",
    Verb.COOL: "cooled",
}
APPLIANCE_FOR_VERB = {
    Verb.CLEAN: Appliance.CLEAN,
    Verb.HEAT: Appliance.HEAT,
    Verb.COOL: Appliance.COOL,
}
PROPERTIES = ("clean", "heated", "cooled", "examined_under_light")

# property a task type requires of its target object
GOAL_PROPERTY = {
    TaskType.PICK_PLACE: None,
    TaskType.EXAMINE_IN_LIGHT: "examined_under_light",
    TaskType.CLEAN_PLACE: "clean",
    TaskType.HEAT_PLACE: "heated",
    TaskType.COOL_PLACE: "cooled",
    TaskType.PICK_TWO_PLACE: None,
}


# --------------------------------------------------------------------------
# actions


def _check_name(name: str) -> str:
    if not _NAME_RE.match(name) or any(tok in _RESERVED for tok in name.split(" ")):
        raise ActionParseError(f"invalid entity name: {name!r}")
    return name


@dataclass(frozen=True, order=True)
class Action:
    verb: Verb
    args: Tuple[str, ...]

    def __post_init__(self):
        verb = Verb(self.verb)
        object.__setattr__(self, "verb", verb)
        arity = 2 if verb in (Verb.TAKE, Verb.PUT, Verb.CLEAN, Verb.HEAT, Verb.COOL) else 1
        if len(self.args) != arity:
            raise ActionParseError(f"{verb.value} takes {arity} argument(s), got {self.args!r}")
        for name in self.args:
            _check_name(name)

    def render(self) -> str:
        v, a = self.verb, self.args
        if v is Verb.GO:
            return f"go to {a[0]}"
        if v is Verb.TAKE:
            return f"take {a[0]} from {a[1]}"
        if v is Verb.PUT:
            return f"put {a[0]} in/on {a[1]}"
        if v in (Verb.CLEAN, Verb.HEAT, Verb.COOL):
            return f"{v.value} {a[0]} with {a[1]}"
        return f"{v.value} {a[0]}"

    def __str__(self) -> str:
        return self.render()


_GRAMMAR = [
    (re.compile(r"^go to (.+)$"), Verb.GO),
    (re.compile(r"^open (.+)$"), Verb.OPEN),
    (re.compile(r"^close (.+)$"), Verb.CLOSE),
    (re.compile(r"^take (.+?) from (.+)$"), Verb.TAKE),
    (re.compile(r"^put (.+?) (?:in/on|in|on) (.+)$"), Verb.PUT),
    (re.compile(r"^clean (.+?) with (.+)$"), Verb.CLEAN),
    (re.compile(r"^heat (.+?) with (.+)$"), Verb.HEAT),
    (re.compile(r"^cool (.+?) with (.+)$"), Verb.COOL),
    (re.compile(r"^use (.+)$"), Verb.USE),
    (re.compile(r"^examine (.+)$"), Verb.EXAMINE),
]


def parse_action(text: str) -> Action:
    """Parse one command of the action grammar.

    Matching is case-insensitive and tolerant of surrounding whitespace and
    a trailing period; ``put`` accepts ``in/on``, ``in`` or ``on``.
    """
    cleaned = " ".join(text.strip().rstrip(".").lower().split())
    for pattern, verb in _GRAMMAR:
        m = pattern.match(cleaned)
        if m:
            return Action(verb, tuple(m.groups()))
    raise ActionParseError(f"not an action: {text!r}")


def try_parse_action(text: str) -> Optional[Action]:
    try:
        return parse_action(text)
    except ActionParseError:
        return None


# --------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class Receptacle:
    name: str
    openable: bool = False
    appliance: Appliance = Appliance.NONE
    initially_open: bool = False


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    location: str
    props: FrozenSet[str] = frozenset()


@dataclass(frozen=True)
class GoalSpec:
    targets: Tuple[str, ...]
    receptacle: Optional[str]
    prop: Optional[str]
    text: str


@dataclass(frozen=True)
class Scenario:
    id: str
    task_type: TaskType
    receptacles: Tuple[Receptacle, ...]
    objects: Tuple[ObjectSpec, ...]
    goal: GoalSpec
    num_obj: int
    num_inter: int

    def receptacle(self, name: str) -> Optional[Receptacle]:
        return self._receptacles.get(name)

    @property
    def _receptacles(self) -> Dict[str, Receptacle]:
        cache = self.__dict__.get("_recep_cache")
        if cache is None:
            cache = {r.name: r for r in self.receptacles}
            object.__setattr__(self, "_recep_cache", cache)
        return cache

    @property
    def object_names(self) -> Tuple[str, ...]:
        return tuple(o.name for o in self.objects)


_REQUIRED_KEYS = ("id", "task_type", "receptacles", "objects", "goal")


def _require(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(f"{key}: {msg}")


def scenario_from_dict(data: dict) -> Scenario:
    """Validate a decoded scenario document and build a :class:`Scenario`.

    ``num_inter`` is derived from the reference solution when absent.
    """
    _require(isinstance(data, dict), "<root>", "scenario must be a JSON object")
    for key in _REQUIRED_KEYS:
        _require(key in data, key, "missing required key")
    unknown = set(data) - set(_REQUIRED_KEYS) - {"num_obj", "num_inter", "description"}
    _require(not unknown, sorted(unknown)[0] if unknown else "", "unknown key")

    sid = data["id"]
    _require(isinstance(sid, str) and sid != "", "id", "must be a non-empty string")
    try:
        task_type = TaskType(data["task_type"])
    except ValueError:
        raise ScenarioError(f"task_type: unknown task type {data['task_type']!r}") from None

    receptacles = []
    _require(isinstance(data["receptacles"], list) and data["receptacles"], "receptacles", "must be a non-empty list")
    for i, r in enumerate(data["receptacles"]):
        key = f"receptacles[{i}]"
        _require(isinstance(r, dict) and "name" in r, key, "needs a name")
        try:
            appliance = Appliance(r.get("appliance", "none"))
        except ValueError:
            raise ScenarioError(f"{key}.appliance: unknown capability {r.get('appliance')!r}") from None
        try:
            _check_name(r["name"])
        except ActionParseError as exc:
            raise ScenarioError(f"{key}.name: {exc}") from None
        openable = bool(r.get("openable", False))
        is_open = bool(r.get("open", False))
        _require(openable or not is_open, f"{key}.open", "only openable receptacles carry an open flag")
        receptacles.append(Receptacle(r["name"], openable, appliance, is_open))
    names = [r.name for r in receptacles]
    _require(len(set(names)) == len(names), "receptacles", "duplicate receptacle name")
    _require(START not in names and INVENTORY not in names, "receptacles", "reserved receptacle name")

    objects = []
    _require(isinstance(data["objects"], list) and data["objects"], "objects", "must be a non-empty list")
    for i, o in enumerate(data["objects"]):
        key = f"objects[{i}]"
        _require(isinstance(o, dict) and "name" in o and "location" in o, key, "needs name and location")
        try:
            _check_name(o["name"])
        except ActionParseError as exc:
            raise ScenarioError(f"{key}.name: {exc}") from None
        _require(o["location"] in names, f"{key}.location", f"no receptacle named {o['location']!r}")
        props = frozenset(o.get("props", ()))
        _require(props <= set(PROPERTIES), f"{key}.props", f"unknown property in {sorted(props)}")
        objects.append(ObjectSpec(o["name"], o["location"], props))
    onames = [o.name for o in objects]
    _require(len(set(onames)) == len(onames), "objects", "duplicate object name")
    _require(not set(onames) & set(names), "objects", "object and receptacle names overlap")

    g = data["goal"]
    _require(isinstance(g, dict), "goal", "must be an object")
    for key in ("targets", "text"):
        _require(key in g, f"goal.{key}", "missing required key")
    targets = tuple(g["targets"])
    _require(all(t in onames for t in targets), "goal.targets", "targets must name scenario objects")
    _require(len(set(targets)) == len(targets), "goal.targets", "duplicate target")
    want = 2 if task_type is TaskType.PICK_TWO_PLACE else 1
    _require(len(targets) == want, "goal.targets", f"{task_type.value} needs {want} target(s)")
    recep = g.get("receptacle")
    if task_type is TaskType.EXAMINE_IN_LIGHT:
        _require(recep is None, "goal.receptacle", "ExamineInLight has no goal receptacle")
        _require(
            any(r.appliance is Appliance.LIGHT for r in receptacles), "receptacles", "ExamineInLight needs a light"
        )
    else:
        _require(recep in names, "goal.receptacle", f"no receptacle named {recep!r}")
    goal = GoalSpec(targets, recep, GOAL_PROPERTY[task_type], str(g["text"]))

    num_obj = data.get("num_obj", len(targets))
    _require(num_obj == len(targets), "num_obj", "must equal the number of goal targets")

    scenario = Scenario(sid, task_type, tuple(receptacles), tuple(objects), goal, num_obj, 1)
    if "num_inter" in data:
        num_inter = data["num_inter"]
        _require(isinstance(num_inter, int) and num_inter >= 1, "num_inter", "must be a positive integer")
    else:
        try:
            num_inter = derive_num_inter(solve_reference(scenario))
        except UnsolvableScenario as exc:
            raise ScenarioError(f"goal: {exc}") from None
    return replace(scenario, num_inter=num_inter)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path.name}: invalid JSON ({exc})") from None
    try:
        return scenario_from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path.name}: {exc}") from None


def load_suite(path) -> List[Scenario]:
    """Load a directory of scenario files.

    Order follows ``suite.json`` (``{"order": [ids...]}``) when present,
    otherwise file-name order. A single scenario file is a one-task suite.
    """
    path = Path(path)
    if path.is_file():
        return [load_scenario(path)]
    if not path.is_dir():
        raise ScenarioError(f"suite not found: {path}")
    files = {p.stem: p for p in sorted(path.glob("*.json")) if p.name != "suite.json"}
    manifest = path / "suite.json"
    if manifest.exists():
        order = json.loads(manifest.read_text(encoding="utf-8"))["order"]
        missing = [name for name in order if name not in files]
        if missing:
            raise ScenarioError(f"suite.json: unknown scenario {missing[0]!r}")
    else:
        order = list(files)
    if not order:
        raise ScenarioError(f"suite is empty: {path}")
    suite = [load_scenario(files[name]) for name in order]
    ids = [s.id for s in suite]
    if len(set(ids)) != len(ids):
        raise ScenarioError("suite: duplicate scenario id")
    return suite


def bundled_suite_path() -> Path:
    return Path(__file__).parent / "data" / "scenarios"


# --------------------------------------------------------------------------
# world state


@dataclass(frozen=True)
class WorldState:
    object_location: Dict[str, str]
    receptacle_open: Dict[str, bool]
    object_props: Dict[str, FrozenSet[str]]
    agent_at: str = START
    steps_taken: int = 0

    @property
    def inventory(self) -> Tuple[str, ...]:
        return tuple(sorted(o for o, loc in self.object_location.items() if loc == INVENTORY))

    def contents(self, receptacle: str) -> Tuple[str, ...]:
        return tuple(sorted(o for o, loc in self.object_location.items() if loc == receptacle))

    def key(self) -> tuple:
        """Canonical encoding that ignores ``steps_taken``."""
        objs = tuple(
            (o, self.object_location[o], tuple(sorted(self.object_props[o]))) for o in sorted(self.object_location)
        )
        return (self.agent_at, objs, tuple(sorted(self.receptacle_open.items())))


@dataclass(frozen=True)
class StepOutcome:
    observation: str
    state_changed: bool
    done: bool
    success: bool


def _listing(items: Iterable[str]) -> str:
    items = [f"a {i}" for i in items]
    if not items:
        return "nothing"
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + ", and " + items[-1]


def goal_satisfied(state: WorldState, scenario: Scenario) -> bool:
    goal = scenario.goal
    for target in goal.targets:
        if goal.prop is not None and goal.prop not in state.object_props[target]:
            return False
        if goal.receptacle is not None and state.object_location[target] != goal.receptacle:
            return False
    return True


def reset(scenario: Scenario) -> Tuple[WorldState, str]:
    state = WorldState(
        object_location={o.name: o.location for o in scenario.objects},
        receptacle_open={r.name: r.initially_open for r in scenario.receptacles if r.openable},
        object_props={o.name: frozenset(o.props) for o in scenario.objects},
    )
    observation = (
        "You are in the middle of a room. Looking quickly around you, you see "
        f"{_listing(r.name for r in scenario.receptacles)}.\n\n"
        f"Your task is to: {scenario.goal.text}"
    )
    return state, observation


def _visible(state: WorldState, recep: Receptacle) -> bool:
    return not recep.openable or state.receptacle_open[recep.name]


def _describe_receptacle(state: WorldState, recep: Receptacle) -> str:
    items = _listing(state.contents(recep.name))
    if recep.openable:
        return f"In it, you see {items}."
    return f"On the {recep.name}, you see {items}."


def _transition(state: WorldState, scenario: Scenario, action: Action) -> Tuple[Optional[WorldState], str]:
    """Return the successor world (``None`` when inapplicable) and a message.

    ``steps_taken`` is left to the caller.
    """
    verb, args = action.verb, action.args
    here = scenario.receptacle(state.agent_at)

    if verb is Verb.GO:
        target = scenario.receptacle(args[0])
        if target is None or target.name == state.agent_at:
            return None, NOTHING_HAPPENS
        new = replace(state, agent_at=target.name)
        if target.openable and not state.receptacle_open[target.name]:
            return new, f"You arrive at {target.name}. The {target.name} is closed."
        if target.openable:
            return new, f"You arrive at {target.name}. The {target.name} is open. {_describe_receptacle(state, target)}"
        return new, f"You arrive at {target.name}. {_describe_receptacle(state, target)}"

    if verb in (Verb.OPEN, Verb.CLOSE):
        if here is None or here.name != args[0] or not here.openable:
            return None, NOTHING_HAPPENS
        want_open = verb is Verb.OPEN
        if state.receptacle_open[here.name] == want_open:
            return None, NOTHING_HAPPENS
        opened = dict(state.receptacle_open)
        opened[here.name] = want_open
        new = replace(state, receptacle_open=opened)
        if want_open:
            return new, f"You open the {here.name}. The {here.name} is open. {_describe_receptacle(state, here)}"
        return new, f"You close the {here.name}."

    if verb is Verb.TAKE:
        obj, src = args
        if here is None or here.name != src or not _visible(state, here):
            return None, NOTHING_HAPPENS
        if state.object_location.get(obj) != src or len(state.inventory) >= INVENTORY_CAPACITY:
            return None, NOTHING_HAPPENS
        locs = dict(state.object_location)
        locs[obj] = INVENTORY
        return replace(state, object_location=locs), f"You pick up the {obj} from the {src}."

    if verb is Verb.PUT:
        obj, dst = args
        if here is None or here.name != dst or not _visible(state, here):
            return None, NOTHING_HAPPENS
        if state.object_location.get(obj) != INVENTORY:
            return None, NOTHING_HAPPENS
        locs = dict(state.object_location)
        locs[obj] = dst
        return replace(state, object_location=locs), f"You put the {obj} in/on the {dst}."

    if verb in (Verb.CLEAN, Verb.HEAT, Verb.COOL):
        obj, tool = args
        if here is None or here.name != tool or here.appliance is not APPLIANCE_FOR_VERB[verb]:
            return None, NOTHING_HAPPENS
        if state.object_location.get(obj) != INVENTORY:
            return None, NOTHING_HAPPENS
        # an appliance only works while nothing else sits in it
        if state.contents(tool):
            return None, NOTHING_HAPPENS
        prop = PROPERTY_FOR_VERB[verb]
        if prop in state.object_props[obj]:
            return None, NOTHING_HAPPENS
        props = dict(state.object_props)
        props[obj] = props[obj] | {prop}
        past = {Verb.CLEAN: "clean", Verb.HEAT: "heat", Verb.COOL: "cool"}[verb]
        return replace(state, object_props=props), f"You {past} the {obj} using the {tool}."

    if verb is Verb.USE:
        if here is None or here.name != args[0] or here.appliance is not Appliance.LIGHT:
            return None, NOTHING_HAPPENS
        held = state.inventory
        if not held:
            return None, NOTHING_HAPPENS
        props = dict(state.object_props)
        changed = False
        for obj in held:
            if "examined_under_light" not in props[obj]:
                props[obj] = props[obj] | {"examined_under_light"}
                changed = True
        if not changed:
            return None, NOTHING_HAPPENS
        return replace(state, object_props=props), f"You turn on the {here.name}. You look at the {held[0]} under the light."

    # Examine: informational, never changes the world
    obj = args[0]
    loc = state.object_location.get(obj)
    if loc is None:
        return None, NOTHING_HAPPENS
    if loc != INVENTORY:
        recep = scenario.receptacle(loc)
        if loc != state.agent_at or not _visible(state, recep):
            return None, NOTHING_HAPPENS
    props = sorted(state.object_props[obj])
    detail = f"It is {', '.join(props)}." if props else "There is nothing special about it."
    return state, f"This is a normal {obj}. {detail}"


def step(state: WorldState, scenario: Scenario, action: Action) -> Tuple[WorldState, StepOutcome]:
    new, message = _transition(state, scenario, action)
    if new is None:
        new = state
    changed = new is not state
    new = replace(new, steps_taken=state.steps_taken + 1)
    success = goal_satisfied(new, scenario)
    return new, StepOutcome(message, changed, success, success)


@lru_cache(maxsize=None)
def _act(verb: Verb, *args: str) -> Action:
    return Action(verb, args)


def _candidates(state: WorldState, scenario: Scenario) -> Iterable[Action]:
    for recep in scenario.receptacles:
        yield _act(Verb.GO, recep.name)
    here = scenario.receptacle(state.agent_at)
    if here is None:
        return
    yield _act(Verb.OPEN, here.name)
    yield _act(Verb.CLOSE, here.name)
    yield _act(Verb.USE, here.name)
    for obj in state.contents(here.name):
        yield _act(Verb.TAKE, obj, here.name)
    for obj in state.inventory:
        yield _act(Verb.PUT, obj, here.name)
        for verb in (Verb.CLEAN, Verb.HEAT, Verb.COOL):
            yield _act(verb, obj, here.name)


def admissible_actions(state: WorldState, scenario: Scenario) -> FrozenSet[Action]:
    """All actions whose transition changes the world."""
    out = set()
    for action in _candidates(state, scenario):
        new, _ = _transition(state, scenario, action)
        if new is not None and new is not state:
            out.add(action)
    return frozenset(out)


def _useful(action: Action, state: WorldState, scenario: Scenario) -> bool:
    """False for actions that never occur in a shortest plan.

    Deleting any of these from a plan (together with the later steps that
    only touch the same non-target object) leaves a valid, shorter plan:
    closing only removes options, non-target objects matter solely while
    they block an appliance, and their properties never matter.
    """
    verb = action.verb
    if verb in (Verb.CLOSE, Verb.EXAMINE):
        return False
    targets = scenario.goal.targets
    if verb is Verb.TAKE and action.args[0] not in targets:
        src = scenario.receptacle(action.args[1])
        return src.appliance not in (Appliance.NONE, Appliance.LIGHT)
    if verb in APPLIANCE_FOR_VERB and action.args[0] not in targets:
        return False
    return True


def solve_reference(scenario: Scenario) -> List[Action]:
    """Shortest solution by breadth-first search.

    Successors are expanded in lexicographic order of their command strings,
    so the result is the lexicographically smallest shortest plan.
    """
    return list(_solve_cached(scenario))


@lru_cache(maxsize=256)
def _solve_cached(scenario: Scenario) -> Tuple[Action, ...]:
    start, _ = reset(scenario)
    if goal_satisfied(start, scenario):
        return ()
    parent: Dict[tuple, Tuple[Optional[tuple], Optional[Action]]] = {start.key(): (None, None)}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        if depth >= MAX_SOLUTION_DEPTH:
            break
        moves = [a for a in admissible_actions(state, scenario) if _useful(a, state, scenario)]
        for action in sorted(moves, key=Action.render):
            new, _ = _transition(state, scenario, action)
            k = new.key()
            if k in parent:
                continue
            parent[k] = (state.key(), action)
            if goal_satisfied(new, scenario):
                plan = []
                while parent[k][1] is not None:
                    k, act = parent[k]
                    plan.append(act)
                return tuple(plan[::-1])
            frontier.append((new, depth + 1))
    raise UnsolvableScenario(f"no solution for scenario {scenario.id!r}")


def derive_num_inter(solution: List[Action]) -> int:
    """Goal-relevant interactions: every non-navigation step of a solution."""
    return sum(1 for a in solution if a.verb is not Verb.GO)


def execute(scenario: Scenario, actions: Iterable[Action]) -> Tuple[WorldState, List[StepOutcome]]:
    """Run ``actions`` from the reset state; convenient for oracle checks."""
    state, _ = reset(scenario)
    outcomes = []
    for action in actions:
        state, outcome = step(state, scenario, action)
        outcomes.append(outcome)
    return state, outcomes
