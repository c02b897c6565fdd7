import pytest

from flexreflect.backend import Fixture, ScriptedBackend
from flexreflect.textworld import bundled_suite_path, load_suite


@pytest.fixture(scope="session")
def suite():
    return load_suite(bundled_suite_path())


@pytest.fixture(scope="session")
def scenarios(suite):
    return {s.id: s for s in suite}


def scripted(responses):
    """Build a replay backend from ``{task_id: [response, ...]}``."""
    entries = [((task, i), text) for task, texts in responses.items() for i, text in enumerate(texts)]
    return ScriptedBackend(Fixture(entries))


MINI = {
    "id": "mini",
    "task_type": "PickPlace",
    "receptacles": [
        {"name": "table 1"},
        {"name": "drawer 1", "openable": True},
        {"name": "shelf 1"},
    ],
    "objects": [{"name": "book 1", "location": "drawer 1"}, {"name": "pen 1", "location": "table 1"}],
    "goal": {"targets": ["book 1"], "receptacle": "shelf 1", "text": "put a book in shelf 1."},
}


@pytest.fixture
def mini_dict():
    import copy

    return copy.deepcopy(MINI)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
