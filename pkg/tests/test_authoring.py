from flexreflect.authoring import FIXTURE_STRATEGIES, author_fixture, main
from flexreflect.backend import Fixture, bundled_fixture_path


def test_bundled_fixtures_are_reproducible():
    for name, strategy in FIXTURE_STRATEGIES.items():
        assert Fixture.load(bundled_fixture_path(name)).entries == author_fixture(strategy).entries, name


def test_check_mode(tmp_path, capsys):
    assert main(["--check"]) == 0
    assert main(["--out", str(tmp_path)]) == 0
    assert sorted(p.stem for p in tmp_path.iterdir()) == sorted(FIXTURE_STRATEGIES)
