from fractions import Fraction

import pytest

from flexreflect.scheduler import (
    ConfigurationError,
    Intensity,
    SuiteMeta,
    TaskMeta,
    allocate_episodes,
    assess_difficulty,
    intensity_for_episode,
    round_half_up,
)


@pytest.mark.parametrize("total, k2, k1", [(2, 2, 3), (3, 3, 2), (6, 5, 0)])
def test_hand_evaluated_split(total, k2, k1):
    suite = SuiteMeta(6)
    task = TaskMeta("PickPlace", 1, total - 1)
    d = assess_difficulty(task, suite)
    assert d == Fraction(total, 6)
    sched = allocate_episodes(d, 5)
    assert (sched.k2, sched.k1) == (k2, k1)


def test_half_rounds_up():
    assert round_half_up(Fraction(5, 2)) == 3
    assert round_half_up(Fraction(7, 2)) == 4
    assert allocate_episodes(Fraction(1, 2), 5).k2 == 3
    # 0.7 * 5 is 3.5 exactly when taken as a decimal
    assert allocate_episodes(0.7, 5).k2 == 4
    assert allocate_episodes(0.3, 5).k2 == 2


def test_clamp_keeps_one_in_depth():
    assert allocate_episodes(Fraction(1, 100), 5).k2 == 1
    assert allocate_episodes(Fraction(1, 100), 1).k1 == 0


def test_grid_property():
    for ep_total in range(1, 21):
        for i in range(1, 1001):
            s = allocate_episodes(Fraction(i, 1000), ep_total)
            assert s.k1 + s.k2 == ep_total and 1 <= s.k2 <= ep_total


def test_more_difficult_never_fewer_in_depth():
    for ep_total in range(1, 21):
        ks = [allocate_episodes(Fraction(i, 200), ep_total).k2 for i in range(1, 201)]
        assert ks == sorted(ks)


def test_intensity_order():
    sched = allocate_episodes(Fraction(2, 6), 5)
    assert [intensity_for_episode(sched, i) for i in range(1, 6)] == [Intensity.SIMPLE] * 3 + [Intensity.IN_DEPTH] * 2
    with pytest.raises(ConfigurationError):
        intensity_for_episode(sched, 6)


@pytest.mark.parametrize("bad", [0, -0.5, 1.5])
def test_invalid_difficulty(bad):
    with pytest.raises(ConfigurationError):
        allocate_episodes(bad, 5)


def test_invalid_inputs():
    with pytest.raises(ConfigurationError):
        allocate_episodes(0.5, 0)
    with pytest.raises(ConfigurationError):
        assess_difficulty(TaskMeta("PickPlace", 1, 2), SuiteMeta(0))
    with pytest.raises(ConfigurationError):
        assess_difficulty(TaskMeta("PickPlace", 1, 9), SuiteMeta(6))
    with pytest.raises(ConfigurationError):
        TaskMeta("PickPlace", 0, 3)


def test_suite_meta(suite):
    metas = [TaskMeta.of(s) for s in suite]
    assert SuiteMeta.from_tasks(metas).max_complexity == 9
