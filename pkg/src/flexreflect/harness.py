"""Online planning/reflection loop over a scenario suite."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

from .actor import DEFAULT_K_WINDOW, DEFAULT_MAX_STEPS, Mode, PlanContext, Trajectory, run_trial
from .backend import Backend, BackendError, make_backend
from .evaluation import MetricsReport, success_rate
from .memory import MemoryStore, RunLog
from .mentor import (
    DEFAULT_POOL_CAPACITY,
    HUMAN_INJECTED,
    Lesson,
    LessonPool,
    PlanConstructionError,
    baseline_reflect,
    maintain_lesson_pool,
    reflect,
)
from .scheduler import EpisodeSchedule, SuiteMeta, TaskMeta, allocate_episodes, assess_difficulty, intensity_for_episode
from .textworld import Scenario, bundled_suite_path, load_suite, reset, solve_reference

logger = logging.getLogger(__name__)

TRACE_FILE = "run.jsonl"
POOL_FILE = "pool.jsonl"


class Strategy(str, Enum):
    PLANNING_ONLY = "PlanningOnly"
    REASONING_ONLY = "ReasoningOnly"
    REASONING_REFLECTION = "ReasoningReflection"
    FCRF = "FCRF"
    FCRF_NO_EXPERIENCE = "FcrfNoExperience"
    FCRF_NO_LESSON = "FcrfNoLesson"

    @classmethod
    def parse(cls, name: Union[str, "Strategy"]) -> "Strategy":
        if isinstance(name, Strategy):
            return name
        key = name.replace("-", "").replace("_", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(m.value for m in cls)}")

    @property
    def mode(self) -> Mode:
        return Mode.ONE_SHOT if self is Strategy.PLANNING_ONLY else Mode.REACT

    @property
    def flexible(self) -> bool:
        return self in (Strategy.FCRF, Strategy.FCRF_NO_EXPERIENCE, Strategy.FCRF_NO_LESSON)

    @property
    def reflects(self) -> bool:
        return self.flexible or self is Strategy.REASONING_REFLECTION

    @property
    def maintains_pool(self) -> bool:
        return self in (Strategy.FCRF, Strategy.FCRF_NO_EXPERIENCE)


@dataclass
class RunConfig:
    suite: Union[str, Path] = field(default_factory=bundled_suite_path)
    strategy: Strategy = Strategy.FCRF
    ep_total: int = 5
    backend: str = "scripted:fcrf_demo"
    k_window: int = DEFAULT_K_WINDOW
    pool_capacity: int = DEFAULT_POOL_CAPACITY
    out_dir: Optional[Union[str, Path]] = None
    seed: int = 0
    parallel: bool = False
    max_steps: int = DEFAULT_MAX_STEPS
    pool_path: Optional[Union[str, Path]] = None
    model_id: str = "gpt-4o-mini"

    def __post_init__(self):
        self.strategy = Strategy.parse(self.strategy)
        if self.ep_total < 1:
            raise ValueError("ep_total must be >= 1")
        if self.k_window < 0 or self.pool_capacity < 1 or self.max_steps < 1:
            raise ValueError("k_window >= 0, pool_capacity >= 1 and max_steps >= 1 required")


@dataclass
class _TaskContext:
    scenario: Scenario
    reference: List[str]
    schedule: Optional[EpisodeSchedule]


def _drain_pool(pool: LessonPool, log: RunLog, task: str, trial: Optional[int]) -> None:
    for event in pool.drain_events():
        log.emit("pool-update", task=task, trial=trial, **event)


def _run_task(ctx: _TaskContext, config: RunConfig, backend: Backend, log: RunLog, pool: LessonPool) -> None:
    scenario, strategy = ctx.scenario, config.strategy
    task = scenario.id
    store = MemoryStore(log)
    log.emit(
        "task-start",
        task=task,
        task_type=scenario.task_type.value,
        goal=scenario.goal.text,
        num_obj=scenario.num_obj,
        num_inter=scenario.num_inter,
        reference=ctx.reference,
    )
    sched = ctx.schedule
    if sched is not None:
        log.emit(
            "schedule",
            task=task,
            difficulty=float(sched.difficulty),
            difficulty_exact=str(sched.difficulty),
            ep_total=sched.ep_total,
            k1=sched.k1,
            k2=sched.k2,
        )

    _, observation = reset(scenario)
    plan: Optional[List[str]] = None
    last_failed: Optional[Trajectory] = None
    failures = 0
    success = False
    error = None
    trials_used = 0
    for trial in range(1, config.ep_total + 1):
        store.begin_trial(task, trial)
        context = PlanContext(
            scenario.goal.text, observation, store.recent_reflections(task, config.k_window), plan, config.k_window
        )
        traj = run_trial(scenario, context, backend, strategy.mode, config.max_steps, trial, store.record_step)
        store.commit_trajectory(traj)
        trials_used = trial
        if traj.reason and traj.reason.startswith("backend-error"):
            error = traj.reason
            break
        if traj.succeeded:
            success = True
            if strategy.maintains_pool and last_failed is not None:
                maintain_lesson_pool([(last_failed, traj)], pool, backend)
                _drain_pool(pool, log, task, trial)
            break
        failures += 1
        last_failed = traj
        if not strategy.reflects:
            continue
        try:
            if strategy is Strategy.REASONING_REFLECTION:
                record = baseline_reflect(scenario.goal.text, traj, backend)
            else:
                intensity = intensity_for_episode(sched, failures)
                record = reflect(
                    intensity,
                    scenario.goal.text,
                    traj,
                    pool,
                    backend,
                    use_experience=strategy is not Strategy.FCRF_NO_EXPERIENCE,
                    use_lesson=strategy is not Strategy.FCRF_NO_LESSON,
                )
        except PlanConstructionError as exc:
            logger.warning("%s trial %d: %s; falling back to reflection text", task, trial, exc)
            record = exc.partial
        except BackendError as exc:
            error = f"backend-error: {exc}"
            _drain_pool(pool, log, task, trial)
            break
        _drain_pool(pool, log, task, trial)
        store.append_reflection(record)
        plan = (record.plan.actions or None) if strategy.flexible else None

    log.emit("task-end", task=task, success=success, trials_used=trials_used, error=error)


def _merge_pool(main: LessonPool, snapshot: LessonPool, base_ids: set, log: RunLog, task: str) -> None:
    """Fold one task's pool snapshot back into the shared pool."""
    by_id = {l.id: l for l in main}
    for lesson in snapshot:
        if lesson.id in base_ids:
            extra = lesson.reference_count - by_id[lesson.id].reference_count if lesson.id in by_id else 0
            for _ in range(max(extra, 0)):
                main.reference(by_id[lesson.id])
        else:
            added = main.add(lesson.text, lesson.provenance)
            if added is not None and lesson.reference_count:
                added.reference_count = lesson.reference_count
    _drain_pool(main, log, task, None)


def run(config: RunConfig, backend: Optional[Backend] = None) -> MetricsReport:
    suite = load_suite(config.suite)
    if backend is None:
        backend = make_backend(config.backend, config.model_id)
    metas = [TaskMeta.of(s) for s in suite]
    suite_meta = SuiteMeta.from_tasks(metas)
    pool = (
        LessonPool.load(config.pool_path, config.pool_capacity) if config.pool_path else LessonPool(config.pool_capacity)
    )

    contexts = []
    for scenario, meta in zip(suite, metas):
        schedule = None
        if config.strategy.flexible:
            schedule = allocate_episodes(assess_difficulty(meta, suite_meta), config.ep_total)
        contexts.append(_TaskContext(scenario, [a.render() for a in solve_reference(scenario)], schedule))

    log = RunLog(
        {
            "format": 1,
            "strategy": config.strategy.value,
            "ep_total": config.ep_total,
            "k_window": config.k_window,
            "pool_capacity": config.pool_capacity,
            "max_steps": config.max_steps,
            "seed": config.seed,
            "parallel": config.parallel,
            "backend": config.backend,
            "suite": [s.id for s in suite],
            "max_complexity": suite_meta.max_complexity,
            "initial_pool": [l.to_dict() for l in pool],
        }
    )
    out = Path(config.out_dir) if config.out_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        log.stream_to(out / TRACE_FILE)
    try:
        if config.parallel:
            _run_parallel(contexts, config, backend, log, pool)
        else:
            for ctx in contexts:
                _run_task(ctx, config, backend, log, pool)
        log.emit("run-end", tasks=len(suite), calls=backend.calls, tokens=backend.tokens)
    finally:
        log.close()

    report = success_rate(log)
    if out is not None:
        pool.save(out / POOL_FILE)
        from .report import write_report

        write_report(report, out)
    return report


def _run_parallel(contexts, config, backend, log: RunLog, pool: LessonPool) -> None:
    # tasks see the pool as it was when the run started; their additions
    # are merged in suite order once every task has finished
    base_ids = {l.id for l in pool}
    jobs = []
    for ctx in contexts:
        jobs.append((ctx, RunLog(), pool.snapshot()))
    with ThreadPoolExecutor(max_workers=min(8, len(jobs)) or 1) as ex:
        futures = [ex.submit(_run_task, ctx, config, backend, buf, snap) for ctx, buf, snap in jobs]
        for f in futures:
            f.result()
    for ctx, buf, snap in jobs:
        log.extend(buf.events)
        _merge_pool(pool, snap, base_ids, log, ctx.scenario.id)


def inject_lesson(pool_path, text: str, capacity: int = DEFAULT_POOL_CAPACITY) -> Optional[Lesson]:
    """Append a human-written lesson; returns ``None`` if the pool already has it."""
    if not text.strip():
        raise ValueError("lesson text must be non-empty")
    pool = LessonPool.load(pool_path, capacity)
    lesson = pool.add(text, {"kind": HUMAN_INJECTED})
    if lesson is not None:
        pool.save(pool_path)
    return lesson
