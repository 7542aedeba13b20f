"""Planar two-agent world: tasks, agent dynamics, capture rules, tick engine.

Both agents move at the same constant speed in a rectangular arena. One-agent
tasks complete as soon as any agent comes within the capture radius; joint
tasks hold the first arriver in place until the partner shows up, and complete
the moment both are inside the radius.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import NamedTuple

from .errors import ConfigError, MissingGoal

# Defaults for the standard arena. The source experiment reports no units;
# these make typical 5-6 task trials run 20-60 ticks.
DOMAIN_SIZE = 20.0
VELOCITY = 1.0
CAPTURE_RADIUS = 0.25


class Point(NamedTuple):
    x: float
    y: float


def dist(a: Point, b: Point) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


class TaskKind(str, Enum):
    ONE_AGENT = "one_agent"
    JOINT = "joint"


class Completer(str, Enum):
    HUMAN = "human"
    ROBOT = "robot"
    BOTH = "both"


@dataclass(frozen=True)
class Task:
    id: int
    location: Point
    kind: TaskKind


@dataclass(frozen=True)
class Rect:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def contains(self, p: Point) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max


DEFAULT_DOMAIN = Rect(0.0, 0.0, DOMAIN_SIZE, DOMAIN_SIZE)


@dataclass(frozen=True)
class Layout:
    """Immutable trial definition: arena, tasks, start positions, speed."""

    tasks: tuple[Task, ...]
    human_start: Point
    robot_start: Point
    domain: Rect = DEFAULT_DOMAIN
    velocity: float = VELOCITY

    def __post_init__(self) -> None:
        if not self.tasks:
            raise ConfigError("layout needs at least one task")
        if self.velocity <= 0:
            raise ConfigError("velocity must be positive")
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ConfigError("task ids must be unique")
        locs = [t.location for t in self.tasks]
        if len(set(locs)) != len(locs):
            raise ConfigError("task locations must be distinct")
        if self.human_start in locs or self.robot_start in locs:
            raise ConfigError("agent starts must not coincide with task locations")
        for p in [self.human_start, self.robot_start, *locs]:
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise ConfigError("positions must be finite")
            if not self.domain.contains(p):
                raise ConfigError(f"position {p} outside domain")

    def task(self, task_id: int) -> Task:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(task_id)

    def task_ids(self) -> frozenset[int]:
        return frozenset(t.id for t in self.tasks)

    def to_dict(self) -> dict:
        return {
            "domain": {
                "x_min": self.domain.x_min,
                "y_min": self.domain.y_min,
                "x_max": self.domain.x_max,
                "y_max": self.domain.y_max,
            },
            "velocity": self.velocity,
            "human_start": {"x": self.human_start.x, "y": self.human_start.y},
            "robot_start": {"x": self.robot_start.x, "y": self.robot_start.y},
            "tasks": [
                {"id": t.id, "x": t.location.x, "y": t.location.y, "kind": t.kind.value}
                for t in self.tasks
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Layout":
        try:
            dom = data["domain"]
            tasks = tuple(
                Task(int(t["id"]), Point(float(t["x"]), float(t["y"])), TaskKind(t["kind"]))
                for t in data["tasks"]
            )
            return cls(
                tasks=tasks,
                human_start=Point(float(data["human_start"]["x"]), float(data["human_start"]["y"])),
                robot_start=Point(float(data["robot_start"]["x"]), float(data["robot_start"]["y"])),
                domain=Rect(float(dom["x_min"]), float(dom["y_min"]),
                            float(dom["x_max"]), float(dom["y_max"])),
                velocity=float(data["velocity"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad layout data: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Layout":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read layout {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class TeamState:
    """Dynamic world snapshot. A plain value: copy and pass around freely."""

    human_pos: Point
    robot_pos: Point
    remaining: frozenset[int]
    human_waiting_at: int | None = None
    robot_waiting_at: int | None = None
    human_goal: int | None = None
    robot_goal: int | None = None
    elapsed_move_ticks: int = 0


@dataclass(frozen=True)
class CaptureEvent:
    tick: int
    task_id: int
    completed_by: Completer


def initial_state(layout: Layout) -> TeamState:
    return TeamState(
        human_pos=layout.human_start,
        robot_pos=layout.robot_start,
        remaining=layout.task_ids(),
    )


def step_agent(pos: Point, goal: Point, speed: float) -> Point:
    """Advance ``pos`` toward ``goal`` by at most ``speed``, snapping exactly
    onto the goal when it is within one step."""
    if speed <= 0:
        raise ValueError("speed must be positive")
    d = dist(pos, goal)
    if d <= speed:
        return goal
    f = speed / d
    return Point(pos.x + (goal.x - pos.x) * f, pos.y + (goal.y - pos.y) * f)


def resolve_captures(
    state: TeamState,
    layout: Layout,
    capture_radius: float = CAPTURE_RADIUS,
    tick_index: int = 0,
) -> tuple[TeamState, list[CaptureEvent]]:
    """Apply capture rules at the agents' current positions.

    One-agent tasks inside the radius of either agent are completed (by both,
    if both are inside). A joint task with a single agent inside sets that
    agent's waiting flag; with both inside it completes and the flags clear.
    """
    events: list[CaptureEvent] = []
    remaining = set(state.remaining)
    human_wait = state.human_waiting_at
    robot_wait = state.robot_waiting_at

    for tid in sorted(state.remaining):
        task = layout.task(tid)
        h_in = dist(state.human_pos, task.location) <= capture_radius
        r_in = dist(state.robot_pos, task.location) <= capture_radius
        if task.kind is TaskKind.ONE_AGENT:
            if h_in and r_in:
                events.append(CaptureEvent(tick_index, tid, Completer.BOTH))
                remaining.discard(tid)
            elif h_in:
                events.append(CaptureEvent(tick_index, tid, Completer.HUMAN))
                remaining.discard(tid)
            elif r_in:
                events.append(CaptureEvent(tick_index, tid, Completer.ROBOT))
                remaining.discard(tid)
        else:
            if h_in and r_in:
                events.append(CaptureEvent(tick_index, tid, Completer.BOTH))
                remaining.discard(tid)
                if human_wait == tid:
                    human_wait = None
                if robot_wait == tid:
                    robot_wait = None
            elif h_in and human_wait is None:
                human_wait = tid
            elif r_in and robot_wait is None:
                robot_wait = tid

    # Waiting flags must point at remaining joint tasks.
    if human_wait is not None and human_wait not in remaining:
        human_wait = None
    if robot_wait is not None and robot_wait not in remaining:
        robot_wait = None
    human_goal = state.human_goal if state.human_goal in remaining else None
    robot_goal = state.robot_goal if state.robot_goal in remaining else None

    return (
        replace(
            state,
            remaining=frozenset(remaining),
            human_waiting_at=human_wait,
            robot_waiting_at=robot_wait,
            human_goal=human_goal,
            robot_goal=robot_goal,
        ),
        events,
    )


def is_terminal(state: TeamState) -> bool:
    return not state.remaining


def tick(
    state: TeamState,
    layout: Layout,
    *,
    human_target: Point | None = None,
    robot_target: Point | None = None,
    capture_radius: float = CAPTURE_RADIUS,
    tick_index: int = 0,
    human_idle_ok: bool = False,
    robot_idle_ok: bool = False,
) -> tuple[TeamState, list[CaptureEvent]]:
    """Advance the world one tick: move both agents, resolve captures,
    bump the movement timer.

    ``human_target``/``robot_target`` override the waypoint an agent steers
    toward this tick (used for curved human trajectories); by default each
    agent heads straight for its goal task. ``*_idle_ok`` marks an agent
    that legitimately has nothing to do (all remaining tasks belong to the
    other agent); otherwise a goal-less non-waiting agent raises MissingGoal.
    """
    if is_terminal(state):
        return state, []

    new_h = state.human_pos
    if state.human_waiting_at is None:
        target = human_target
        if target is None and state.human_goal is not None:
            target = layout.task(state.human_goal).location
        if target is not None:
            new_h = step_agent(state.human_pos, target, layout.velocity)
        elif not human_idle_ok:
            raise MissingGoal("human has no goal and tasks remain")

    new_r = state.robot_pos
    if state.robot_waiting_at is None:
        target = robot_target
        if target is None and state.robot_goal is not None:
            target = layout.task(state.robot_goal).location
        if target is not None:
            new_r = step_agent(state.robot_pos, target, layout.velocity)
        elif not robot_idle_ok:
            raise MissingGoal("robot has no goal and tasks remain")

    moved = new_h != state.human_pos or new_r != state.robot_pos
    after_move = replace(state, human_pos=new_h, robot_pos=new_r)
    after_capture, events = resolve_captures(after_move, layout, capture_radius, tick_index)
    if moved:
        after_capture = replace(
            after_capture, elapsed_move_ticks=after_capture.elapsed_move_ticks + 1
        )
    return after_capture, events
