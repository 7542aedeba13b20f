"""Simulated human decision-makers and trajectory generators.

Goal choice models: a mixture of optimal-vs-uniform play, a distance-based
soft-max chooser, and a scripted queue for fixtures and live replay. Motion
between goals is either a straight line or a quadratic Bezier that swings
to one side before correcting, consumed at constant arc-length speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyRemaining
from .planner import JointPlan
from .world import Layout, Point, TeamState, dist

BEZIER_SEGMENTS = 64
DEFAULT_CURVATURE = 0.25


class HumanKind(str, Enum):
    ALPHA_MIX = "alpha_mix"
    BOLTZMANN = "boltzmann"
    SCRIPTED = "scripted"


@dataclass(frozen=True)
class HumanModel:
    kind: HumanKind
    alpha: float = 0.5
    beta_choice: float = 1.05
    script: tuple[int, ...] = ()
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.beta_choice < 0:
            raise ValueError("beta_choice must be >= 0")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "alpha": self.alpha,
            "beta_choice": self.beta_choice,
            "script": list(self.script),
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HumanModel":
        return cls(
            kind=HumanKind(data["kind"]),
            alpha=float(data.get("alpha", 0.5)),
            beta_choice=float(data.get("beta_choice", 1.05)),
            script=tuple(int(t) for t in data.get("script", [])),
            rng_seed=int(data.get("rng_seed", 0)),
        )


class TrajectoryKind(str, Enum):
    STRAIGHT = "straight"
    BEZIER = "bezier"


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    SEEDED_RANDOM = "seeded_random"


@dataclass(frozen=True)
class TrajectorySpec:
    kind: TrajectoryKind = TrajectoryKind.BEZIER
    curvature: float = DEFAULT_CURVATURE
    side: Side = Side.SEEDED_RANDOM

    def __post_init__(self) -> None:
        if not 0.0 <= self.curvature <= 0.5:
            raise ValueError("curvature must be in [0, 0.5]")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "curvature": self.curvature, "side": self.side.value}

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectorySpec":
        return cls(
            kind=TrajectoryKind(data.get("kind", "bezier")),
            curvature=float(data.get("curvature", DEFAULT_CURVATURE)),
            side=Side(data.get("side", "seeded_random")),
        )


def boltzmann_choice_probs(state: TeamState, layout: Layout, beta_choice: float) -> tuple[tuple[int, ...], np.ndarray]:
    """Soft-max goal-choice distribution: nearer tasks are exponentially
    more likely, p(g) proportional to exp(-beta * distance)."""
    ids = tuple(sorted(state.remaining))
    if not ids:
        raise EmptyRemaining("no tasks to choose from")
    d = np.array([dist(state.human_pos, layout.task(t).location) for t in ids])
    logits = -beta_choice * d
    logits -= logits.max()
    w = np.exp(logits)
    return ids, w / w.sum()


def choose_goal(
    model: HumanModel,
    state: TeamState,
    layout: Layout,
    optimal_plan: JointPlan | None,
    rng: np.random.Generator,
) -> int | None:
    """Draw the human's next goal task.

    AlphaMix follows the current optimal plan's first human task with
    probability alpha, otherwise picks uniformly over the remaining tasks.
    When the optimal plan leaves the human idle (every remaining task is
    better done by the robot) the optimal "action" is None. Boltzmann
    samples by distance. Scripted models are driven externally (see
    HumanDriver), so this raises for them.
    """
    ids = sorted(state.remaining)
    if not ids:
        raise EmptyRemaining("no tasks to choose from")
    if model.kind is HumanKind.ALPHA_MIX:
        if optimal_plan is None:
            raise ValueError("AlphaMix needs the current optimal plan")
        if rng.random() < model.alpha:
            return optimal_plan.human_seq[0] if optimal_plan.human_seq else None
        return int(rng.choice(ids))
    if model.kind is HumanKind.BOLTZMANN:
        support, probs = boltzmann_choice_probs(state, layout, model.beta_choice)
        return int(rng.choice(support, p=probs))
    raise ValueError(f"choose_goal does not draw for {model.kind}")


@dataclass(frozen=True)
class Trajectory:
    """A start-to-goal path with an arc-length parameterization.

    ``point_at(s)`` evaluates the underlying curve parameter s in [0, 1];
    ``point_at_arc(d)`` walks d length units along the piecewise-linear
    approximation, which is what the tick engine consumes.
    """

    start: Point
    goal: Point
    control: Point
    points: tuple[Point, ...] = field(repr=False)
    cumulative: tuple[float, ...] = field(repr=False)

    @property
    def length(self) -> float:
        return self.cumulative[-1]

    def point_at(self, s: float) -> Point:
        t = min(max(s, 0.0), 1.0)
        u = 1.0 - t
        x = u * u * self.start.x + 2 * u * t * self.control.x + t * t * self.goal.x
        y = u * u * self.start.y + 2 * u * t * self.control.y + t * t * self.goal.y
        return Point(x, y)

    def point_at_arc(self, d: float) -> Point:
        if d <= 0.0:
            return self.start
        if d >= self.length:
            return self.goal
        # cumulative is strictly increasing; find the segment containing d
        lo, hi = 0, len(self.cumulative) - 1
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if self.cumulative[mid] <= d:
                lo = mid
            else:
                hi = mid
        seg = self.cumulative[hi] - self.cumulative[lo]
        f = (d - self.cumulative[lo]) / seg if seg > 0 else 0.0
        a, b = self.points[lo], self.points[hi]
        return Point(a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)


def make_trajectory(
    start: Point,
    goal: Point,
    spec: TrajectorySpec,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Build the path the human avatar follows for one goal leg."""
    if start == goal:
        raise ValueError("trajectory needs distinct start and goal")
    if spec.kind is TrajectoryKind.STRAIGHT or spec.curvature == 0.0:
        control = Point((start.x + goal.x) / 2.0, (start.y + goal.y) / 2.0)
    else:
        if spec.side is Side.SEEDED_RANDOM:
            if rng is None:
                raise ValueError("seeded_random side needs an rng")
            sign = 1.0 if rng.random() < 0.5 else -1.0
        else:
            sign = 1.0 if spec.side is Side.LEFT else -1.0
        length = dist(start, goal)
        ux, uy = (goal.x - start.x) / length, (goal.y - start.y) / length
        # unit normal; +90 degrees is the traveler's left
        nx, ny = -uy, ux
        mx, my = (start.x + goal.x) / 2.0, (start.y + goal.y) / 2.0
        offset = spec.curvature * length * sign
        control = Point(mx + nx * offset, my + ny * offset)

    ts = np.linspace(0.0, 1.0, BEZIER_SEGMENTS + 1)
    u = 1.0 - ts
    xs = u * u * start.x + 2 * u * ts * control.x + ts * ts * goal.x
    ys = u * u * start.y + 2 * u * ts * control.y + ts * ts * goal.y
    pts = tuple(Point(float(x), float(y)) for x, y in zip(xs, ys))
    cum = [0.0]
    for a, b in zip(pts[:-1], pts[1:]):
        cum.append(cum[-1] + dist(a, b))
    return Trajectory(start=start, goal=goal, control=control,
                      points=pts, cumulative=tuple(cum))


def initial_heading(traj: Trajectory) -> float:
    """Angle of the curve's departure direction (derivative at s=0)."""
    dx = 2.0 * (traj.control.x - traj.start.x)
    dy = 2.0 * (traj.control.y - traj.start.y)
    return math.atan2(dy, dx)
