"""Closed-loop trial engine: one instance runs one trial, tick by tick.

The engine owns the world state, the robot controller, and the human's
current trajectory. It does not decide the human's goals: batch simulation
feeds it draws from a human model, the live service feeds it clicks. Both
paths produce identical traces for identical inputs, which is what makes
offline replay and live-protocol equivalence checks possible.

Motion is continuous inside a tick: both agents advance through sub-tick
arrival events (task captures, joint rendezvous), and goal decisions take
zero simulated time, so leftover movement carries into the next leg. A tick
is therefore exactly one time unit of travel for every moving agent, and a
trial's tick count tracks the continuous optimum to within a tick instead
of accumulating per-leg rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import policies, world
from .errors import EmptyRemaining, MissingGoal, NonTermination, SimulationError
from .humans import Trajectory, TrajectorySpec, make_trajectory
from .inference import InferenceParams, map_goal
from .planner import JointPlan, PlanQuery, solve
from .policies import PolicyKind, RobotController
from .world import CaptureEvent, Completer, Layout, Point, TaskKind, dist

_EPS = 1e-9


@dataclass(frozen=True)
class TickTrace:
    """One line of a trial trace; everything metrics need is here."""

    tick: int
    human_x: float
    human_y: float
    robot_x: float
    robot_y: float
    human_goal: int | None
    robot_goal: int | None
    human_waiting: bool
    robot_waiting: bool
    human_moved: bool
    map_goal: int | None
    map_prob: float | None
    timer: int
    captures: tuple[CaptureEvent, ...] = ()
    replans: tuple[policies.ReplanEvent, ...] = ()


class TrialEngine:
    """Stepwise driver for a single trial.

    Call advance() repeatedly: it returns the completed tick's trace row,
    or None when the human must choose a goal (at a leg boundary, possibly
    mid-tick). Answer with choose_goal()/choose_idle() and advance again.
    """

    def __init__(
        self,
        layout: Layout,
        policy_kind: PolicyKind,
        seed: int,
        *,
        params: InferenceParams | None = None,
        traj_spec: TrajectorySpec | None = None,
        capture_radius: float = world.CAPTURE_RADIUS,
        confidence_gate: float = 0.0,
        max_ticks_factor: float = 100.0,
    ) -> None:
        self.layout = layout
        self.policy_kind = policy_kind
        self.seed = seed
        self.params = params or InferenceParams()
        self.traj_spec = traj_spec or TrajectorySpec()
        self.capture_radius = capture_radius
        self.side_rng = np.random.default_rng([seed, 1])
        self.state = world.initial_state(layout)
        self.controller: RobotController = policies.init_controller(
            policy_kind, self.state, layout, self.params, confidence_gate
        )
        self.initial_plan: JointPlan = self.controller.plan
        self.max_ticks = max(1, math.ceil(max_ticks_factor * self.initial_plan.makespan))
        self.tick_count = 0
        self.trace: list[TickTrace] = []
        self.trajectory: Trajectory | None = None
        self.arc = 0.0
        self.human_idle = False
        # in-progress tick bookkeeping
        self._in_tick = False
        self._t = 0.0
        self._tick_events: list[CaptureEvent] = []
        self._h_prev = self.state.human_pos
        self._r_prev = self.state.robot_pos
        self._hgoal0: int | None = None
        self._rgoal0: int | None = None
        self._belief0 = self.controller.belief
        self._replans_before = 0
        self._robot_route: list[int] = []

    # -- queries --------------------------------------------------------

    @property
    def terminal(self) -> bool:
        return world.is_terminal(self.state)

    @property
    def robot_active(self) -> bool:
        return (self.controller.robot_goal() is not None
                or self.state.robot_waiting_at is not None)

    @property
    def needs_goal_choice(self) -> bool:
        return (
            not self.terminal
            and self.state.human_goal is None
            and self.state.human_waiting_at is None
            and not self.human_idle
        )

    def legal_goals(self) -> list[int]:
        return sorted(self.state.remaining)

    def current_optimal_plan(self) -> JointPlan:
        return solve(PlanQuery(self.state, self.layout))

    # -- commands -------------------------------------------------------

    def choose_idle(self) -> None:
        """The human deliberately stands by (its optimal share is empty);
        lasts until the next capture changes the board. Only legal while the
        robot is making progress, otherwise the trial would stall."""
        if not self.needs_goal_choice:
            raise SimulationError("goal choice not expected now")
        if not self.robot_active:
            raise SimulationError("cannot idle while the robot has nothing to do")
        self.human_idle = True

    def choose_goal(self, task_id: int) -> None:
        """Commit the human to a new goal task and build its trajectory.

        Decisions are instantaneous: made between ticks or at the moment a
        leg ends mid-tick, they consume no simulated time either way.
        """
        if not self.needs_goal_choice:
            raise SimulationError("goal choice not expected now")
        if task_id not in self.state.remaining:
            raise EmptyRemaining(f"task {task_id} is not remaining")
        loc = self.layout.task(task_id).location
        self.trajectory = make_trajectory(self.state.human_pos, loc, self.traj_spec,
                                          self.side_rng)
        self.arc = 0.0
        self.state = replace(self.state, human_goal=task_id)
        if self.controller.kind is PolicyKind.PREDICTIVE_ORACLE:
            self.controller = policies.on_human_goal_public(
                self.controller, task_id, self.state, self.layout, self.tick_count
            )
            self._refresh_robot_route()

    def advance(self) -> TickTrace | None:
        """Run the trial until the current tick completes or a goal choice
        is needed. Returns the tick's trace row, or None when blocked."""
        if self.terminal:
            raise SimulationError("trial already terminal")
        if self.needs_goal_choice:
            return None
        if not self._in_tick:
            self._begin_tick()
        return self._march()

    def step(self) -> TickTrace:
        """advance() for callers that know no choice is pending."""
        row = self.advance()
        if row is None:
            raise MissingGoal("human must choose a goal before ticking")
        return row

    # -- internals ------------------------------------------------------

    def _begin_tick(self) -> None:
        self.tick_count += 1
        if self.tick_count > self.max_ticks:
            raise NonTermination(
                f"exceeded {self.max_ticks} ticks (optimal makespan "
                f"{self.initial_plan.makespan:.2f})"
            )
        self.state = replace(self.state, robot_goal=self.controller.robot_goal())
        self._in_tick = True
        self._t = 0.0
        self._tick_events = []
        self._h_prev = self.state.human_pos
        self._r_prev = self.state.robot_pos
        self._hgoal0 = self.state.human_goal
        self._rgoal0 = self.state.robot_goal
        self._belief0 = self.controller.belief
        self._replans_before = len(self.controller.replan_log)
        self._refresh_robot_route()

    def _refresh_robot_route(self) -> None:
        self._robot_route = [t for t in self.controller.plan.robot_seq
                             if t in self.state.remaining]

    def _robot_target(self) -> tuple[int, Point] | None:
        while self._robot_route and self._robot_route[0] not in self.state.remaining:
            self._robot_route.pop(0)
        if not self._robot_route:
            return None
        tid = self._robot_route[0]
        return tid, self.layout.task(tid).location

    def _capture(self, task_id: int, completer: Completer) -> None:
        """Remove a captured task and let the controller react immediately:
        the human reaching its goal triggers the policy's completion
        behavior, anything else is spliced out of the pending sequences."""
        self._tick_events.append(CaptureEvent(self.tick_count, task_id, completer))
        st = self.state
        was_human_goal = st.human_goal == task_id
        remaining = st.remaining - {task_id}
        self.state = replace(
            st,
            remaining=remaining,
            human_goal=st.human_goal if st.human_goal in remaining else None,
            robot_goal=st.robot_goal if st.robot_goal in remaining else None,
            human_waiting_at=st.human_waiting_at if st.human_waiting_at in remaining else None,
            robot_waiting_at=st.robot_waiting_at if st.robot_waiting_at in remaining else None,
        )
        if was_human_goal:
            self.trajectory = None
        if was_human_goal and completer in (Completer.HUMAN, Completer.BOTH):
            self.controller = policies.on_human_task_complete(
                self.controller, self.state, self.layout, self.tick_count
            )
        else:
            self.controller = policies.absorb_captures(self.controller, self.state,
                                                       self.layout)
        self._refresh_robot_route()
        self.human_idle = False  # board changed; the human reconsiders

    def _march(self) -> TickTrace | None:
        v = self.layout.velocity
        while self._t < 1.0 - _EPS:
            if self.needs_goal_choice:
                return None  # leg boundary: decision happens in zero time

            human_moves = (self.state.human_waiting_at is None
                           and self.state.human_goal is not None
                           and self.trajectory is not None)
            d_h = max(0.0, self.trajectory.length - self.arc) if human_moves else math.inf

            robot_target = None
            if self.state.robot_waiting_at is None:
                robot_target = self._robot_target()
            d_r = (dist(self.state.robot_pos, robot_target[1])
                   if robot_target else math.inf)

            budget = (1.0 - self._t) * v
            step = min(d_h, d_r, budget)

            if human_moves and step > 0:
                self.arc += step
                self.state = replace(self.state,
                                     human_pos=self.trajectory.point_at_arc(self.arc))
            if robot_target and step > 0:
                self.state = replace(
                    self.state,
                    robot_pos=world.step_agent(self.state.robot_pos, robot_target[1], step),
                )
            self._t += step / v

            human_arrived = human_moves and d_h <= step + _EPS
            robot_arrived = robot_target is not None and d_r <= step + _EPS
            if not human_arrived and not robot_arrived:
                break  # budget exhausted short of any arrival, or nobody movable
            if human_arrived:
                self._handle_human_arrival(robot_arrived_same_instant=(
                    robot_arrived and robot_target[0] == self.state.human_goal))
            if robot_arrived and robot_target[0] in self.state.remaining:
                self._handle_robot_arrival(robot_target[0])
        return self._end_tick()

    def _handle_human_arrival(self, robot_arrived_same_instant: bool) -> None:
        tid = self.state.human_goal
        assert tid is not None
        task = self.layout.task(tid)
        if task.kind is TaskKind.ONE_AGENT:
            near = (dist(self.state.robot_pos, task.location) <= self.capture_radius
                    or robot_arrived_same_instant)
            self._capture(tid, Completer.BOTH if near else Completer.HUMAN)
        else:
            if (self.state.robot_waiting_at == tid or robot_arrived_same_instant
                    or dist(self.state.robot_pos, task.location) <= self.capture_radius):
                self._capture(tid, Completer.BOTH)
            else:
                self.state = replace(self.state, human_waiting_at=tid)

    def _handle_robot_arrival(self, tid: int) -> None:
        task = self.layout.task(tid)
        if task.kind is TaskKind.ONE_AGENT:
            near = dist(self.state.human_pos, task.location) <= self.capture_radius
            self._capture(tid, Completer.BOTH if near else Completer.ROBOT)
            if self._robot_route and self._robot_route[0] == tid:
                self._robot_route.pop(0)
        else:
            if (self.state.human_waiting_at == tid
                    or dist(self.state.human_pos, task.location) <= self.capture_radius):
                self._capture(tid, Completer.BOTH)
                if self._robot_route and self._robot_route[0] == tid:
                    self._robot_route.pop(0)
            else:
                self.state = replace(self.state, robot_waiting_at=tid)

    def _sweep_captures(self) -> None:
        """End-of-tick geometric sweep: grazes complete one-agent tasks,
        joints complete when both agents are inside the radius, and an agent
        closing in on its own goal joint starts waiting there. Unlike the
        world-level capture rule, merely passing near a joint task does not
        trap an agent; only intentional arrivals wait."""
        r = self.capture_radius
        target = self._robot_target()
        robot_intent = target[0] if target else None
        for tid in sorted(self.state.remaining):
            task = self.layout.task(tid)
            h_in = dist(self.state.human_pos, task.location) <= r
            r_in = dist(self.state.robot_pos, task.location) <= r
            if task.kind is TaskKind.ONE_AGENT:
                if h_in and r_in:
                    self._capture(tid, Completer.BOTH)
                elif h_in:
                    self._capture(tid, Completer.HUMAN)
                elif r_in:
                    self._capture(tid, Completer.ROBOT)
            else:
                if h_in and r_in:
                    self._capture(tid, Completer.BOTH)
                elif h_in and self.state.human_goal == tid:
                    self.state = replace(self.state, human_waiting_at=tid)
                elif r_in and robot_intent == tid:
                    self.state = replace(self.state, robot_waiting_at=tid)

    def _end_tick(self) -> TickTrace:
        self._sweep_captures()
        if self.state.human_goal is not None and self.state.human_goal not in self.state.remaining:
            self.trajectory = None
        events = list(self._tick_events)

        moved = (self.state.human_pos != self._h_prev
                 or self.state.robot_pos != self._r_prev)
        if moved:
            self.state = replace(self.state,
                                 elapsed_move_ticks=self.state.elapsed_move_ticks + 1)
        human_moved = self.state.human_pos != self._h_prev

        goal_captured = (self._hgoal0 is not None
                         and self._hgoal0 not in self.state.remaining)
        if (self.controller.kind is PolicyKind.PREDICTIVE_BAYES
                and human_moved and self._hgoal0 is not None and not goal_captured):
            self.controller = policies.on_tick_observation(
                self.controller, self._h_prev, self.state.human_pos, self.state,
                self.layout, self.tick_count,
            )
            self._refresh_robot_route()
        # The trace records the belief held while the human made this move,
        # i.e. before the tick's own observation folds in: on a leg's first
        # tick that is the freshly reset prior.
        belief_for_trace = self._belief0

        deadlocked = (self.state.human_waiting_at is not None
                      and self.state.robot_waiting_at is not None
                      and self.state.human_waiting_at != self.state.robot_waiting_at)
        if deadlocked:
            self.controller, self.state = policies.resolve_deadlock(
                self.controller, self.state, self.layout, self.tick_count
            )

        if not moved and not events and not deadlocked and not self.terminal:
            if (self.state.human_waiting_at is None
                    and self.state.robot_waiting_at is None):
                raise MissingGoal("nobody can move but tasks remain")

        row = TickTrace(
            tick=self.tick_count,
            human_x=self.state.human_pos.x,
            human_y=self.state.human_pos.y,
            robot_x=self.state.robot_pos.x,
            robot_y=self.state.robot_pos.y,
            human_goal=self._hgoal0,
            robot_goal=self._rgoal0,
            human_waiting=self.state.human_waiting_at is not None,
            robot_waiting=self.state.robot_waiting_at is not None,
            human_moved=human_moved,
            map_goal=map_goal(belief_for_trace) if belief_for_trace is not None else None,
            map_prob=max(belief_for_trace.probs) if belief_for_trace is not None else None,
            timer=self.state.elapsed_move_ticks,
            captures=tuple(events),
            replans=self.controller.replan_log[self._replans_before:],
        )
        self.trace.append(row)
        self._in_tick = False
        self._t = 0.0
        return row
