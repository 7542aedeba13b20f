"""Robot controllers: fixed, reactive, and the two predictive variants.

Every controller starts from the same optimal joint plan. They differ in
what information triggers a re-plan: nothing (fixed, barring deadlock),
human task completions (reactive), the human's announced goal (oracle
predictive), or a MAP estimate from observed motion (Bayesian predictive).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import inference
from .errors import WrongPolicy
from .inference import Belief, InferenceParams
from .planner import JointPlan, PlanQuery, schedule_makespan, solve
from .world import Layout, Point, TeamState

from enum import Enum


class PolicyKind(str, Enum):
    FIXED = "fixed"
    REACTIVE = "reactive"
    PREDICTIVE_ORACLE = "predictive_oracle"
    PREDICTIVE_BAYES = "predictive_bayes"


PREDICTIVE_KINDS = (PolicyKind.PREDICTIVE_ORACLE, PolicyKind.PREDICTIVE_BAYES)


@dataclass(frozen=True)
class ReplanEvent:
    tick: int
    reason: str


@dataclass(frozen=True)
class RobotController:
    """Value-type controller state; every event handler returns a new one."""

    kind: PolicyKind
    plan: JointPlan
    belief: Belief | None = None
    params: InferenceParams = InferenceParams()
    confidence_gate: float = 0.0
    replan_log: tuple[ReplanEvent, ...] = ()

    def robot_goal(self) -> int | None:
        return self.plan.robot_seq[0] if self.plan.robot_seq else None

    def planned_human_first(self) -> int | None:
        return self.plan.human_seq[0] if self.plan.human_seq else None


def init_controller(
    kind: PolicyKind,
    state: TeamState,
    layout: Layout,
    params: InferenceParams | None = None,
    confidence_gate: float = 0.0,
) -> RobotController:
    """Plan once from the initial state; Bayes controllers start uniform."""
    plan = solve(PlanQuery(state, layout))
    belief = None
    if kind is PolicyKind.PREDICTIVE_BAYES:
        belief = inference.reset_prior(state.remaining)
    return RobotController(
        kind=kind,
        plan=plan,
        belief=belief,
        params=params or InferenceParams(),
        confidence_gate=confidence_gate,
    )


def _replan(
    controller: RobotController,
    state: TeamState,
    layout: Layout,
    tick: int,
    reason: str,
    pinned_human_first: int | None = None,
    pinned_robot_first: int | None = None,
    log_always: bool = False,
) -> RobotController:
    """Re-solve and swap in the plan. Deviation re-plans are logged only
    when the plan actually changed; completion re-plans always are."""
    plan = solve(PlanQuery(state, layout, pinned_human_first, pinned_robot_first))
    if plan == controller.plan and not log_always:
        return controller
    log = controller.replan_log + (ReplanEvent(tick, reason),)
    return replace(controller, plan=plan, replan_log=log)


def _splice(controller: RobotController, state: TeamState, layout: Layout) -> RobotController:
    """Drop captured tasks from the sequences without re-optimizing.

    This is the fixed robot's inconsistency handling: completed tasks leave
    its pending lists and it heads for the next one, keeping the original
    order. Times are refreshed by rescheduling the surviving sequences.
    """
    human_seq = tuple(t for t in controller.plan.human_seq if t in state.remaining)
    robot_seq = tuple(t for t in controller.plan.robot_seq if t in state.remaining)
    if (human_seq, robot_seq) == (controller.plan.human_seq, controller.plan.robot_seq):
        return controller
    if not state.remaining:
        return replace(controller, plan=JointPlan(human_seq, robot_seq, {}, 0.0))
    times, ms = schedule_makespan(human_seq, robot_seq, state, layout)
    return replace(controller, plan=JointPlan(human_seq, robot_seq, times, ms))


def on_human_goal_public(
    controller: RobotController,
    true_goal: int,
    state: TeamState,
    layout: Layout,
    tick: int,
) -> RobotController:
    """Oracle path: the human's chosen goal is revealed the moment they
    commit to it. Re-plan with that goal pinned first if it deviates."""
    if controller.kind is not PolicyKind.PREDICTIVE_ORACLE:
        raise WrongPolicy(f"{controller.kind} does not receive announced goals")
    if true_goal not in state.remaining:
        raise WrongPolicy(f"announced goal {true_goal} is not remaining")
    if true_goal == controller.planned_human_first():
        return controller
    if state.robot_waiting_at is not None:
        # a waiting robot cannot be redirected; the completion or deadlock
        # re-plan will fold the new goal in (pinning now can even be
        # infeasible when the announced goal is a different joint task)
        return controller
    return _replan(controller, state, layout, tick, "oracle_deviation",
                   pinned_human_first=true_goal)


def on_tick_observation(
    controller: RobotController,
    h_prev: Point,
    h_next: Point,
    state: TeamState,
    layout: Layout,
    tick: int,
) -> RobotController:
    """Bayes path: fold one observed step into the belief, prune candidates
    that left the board, and re-plan pinned on the MAP goal if it deviates
    from the plan's assumption."""
    if controller.kind is not PolicyKind.PREDICTIVE_BAYES:
        raise WrongPolicy(f"{controller.kind} does not observe motion")
    assert controller.belief is not None
    belief = inference.posterior_update(controller.belief, h_prev, h_next, layout,
                                        controller.params)
    belief = inference.prune_support(belief, state.remaining)
    controller = replace(controller, belief=belief)
    estimate = inference.map_goal(belief)
    if estimate == controller.planned_human_first():
        return controller
    if belief.prob_of(estimate) < controller.confidence_gate:
        return controller
    if state.human_waiting_at is not None or state.robot_waiting_at is not None:
        # the human has committed to a rendezvous or the robot is stuck at
        # one; a deviation pin is moot (and can conflict with the wait)
        return controller
    return _replan(controller, state, layout, tick, "map_deviation",
                   pinned_human_first=estimate)


def on_human_task_complete(
    controller: RobotController,
    state: TeamState,
    layout: Layout,
    tick: int,
) -> RobotController:
    """The human just finished a task. Reactive and predictive robots
    re-plan from scratch assuming optimal play from here; the fixed robot
    only splices out whatever was captured."""
    if controller.kind is PolicyKind.PREDICTIVE_BAYES and state.remaining:
        controller = replace(controller, belief=inference.reset_prior(state.remaining))
    if not state.remaining:
        return _splice(controller, state, layout)
    if controller.kind is PolicyKind.FIXED:
        return _splice(controller, state, layout)
    controller = _splice(controller, state, layout)
    return _replan(controller, state, layout, tick, "human_completion",
                   log_always=True)


def absorb_captures(
    controller: RobotController,
    state: TeamState,
    layout: Layout,
) -> RobotController:
    """Captures happened that were not the human reaching its goal (robot
    captures, incidental grazes): splice them out of the sequences and keep
    going. Belief support shrinks with the board."""
    controller = _splice(controller, state, layout)
    if controller.belief is not None and state.remaining:
        controller = replace(
            controller, belief=inference.prune_support(controller.belief, state.remaining)
        )
    return controller


def resolve_deadlock(
    controller: RobotController,
    state: TeamState,
    layout: Layout,
    tick: int,
) -> tuple[RobotController, TeamState]:
    """Both agents wait at different joint tasks: the robot abandons its
    own, heads to the human's, and re-plans with that task first for both."""
    j_human = state.human_waiting_at
    j_robot = state.robot_waiting_at
    if j_human is None or j_robot is None or j_human == j_robot:
        return controller, state
    state = replace(state, robot_waiting_at=None, robot_goal=j_human)
    plan = solve(PlanQuery(state, layout,
                           pinned_human_first=j_human, pinned_robot_first=j_human))
    controller = replace(
        controller,
        plan=plan,
        replan_log=controller.replan_log + (ReplanEvent(tick, "deadlock"),),
    )
    return controller, state
