import pytest

from collabsim.errors import WrongPolicy
from collabsim.inference import InferenceParams
from collabsim.planner import PlanQuery, enumerate_all, solve
from collabsim.policies import (
    PolicyKind,
    absorb_captures,
    init_controller,
    on_human_goal_public,
    on_human_task_complete,
    on_tick_observation,
    resolve_deadlock,
)
from collabsim.world import (
    Layout,
    Point,
    Rect,
    Task,
    TaskKind,
    TeamState,
    initial_state,
)

WIDE = Rect(-10, -10, 40, 40)


def _layout(tasks, human=Point(0, 0), robot=Point(10, 0)):
    return Layout(tasks=tuple(tasks), human_start=human, robot_start=robot,
                  domain=WIDE)


@pytest.fixture
def small_layout():
    return _layout([
        Task(0, Point(2, 1), TaskKind.ONE_AGENT),
        Task(1, Point(8, 1), TaskKind.ONE_AGENT),
        Task(2, Point(5, 5), TaskKind.JOINT),
    ])


def test_init_plan_is_enumeration_optimal(small_layout):
    st = initial_state(small_layout)
    for kind in PolicyKind:
        ctrl = init_controller(kind, st, small_layout)
        best = min(p.makespan for p in enumerate_all(PlanQuery(st, small_layout)))
        assert ctrl.plan.makespan == best


def test_init_single_joint_task_targets_it():
    lay = _layout([Task(0, Point(5, 3), TaskKind.JOINT)])
    st = initial_state(lay)
    ctrl = init_controller(PolicyKind.FIXED, st, lay)
    assert ctrl.robot_goal() == 0
    assert ctrl.planned_human_first() == 0


def test_fixed_and_reactive_identical_at_start(small_layout):
    st = initial_state(small_layout)
    a = init_controller(PolicyKind.FIXED, st, small_layout)
    b = init_controller(PolicyKind.REACTIVE, st, small_layout)
    assert a.plan == b.plan


def test_bayes_controller_starts_uniform(small_layout):
    st = initial_state(small_layout)
    ctrl = init_controller(PolicyKind.PREDICTIVE_BAYES, st, small_layout)
    assert ctrl.belief is not None
    assert ctrl.belief.support == (0, 1, 2)
    assert ctrl.belief.probs == (1 / 3, 1 / 3, 1 / 3)


def test_oracle_agreement_means_no_replan(small_layout):
    st = initial_state(small_layout)
    ctrl = init_controller(PolicyKind.PREDICTIVE_ORACLE, st, small_layout)
    agreed = on_human_goal_public(ctrl, ctrl.planned_human_first(), st,
                                  small_layout, tick=0)
    assert agreed is ctrl
    assert agreed.replan_log == ()


def test_oracle_deviation_pins_new_first(small_layout):
    st = initial_state(small_layout)
    ctrl = init_controller(PolicyKind.PREDICTIVE_ORACLE, st, small_layout)
    other = next(t for t in (0, 1, 2) if t != ctrl.planned_human_first())
    updated = on_human_goal_public(ctrl, other, st, small_layout, tick=3)
    assert updated.plan.human_seq[0] == other
    assert [e.reason for e in updated.replan_log] == ["oracle_deviation"]
    assert updated.replan_log[0].tick == 3


def test_oracle_rejects_wrong_policy(small_layout):
    st = initial_state(small_layout)
    ctrl = init_controller(PolicyKind.FIXED, st, small_layout)
    with pytest.raises(WrongPolicy):
        on_human_goal_public(ctrl, 0, st, small_layout, tick=0)
    bayes = init_controller(PolicyKind.PREDICTIVE_BAYES, st, small_layout)
    with pytest.raises(WrongPolicy):
        on_tick_observation(init_controller(PolicyKind.REACTIVE, st, small_layout),
                            Point(0, 0), Point(1, 0), st, small_layout, tick=0)
    assert bayes.belief is not None


def test_observation_updates_belief_and_replans():
    # goals in clearly distinct directions so one step is unambiguous
    lay = _layout([
        Task(0, Point(0, 8), TaskKind.ONE_AGENT),
        Task(1, Point(8, 0), TaskKind.ONE_AGENT),
        Task(2, Point(14, 12), TaskKind.JOINT),
    ])
    st = initial_state(lay)
    ctrl = init_controller(PolicyKind.PREDICTIVE_BAYES, st, lay,
                           InferenceParams(beta=5.0, gamma=0.9, running_cost=1.0))
    updated = on_tick_observation(ctrl, st.human_pos, Point(1.0, 0.0), st, lay,
                                  tick=1)
    assert updated.belief is not None
    assert updated.belief.prob_of(1) > 1 / 3
    assert updated.belief.prob_of(1) > updated.belief.prob_of(0)


def test_fixed_splices_without_replanning(small_layout):
    st = initial_state(small_layout)
    ctrl = init_controller(PolicyKind.FIXED, st, small_layout)
    stolen = ctrl.robot_goal()
    st2 = TeamState(human_pos=Point(2, 1), robot_pos=st.robot_pos,
                    remaining=st.remaining - {stolen})
    updated = on_human_task_complete(ctrl, st2, small_layout, tick=4)
    assert stolen not in updated.plan.robot_seq
    assert updated.replan_log == ()  # splice is not a re-plan
    # order of the survivors is preserved from the original plan
    survivors = [t for t in ctrl.plan.robot_seq if t != stolen]
    assert list(updated.plan.robot_seq) == survivors


def test_reactive_replans_optimally_on_completion(small_layout):
    st = initial_state(small_layout)
    ctrl = init_controller(PolicyKind.REACTIVE, st, small_layout)
    done = 0
    st2 = TeamState(human_pos=Point(2, 1), robot_pos=Point(8, 0.8),
                    remaining=st.remaining - {done})
    updated = on_human_task_complete(ctrl, st2, small_layout, tick=5)
    best = min(p.makespan for p in enumerate_all(PlanQuery(st2, small_layout)))
    assert updated.plan.makespan == best
    assert [e.reason for e in updated.replan_log] == ["human_completion"]


def test_completion_on_last_task_does_not_solve(small_layout):
    st = initial_state(small_layout)
    ctrl = init_controller(PolicyKind.REACTIVE, st, small_layout)
    st2 = TeamState(human_pos=Point(5, 5), robot_pos=Point(5, 5),
                    remaining=frozenset())
    updated = on_human_task_complete(ctrl, st2, small_layout, tick=9)
    assert updated.plan.human_seq == ()
    assert updated.plan.robot_seq == ()
    assert updated.replan_log == ()


def test_absorb_prunes_bayes_belief(small_layout):
    st = initial_state(small_layout)
    ctrl = init_controller(PolicyKind.PREDICTIVE_BAYES, st, small_layout)
    st2 = TeamState(human_pos=st.human_pos, robot_pos=Point(8, 1),
                    remaining=st.remaining - {1})
    updated = absorb_captures(ctrl, st2, small_layout)
    assert updated.belief is not None
    assert updated.belief.support == (0, 2)
    assert 1 not in updated.plan.robot_seq


def test_resolve_deadlock_redirects_robot():
    lay = _layout([
        Task(0, Point(3, 6), TaskKind.JOINT),
        Task(1, Point(13, 6), TaskKind.JOINT),
        Task(2, Point(8, 12), TaskKind.ONE_AGENT),
    ])
    ctrl = init_controller(PolicyKind.FIXED, initial_state(lay), lay)
    st = TeamState(human_pos=Point(3.1, 6), robot_pos=Point(12.9, 6),
                   remaining=frozenset({0, 1, 2}),
                   human_waiting_at=0, robot_waiting_at=1)
    updated, st2 = resolve_deadlock(ctrl, st, lay, tick=7)
    assert st2.robot_waiting_at is None
    assert st2.robot_goal == 0
    assert updated.plan.human_seq[0] == 0
    assert updated.plan.robot_seq[0] == 0
    assert [e.reason for e in updated.replan_log] == ["deadlock"]
    # the leftover one-agent task is still covered after resolution
    assert 2 in updated.plan.human_seq or 2 in updated.plan.robot_seq


def test_resolve_deadlock_noop_when_same_joint(small_layout):
    st = TeamState(human_pos=Point(5, 5), robot_pos=Point(5.1, 5),
                   remaining=frozenset({2}),
                   human_waiting_at=2, robot_waiting_at=2)
    ctrl = init_controller(PolicyKind.FIXED, initial_state(small_layout), small_layout)
    same_ctrl, same_st = resolve_deadlock(ctrl, st, small_layout, tick=1)
    assert same_ctrl is ctrl and same_st is st
