"""Exact min-makespan allocation and sequencing of the remaining tasks.

A feasible solution is a pair of per-agent visit sequences: every one-agent
task appears in exactly one sequence, every joint task in both, and the two
sequences order the joint tasks identically (anything else deadlocks). The
makespan objective is minimized exactly by depth-first branch-and-bound over
interleaved sequence construction; a brute-force enumerator over the same
feasible set serves as the optimality oracle and produces the completion-time
distribution used for ranking.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import MalformedSequence, NoTasks, TooLarge
from .world import Layout, Point, TaskKind, TeamState, dist


@dataclass(frozen=True)
class JointPlan:
    """Per-agent task orders with exact (continuous) completion times."""

    human_seq: tuple[int, ...]
    robot_seq: tuple[int, ...]
    completion_times: dict[int, float]
    makespan: float


@dataclass(frozen=True)
class PlanQuery:
    state: TeamState
    layout: Layout
    pinned_human_first: int | None = None
    pinned_robot_first: int | None = None


def _validate_sequences(
    human_seq: tuple[int, ...],
    robot_seq: tuple[int, ...],
    state: TeamState,
    layout: Layout,
) -> None:
    remaining = state.remaining
    for seq in (human_seq, robot_seq):
        if len(set(seq)) != len(seq):
            raise MalformedSequence("duplicate task in a sequence")
        for tid in seq:
            if tid not in remaining:
                raise MalformedSequence(f"task {tid} not remaining")
    h_joint = [t for t in human_seq if layout.task(t).kind is TaskKind.JOINT]
    r_joint = [t for t in robot_seq if layout.task(t).kind is TaskKind.JOINT]
    if h_joint != r_joint:
        raise MalformedSequence("joint tasks must appear in both sequences in the same order")
    covered = set(human_seq) | set(robot_seq)
    if covered != set(remaining):
        raise MalformedSequence("sequences must cover exactly the remaining tasks")
    ones = [t for t in remaining if layout.task(t).kind is TaskKind.ONE_AGENT]
    for tid in ones:
        if tid in human_seq and tid in robot_seq:
            raise MalformedSequence(f"one-agent task {tid} assigned to both agents")


def schedule_makespan(
    human_seq: tuple[int, ...] | list[int],
    robot_seq: tuple[int, ...] | list[int],
    state: TeamState,
    layout: Layout,
) -> tuple[dict[int, float], float]:
    """Exact completion times for a sequence pair.

    Agents travel straight between consecutive tasks at the layout velocity;
    at a joint task the earlier arriver waits and completion is the later
    arrival. Times are continuous, not tick-quantized.
    """
    human_seq = tuple(human_seq)
    robot_seq = tuple(robot_seq)
    _validate_sequences(human_seq, robot_seq, state, layout)
    v = layout.velocity
    times: dict[int, float] = {}
    hp, rp = state.human_pos, state.robot_pos
    ht = rt = 0.0
    hi = ri = 0
    while hi < len(human_seq) or ri < len(robot_seq):
        while hi < len(human_seq) and layout.task(human_seq[hi]).kind is TaskKind.ONE_AGENT:
            loc = layout.task(human_seq[hi]).location
            ht += dist(hp, loc) / v
            times[human_seq[hi]] = ht
            hp = loc
            hi += 1
        while ri < len(robot_seq) and layout.task(robot_seq[ri]).kind is TaskKind.ONE_AGENT:
            loc = layout.task(robot_seq[ri]).location
            rt += dist(rp, loc) / v
            times[robot_seq[ri]] = rt
            rp = loc
            ri += 1
        if hi < len(human_seq) and ri < len(robot_seq):
            j = human_seq[hi]
            loc = layout.task(j).location
            arrival_h = ht + dist(hp, loc) / v
            arrival_r = rt + dist(rp, loc) / v
            t = max(arrival_h, arrival_r)
            times[j] = t
            hp = rp = loc
            ht = rt = t
            hi += 1
            ri += 1
    makespan = max(times.values()) if times else 0.0
    return times, makespan


def _effective_pins(query: PlanQuery) -> tuple[int | None, int | None]:
    """Resolve explicit pins plus the waiting-agent rule.

    A waiting agent cannot leave its joint task, so that task is forced
    first in its own sequence. The partner stays free: joint-order
    consistency already routes the partner's joints accordingly, and
    forcing the partner over early measurably lengthens schedules.
    """
    state = query.state
    ph = query.pinned_human_first
    pr = query.pinned_robot_first
    for pin in (ph, pr):
        if pin is not None and pin not in state.remaining:
            raise MalformedSequence(f"pinned task {pin} not remaining")
    if state.human_waiting_at is not None:
        j = state.human_waiting_at
        if ph is not None and ph != j:
            raise MalformedSequence("human pin conflicts with waiting task")
        ph = j
    if state.robot_waiting_at is not None:
        j = state.robot_waiting_at
        if pr is not None and pr != j:
            raise MalformedSequence("robot pin conflicts with waiting task")
        pr = j
    return ph, pr


def solve(query: PlanQuery, use_pruning: bool = True) -> JointPlan:
    """Optimal joint plan for the remaining tasks, honoring pins.

    Exact for the intended scale (around ten tasks). Equal-makespan ties
    prefer smaller total completion time, then the lexicographically
    smallest (human_seq, robot_seq), so results are deterministic; under
    dominance pruning the tie preferences are best-effort while makespan
    optimality is unconditional.
    """
    if not query.state.remaining:
        raise NoTasks("no remaining tasks to plan")
    ph, pr = _effective_pins(query)
    plan = _solve_cached(
        query.layout,
        query.state.human_pos,
        query.state.robot_pos,
        query.state.remaining,
        ph,
        pr,
        use_pruning,
    )
    return JointPlan(plan.human_seq, plan.robot_seq, dict(plan.completion_times), plan.makespan)


@lru_cache(maxsize=16384)
def _solve_cached(
    layout: Layout,
    human_pos: Point,
    robot_pos: Point,
    remaining: frozenset[int],
    pin_h: int | None,
    pin_r: int | None,
    use_pruning: bool,
) -> JointPlan:
    v = layout.velocity
    locs = {tid: layout.task(tid).location for tid in remaining}
    is_joint = {tid: layout.task(tid).kind is TaskKind.JOINT for tid in remaining}
    base_state = TeamState(human_pos=human_pos, robot_pos=robot_pos, remaining=remaining)

    # Best plan is chosen by makespan, then total completion time (equal-
    # makespan slack goes toward finishing tasks early rather than idling),
    # then lexicographic order of the sequences for determinism.
    best_key: list[tuple[float, float, tuple, tuple] | None] = [None]
    best_ms = [float("inf")]
    # Dominance memo: state key -> pareto set of (human time, robot time).
    memo: dict[tuple, list[tuple[float, float]]] = {}

    def dominated(key: tuple, ht: float, rt: float) -> bool:
        entries = memo.get(key)
        if entries is None:
            memo[key] = [(ht, rt)]
            return False
        for h0, r0 in entries:
            if h0 <= ht and r0 <= rt and (h0 < ht or r0 < rt):
                return True
        entries[:] = [(h0, r0) for h0, r0 in entries if not (ht <= h0 and rt <= r0 and (ht < h0 or rt < r0))]
        entries.append((ht, rt))
        return False

    def bound(ht: float, rt: float, tmax: float, unvisited: frozenset[int],
              hp: Point, rp: Point, h_stop: bool, r_stop: bool) -> float:
        # Admissible: every joint task still needs both agents from their
        # current positions; every one-agent task needs at least one
        # non-stopped agent. Waiting and routing can only add time.
        lb = max(tmax, ht, rt)
        for t in unvisited:
            dh = ht + dist(hp, locs[t]) / v
            dr = rt + dist(rp, locs[t]) / v
            if is_joint[t]:
                lb = max(lb, dh, dr)
            elif h_stop:
                lb = max(lb, dr)
            elif r_stop:
                lb = max(lb, dh)
            else:
                lb = max(lb, min(dh, dr))
        return lb

    def dfs(h_seq: list[int], r_seq: list[int], hp: Point, rp: Point,
            ht: float, rt: float, h_park: int | None, r_park: int | None,
            h_stop: bool, r_stop: bool, unvisited: frozenset[int], tmax: float) -> None:
        if not unvisited:
            pair = (tuple(h_seq), tuple(r_seq))
            times, ms = schedule_makespan(pair[0], pair[1], base_state, layout)
            key = (ms, sum(times.values()), pair[0], pair[1])
            if best_key[0] is None or key < best_key[0]:
                best_key[0] = key
                best_ms[0] = ms
            return
        if use_pruning:
            if bound(ht, rt, tmax, unvisited, hp, rp, h_stop, r_stop) > best_ms[0]:
                return
            key = (unvisited, hp, rp, h_park, r_park, h_stop, r_stop,
                   not h_seq, not r_seq)
            if dominated(key, ht, rt):
                return

        active: list[tuple[str, float]] = []
        if h_park is None and not h_stop:
            active.append(("H", ht))
        if r_park is None and not r_stop:
            active.append(("R", rt))
        if not active:
            return
        if len(active) == 2:
            agent = "H" if ht <= rt else "R"
        else:
            agent = active[0][0]

        if agent == "H":
            own_seq, own_pos, own_time = h_seq, hp, ht
            own_pin, other_pin = pin_h, pin_r
            other_park, other_stop, other_time = r_park, r_stop, rt
        else:
            own_seq, own_pos, own_time = r_seq, rp, rt
            own_pin, other_pin = pin_r, pin_h
            other_park, other_stop, other_time = h_park, h_stop, ht

        for tid in sorted(unvisited):
            if not own_seq and own_pin is not None and tid != own_pin:
                continue
            if (other_pin is not None and tid == other_pin
                    and not is_joint[tid]
                    and not (r_seq if agent == "H" else h_seq)):
                continue  # one-agent task reserved for the partner's pinned first move
            if other_park is not None and is_joint[tid] and tid != other_park:
                continue  # taking a second joint while the partner waits would deadlock
            if is_joint[tid] and other_stop:
                continue  # a stopped partner can never help finish a joint task
            arrival = own_time + dist(own_pos, locs[tid]) / v
            loc = locs[tid]
            if not is_joint[tid]:
                if agent == "H":
                    dfs(h_seq + [tid], r_seq, loc, rp, arrival, rt, h_park, r_park,
                        h_stop, r_stop, unvisited - {tid}, max(tmax, arrival))
                else:
                    dfs(h_seq, r_seq + [tid], hp, loc, ht, arrival, h_park, r_park,
                        h_stop, r_stop, unvisited - {tid}, max(tmax, arrival))
            elif other_park == tid:
                t = max(arrival, other_time)
                if agent == "H":
                    dfs(h_seq + [tid], r_seq, loc, loc, t, t, None, None,
                        h_stop, r_stop, unvisited - {tid}, max(tmax, t))
                else:
                    dfs(h_seq, r_seq + [tid], loc, loc, t, t, None, None,
                        h_stop, r_stop, unvisited - {tid}, max(tmax, t))
            else:
                if agent == "H":
                    dfs(h_seq + [tid], r_seq, loc, rp, arrival, rt, tid, r_park,
                        h_stop, r_stop, unvisited, tmax)
                else:
                    dfs(h_seq, r_seq + [tid], hp, loc, ht, arrival, h_park, tid,
                        h_stop, r_stop, unvisited, tmax)

        # Stop branch: bow out when every unvisited task is one-agent, the
        # partner is still going, and our own pin (if any) has been served.
        if (not any(is_joint[t] for t in unvisited)
                and not other_stop
                and not (own_pin is not None and not own_seq)):
            if agent == "H":
                dfs(h_seq, r_seq, hp, rp, ht, rt, h_park, r_park,
                    True, r_stop, unvisited, tmax)
            else:
                dfs(h_seq, r_seq, hp, rp, ht, rt, h_park, r_park,
                    h_stop, True, unvisited, tmax)

    dfs([], [], human_pos, robot_pos, 0.0, 0.0, None, None, False, False,
        remaining, 0.0)
    assert best_key[0] is not None, "search must find a feasible plan"
    _, _, h_seq, r_seq = best_key[0]
    times, ms = schedule_makespan(h_seq, r_seq, base_state, layout)
    return JointPlan(h_seq, r_seq, times, ms)


ENUMERATION_GUARD = 8


def _merges(own: tuple[int, ...], joint_order: tuple[int, ...]):
    """Every sequence whose joint subsequence equals joint_order and whose
    one-agent tasks are ``own`` in any order."""
    total = len(own) + len(joint_order)
    for perm in itertools.permutations(own):
        for slots in itertools.combinations(range(total), len(own)):
            seq: list[int | None] = [None] * total
            for s, tid in zip(slots, perm):
                seq[s] = tid
            it = iter(joint_order)
            yield tuple(tid if tid is not None else next(it) for tid in seq)


def enumerate_all(query: PlanQuery) -> list[JointPlan]:
    """Exhaustive list of every feasible (allocation, ordering) pair.

    The feasible set is enumerated independently of the search in solve():
    one-agent assignment subsets x joint-task orders x per-agent merges.
    Guarded to small instances; this is the optimality oracle and the source
    of the completion-time distribution.
    """
    state, layout = query.state, query.layout
    remaining = state.remaining
    if not remaining:
        raise NoTasks("no remaining tasks to enumerate")
    if len(remaining) > ENUMERATION_GUARD:
        raise TooLarge(f"{len(remaining)} tasks exceeds enumeration guard {ENUMERATION_GUARD}")
    ph, pr = _effective_pins(query)
    ones = tuple(sorted(t for t in remaining if layout.task(t).kind is TaskKind.ONE_AGENT))
    joints = tuple(sorted(t for t in remaining if layout.task(t).kind is TaskKind.JOINT))
    plans: list[JointPlan] = []
    for k in range(len(ones) + 1):
        for human_ones in itertools.combinations(ones, k):
            robot_ones = tuple(t for t in ones if t not in human_ones)
            for joint_order in itertools.permutations(joints):
                for human_seq in _merges(human_ones, joint_order):
                    if ph is not None and (not human_seq or human_seq[0] != ph):
                        continue
                    for robot_seq in _merges(robot_ones, joint_order):
                        if pr is not None and (not robot_seq or robot_seq[0] != pr):
                            continue
                        times, ms = schedule_makespan(human_seq, robot_seq, state, layout)
                        plans.append(JointPlan(human_seq, robot_seq, times, ms))
    return plans


def allocation_minima(query: PlanQuery) -> list[float]:
    """Best achievable makespan for each distinct assignment of one-agent
    tasks (joint tasks always go to both agents). This coarse distribution
    is the scale used for ranking realized completion times: it captures
    how good an allocation the team effectively played, without crediting
    or punishing pure ordering noise."""
    layout = query.layout
    ones = {t.id for t in layout.tasks
            if t.id in query.state.remaining and t.kind is TaskKind.ONE_AGENT}
    best: dict[frozenset[int], float] = {}
    for plan in enumerate_all(query):
        key = frozenset(t for t in plan.human_seq if t in ones)
        if key not in best or plan.makespan < best[key]:
            best[key] = plan.makespan
    return sorted(best.values())


def rank_of(time: float, all_times: list[float], tol: float = 1e-9) -> int:
    """1-based rank of ``time`` among the distinct values of ``all_times``.

    Values within ``tol`` of each other share a rank. A time between two
    distinct values takes the rank of the next value at or above it; times
    beyond the largest value clamp to the last rank.
    """
    if not all_times:
        raise ValueError("all_times must be nonempty")
    clusters: list[float] = []
    for val in sorted(all_times):
        if not clusters or val - clusters[-1] > tol:
            clusters.append(val)
    for i, c in enumerate(clusters):
        if time <= c + tol:
            return i + 1
    return len(clusters)
