"""Random layout generation and the rank-ratio contrast filter.

Candidate layouts are scored by simulating the reactive and the Bayesian-
predictive robot against a distance-soft-max human, ranking each robot's
expected completion time within the full enumerated makespan distribution,
and keeping only layouts where the two ranks disagree strongly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PackingFailure
from .harness import run_trial
from .humans import HumanKind, HumanModel, TrajectorySpec
from .planner import PlanQuery, allocation_minima, rank_of
from .policies import PolicyKind
from .world import DEFAULT_DOMAIN, Layout, Point, Task, TaskKind, dist, initial_state

MIN_SEPARATION = 2.0
MAX_ATTEMPTS = 10000

RATIO_HIGH = 1.5
RATIO_LOW = 0.6

# Goal-choice model used for scoring candidates (soft-max over distance,
# temperature fit from pilot behavior in the source experiment).
GENERATION_HUMAN = HumanModel(kind=HumanKind.BOLTZMANN, beta_choice=1.05)
DEFAULT_ROLLOUTS = 200


@dataclass(frozen=True)
class LayoutCandidate:
    layout: Layout
    expected_time_reactive: float
    expected_time_bayes: float
    rank_reactive: int
    rank_bayes: int

    @property
    def ratio(self) -> float:
        return self.rank_bayes / self.rank_reactive

    @property
    def accepted(self) -> bool:
        return self.ratio > RATIO_HIGH or self.ratio < RATIO_LOW


def random_layout(n_one: int, m_joint: int, seed: int) -> Layout:
    """Sample task and start positions uniformly with minimum pairwise
    separation; task ids are 0..n-1 one-agent then n..n+m-1 joint."""
    if not 1 <= n_one + m_joint <= 8:
        raise ValueError("need 1..8 tasks")
    rng = np.random.default_rng(seed)
    dom = DEFAULT_DOMAIN
    points: list[Point] = []
    attempts = 0
    while len(points) < n_one + m_joint + 2:
        attempts += 1
        if attempts > MAX_ATTEMPTS:
            raise PackingFailure(
                f"no packing of {n_one + m_joint} tasks after {MAX_ATTEMPTS} attempts"
            )
        p = Point(float(rng.uniform(dom.x_min, dom.x_max)),
                  float(rng.uniform(dom.y_min, dom.y_max)))
        if all(dist(p, q) >= MIN_SEPARATION for q in points):
            points.append(p)
    tasks = tuple(
        Task(i, points[i], TaskKind.ONE_AGENT if i < n_one else TaskKind.JOINT)
        for i in range(n_one + m_joint)
    )
    return Layout(tasks=tasks, human_start=points[-2], robot_start=points[-1])


def expected_completion_time(
    layout: Layout,
    policy_kind: PolicyKind,
    human_model: HumanModel,
    rollouts: int,
    seed: int,
    traj_spec: TrajectorySpec | None = None,
) -> float:
    """Mean closed-loop completion time over seeded Monte-Carlo rollouts."""
    if rollouts < 1:
        raise ValueError("rollouts must be >= 1")
    times = []
    for k in range(rollouts):
        trial_seed = int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
        record = run_trial(layout, policy_kind, human_model, trial_seed,
                           traj_spec=traj_spec)
        times.append(record.completion_time)
    return float(np.mean(times))


def rank_ratio(
    layout: Layout,
    human_model: HumanModel = GENERATION_HUMAN,
    rollouts: int = DEFAULT_ROLLOUTS,
    seed: int = 0,
    traj_spec: TrajectorySpec | None = None,
) -> LayoutCandidate:
    """Rank both adaptive robots' expected times within the layout's
    distribution of per-allocation optimal makespans."""
    all_times = allocation_minima(PlanQuery(initial_state(layout), layout))
    t_reactive = expected_completion_time(
        layout, PolicyKind.REACTIVE, human_model, rollouts, seed, traj_spec)
    t_bayes = expected_completion_time(
        layout, PolicyKind.PREDICTIVE_BAYES, human_model, rollouts, seed, traj_spec)
    return LayoutCandidate(
        layout=layout,
        expected_time_reactive=t_reactive,
        expected_time_bayes=t_bayes,
        rank_reactive=rank_of(t_reactive, all_times),
        rank_bayes=rank_of(t_bayes, all_times),
    )


def generate_filtered(
    count: int,
    seed: int,
    out_dir: str | Path,
    *,
    n_one: int = 3,
    m_joint: int = 2,
    rollouts: int = DEFAULT_ROLLOUTS,
    human_model: HumanModel = GENERATION_HUMAN,
) -> list[LayoutCandidate]:
    """Score ``count`` random candidates, write the accepted layouts plus a
    manifest CSV, and return every scored candidate."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    candidates = []
    for i in range(count):
        layout_seed = int(np.random.SeedSequence([seed, i, 0]).generate_state(1)[0])
        layout = random_layout(n_one, m_joint, layout_seed)
        cand = rank_ratio(layout, human_model, rollouts,
                          seed=int(np.random.SeedSequence([seed, i, 1]).generate_state(1)[0]))
        candidates.append((i, layout_seed, cand))

    with open(out / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "layout_seed", "n_one", "m_joint", "ratio",
                    "rank_reactive", "rank_bayes",
                    "expected_time_reactive", "expected_time_bayes", "accepted"])
        for i, layout_seed, cand in candidates:
            w.writerow([
                i, layout_seed, n_one, m_joint, f"{cand.ratio:.4f}",
                cand.rank_reactive, cand.rank_bayes,
                f"{cand.expected_time_reactive:.4f}", f"{cand.expected_time_bayes:.4f}",
                int(cand.accepted),
            ])
            if cand.accepted:
                cand.layout.save(out / f"layout_{i:03d}.json")
    return [cand for _, _, cand in candidates]
