"""Bayesian inference of the human's current goal from observed motion.

Each observed step is scored under a soft-max action model: the more a step
improves the discounted value of reaching a candidate goal, the more likely
that goal made the human take it. Likelihoods are normalized over a finite
fan of unit-speed headings, with the observed step substituted for the
nearest fan direction. All belief arithmetic runs in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DegenerateBelief, EmptySupport, StepTooLarge
from .world import Layout, Point, dist

# Slack for the one-step precondition; covers float noise on snap steps.
_STEP_TOL = 1e-6


@dataclass(frozen=True)
class InferenceParams:
    """Soft-max rationality model parameters.

    beta: rationality index (0 = indifferent, large = near-optimal)
    gamma: discount factor of the underlying control problem
    terminal_reward: value of standing on the goal
    running_cost: per-step cost while traveling
    heading_count: size of the heading fan used to normalize likelihoods

    The defaults are calibrated so that, with the standard curved human
    trajectories, the robot's wrong-goal rate lands in the mid-teens: a
    far-sighted discount keeps distant goals hard to tell apart early in
    a leg, which is where real inference errors live.
    """

    beta: float = 1.05
    gamma: float = 0.98
    terminal_reward: float = 10.0
    running_cost: float = 0.1
    heading_count: int = 24

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if self.heading_count < 4:
            raise ValueError("heading_count must be >= 4")


@dataclass(frozen=True)
class Belief:
    """Posterior over candidate goal task ids. Probabilities sum to one."""

    support: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probs):
            raise ValueError("support and probs must align")
        if not self.support:
            raise EmptySupport("belief over empty support")

    def prob_of(self, task_id: int) -> float:
        try:
            return self.probs[self.support.index(task_id)]
        except ValueError:
            return 0.0


def value_function(h: Point, g: Point, params: InferenceParams) -> float:
    """Discounted value of position ``h`` for goal ``g``.

    gamma**d * U - c * (gamma - gamma**d) / (1 - gamma), with d the Euclidean
    distance. The formula is applied literally for real-valued d; note it
    yields U + c at d = 0.
    """
    d = dist(h, g)
    gd = params.gamma ** d
    return gd * params.terminal_reward - params.running_cost * (
        (params.gamma - gd) / (1.0 - params.gamma)
    )


def _heading_fan(h: Point, velocity: float, count: int) -> np.ndarray:
    angles = 2.0 * math.pi * np.arange(count) / count
    return np.stack(
        [h.x + velocity * np.cos(angles), h.y + velocity * np.sin(angles)], axis=1
    )


def _nearest_heading_index(h: Point, h_next: Point, count: int) -> int:
    if h_next == h:
        return 0
    phi = math.atan2(h_next.y - h.y, h_next.x - h.x)
    return round(phi / (2.0 * math.pi / count)) % count


ValueFn = Callable[[Point, Point, InferenceParams], float]


def log_likelihood(
    h_next: Point,
    h: Point,
    g: Point,
    layout: Layout,
    params: InferenceParams,
    value_fn: ValueFn = value_function,
) -> float:
    """Log probability of observing step ``h -> h_next`` given goal ``g``."""
    step = dist(h, h_next)
    if step > layout.velocity * (1.0 + _STEP_TOL) + _STEP_TOL:
        raise StepTooLarge(f"step of {step:.6f} exceeds velocity {layout.velocity}")
    candidates = _heading_fan(h, layout.velocity, params.heading_count)
    idx = _nearest_heading_index(h, h_next, params.heading_count)
    candidates[idx] = (h_next.x, h_next.y)
    values = np.array(
        [value_fn(Point(float(cx), float(cy)), g, params) for cx, cy in candidates]
    )
    logits = params.beta * values
    return float(logits[idx] - _logsumexp(logits))


def likelihood(
    h_next: Point,
    h: Point,
    g: Point,
    layout: Layout,
    params: InferenceParams,
    value_fn: ValueFn = value_function,
) -> float:
    return math.exp(log_likelihood(h_next, h, g, layout, params, value_fn))


def _logsumexp(logits: np.ndarray) -> float:
    m = float(np.max(logits))
    return m + math.log(float(np.sum(np.exp(logits - m))))


def reset_prior(remaining: Iterable[int]) -> Belief:
    """Uniform belief over the remaining tasks, ordered by id."""
    support = tuple(sorted(remaining))
    if not support:
        raise EmptySupport("cannot reset prior over empty remaining set")
    p = 1.0 / len(support)
    return Belief(support=support, probs=(p,) * len(support))


def posterior_update(
    belief: Belief,
    h: Point,
    h_next: Point,
    layout: Layout,
    params: InferenceParams,
) -> Belief:
    """One Bayes step: reweight each candidate goal by the step likelihood."""
    log_post = np.empty(len(belief.support))
    for i, tid in enumerate(belief.support):
        prior = belief.probs[i]
        if prior <= 0.0:
            log_post[i] = -np.inf
            continue
        g = layout.task(tid).location
        log_post[i] = math.log(prior) + log_likelihood(h_next, h, g, layout, params)
    if not np.any(np.isfinite(log_post)):
        raise DegenerateBelief("all posterior mass vanished")
    log_post -= _logsumexp(log_post)
    return Belief(support=belief.support, probs=tuple(np.exp(log_post).tolist()))


def prune_support(belief: Belief, remaining: frozenset[int]) -> Belief:
    """Drop candidates no longer on the board and renormalize."""
    keep = [i for i, tid in enumerate(belief.support) if tid in remaining]
    if not keep:
        raise EmptySupport("no belief candidates remain")
    support = tuple(belief.support[i] for i in keep)
    raw = np.array([belief.probs[i] for i in keep])
    total = float(raw.sum())
    if total <= 0.0:
        return reset_prior(support)
    return Belief(support=support, probs=tuple((raw / total).tolist()))


def map_goal(belief: Belief) -> int:
    """Most probable candidate; exact ties break to the lowest task id."""
    best = max(belief.probs)
    return min(tid for tid, p in zip(belief.support, belief.probs) if p == best)
