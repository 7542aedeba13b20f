"""Session state machine for live trials, independent of the transport.

A session owns an ordered trial list (every layout under every robot policy,
grouped in blocks by policy), runs one trial engine at a time, and records
everything. The server is authoritative: ticks advance only between a goal
choice and the end of that leg, so client latency never touches the timer.
The human avatar follows the same server-generated curved trajectory used in
batch simulation, which keeps live inference conditions identical to offline
runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..engine import TrialEngine
from ..harness import TrialRecord, finalize_record, record_to_lines
from ..humans import HumanKind, HumanModel, TrajectorySpec
from ..inference import InferenceParams
from ..policies import PolicyKind
from ..world import Layout
from . import models

ROBOT_TAGS = ("red", "blue", "yellow", "green")


@dataclass(frozen=True)
class SessionConfig:
    layouts: tuple[tuple[str, Layout], ...]
    policies: tuple[PolicyKind, ...] = (
        PolicyKind.FIXED, PolicyKind.REACTIVE, PolicyKind.PREDICTIVE_BAYES,
    )
    seed: int = 0
    traj_spec: TrajectorySpec = TrajectorySpec()
    params: InferenceParams = InferenceParams()
    tick_interval: float = 0.05  # wall-clock seconds between state ticks
    records_dir: str | None = None


@dataclass
class Trial:
    layout_id: str
    layout: Layout
    policy: PolicyKind
    robot_tag: str
    seed: int


class SessionRunner:
    """One live session: blocks of trials, one robot policy per block."""

    def __init__(self, session_id: str, config: SessionConfig) -> None:
        self.session_id = session_id
        self.config = config
        self.seq = 0
        rng = np.random.default_rng(config.seed)
        tags = list(ROBOT_TAGS[: len(config.policies)])
        rng.shuffle(tags)
        self.tag_by_policy = {p: tags[i] for i, p in enumerate(config.policies)}
        self.trials: list[Trial] = []
        for b, policy in enumerate(config.policies):
            for li, (lid, layout) in enumerate(config.layouts):
                index = len(self.trials)
                self.trials.append(Trial(
                    layout_id=lid, layout=layout, policy=policy,
                    robot_tag=self.tag_by_policy[policy],
                    seed=int(np.random.SeedSequence([config.seed, index]).generate_state(1)[0]),
                ))
        self.block_size = len(config.layouts)
        self.trial_index = -1
        self.engine: TrialEngine | None = None
        self.records: list[TrialRecord] = []
        self.preferences: list[str] = []
        self.phase = "awaiting_hello"

    # -- outbound helpers -------------------------------------------------

    def _msg(self, mtype: str, payload: dict) -> dict:
        self.seq += 1
        return {"type": mtype, "session_id": self.session_id, "seq": self.seq,
                "payload": payload}

    def _error(self, reason: str) -> dict:
        return self._msg(models.ERROR, {"reason": reason})

    def _trial_start(self, resumed: bool = False) -> dict:
        trial = self.trials[self.trial_index]
        return self._msg(models.TRIAL_START, {
            "trial_index": self.trial_index,
            "trial_count": len(self.trials),
            "layout_id": trial.layout_id,
            "layout": trial.layout.to_dict(),
            "robot_tag": trial.robot_tag,
            "resumed": resumed,
        })

    def _state_tick(self, tick: int) -> dict:
        assert self.engine is not None
        st = self.engine.state
        return self._msg(models.STATE_TICK, {
            "tick": tick,
            "human": {"x": st.human_pos.x, "y": st.human_pos.y,
                      "waiting": st.human_waiting_at is not None},
            "robot": {"x": st.robot_pos.x, "y": st.robot_pos.y,
                      "waiting": st.robot_waiting_at is not None},
            "remaining": sorted(st.remaining),
            "timer": st.elapsed_move_ticks,
        })

    def _snapshot(self) -> dict:
        assert self.engine is not None
        return self._state_tick(self.engine.tick_count)

    # -- lifecycle ---------------------------------------------------------

    def _begin_trial(self) -> list[dict]:
        self.trial_index += 1
        trial = self.trials[self.trial_index]
        self.engine = TrialEngine(
            trial.layout, trial.policy, trial.seed,
            params=self.config.params, traj_spec=self.config.traj_spec,
        )
        self._goals_played: list[int] = []
        self.phase = "choosing"
        return [self._trial_start(), self._snapshot()]

    def _finish_trial(self) -> list[dict]:
        assert self.engine is not None
        trial = self.trials[self.trial_index]
        record = finalize_record(
            self.engine, trial.layout_id,
            HumanModel(kind=HumanKind.SCRIPTED,
                       script=tuple(self._goals_played), rng_seed=0),
            self.config.traj_spec,
        )
        self.records.append(record)
        self._persist(record)
        out = [self._msg(models.TRIAL_END, {
            "trial_index": self.trial_index,
            "completion_time": record.completion_time,
            "metrics": {
                "robot_one_agent_count": record.robot_one_agent_count,
                "simultaneous_count": record.simultaneous_count,
                "inference_error_rate": record.inference_error_rate,
            },
        })]
        self.engine = None
        end_of_block = (self.trial_index + 1) % self.block_size == 0
        if end_of_block:
            self.phase = "preference"
            seen = []
            for t in self.trials[: self.trial_index + 1]:
                if t.robot_tag not in seen:
                    seen.append(t.robot_tag)
            out.append(self._msg(models.PREFERENCE_PROMPT, {"options": seen}))
        elif self.trial_index + 1 < len(self.trials):
            out.extend(self._begin_trial())
        else:
            self.phase = "done"
        return out

    def _persist(self, record: TrialRecord) -> None:
        if not self.config.records_dir:
            return
        out = Path(self.config.records_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{self.session_id}_trial_{self.trial_index:03d}.jsonl"
        path.write_text("\n".join(record_to_lines(record)) + "\n")
        meta = out / f"{self.session_id}_preferences.json"
        meta.write_text(json.dumps({"preferences": self.preferences}))

    # -- inbound -----------------------------------------------------------

    def handle_message(self, msg: models.Envelope) -> list[dict]:
        if msg.type == models.HELLO:
            return self._on_hello()
        if msg.type == models.GOAL_CHOICE:
            return self._on_goal_choice(msg.payload)
        if msg.type == models.PREFERENCE_CHOICE:
            return self._on_preference(msg.payload)
        return [self._error(f"unknown message type {msg.type!r}")]

    def _on_hello(self) -> list[dict]:
        if self.phase == "awaiting_hello":
            return self._begin_trial()
        # reconnect: the client resumes with the server's state of the world
        if self.engine is not None:
            return [self._trial_start(resumed=True), self._snapshot()]
        if self.phase == "preference":
            seen = []
            for t in self.trials[: self.trial_index + 1]:
                if t.robot_tag not in seen:
                    seen.append(t.robot_tag)
            return [self._msg(models.PREFERENCE_PROMPT, {"options": seen})]
        if self.phase == "done":
            return [self._msg(models.TRIAL_END, {"session_complete": True})]
        return [self._error("hello out of phase")]

    def _on_goal_choice(self, payload: dict) -> list[dict]:
        if self.phase != "choosing" or self.engine is None:
            return [self._error("goal_choice out of phase")]
        if not self.engine.needs_goal_choice:
            return [self._error("no goal choice pending")]
        try:
            task_id = int(payload["task_id"])
        except (KeyError, TypeError, ValueError):
            return [self._error("goal_choice needs a task_id")]
        if task_id not in self.engine.state.remaining:
            return [self._error("task gone")]
        self.engine.choose_goal(task_id)
        self._goals_played.append(task_id)
        self.phase = "ticking"
        return []

    def _on_preference(self, payload: dict) -> list[dict]:
        if self.phase != "preference":
            return [self._error("preference_choice out of phase")]
        tag = payload.get("robot_tag")
        if tag not in self.tag_by_policy.values():
            return [self._error(f"unknown robot tag {tag!r}")]
        self.preferences.append(tag)
        if self.trial_index + 1 < len(self.trials):
            return self._begin_trial()
        self.phase = "done"
        if self.config.records_dir and self.records:
            self._persist(self.records[-1])
        return [self._msg(models.TRIAL_END, {"session_complete": True})]

    # -- ticking ------------------------------------------------------------

    @property
    def wants_tick(self) -> bool:
        return self.phase == "ticking" and self.engine is not None

    def advance_tick(self) -> list[dict]:
        """Run the engine until the current tick completes; emit the tick's
        messages. Pauses (returning the choice to the client) whenever the
        human needs a new goal, including mid-tick leg boundaries."""
        assert self.engine is not None
        row = self.engine.advance()
        if row is None:
            self.phase = "choosing"
            return [self._snapshot()]
        out = [self._state_tick(row.tick)]
        for e in row.captures:
            out.append(self._msg(models.CAPTURE, {
                "tick": e.tick, "task_id": e.task_id,
                "completed_by": e.completed_by.value,
            }))
        for r in row.replans:
            out.append(self._msg(models.REPLAN_NOTICE,
                                 {"tick": r.tick, "reason": r.reason}))
        if self.engine.terminal:
            out.extend(self._finish_trial())
        return out
