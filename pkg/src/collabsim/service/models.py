"""Pydantic models for the wire protocol and the REST endpoints."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field

# Wire message types, exactly as spoken on the socket.
HELLO = "hello"
TRIAL_START = "trial_start"
GOAL_CHOICE = "goal_choice"
STATE_TICK = "state_tick"
CAPTURE = "capture"
REPLAN_NOTICE = "replan_notice"
TRIAL_END = "trial_end"
PREFERENCE_PROMPT = "preference_prompt"
PREFERENCE_CHOICE = "preference_choice"
ERROR = "error"

CLIENT_TYPES = {HELLO, GOAL_CHOICE, PREFERENCE_CHOICE}


class Envelope(BaseModel):
    """Every socket message, both directions."""

    type: str
    session_id: str = ""
    seq: int = 0
    payload: dict[str, Any] = Field(default_factory=dict)


class AgentView(BaseModel):
    x: float
    y: float
    waiting: bool


class StateTickPayload(BaseModel):
    tick: int
    human: AgentView
    robot: AgentView
    remaining: list[int]
    timer: int


# -- REST ----------------------------------------------------------------

class LayoutInfo(BaseModel):
    layout_id: str
    layout: dict[str, Any]


class LayoutsResponse(BaseModel):
    layouts: list[LayoutInfo]


class PlanRequest(BaseModel):
    layout_id: str
    pinned_human_first: int | None = None


class PlanResponse(BaseModel):
    human_seq: list[int]
    robot_seq: list[int]
    completion_times: dict[str, float]
    makespan: float


class CompletionTimesResponse(BaseModel):
    layout_id: str
    makespans: list[float]
    optimum: float


class SimulateRequest(BaseModel):
    layout_id: str
    policy: str
    human_model: dict[str, Any]
    seed: int
    traj_spec: dict[str, Any] = Field(default_factory=dict)


class SimulateResponse(BaseModel):
    completion_time: int
    robot_one_agent_count: int
    simultaneous_count: int
    inference_error_rate: float | None
    replan_count: int
    tick_count: int
