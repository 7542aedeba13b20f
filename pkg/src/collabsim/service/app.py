"""FastAPI application: REST endpoints over the core package plus the
WebSocket session protocol for live play."""

from __future__ import annotations

import asyncio
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import ValidationError

from ..errors import CollabError, ConfigError
from ..harness import run_trial
from ..humans import HumanModel, TrajectorySpec
from ..planner import PlanQuery, enumerate_all, solve
from ..policies import PolicyKind
from ..world import Layout, initial_state
from . import models
from .session import SessionConfig, SessionRunner


def load_layouts(layouts_dir: str | Path) -> dict[str, Layout]:
    layouts = {}
    for path in sorted(Path(layouts_dir).glob("*.json")):
        layouts[path.stem] = Layout.load(path)
    if not layouts:
        raise ConfigError(f"no layout files in {layouts_dir}")
    return layouts


def create_app(
    layouts_dir: str | Path,
    records_dir: str | None = None,
    *,
    policies: tuple[PolicyKind, ...] = (
        PolicyKind.FIXED, PolicyKind.REACTIVE, PolicyKind.PREDICTIVE_BAYES,
    ),
    tick_interval: float = 0.05,
    traj_spec: TrajectorySpec | None = None,
) -> FastAPI:
    app = FastAPI(title="collabsim", version="0.1.0")
    layouts = load_layouts(layouts_dir)
    app.state.layouts = layouts
    app.state.sessions: dict[str, SessionRunner] = {}
    app.state.policies = policies
    app.state.tick_interval = tick_interval
    app.state.traj_spec = traj_spec or TrajectorySpec()
    app.state.records_dir = records_dir

    def _layout_or_404(layout_id: str) -> Layout:
        try:
            return layouts[layout_id]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown layout {layout_id!r}")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "layouts": len(layouts)}

    @app.get("/api/layouts", response_model=models.LayoutsResponse)
    def list_layouts():
        return {"layouts": [{"layout_id": lid, "layout": lay.to_dict()}
                            for lid, lay in layouts.items()]}

    @app.post("/api/plan", response_model=models.PlanResponse)
    def plan(req: models.PlanRequest):
        layout = _layout_or_404(req.layout_id)
        try:
            result = solve(PlanQuery(initial_state(layout), layout,
                                     pinned_human_first=req.pinned_human_first))
        except CollabError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "human_seq": list(result.human_seq),
            "robot_seq": list(result.robot_seq),
            "completion_times": {str(k): v for k, v in result.completion_times.items()},
            "makespan": result.makespan,
        }

    @app.get("/api/layouts/{layout_id}/completion-times",
             response_model=models.CompletionTimesResponse)
    def completion_times(layout_id: str):
        """Every feasible plan's makespan; the distribution behind rank
        ordering and performance-bonus bands."""
        layout = _layout_or_404(layout_id)
        try:
            plans = enumerate_all(PlanQuery(initial_state(layout), layout))
        except CollabError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        makespans = sorted(p.makespan for p in plans)
        return {"layout_id": layout_id, "makespans": makespans,
                "optimum": makespans[0]}

    @app.post("/api/simulate", response_model=models.SimulateResponse)
    def simulate(req: models.SimulateRequest):
        layout = _layout_or_404(req.layout_id)
        try:
            record = run_trial(
                layout,
                PolicyKind(req.policy),
                HumanModel.from_dict(req.human_model),
                req.seed,
                traj_spec=TrajectorySpec.from_dict(req.traj_spec) if req.traj_spec
                else None,
                layout_id=req.layout_id,
            )
        except (CollabError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "completion_time": record.completion_time,
            "robot_one_agent_count": record.robot_one_agent_count,
            "simultaneous_count": record.simultaneous_count,
            "inference_error_rate": record.inference_error_rate,
            "replan_count": len(record.replans),
            "tick_count": len(record.ticks),
        }

    @app.websocket("/ws")
    async def session_socket(ws: WebSocket) -> None:
        await ws.accept()
        runner: SessionRunner | None = None
        try:
            while True:
                while runner is not None and runner.wants_tick:
                    for msg in runner.advance_tick():
                        await ws.send_json(msg)
                    if app.state.tick_interval > 0:
                        await asyncio.sleep(app.state.tick_interval)
                data = await ws.receive_json()
                try:
                    envelope = models.Envelope(**data)
                except ValidationError:
                    await ws.send_json({"type": models.ERROR, "session_id": "",
                                        "seq": 0, "payload": {"reason": "bad envelope"}})
                    continue
                if runner is None:
                    runner = _attach_session(app, envelope)
                for msg in runner.handle_message(envelope):
                    await ws.send_json(msg)
        except WebSocketDisconnect:
            pass

    return app


def _attach_session(app: FastAPI, envelope: models.Envelope) -> SessionRunner:
    """Find the session named in the envelope or start a fresh one."""
    sessions: dict[str, SessionRunner] = app.state.sessions
    if envelope.session_id and envelope.session_id in sessions:
        return sessions[envelope.session_id]
    session_id = envelope.session_id or uuid.uuid4().hex[:12]
    seed = int(envelope.payload.get("seed", 0))
    config = SessionConfig(
        layouts=tuple(app.state.layouts.items()),
        policies=app.state.policies,
        seed=seed,
        traj_spec=app.state.traj_spec,
        tick_interval=app.state.tick_interval,
        records_dir=app.state.records_dir,
    )
    runner = SessionRunner(session_id, config)
    sessions[session_id] = runner
    return runner
