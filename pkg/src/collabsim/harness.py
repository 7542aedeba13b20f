"""Batch experiment runner: trials, metrics, logging, and replay.

A trial is fully determined by (layout, policy, human model, seed), so every
record can be re-simulated bit-for-bit. Traces are written as line-delimited
JSON, one tick per line; batch runs additionally emit per-trial and aggregate
CSV tables.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .engine import TickTrace, TrialEngine
from .errors import ConfigError, NotApplicable
from .humans import HumanKind, HumanModel, TrajectorySpec, choose_goal
from .inference import InferenceParams
from .policies import PolicyKind, ReplanEvent
from .world import CAPTURE_RADIUS, CaptureEvent, Completer, Layout, TaskKind


@dataclass(frozen=True)
class TrialRecord:
    """Complete log of one trial plus its summary metrics."""

    layout_id: str
    layout: Layout
    policy: PolicyKind
    human_model: HumanModel
    traj_spec: TrajectorySpec
    seed: int
    ticks: tuple[TickTrace, ...]
    completion_time: int
    robot_one_agent_count: int
    simultaneous_count: int
    inference_error_rate: float | None

    @property
    def captures(self) -> list[CaptureEvent]:
        return [e for row in self.ticks for e in row.captures]

    @property
    def replans(self) -> list[ReplanEvent]:
        return [e for row in self.ticks for e in row.replans]


class _HumanDriver:
    """Stateful sampler wrapping a HumanModel for one trial."""

    def __init__(self, model: HumanModel, seed: int) -> None:
        self.model = model
        self.rng = np.random.default_rng([seed, model.rng_seed, 0])
        self._script_pos = 0

    def choose(self, engine: TrialEngine) -> int | None:
        if self.model.kind is HumanKind.SCRIPTED:
            if self._script_pos >= len(self.model.script):
                raise ConfigError("scripted human ran out of goals")
            goal = self.model.script[self._script_pos]
            self._script_pos += 1
            return goal
        plan = None
        if self.model.kind is HumanKind.ALPHA_MIX:
            plan = engine.current_optimal_plan()
        goal = choose_goal(self.model, engine.state, engine.layout, plan, self.rng)
        if goal is None and not engine.robot_active:
            # The plan leaves the human idle but the robot has stalled
            # (its own pending list emptied); someone has to finish.
            ids = sorted(engine.state.remaining)
            locs = [engine.layout.task(t).location for t in ids]
            d = [((loc.x - engine.state.human_pos.x) ** 2
                  + (loc.y - engine.state.human_pos.y) ** 2) for loc in locs]
            goal = ids[d.index(min(d))]
        return goal


def run_trial(
    layout: Layout,
    policy_kind: PolicyKind,
    human_model: HumanModel,
    seed: int,
    *,
    traj_spec: TrajectorySpec | None = None,
    params: InferenceParams | None = None,
    capture_radius: float = CAPTURE_RADIUS,
    layout_id: str = "",
) -> TrialRecord:
    """Run one closed-loop trial to completion, deterministically."""
    traj_spec = traj_spec or TrajectorySpec()
    engine = TrialEngine(
        layout, policy_kind, seed,
        params=params, traj_spec=traj_spec, capture_radius=capture_radius,
    )
    driver = _HumanDriver(human_model, seed)
    while not engine.terminal:
        row = engine.advance()
        if row is None:
            goal = driver.choose(engine)
            if goal is None:
                engine.choose_idle()
            else:
                engine.choose_goal(goal)
    return finalize_record(engine, layout_id, human_model, traj_spec)


def finalize_record(
    engine: TrialEngine,
    layout_id: str,
    human_model: HumanModel,
    traj_spec: TrajectorySpec,
) -> TrialRecord:
    ticks = tuple(engine.trace)
    robot_count, both_count = _one_agent_counts(engine.layout, ticks)
    record = TrialRecord(
        layout_id=layout_id,
        layout=engine.layout,
        policy=engine.policy_kind,
        human_model=human_model,
        traj_spec=traj_spec,
        seed=engine.seed,
        ticks=ticks,
        completion_time=engine.state.elapsed_move_ticks,
        robot_one_agent_count=robot_count,
        simultaneous_count=both_count,
        inference_error_rate=None,
    )
    if engine.policy_kind is PolicyKind.PREDICTIVE_BAYES:
        record = TrialRecord(**{**asdict_shallow(record),
                                "inference_error_rate": inference_error_rate(record)})
    return record


def asdict_shallow(record: TrialRecord) -> dict:
    return {f: getattr(record, f) for f in record.__dataclass_fields__}


def _one_agent_counts(layout: Layout, ticks: tuple[TickTrace, ...]) -> tuple[int, int]:
    robot = both = 0
    for row in ticks:
        for e in row.captures:
            if layout.task(e.task_id).kind is not TaskKind.ONE_AGENT:
                continue
            if e.completed_by is Completer.ROBOT:
                robot += 1
            elif e.completed_by is Completer.BOTH:
                both += 1
    return robot, both


def robot_task_share(record: TrialRecord) -> tuple[int, int]:
    """One-agent tasks the robot captured alone, and simultaneous (both)
    captures, which are counted separately and excluded from the first."""
    return _one_agent_counts(record.layout, record.ticks)


def inference_error_rate(record: TrialRecord) -> float:
    """Fraction of human-moving ticks where the MAP goal was wrong.

    Waiting ticks are excluded; goal decisions happen between ticks and
    consume none.
    """
    if record.policy is not PolicyKind.PREDICTIVE_BAYES:
        raise NotApplicable("error rate is defined for Bayesian-predictive trials")
    moving = [row for row in record.ticks
              if row.human_moved and row.human_goal is not None]
    if not moving:
        raise NotApplicable("trial has no human-moving ticks")
    wrong = sum(1 for row in moving if row.map_goal != row.human_goal)
    return wrong / len(moving)


# -- serialization ------------------------------------------------------

def record_to_lines(record: TrialRecord) -> list[str]:
    """Line-delimited JSON: one header line, one line per tick, one summary."""
    header = {
        "type": "header",
        "layout_id": record.layout_id,
        "layout": record.layout.to_dict(),
        "policy": record.policy.value,
        "human_model": record.human_model.to_dict(),
        "traj_spec": record.traj_spec.to_dict(),
        "seed": record.seed,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for row in record.ticks:
        data = asdict(row)
        data["type"] = "tick"
        data["captures"] = [
            {"tick": e.tick, "task_id": e.task_id, "completed_by": e.completed_by.value}
            for e in row.captures
        ]
        data["replans"] = [{"tick": e.tick, "reason": e.reason} for e in row.replans]
        lines.append(json.dumps(data, sort_keys=True))
    summary = {
        "type": "summary",
        "completion_time": record.completion_time,
        "robot_one_agent_count": record.robot_one_agent_count,
        "simultaneous_count": record.simultaneous_count,
        "inference_error_rate": record.inference_error_rate,
    }
    lines.append(json.dumps(summary, sort_keys=True))
    return lines


def write_trace(record: TrialRecord, path: str | Path) -> None:
    Path(path).write_text("\n".join(record_to_lines(record)) + "\n")


def read_trace_header(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            first = fh.readline()
        header = json.loads(first)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read trace {path}: {exc}") from exc
    if header.get("type") != "header":
        raise ConfigError(f"{path} does not start with a trace header")
    return header


def replay_trace(path: str | Path) -> tuple[bool, TrialRecord]:
    """Re-simulate a trace file from its header and compare byte-for-byte."""
    header = read_trace_header(path)
    record = run_trial(
        Layout.from_dict(header["layout"]),
        PolicyKind(header["policy"]),
        HumanModel.from_dict(header["human_model"]),
        int(header["seed"]),
        traj_spec=TrajectorySpec.from_dict(header["traj_spec"]),
        layout_id=header["layout_id"],
    )
    fresh = "\n".join(record_to_lines(record)) + "\n"
    return fresh == Path(path).read_text(), record


# -- batch runs ---------------------------------------------------------

@dataclass(frozen=True)
class BatchConfig:
    layout_files: tuple[str, ...]
    policies: tuple[PolicyKind, ...]
    human_model: HumanModel
    traj_spec: TrajectorySpec
    rollouts: int
    master_seed: int
    out_dir: str
    jobs: int = 1
    write_traces: bool = False

    @classmethod
    def from_file(cls, path: str | Path) -> "BatchConfig":
        try:
            data = json.loads(Path(path).read_text())
            return cls(
                layout_files=tuple(data["layouts"]),
                policies=tuple(PolicyKind(p) for p in data["policies"]),
                human_model=HumanModel.from_dict(data["human_model"]),
                traj_spec=TrajectorySpec.from_dict(data.get("traj_spec", {})),
                rollouts=int(data["rollouts"]),
                master_seed=int(data["master_seed"]),
                out_dir=str(data["out_dir"]),
                jobs=int(data.get("jobs", 1)),
                write_traces=bool(data.get("write_traces", False)),
            )
        except (OSError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad batch config {path}: {exc}") from exc

    def __post_init__(self) -> None:
        if not self.layout_files or not self.policies:
            raise ConfigError("batch config needs layouts and policies")
        if self.rollouts < 1:
            raise ConfigError("rollouts must be >= 1")


def cell_seed(master_seed: int, layout_index: int, rollout: int) -> int:
    """Seed for one (layout, rollout) cell. Deliberately independent of the
    policy so that every policy faces the same human behavior stream: the
    comparison across policies is paired."""
    ss = np.random.SeedSequence([master_seed, layout_index, rollout])
    return int(ss.generate_state(1)[0])


def _run_cell(args) -> TrialRecord:
    layout_dict, layout_id, policy, model_dict, traj_dict, seed = args
    return run_trial(
        Layout.from_dict(layout_dict),
        PolicyKind(policy),
        HumanModel.from_dict(model_dict),
        seed,
        traj_spec=TrajectorySpec.from_dict(traj_dict),
        layout_id=layout_id,
    )


def run_batch(config: BatchConfig) -> dict:
    """Run every (layout x policy x rollout) cell and write the CSV tables.

    Cells are independent; with jobs > 1 they run in a process pool, and
    results are merged in (layout, policy, rollout) order either way.
    """
    layouts = [(Path(f).stem, Layout.load(f)) for f in config.layout_files]
    cells = []
    for i, (lid, layout) in enumerate(layouts):
        for policy in config.policies:
            for k in range(config.rollouts):
                seed = cell_seed(config.master_seed, i, k)
                cells.append((layout.to_dict(), lid, policy.value,
                              config.human_model.to_dict(), config.traj_spec.to_dict(),
                              seed))
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_run_cell, cells, chunksize=4))
    else:
        records = [_run_cell(c) for c in cells]

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_per_trial(out / "trials.csv", records)
    summary = _aggregate(records, config.master_seed)
    _write_aggregate(out / "aggregate.csv", summary)
    if config.write_traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for r in records:
            write_trace(r, tdir / f"{r.layout_id}_{r.policy.value}_{r.seed}.jsonl")
    return summary


def _write_per_trial(path: Path, records: list[TrialRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["layout_id", "policy", "seed", "completion_time",
                    "robot_one_agent_count", "simultaneous_count",
                    "inference_error_rate", "replan_count"])
        for r in records:
            w.writerow([
                r.layout_id, r.policy.value, r.seed, r.completion_time,
                r.robot_one_agent_count, r.simultaneous_count,
                "" if r.inference_error_rate is None else f"{r.inference_error_rate:.6f}",
                len(r.replans),
            ])


def export_plan_census(layout: Layout, path: str | Path) -> int:
    """Write every feasible plan of a layout to CSV: the distribution behind
    rank ordering and performance-bonus bands. Returns the plan count."""
    from .planner import PlanQuery, enumerate_all
    from .world import initial_state

    plans = enumerate_all(PlanQuery(initial_state(layout), layout))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["plan_index", "human_seq", "robot_seq", "makespan"])
        for i, plan in enumerate(plans):
            w.writerow([
                i,
                " ".join(str(t) for t in plan.human_seq),
                " ".join(str(t) for t in plan.robot_seq),
                f"{plan.makespan:.9f}",
            ])
    return len(plans)


def bootstrap_ci(values: np.ndarray, seed: int, resamples: int = 1000,
                 level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap CI of the mean."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(values), size=(resamples, len(values)))
    means = values[idx].mean(axis=1)
    lo = (1.0 - level) / 2.0
    return float(np.quantile(means, lo)), float(np.quantile(means, 1.0 - lo))


def _aggregate(records: list[TrialRecord], master_seed: int) -> dict:
    summary: dict = {}
    for policy in sorted({r.policy for r in records}, key=lambda p: p.value):
        rows = [r for r in records if r.policy is policy]
        times = np.array([r.completion_time for r in rows], dtype=float)
        ci = bootstrap_ci(times, seed=master_seed ^ 0x5EED)
        rates = [r.inference_error_rate for r in rows if r.inference_error_rate is not None]
        summary[policy.value] = {
            "n": len(rows),
            "mean_completion_time": float(times.mean()),
            "ci_low": ci[0],
            "ci_high": ci[1],
            "mean_robot_one_agent": float(np.mean([r.robot_one_agent_count for r in rows])),
            "mean_simultaneous": float(np.mean([r.simultaneous_count for r in rows])),
            "mean_inference_error_rate": float(np.mean(rates)) if rates else None,
        }
    return summary


def _write_aggregate(path: Path, summary: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "n", "mean_completion_time", "ci_low", "ci_high",
                    "mean_robot_one_agent", "mean_simultaneous",
                    "mean_inference_error_rate"])
        for policy, row in summary.items():
            w.writerow([
                policy, row["n"], f"{row['mean_completion_time']:.4f}",
                f"{row['ci_low']:.4f}", f"{row['ci_high']:.4f}",
                f"{row['mean_robot_one_agent']:.4f}", f"{row['mean_simultaneous']:.4f}",
                "" if row["mean_inference_error_rate"] is None
                else f"{row['mean_inference_error_rate']:.4f}",
            ])
