"""Scenario files, seeded episode runner, trajectory logs and benchmark reports.

A scenario is a YAML mapping::

    object: cube                  # preset name, or a mapping (see parse_object)
    start: {face: F}              # pose mapping, see parse_pose
    goals:
      - {face: A}
      - {face: B, T: [0.0, -0.018, 0.0]}
    perturbations:
      - {time: 12.0, axis: RotX, magnitude: 0.17}
    params: {rho: 0.2, sigma_R: 0.0349}
    tracker: {rot_noise_std: 2.0, trans_noise_std: 1.5}
    seed: 7
    repetitions: 5

Angles are radians and lengths metres everywhere except the tracker noise,
which is degrees and millimetres.  Keys ending in ``_deg`` are accepted in
place of radian keys (``sigma_R_deg: 2``).
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import yaml

from .controller import ControlError, ControlParams, TrajectoryRecord, object_control
from .manifold import build_goal_manifold
from .planners import Mode
from .plant import (
    DropFailure,
    ModeResponse,
    ObjectModel,
    Perturbation,
    SimulatedPlant,
    SimulatedTracker,
    StuckRegion,
    TrackerModel,
)
from .presets import CUBE_FACES, cube_face_goal, object_model
from .rotations import Pose, Rot3, Vec3, dist_R

LOG_DIR_ENV = "SO3GAIT_LOG_DIR"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    object: ObjectModel
    start_pose: Pose
    goals: tuple[Pose, ...]
    perturbations: tuple[Perturbation, ...] = ()
    params: ControlParams = field(default_factory=ControlParams)
    tracker: TrackerModel = field(default_factory=TrackerModel)
    seed: int = 0
    repetitions: int = 1
    name: str = ""

    def __post_init__(self) -> None:
        if not self.goals:
            raise ScenarioError("a scenario needs at least one goal")
        if self.repetitions < 1:
            raise ScenarioError(f"repetitions must be >= 1, got {self.repetitions}")
        if not 0 <= self.seed < 2**64:
            raise ScenarioError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class RunMetrics:
    object: str
    seed: int
    final_orientation_error: float  # deg, observed at the end of the last goal reached
    total_plan_time: float  # s, wall clock
    total_time: float  # s, simulated
    success: bool
    recovery_phases: int
    replans: int
    perturbations_survived: int
    goal_errors: tuple[float, ...] = ()  # deg, observed, one per goal reached
    true_goal_errors: tuple[float, ...] = ()  # deg, ground truth from the plant
    failure: str = ""


# ---------------------------------------------------------------------------
# Config parsing


def _get_angle(d: Mapping[str, Any], key: str, default: Optional[float] = None) -> Optional[float]:
    if f"{key}_deg" in d:
        return math.radians(float(d[f"{key}_deg"]))
    if key in d:
        return float(d[key])
    return default


def _vec(value: Any, what: str) -> Vec3:
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{what} must be a list of three numbers, got {value!r}") from None
    return Vec3(x, y, z)


def parse_rotation(d: Mapping[str, Any]) -> Rot3:
    """Rotation from exactly one of ``face``, ``quat`` (w, x, y, z), ``rpy`` or ``rpy_deg``."""
    keys = [k for k in ("face", "quat", "rpy", "rpy_deg") if k in d]
    if len(keys) > 1:
        raise ScenarioError(f"give one of face/quat/rpy, got {keys}")
    if not keys:
        return Rot3.identity()
    k = keys[0]
    if k == "face":
        face = str(d["face"]).upper()
        if face not in CUBE_FACES:
            raise ScenarioError(f"unknown cube face {d['face']!r}")
        return CUBE_FACES[face]
    if k == "quat":
        q = np.asarray(d["quat"], dtype=float)
        if q.shape != (4,) or not np.all(np.isfinite(q)) or np.linalg.norm(q) < 1e-9:
            raise ScenarioError(f"quat must be four finite numbers, not all zero: {d['quat']!r}")
        return Rot3(tuple(q / np.linalg.norm(q)))
    rpy = _vec(d[k], k).as_array()
    if k == "rpy_deg":
        rpy = np.radians(rpy)
    return Rot3.from_rpy(*rpy)


def parse_pose(d: Any, T_default: Vec3 = Vec3.zero()) -> Pose:
    if isinstance(d, str):
        d = {"face": d}
    if not isinstance(d, Mapping):
        raise ScenarioError(f"pose must be a mapping or a face letter, got {d!r}")
    T = _vec(d["T"], "T") if "T" in d else T_default
    return Pose(T, parse_rotation(d))


def _response(d: Mapping[str, Any]) -> ModeResponse:
    coupling = tuple(float(v) for v in d.get("coupling_std", (0.0,) * 6))
    if len(coupling) != 6:
        raise ScenarioError("coupling_std needs six entries (TransX..RotZ)")
    return ModeResponse(float(d.get("gain_mean", 1.0)), float(d.get("gain_std", 0.0)), coupling)


def parse_object(d: Any) -> ObjectModel:
    """Preset name, or a mapping with an optional ``preset`` base and field overrides."""
    if isinstance(d, str):
        try:
            return object_model(d)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
    if not isinstance(d, Mapping):
        raise ScenarioError(f"object must be a preset name or a mapping, got {d!r}")
    base = parse_object(d["preset"]) if "preset" in d else ObjectModel.noiseless(str(d.get("name", "custom")))
    updates: dict[str, Any] = {}
    if "name" in d:
        updates["name"] = str(d["name"])
    if "responses" in d:
        responses = dict(base.responses)
        for mode, r in d["responses"].items():
            responses[Mode(mode)] = _response(r)
        updates["responses"] = responses
    for key in ("slip_probability", "slip_magnitude_std"):
        if key in d:
            updates[key] = float(d[key])
    if "regrasp_basin" in d:
        updates["regrasp_basin"] = replace(base.regrasp_basin, **{k: float(v) for k, v in d["regrasp_basin"].items()})
    if "stuck_states" in d:
        updates["stuck_states"] = tuple(
            StuckRegion(
                parse_rotation(s.get("center", {})),
                float(_get_angle(s, "radius")),
                float(s["escape_probability"]),
                Mode(s.get("mode", "RotX")),
            )
            for s in d["stuck_states"]
        )
    return replace(base, **updates)


def parse_params(d: Mapping[str, Any]) -> ControlParams:
    defaults = ControlParams()
    kw: dict[str, Any] = {}
    for name in ("rho", "sigma_R", "tau_R"):
        kw[name] = _get_angle(d, name, getattr(defaults, name))
    for name in ("sigma_T", "tau_T"):
        kw[name] = float(d.get(name, getattr(defaults, name)))
    kw["lam"] = float(d.get("lambda", d.get("lam", defaults.lam)))
    kw["max_iterations"] = int(d.get("max_iterations", defaults.max_iterations))
    if "T_center" in d:
        kw["T_center"] = _vec(d["T_center"], "T_center")
    if "sigma_R_bounds_deg" in d:
        kw["sigma_R_bounds"] = tuple(math.radians(float(v)) for v in d["sigma_R_bounds_deg"])
    elif "sigma_R_bounds" in d:
        kw["sigma_R_bounds"] = tuple(float(v) for v in d["sigma_R_bounds"])
    unknown = set(d) - {
        "rho", "rho_deg", "sigma_R", "sigma_R_deg", "tau_R", "tau_R_deg", "sigma_T", "tau_T",
        "lambda", "lam", "max_iterations", "T_center", "sigma_R_bounds", "sigma_R_bounds_deg",
    }
    if unknown:
        raise ScenarioError(f"unknown params keys: {sorted(unknown)}")
    return ControlParams(**kw)


def parse_perturbation(d: Mapping[str, Any]) -> Perturbation:
    axis = str(d["axis"])
    mag = _get_angle(d, "magnitude") if axis.startswith("Rot") else float(d["magnitude"])
    return Perturbation(float(d["time"]), axis, float(mag))


def scenario_from_dict(d: Mapping[str, Any], name: str = "") -> Scenario:
    try:
        params = parse_params(d.get("params", {}) or {})
        return Scenario(
            object=parse_object(d.get("object", "cube")),
            start_pose=parse_pose(d.get("start", {}), params.T_center),
            goals=tuple(parse_pose(g, params.T_center) for g in d.get("goals", [])),
            perturbations=tuple(parse_perturbation(p) for p in d.get("perturbations", []) or []),
            params=params,
            tracker=TrackerModel(**(d.get("tracker", {}) or {})),
            seed=int(d.get("seed", 0)),
            repetitions=int(d.get("repetitions", 1)),
            name=str(d.get("name", name)),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario{' ' + name if name else ''}: {exc}") from exc


def load_scenario(path: Union[str, os.PathLike]) -> Scenario:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    if not isinstance(data, Mapping):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return scenario_from_dict(data, name=path.stem)


# ---------------------------------------------------------------------------
# Running


def run_episode(s: Scenario, seed: int) -> tuple[RunMetrics, TrajectoryRecord]:
    """One repetition: every goal in order on a single plant.  Failures end the run."""
    plant = SimulatedPlant(s.start_pose, s.object, seed, s.perturbations)
    tracker = SimulatedTracker(plant, s.tracker, seed)
    merged = TrajectoryRecord(goal=s.goals[-1])
    errors: list[float] = []
    true_errors: list[float] = []
    survived = 0
    failure = ""
    for goal in s.goals:
        index = build_goal_manifold(goal.R, s.params.sigma_R)
        try:
            final, rec = object_control(goal, s.params, plant, tracker, index=index)
        except (ControlError, DropFailure) as exc:
            rec = exc.record
            failure = f"{type(exc).__name__}: {exc}"
        _merge(merged, rec, offset=merged.entries[-1].replan_count if merged.entries else 0)
        merged.index_builds += 1
        if failure:
            break
        errors.append(math.degrees(dist_R(final.R, goal.R)))
        true_errors.append(math.degrees(dist_R(plant.state.true_pose.R, goal.R)))
        survived = len(plant.applied)

    final_err = errors[-1] if errors else math.nan
    success = not failure and final_err <= math.degrees(s.params.tau_R)
    metrics = RunMetrics(
        object=s.object.name,
        seed=seed,
        final_orientation_error=final_err,
        total_plan_time=merged.plan_time,
        total_time=plant.clock,
        success=success,
        recovery_phases=merged.recovery_phases(),
        replans=merged.entries[-1].replan_count if merged.entries else 0,
        perturbations_survived=survived,
        goal_errors=tuple(errors),
        true_goal_errors=tuple(true_errors),
        failure=failure,
    )
    return metrics, merged


def _merge(into: TrajectoryRecord, rec: TrajectoryRecord, offset: int) -> None:
    if into.initial is None:
        into.initial = rec.initial
    into.plan_time += rec.plan_time
    into.entries.extend(replace(e, replan_count=e.replan_count + offset) for e in rec.entries)


def run_scenario(
    s: Scenario, *, seed: Optional[int] = None, repetitions: Optional[int] = None
) -> tuple[list[RunMetrics], list[TrajectoryRecord]]:
    """Run every repetition; repetition ``k`` uses seed ``seed + k``."""
    base = s.seed if seed is None else seed
    reps = s.repetitions if repetitions is None else repetitions
    if reps < 1:
        raise ScenarioError(f"repetitions must be >= 1, got {reps}")
    metrics, logs = [], []
    for k in range(reps):
        m, rec = run_episode(s, base + k)
        metrics.append(m)
        logs.append(rec)
    return metrics, logs


# ---------------------------------------------------------------------------
# Logs and reports


def _num(x: float) -> float:
    # Fixed precision keeps logs stable and readable; repr round-trips anyway.
    return float(f"{x:.12g}")


def log_lines(record: TrajectoryRecord) -> Iterable[str]:
    for e in record.entries:
        obj = {
            "t": _num(e.time),
            "phase": e.phase.value,
            "pose": {"T": [_num(v) for v in e.observed.T], "R": [_num(v) for v in e.observed.R.q]},
            "action": None
            if e.commanded is None
            else {"mode": e.commanded.mode.value, "magnitude": _num(e.commanded.magnitude)},
            "sigma_R": _num(e.sigma_R),
            "replan_count": e.replan_count,
        }
        yield json.dumps(obj, separators=(",", ":"))


def write_log(record: TrajectoryRecord, path: Union[str, os.PathLike]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for line in log_lines(record):
            fh.write(line + "\n")
    return path


def read_log(path: Union[str, os.PathLike]) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


REPORT_COLUMNS = ("object", "mean error (deg)", "mean plan time (s)", "mean total time (s)", "success")


def report_rows(metrics: Sequence[RunMetrics]) -> list[tuple[str, str, str, str, str]]:
    """One row per object, in order of first appearance."""
    if not metrics:
        raise ValueError("no runs to report")
    groups: dict[str, list[RunMetrics]] = {}
    for m in metrics:
        groups.setdefault(m.object, []).append(m)
    rows = []
    for name, ms in groups.items():
        errs = [m.final_orientation_error for m in ms if not math.isnan(m.final_orientation_error)]
        err = f"{np.mean(errs):.2f}" if errs else "nan"
        rows.append(
            (
                name,
                err,
                f"{np.mean([m.total_plan_time for m in ms]):.3f}",
                f"{np.mean([m.total_time for m in ms]):.1f}",
                f"{sum(m.success for m in ms)}/{len(ms)}",
            )
        )
    return rows


def emit_report(metrics: Sequence[RunMetrics], format: str = "table") -> str:
    rows = report_rows(metrics)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerows(rows)
        return buf.getvalue()
    if format != "table":
        raise ValueError(f"unknown report format {format!r}")
    table = [REPORT_COLUMNS, *rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(REPORT_COLUMNS))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def default_log_dir() -> Optional[Path]:
    env = os.environ.get(LOG_DIR_ENV)
    return Path(env) if env else None


__all__ = [
    "LOG_DIR_ENV",
    "REPORT_COLUMNS",
    "RunMetrics",
    "Scenario",
    "ScenarioError",
    "cube_face_goal",
    "default_log_dir",
    "emit_report",
    "load_scenario",
    "log_lines",
    "parse_pose",
    "read_log",
    "report_rows",
    "run_episode",
    "run_scenario",
    "scenario_from_dict",
    "write_log",
]
