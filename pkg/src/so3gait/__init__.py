"""Orientation planning and closed-loop control for finger-gaiting hands."""

from .controller import (
    ControlError,
    ControlParams,
    IterationBudgetExceeded,
    LogEntry,
    Phase,
    PlanningFailed,
    TrajectoryRecord,
    adapt_step,
    object_control,
    recovery_step,
)
from .harness import RunMetrics, Scenario, emit_report, load_scenario, run_scenario
from .manifold import GoalManifoldIndex, build_goal_manifold, query_closest
from .planners import Mode, ModeAction, Plan, PlanningFailure, so3_plan, translation_plan
from .plant import ObjectModel, SimulatedPlant, SimulatedTracker, TrackerModel
from .presets import CUBE_FACES, cube_face_goal, object_model
from .rotations import Axis, EulerZXZ, Pose, Rot3, Vec3, dist_R, dist_T, euler_zxz_decompose, rot_about_axis

__all__ = [
    "Axis", "CUBE_FACES", "ControlError", "ControlParams", "EulerZXZ", "GoalManifoldIndex",
    "IterationBudgetExceeded", "LogEntry", "Mode", "ModeAction", "ObjectModel", "Phase", "Plan",
    "PlanningFailed", "PlanningFailure", "Pose", "Rot3", "RunMetrics", "Scenario", "SimulatedPlant",
    "SimulatedTracker", "TrackerModel", "TrajectoryRecord", "Vec3", "adapt_step", "build_goal_manifold",
    "cube_face_goal", "dist_R", "dist_T", "emit_report", "euler_zxz_decompose", "load_scenario",
    "object_control", "object_model", "query_closest", "recovery_step", "rot_about_axis", "run_scenario",
    "so3_plan", "translation_plan",
]
