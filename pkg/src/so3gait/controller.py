"""Closed-loop object control: replan every tick, act once, perceive, adapt.

Orientation is controlled first.  Each tick plans from the latest observed
orientation, executes only the plan's first action, perceives again and
updates the rotational step size from the rotation actually achieved.  If the
object wanders more than ``tau_T`` from the workspace centre, greedy
translation steps bring it back before orientation control resumes.  Once the
orientation is within ``tau_R`` the object is servoed to the goal position.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Protocol

from .manifold import GoalManifoldIndex, build_goal_manifold
from .planners import ModeAction, Plan, PlanningFailure, so3_plan, translation_plan
from .rotations import Pose, Rot3, Vec3, dist_R, dist_T

log = logging.getLogger(__name__)


class PlantHandle(Protocol):
    clock: float

    def mode_action(self, action: ModeAction) -> None: ...


class TrackerHandle(Protocol):
    def perceive(self) -> Pose: ...


class Phase(str, Enum):
    ORIENTATION = "OrientationControl"
    RECOVERY = "Recovery"
    TRANSLATION = "TranslationControl"
    DONE = "Done"


@dataclass(frozen=True)
class ControlParams:
    rho: float = 0.2
    sigma_R: float = math.radians(2.0)
    sigma_T: float = 0.003
    tau_R: float = 0.1
    tau_T: float = 0.005
    lam: float = 0.1
    T_center: Vec3 = field(default_factory=Vec3.zero)
    sigma_R_bounds: tuple[float, float] = (math.radians(0.5), math.radians(5.0))
    max_iterations: int = 2000

    def __post_init__(self) -> None:
        lo, hi = self.sigma_R_bounds
        if self.tau_R <= 0 or self.tau_T <= 0:
            raise ValueError("tau_R and tau_T must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 0.0 < lo <= self.sigma_R <= hi <= math.pi:
            raise ValueError(f"sigma_R {self.sigma_R} outside bounds {self.sigma_R_bounds}")
        if self.rho < self.sigma_R:
            raise ValueError(f"rho {self.rho} must be at least sigma_R {self.sigma_R}")
        if self.sigma_T <= 0 or self.max_iterations < 1:
            raise ValueError("sigma_T must be positive and max_iterations at least 1")


@dataclass(frozen=True)
class LogEntry:
    time: float
    observed: Pose
    commanded: Optional[ModeAction]
    phase: Phase
    sigma_R: float  # step size after this tick's update
    replan_count: int


@dataclass
class TrajectoryRecord:
    goal: Optional[Pose] = None
    initial: Optional[Pose] = None  # observation that seeded the first plan
    entries: list[LogEntry] = field(default_factory=list)
    index_builds: int = 0
    plan_time: float = 0.0  # wall-clock seconds spent in the planner; not part of the log

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def actions(self) -> list[ModeAction]:
        return [e.commanded for e in self.entries if e.commanded is not None]

    def recovery_phases(self) -> int:
        """Number of maximal runs of consecutive Recovery entries."""
        runs, prev = 0, None
        for e in self.entries:
            if e.phase is Phase.RECOVERY and prev is not Phase.RECOVERY:
                runs += 1
            prev = e.phase
        return runs


class ControlError(RuntimeError):
    def __init__(self, message: str, record: Optional[TrajectoryRecord] = None):
        super().__init__(message)
        self.record = record


class IterationBudgetExceeded(ControlError):
    pass


class PlanningFailed(ControlError):
    pass


def adapt_step(sigma_R: float, delta: float, lam: float, bounds: tuple[float, float]) -> float:
    """Interpolated step update ``sigma + lam * (sigma - delta)``, clamped to bounds."""
    lo, hi = bounds
    return min(hi, max(lo, sigma_R + lam * (sigma_R - delta)))


def plan_orientation(
    R: Rot3,
    R_g: Rot3,
    sigma_R: float,
    params: ControlParams,
    index: Optional[GoalManifoldIndex] = None,
    rho: Optional[float] = None,
) -> tuple[Plan, int, float]:
    """Plan from ``R`` for one orientation tick.

    Returns the plan, the number of planner calls made and the connection
    threshold to use on the next tick.  A plan that connects without any
    action while ``R`` is still farther than ``tau_R`` from the goal would
    stall the loop.  In that case the threshold is tightened to ``tau_R``, the
    search is rerun, and the tighter threshold is kept from then on so the
    loop does not alternate between the two plans.
    """
    rho = params.rho if rho is None else rho
    plan = so3_plan(R, R_g, rho, sigma_R, index=index)
    if plan.actions or rho <= params.tau_R:
        return plan, 1, rho
    return so3_plan(R, R_g, params.tau_R, sigma_R, index=index), 2, params.tau_R


class _Loop:
    """Tick bookkeeping shared by the orientation, recovery and translation phases."""

    def __init__(self, params: ControlParams, plant: PlantHandle, tracker: TrackerHandle, record: TrajectoryRecord):
        self.params = params
        self.plant = plant
        self.tracker = tracker
        self.record = record
        self.ticks = 0
        self.sigma = params.sigma_R
        self.replans = 0

    def act(self, action: ModeAction) -> Pose:
        if self.ticks >= self.params.max_iterations:
            raise IterationBudgetExceeded(
                f"no convergence after {self.ticks} modal actions", self.record
            )
        self.plant.mode_action(action)
        self.ticks += 1
        return self.tracker.perceive()

    def translate_toward(self, T: Vec3, target: Vec3, phase: Phase) -> Optional[Pose]:
        """One greedy translation tick; None if no controllable axis helps."""
        step = translation_plan(T, target, self.params.sigma_T)
        if not step.actions:
            return None
        obs = self.act(step.actions[0])
        self.log(obs, step.actions[0], phase)
        return obs

    def log(self, obs: Pose, action: Optional[ModeAction], phase: Phase) -> None:
        self.record.entries.append(
            LogEntry(self.plant.clock, obs, action, phase, self.sigma, self.replans)
        )


def recovery_step(T: Vec3, params: ControlParams, plant: PlantHandle, tracker: TrackerHandle) -> Optional[Pose]:
    """One greedy translation step toward ``T_center``; returns the new observation.

    Returns None when no controllable axis can reduce the deviation.
    """
    loop = _Loop(params, plant, tracker, TrajectoryRecord())
    return loop.translate_toward(T, params.T_center, Phase.RECOVERY)


def object_control(
    goal: Pose,
    params: ControlParams,
    plant: PlantHandle,
    tracker: TrackerHandle,
    *,
    index: Optional[GoalManifoldIndex] = None,
) -> tuple[Pose, TrajectoryRecord]:
    """Drive the object to ``goal``: orientation first, then position.

    ``index`` may carry a goal manifold built earlier for the same goal
    orientation; otherwise one is built here, once.

    Raises:
        IterationBudgetExceeded: more than ``params.max_iterations`` actions.
        PlanningFailed: the orientation planner found no connection.
    Any exception raised from here, plant failures included, carries the
    partial log in ``.record``.
    """
    record = TrajectoryRecord(goal=goal)
    try:
        return _control(goal, params, plant, tracker, index, record)
    except Exception as exc:
        if getattr(exc, "record", None) is None:
            exc.record = record
        raise


def _control(
    goal: Pose,
    params: ControlParams,
    plant: PlantHandle,
    tracker: TrackerHandle,
    index: Optional[GoalManifoldIndex],
    record: TrajectoryRecord,
) -> tuple[Pose, TrajectoryRecord]:
    loop = _Loop(params, plant, tracker, record)
    R_g, T_g = goal.R, goal.T
    if index is None or index.goal != R_g:
        index = build_goal_manifold(R_g, params.sigma_R)
        record.index_builds += 1

    obs = tracker.perceive()
    record.initial = obs
    T, R = obs.T, obs.R
    rho = params.rho

    while dist_R(R_g, R) > params.tau_R:
        t0 = time.perf_counter()
        try:
            plan, calls, rho = plan_orientation(R, R_g, loop.sigma, params, index, rho)
        except PlanningFailure as exc:
            raise PlanningFailed(str(exc), record) from exc
        finally:
            record.plan_time += time.perf_counter() - t0
        loop.replans += calls
        action = plan.actions[0]
        obs = loop.act(action)
        delta = dist_R(obs.R, R)
        loop.sigma = adapt_step(loop.sigma, delta, params.lam, params.sigma_R_bounds)
        T, R = obs.T, obs.R
        loop.log(obs, action, Phase.ORIENTATION)

        while dist_T(T, params.T_center) > params.tau_T:
            obs = loop.translate_toward(T, params.T_center, Phase.RECOVERY)
            if obs is None:
                break  # only the uncontrollable x axis is off centre
            T, R = obs.T, obs.R

    while dist_T(T_g, T) > params.tau_T:
        obs = loop.translate_toward(T, T_g, Phase.TRANSLATION)
        if obs is None:
            break
        T, R = obs.T, obs.R

    final = tracker.perceive()
    loop.log(final, None, Phase.DONE)
    log.debug("goal reached after %d actions, %d planner calls", loop.ticks, loop.replans)
    return final, record
