"""Stochastic stand-in for an underactuated hand holding an object.

The simulated plant executes the four modes with per-object gain noise,
cross-coupling into the uncontrolled axes and occasional slips.  Grasp
transfers between finger pairs pull the object's yaw toward a minimum-energy
basin; an object outside the basin's capture range is dropped.  A tracker
emulator returns noisy, optionally delayed observations of the true pose.

All randomness comes from one seed: the plant and the tracker draw from two
independent child streams of ``numpy.random.SeedSequence(seed)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .planners import Mode, ModeAction
from .rotations import Pose, Rot3, Vec3, dist_R, geodesic_angle, rot_about_axis

PALM_LIMIT = math.radians(55.0)
TICK_PERIOD = 0.5
MAX_ROT_STEP = math.radians(5.0)
MAX_TRANS_STEP = 0.01

# Axis order for 6-vectors: translations x, y, z (m) then rotations x, y, z (rad).
_AXES = ("TransX", "TransY", "TransZ", "RotX", "RotY", "RotZ")
_MODE_AXIS = {Mode.TRANS_Y: 1, Mode.TRANS_Z: 2, Mode.ROT_X: 3, Mode.ROT_Z: 5}


class GraspPair(str, Enum):
    DIFFERENTIAL = "DifferentialPair"
    INDIVIDUAL = "IndividualPair"

    def other(self) -> "GraspPair":
        return GraspPair.INDIVIDUAL if self is GraspPair.DIFFERENTIAL else GraspPair.DIFFERENTIAL


class DropFailure(RuntimeError):
    """The object left the regrasp basin's capture range and fell."""


@dataclass(frozen=True)
class ModeResponse:
    gain_mean: float = 1.0
    gain_std: float = 0.0
    # Per-axis std, ordered TransX, TransY, TransZ (m), RotX, RotY, RotZ (rad).
    # The commanded axis entry is ignored.
    coupling_std: tuple[float, ...] = (0.0,) * 6

    def __post_init__(self) -> None:
        if not 0.0 < self.gain_mean <= 1.5:
            raise ValueError(f"gain_mean must lie in (0, 1.5], got {self.gain_mean}")
        if self.gain_std < 0 or len(self.coupling_std) != 6 or min(self.coupling_std) < 0:
            raise ValueError("stds must be non-negative and coupling_std must have 6 entries")
        object.__setattr__(self, "coupling_std", tuple(float(c) for c in self.coupling_std))


@dataclass(frozen=True)
class RegraspBasin:
    center_offset: float = 0.0
    pull_strength: float = 0.5
    capture_range: float = 0.7
    noise_std: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.pull_strength <= 1.0:
            raise ValueError(f"pull_strength must lie in [0, 1], got {self.pull_strength}")
        if self.capture_range <= 0 or self.noise_std < 0:
            raise ValueError("capture_range must be positive and noise_std non-negative")


@dataclass(frozen=True)
class StuckRegion:
    """Orientations where ``mode`` actions jam unless the escape draw succeeds."""

    center: Rot3
    radius: float
    escape_probability: float
    mode: Mode = Mode.ROT_X

    def __post_init__(self) -> None:
        if not 0.0 <= self.escape_probability <= 1.0:
            raise ValueError("escape_probability must lie in [0, 1]")

    def contains(self, R: Rot3) -> bool:
        return geodesic_angle(self.center, R) <= self.radius


@dataclass(frozen=True)
class ObjectModel:
    name: str
    responses: dict
    slip_probability: float = 0.0
    slip_magnitude_std: float = 0.0
    regrasp_basin: RegraspBasin = field(default_factory=RegraspBasin)
    stuck_states: tuple[StuckRegion, ...] = ()

    def __post_init__(self) -> None:
        resp = {Mode(k): v for k, v in self.responses.items()}
        missing = set(Mode) - set(resp)
        if missing:
            raise ValueError(f"responses missing for modes {sorted(m.value for m in missing)}")
        object.__setattr__(self, "responses", resp)
        object.__setattr__(self, "stuck_states", tuple(self.stuck_states))
        if not 0.0 <= self.slip_probability <= 1.0:
            raise ValueError("slip_probability must lie in [0, 1]")
        if self.slip_magnitude_std < 0:
            raise ValueError("slip_magnitude_std must be non-negative")

    @classmethod
    def noiseless(cls, name: str = "ideal", capture_range: float = math.pi) -> "ObjectModel":
        """Exact kinematic integrator: unit gains, no noise, no slip."""
        return cls(
            name,
            {m: ModeResponse() for m in Mode},
            regrasp_basin=RegraspBasin(pull_strength=0.0, capture_range=capture_range),
        )


@dataclass(frozen=True)
class TrackerModel:
    rot_noise_std: float = 2.0  # degrees per axis
    trans_noise_std: float = 1.5  # mm per axis
    rate: float = 60.0  # Hz
    latency: int = 0  # plant ticks

    def __post_init__(self) -> None:
        if self.rot_noise_std < 0 or self.trans_noise_std < 0 or self.rate <= 0 or self.latency < 0:
            raise ValueError("tracker noise must be non-negative, rate positive, latency >= 0")

    @classmethod
    def perfect(cls) -> "TrackerModel":
        return cls(0.0, 0.0)


@dataclass(frozen=True)
class Perturbation:
    time: float  # s, applied at the first tick boundary at or after this time
    axis: str  # one of TransX, TransY, TransZ, RotX, RotY, RotZ
    magnitude: float  # rad or m

    def __post_init__(self) -> None:
        if self.axis not in _AXES:
            raise ValueError(f"unknown perturbation axis {self.axis!r}")
        if not math.isfinite(self.magnitude):
            raise ValueError("perturbation magnitude must be finite")


@dataclass
class PlantState:
    true_pose: Pose
    rng: np.random.Generator
    palm_joint: float = 0.0
    grasp_pair: GraspPair = GraspPair.DIFFERENTIAL
    clock: float = 0.0
    yaw_offset: float = 0.0  # object yaw relative to the current grasp's basin
    ticks: int = 0
    regrasps: int = 0
    dropped: bool = False
    history: list = field(default_factory=list)  # true pose at the end of each tick

    @classmethod
    def initial(cls, pose: Pose, seed: int) -> "PlantState":
        plant_seq, _ = np.random.SeedSequence(seed).spawn(2)
        return cls(true_pose=pose, rng=np.random.default_rng(plant_seq), history=[pose])


def _displace(pose: Pose, d: np.ndarray) -> Pose:
    """Apply a 6-vector displacement: translate, then extrinsic Rx, Ry, Rz."""
    T = Vec3(pose.T.x + d[0], pose.T.y + d[1], pose.T.z + d[2])
    R = pose.R
    for axis, angle in zip("XYZ", d[3:]):
        if angle != 0.0:
            R = rot_about_axis(axis, angle) @ R
    return Pose(T, R)


def mode_action(
    state: PlantState,
    action: ModeAction,
    model: ObjectModel,
    *,
    period: float = TICK_PERIOD,
    max_rot_step: float = MAX_ROT_STEP,
    max_trans_step: float = MAX_TRANS_STEP,
) -> PlantState:
    """Execute one modal action on the plant, in place, and return the state.

    Raises:
        ValueError: unknown mode or a step beyond the per-mode bound.
        DropFailure: a limit-triggered regrasp lost the object, or it was
            already dropped.
    """
    mode = Mode(action.mode)
    limit = max_rot_step if mode.is_rotation else max_trans_step
    if not abs(action.magnitude) <= limit + 1e-12:
        raise ValueError(f"{mode.value} step {action.magnitude} exceeds bound {limit}")
    if state.dropped:
        raise DropFailure(f"{model.name} was dropped earlier")

    if mode is Mode.ROT_Z and abs(state.palm_joint + action.magnitude) > PALM_LIMIT:
        regrasp(state, model)
        state.palm_joint = 0.0

    resp = model.responses[mode]
    rng = state.rng
    # Fixed draw count per tick keeps the stream aligned across models.
    gain = resp.gain_mean + resp.gain_std * rng.standard_normal()
    coupling = np.asarray(resp.coupling_std) * rng.standard_normal(6)
    slip_draw, slip_axis, slip_size = rng.random(), int(rng.integers(3)), rng.standard_normal()
    stuck_draws = rng.random(len(model.stuck_states)) if model.stuck_states else ()

    axis = _MODE_AXIS[mode]
    realized = gain * action.magnitude
    for region, u in zip(model.stuck_states, stuck_draws):
        if region.mode is mode and region.contains(state.true_pose.R) and u >= region.escape_probability:
            realized = 0.0
    d = coupling.copy()
    d[axis] = realized
    if slip_draw < model.slip_probability:
        d[3 + slip_axis] += model.slip_magnitude_std * slip_size

    state.true_pose = _displace(state.true_pose, d)
    # Yaw not produced by the palm joint shifts the object inside the grasp.
    palm_yaw = action.magnitude if mode is Mode.ROT_Z else 0.0
    state.yaw_offset += d[5] - palm_yaw
    if mode is Mode.ROT_Z:
        state.palm_joint += action.magnitude
    state.clock += period
    state.ticks += 1
    state.history.append(state.true_pose)
    return state


def regrasp(state: PlantState, model: ObjectModel) -> PlantState:
    """Transfer the grasp to the other finger pair.

    The object's yaw settles toward the basin centre by ``pull_strength`` of
    its offset, plus basin noise.  Outside ``capture_range`` the transfer
    fails and the object is dropped.
    """
    basin = model.regrasp_basin
    offset = state.yaw_offset - basin.center_offset
    if abs(offset) > basin.capture_range:
        state.dropped = True
        raise DropFailure(
            f"{model.name}: yaw offset {offset:.3f} rad outside capture range {basin.capture_range:.3f}"
        )
    correction = -basin.pull_strength * offset + basin.noise_std * state.rng.standard_normal()
    state.true_pose = Pose(state.true_pose.T, rot_about_axis("Z", correction) @ state.true_pose.R)
    state.yaw_offset += correction
    state.grasp_pair = state.grasp_pair.other()
    state.regrasps += 1
    return state


def check_safe_transfer(state: PlantState, rho: float, model: Optional[ObjectModel] = None) -> bool:
    """True iff the yaw offset from the basin centre is strictly inside the safe region."""
    bound = rho
    center = 0.0
    if model is not None:
        bound = min(rho, model.regrasp_basin.capture_range)
        center = model.regrasp_basin.center_offset
    return abs(state.yaw_offset - center) < bound


def apply_perturbation(state: PlantState, p: Perturbation) -> PlantState:
    """Displace the true pose along one axis; nothing else changes."""
    d = np.zeros(6)
    d[_AXES.index(p.axis)] = p.magnitude
    state.true_pose = _displace(state.true_pose, d)
    return state


def perceive(state: PlantState, tracker: TrackerModel, rng: np.random.Generator) -> Pose:
    """Noisy observation of the true pose, delayed by ``tracker.latency`` ticks.

    Noise is added independently to x, y, z and to roll, pitch, yaw.
    """
    if tracker.latency == 0:
        pose = state.true_pose
    else:
        pose = state.history[max(0, len(state.history) - 1 - tracker.latency)]
    dt = rng.standard_normal(3) * tracker.trans_noise_std * 1e-3
    dr = rng.standard_normal(3) * math.radians(tracker.rot_noise_std)
    if tracker.rot_noise_std == 0.0 and tracker.trans_noise_std == 0.0:
        return pose
    T = Vec3(pose.T.x + dt[0], pose.T.y + dt[1], pose.T.z + dt[2])
    roll, pitch, yaw = pose.R.rpy
    return Pose(T, Rot3.from_rpy(roll + dr[0], pitch + dr[1], yaw + dr[2]))


class SimulatedPlant:
    """Plant handle for the controller: owns the state and a perturbation schedule."""

    def __init__(
        self,
        start: Pose,
        model: ObjectModel,
        seed: int = 0,
        perturbations: Sequence[Perturbation] = (),
        period: float = TICK_PERIOD,
    ):
        self.model = model
        self.state = PlantState.initial(start, seed)
        self.period = period
        self.pending = sorted(perturbations, key=lambda p: p.time)
        self.applied: list[tuple[float, Perturbation]] = []

    @property
    def clock(self) -> float:
        return self.state.clock

    def mode_action(self, action: ModeAction) -> None:
        mode_action(self.state, action, self.model, period=self.period)
        self._apply_due()

    def _apply_due(self) -> None:
        while self.pending and self.pending[0].time <= self.state.clock:
            p = self.pending.pop(0)
            apply_perturbation(self.state, p)
            self.applied.append((self.state.clock, p))


class SimulatedTracker:
    """Tracker handle reading a :class:`SimulatedPlant`."""

    def __init__(self, plant: SimulatedPlant, model: TrackerModel, seed: int = 0):
        self.plant = plant
        self.model = model
        _, tracker_seq = np.random.SeedSequence(seed).spawn(2)
        self.rng = np.random.default_rng(tracker_seq)

    def perceive(self) -> Pose:
        return perceive(self.plant.state, self.model, self.rng)


def true_orientation_error(plant: SimulatedPlant, goal: Rot3) -> float:
    return dist_R(plant.state.true_pose.R, goal)
