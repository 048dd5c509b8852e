"""Z-X-Z gait planning over SO(3) and greedy translation servoing.

``so3_plan`` searches outward from the start orientation over a first
z-rotation ``psi`` and an x-rotation ``theta`` until ``Rx(theta) Rz(psi) R_s``
comes within ``rho`` of the expanded goal manifold ``{Rz(phi) R_g}``.  The
connection is then unrolled into unit mode actions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .manifold import GoalManifoldIndex, build_goal_manifold, query_closest_batch
from .rotations import (
    Rot3,
    Vec3,
    axis_quats,
    candidate_steps,
    _qmul,
    quat_multiply,
)

DEFAULT_PERIOD = 0.5
_SQRT3 = math.sqrt(3.0)
_STEP_EPS = 1e-9


class Mode(str, Enum):
    ROT_X = "RotX"
    ROT_Z = "RotZ"
    TRANS_Y = "TransY"
    TRANS_Z = "TransZ"

    @property
    def is_rotation(self) -> bool:
        return self in (Mode.ROT_X, Mode.ROT_Z)


@dataclass(frozen=True)
class ModeAction:
    mode: Mode
    magnitude: float  # rad for rotation modes, m for translation modes
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if not math.isfinite(self.magnitude):
            raise ValueError(f"magnitude must be finite, got {self.magnitude}")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")


@dataclass(frozen=True)
class Plan:
    actions: tuple[ModeAction, ...]
    step: float
    decomposition: Optional[tuple[float, float, float]] = None  # (psi, theta, phi)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def first(self) -> Optional[ModeAction]:
        return self.actions[0] if self.actions else None


class FailureReason(str, Enum):
    SCHEDULE_EXHAUSTED = "ScheduleExhausted"
    INVALID_INPUT = "InvalidInput"


class PlanningFailure(Exception):
    def __init__(self, reason: FailureReason, message: str = ""):
        super().__init__(f"{reason.value}: {message}" if message else reason.value)
        self.reason = reason


def _check_sigma(sigma: float, name: str) -> None:
    if not (math.isfinite(sigma) and 0.0 < sigma <= math.pi):
        raise PlanningFailure(FailureReason.INVALID_INPUT, f"{name} must lie in (0, pi], got {sigma}")


def so3_plan(
    R_s: Rot3,
    R_g: Rot3,
    rho: float,
    sigma_R: float,
    *,
    index: Optional[GoalManifoldIndex] = None,
    period: float = DEFAULT_PERIOD,
    prune: bool = True,
    chunk: int = 32,
) -> Plan:
    """Plan a Z-X-Z rotation sequence taking ``R_s`` to within ``rho`` of ``R_g``.

    ``psi`` runs over the step schedule in the outer loop and ``theta`` in the
    inner loop; the first pair whose rotation connects to the goal manifold
    wins.  ``index`` lets callers reuse a goal manifold across replans; it may
    have been built with a different step size than ``sigma_R``.

    With ``prune`` on, (psi, theta) candidates that provably cannot reach the
    manifold are skipped before querying it.  Pruning never changes the result.
    Candidates are queried ``chunk`` at a time, in schedule order.

    Raises:
        PlanningFailure: ``InvalidInput`` for bad parameters,
            ``ScheduleExhausted`` when no candidate connects.
    """
    _check_sigma(sigma_R, "sigma_R")
    if not (math.isfinite(rho) and rho > 0.0):
        raise PlanningFailure(FailureReason.INVALID_INPUT, f"rho must be positive, got {rho}")
    if index is None:
        index = build_goal_manifold(R_g, sigma_R)
    elif index.goal != R_g:
        raise PlanningFailure(FailureReason.INVALID_INPUT, "goal manifold was built for a different goal")

    schedule = candidate_steps(sigma_R).as_array()
    # Geodesic gap bound: dist_R < rho implies geodesic angle < sqrt(3) * rho.
    reach = _SQRT3 * rho * (1.0 + 1e-9) + 1e-12

    m = (R_s @ R_g.inverse()).matrix
    if prune:
        # Rz(psi) M e_z must come within `reach` of the y-z plane.
        ax = np.cos(schedule) * m[0, 2] - np.sin(schedule) * m[1, 2]
        psi_ok = np.arcsin(np.clip(np.abs(ax), 0.0, 1.0)) < reach
    else:
        psi_ok = np.ones(len(schedule), dtype=bool)

    psis = schedule[psi_ok]
    if prune:
        # Angle between Rx(theta) Rz(psi) M e_z and e_z, for every surviving pair.
        vy = np.sin(psis) * m[0, 2] + np.cos(psis) * m[1, 2]
        cz = np.outer(vy, np.sin(schedule)) + m[2, 2] * np.cos(schedule)
        pair_ok = np.arccos(np.clip(cz, -1.0, 1.0)) < reach
    else:
        pair_ok = np.ones((len(psis), len(schedule)), dtype=bool)
    # Row-major nonzero keeps (psi, theta) in schedule order.
    pi, ti = np.nonzero(pair_ok)
    q_s = np.array(R_s.q)
    for lo in range(0, pi.size, chunk):
        cp, ct = pi[lo : lo + chunk], ti[lo : lo + chunk]
        zq = quat_multiply(axis_quats("Z", psis[cp]), q_s)
        r_star = quat_multiply(axis_quats("X", schedule[ct]), zq)
        entry, dist = query_closest_batch(index, r_star, max_dist=rho)
        hits = np.flatnonzero(dist < rho)
        if hits.size:
            k = hits[0]
            psi, theta = float(psis[cp[k]]), float(schedule[ct[k]])
            phi = float(index.phis[entry[k]])
            return enumerate_path(R_s, sigma_R, psi, theta, phi, period=period)
    raise PlanningFailure(
        FailureReason.SCHEDULE_EXHAUSTED,
        f"no (psi, theta) pair within rho={rho:.4g} at sigma={sigma_R:.4g}",
    )


def split_steps(total: float, sigma: float) -> list[float]:
    """Signed steps of size ``sigma`` summing to ``total``; any remainder goes last."""
    n = int(math.floor(abs(total) / sigma + _STEP_EPS))
    rest = abs(total) - n * sigma
    steps = [math.copysign(sigma, total)] * n
    if rest > _STEP_EPS * sigma:
        steps.append(math.copysign(rest, total))
    return steps


def enumerate_path(
    R_s: Rot3,
    sigma_R: float,
    psi: float,
    theta: float,
    phi: float,
    *,
    period: float = DEFAULT_PERIOD,
) -> Plan:
    """Unroll a connection into RotZ(psi), RotX(theta), RotZ(-phi) step blocks.

    The manifold entry found is ``Rz(phi) R_g``, so the last block rotates by
    ``-phi`` to land near ``R_g`` itself.  ``R_s`` is the start the plan is
    anchored to; the action list does not depend on it.

    With ``theta == 0`` the two z blocks are adjacent and are folded into a
    single net rotation ``psi - phi``.  The endpoint is the same, but the
    first step then always heads toward it.  Unfolded, a closed loop that
    replans after every step can undo its own ``psi`` step forever when the
    manifold grid is coarser than the step.
    """
    _check_sigma(sigma_R, "sigma_R")
    if theta == 0.0:
        blocks = ((Mode.ROT_Z, split_steps(psi - phi, sigma_R)),)
    else:
        blocks = (
            (Mode.ROT_Z, split_steps(psi, sigma_R)),
            (Mode.ROT_X, split_steps(theta, sigma_R)),
            (Mode.ROT_Z, split_steps(-phi, sigma_R)),
        )
    actions = []
    for mode, steps in blocks:
        for mag in steps:
            actions.append(ModeAction(mode, mag, len(actions) * period))
    return Plan(tuple(actions), sigma_R, (psi, theta, phi))


def replay_rotation(R: Rot3, actions: Iterable[ModeAction]) -> Rot3:
    """Noiseless kinematic replay of rotation actions (translations ignored)."""
    q = R.q
    for a in actions:
        if a.mode is Mode.ROT_X:
            h = 0.5 * a.magnitude
            q = _qmul((math.cos(h), math.sin(h), 0.0, 0.0), q)
        elif a.mode is Mode.ROT_Z:
            h = 0.5 * a.magnitude
            q = _qmul((math.cos(h), 0.0, 0.0, math.sin(h)), q)
    return Rot3(q)


def translation_plan(T_s: Vec3, T_g: Vec3, sigma_T: float, *, timestamp: float = 0.0) -> Plan:
    """One greedy step of size ``sigma_T`` along the axis of largest deviation.

    Axes are checked in x, y, z order, so ties go to the earlier axis.  The hand
    cannot translate along x; an x maximum falls through to whichever of y and
    z deviates more, and if both are under ``sigma_T / 2`` the plan is empty.
    """
    if not (math.isfinite(sigma_T) and sigma_T > 0):
        raise PlanningFailure(FailureReason.INVALID_INPUT, f"sigma_T must be positive, got {sigma_T}")
    gamma = T_g - T_s
    largest = max(abs(gamma.x), abs(gamma.y), abs(gamma.z))
    if largest == abs(gamma.x):
        if max(abs(gamma.y), abs(gamma.z)) < sigma_T / 2.0:
            return Plan((), sigma_T)
        use_y = abs(gamma.y) >= abs(gamma.z)
    else:
        use_y = largest == abs(gamma.y)
    if use_y:
        action = ModeAction(Mode.TRANS_Y, math.copysign(sigma_T, gamma.y), timestamp)
    else:
        action = ModeAction(Mode.TRANS_Z, math.copysign(sigma_T, gamma.z), timestamp)
    return Plan((action,), sigma_T)


def plan_blocks(plan: Plan) -> list[tuple[Mode, float]]:
    """Collapse consecutive same-mode actions into (mode, summed magnitude) blocks."""
    blocks: list[tuple[Mode, float]] = []
    for a in plan.actions:
        if blocks and blocks[-1][0] is a.mode:
            blocks[-1] = (a.mode, blocks[-1][1] + a.magnitude)
        else:
            blocks.append((a.mode, a.magnitude))
    return blocks


def schedule_position(value: float, schedule: Sequence[float]) -> int:
    """Position of ``value`` in a step schedule (exact match expected)."""
    for i, s in enumerate(schedule):
        if abs(s - value) <= 1e-12:
            return i
    raise ValueError(f"{value} is not in the schedule")
