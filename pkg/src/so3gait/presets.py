"""Object response presets and cube face goals.

Parameter values are calibrated by hand so the simulated objects reproduce
the qualitative behaviour seen on hardware: the cube regrasps cleanly from
yaw offsets of +-0.5 rad, the sphere and truck are easy, the duck's x-axis
rotation is jerky and the bunny jams in some orientations.
"""

from __future__ import annotations

import math

from .planners import Mode
from .plant import ModeResponse, ObjectModel, RegraspBasin, StuckRegion
from .rotations import Pose, Rot3, Vec3, rot_about_axis

_DEG = math.pi / 180.0
_MM = 1e-3


def _resp(gain_std, x, y, z, roll, pitch, yaw, gain_mean=1.0):
    return ModeResponse(gain_mean, gain_std, (x * _MM, y * _MM, z * _MM, roll * _DEG, pitch * _DEG, yaw * _DEG))


def cube() -> ObjectModel:
    return ObjectModel(
        "cube",
        {
            Mode.ROT_X: _resp(0.08, 0.15, 0.10, 0.30, 0.0, 0.20, 0.08),
            Mode.ROT_Z: _resp(0.05, 0.15, 0.10, 0.10, 0.08, 0.20, 0.0),
            Mode.TRANS_Y: _resp(0.10, 0.10, 0.0, 0.10, 0.05, 0.05, 0.05),
            Mode.TRANS_Z: _resp(0.10, 0.10, 0.10, 0.0, 0.05, 0.05, 0.05),
        },
        slip_probability=0.01,
        slip_magnitude_std=2.0 * _DEG,
        regrasp_basin=RegraspBasin(center_offset=0.0, pull_strength=0.6, capture_range=0.8, noise_std=0.02),
    )


def sphere() -> ObjectModel:
    return ObjectModel(
        "sphere",
        {
            Mode.ROT_X: _resp(0.05, 0.20, 0.15, 0.30, 0.0, 0.30, 0.15),
            Mode.ROT_Z: _resp(0.04, 0.15, 0.15, 0.15, 0.10, 0.25, 0.0),
            Mode.TRANS_Y: _resp(0.08, 0.10, 0.0, 0.10, 0.05, 0.05, 0.05),
            Mode.TRANS_Z: _resp(0.08, 0.10, 0.10, 0.0, 0.05, 0.05, 0.05),
        },
        slip_probability=0.005,
        slip_magnitude_std=1.5 * _DEG,
        regrasp_basin=RegraspBasin(pull_strength=0.7, capture_range=1.0, noise_std=0.015),
    )


def truck() -> ObjectModel:
    return ObjectModel(
        "truck",
        {
            Mode.ROT_X: _resp(0.06, 0.25, 0.20, 0.35, 0.0, 0.35, 0.15),
            Mode.ROT_Z: _resp(0.05, 0.20, 0.20, 0.20, 0.10, 0.30, 0.0),
            Mode.TRANS_Y: _resp(0.08, 0.10, 0.0, 0.10, 0.05, 0.05, 0.05),
            Mode.TRANS_Z: _resp(0.08, 0.10, 0.10, 0.0, 0.05, 0.05, 0.05),
        },
        slip_probability=0.008,
        slip_magnitude_std=1.5 * _DEG,
        regrasp_basin=RegraspBasin(pull_strength=0.65, capture_range=0.9, noise_std=0.02),
    )


def bunny() -> ObjectModel:
    # Fingers catch behind the ears for part of the roll range.
    ears = StuckRegion(rot_about_axis("X", 50 * _DEG), radius=20 * _DEG, escape_probability=0.001)
    return ObjectModel(
        "bunny",
        {
            Mode.ROT_X: _resp(0.12, 0.35, 0.25, 0.45, 0.0, 0.60, 0.30, gain_mean=0.9),
            Mode.ROT_Z: _resp(0.08, 0.25, 0.25, 0.25, 0.20, 0.45, 0.0),
            Mode.TRANS_Y: _resp(0.12, 0.15, 0.0, 0.15, 0.10, 0.10, 0.10),
            Mode.TRANS_Z: _resp(0.12, 0.15, 0.15, 0.0, 0.10, 0.10, 0.10),
        },
        slip_probability=0.02,
        slip_magnitude_std=3.0 * _DEG,
        regrasp_basin=RegraspBasin(pull_strength=0.5, capture_range=0.6, noise_std=0.03),
        stuck_states=(ears,),
    )


def duck() -> ObjectModel:
    # Head-heavy: x rotations are jerky and slip often.
    return ObjectModel(
        "duck",
        {
            Mode.ROT_X: _resp(0.20, 0.35, 0.25, 0.50, 0.0, 0.60, 0.50, gain_mean=1.1),
            Mode.ROT_Z: _resp(0.08, 0.25, 0.25, 0.25, 0.20, 0.45, 0.0),
            Mode.TRANS_Y: _resp(0.12, 0.15, 0.0, 0.15, 0.10, 0.10, 0.10),
            Mode.TRANS_Z: _resp(0.12, 0.15, 0.15, 0.0, 0.10, 0.10, 0.10),
        },
        slip_probability=0.08,
        slip_magnitude_std=6.0 * _DEG,
        regrasp_basin=RegraspBasin(pull_strength=0.5, capture_range=0.45, noise_std=0.03),
    )


OBJECTS = {f.__name__: f for f in (cube, sphere, truck, bunny, duck)}


def object_model(name: str) -> ObjectModel:
    try:
        return OBJECTS[name]()
    except KeyError:
        raise ValueError(f"unknown object preset {name!r}; choose from {sorted(OBJECTS)}") from None


# Face A is the reference orientation.  B, C, D follow by successive quarter
# turns about x; E and F are the quarter turns about z either side of A.
CUBE_FACES = {
    "A": Rot3.identity(),
    "B": rot_about_axis("X", math.pi / 2),
    "C": rot_about_axis("X", math.pi),
    "D": rot_about_axis("X", -math.pi / 2),
    "E": rot_about_axis("Z", math.pi / 2),
    "F": rot_about_axis("Z", -math.pi / 2),
}


def cube_face_goal(face: str, T_center: Vec3 = Vec3.zero()) -> Pose:
    """Goal pose presenting ``face`` of the cube, centred in the workspace."""
    try:
        return Pose(T_center, CUBE_FACES[face.upper()])
    except KeyError:
        raise ValueError(f"unknown cube face {face!r}") from None
