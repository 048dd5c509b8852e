"""Expanded goal manifold {Rz(phi) @ R_g : phi in schedule} with exact nearest queries.

The index keeps a KD-tree over the entries' quaternions and answers queries
under the RPY distance.  Quaternion distance and RPY distance are not the same
metric, so the tree only proposes candidates.  The bound that makes this exact:

    geodesic(a, b) <= |d_roll| + |d_pitch| + |d_yaw| <= sqrt(3) * dist_R(a, b)
    min_sign |q_a -/+ q_b| = 2 sin(geodesic / 4) <= geodesic / 2

so every entry within RPY distance ``d`` of the query sits inside the
quaternion ball of radius ``sqrt(3)/2 * d``.  A ball query with ``d`` set to
the distance of any entry, followed by an exact re-rank, never misses the
true minimiser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .rotations import (
    Rot3,
    axis_quats,
    candidate_steps,
    canonical_quats,
    quat_multiply,
    quat_to_matrix,
    rpy_distance,
    rpy_from_matrices,
)

_BALL_SCALE = math.sqrt(3.0) / 2.0
# Absolute and relative slack on the ball radius to absorb rounding.
_BALL_SLACK = 1e-9


@dataclass(frozen=True)
class GoalManifoldIndex:
    goal: Rot3
    sigma: float
    # Arrays are derived from (goal, sigma), so equality compares those two only.
    phis: np.ndarray = field(repr=False, compare=False)
    quats: np.ndarray = field(repr=False, compare=False)
    rpy: np.ndarray = field(repr=False, compare=False)
    tree: cKDTree = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.phis)

    @cached_property
    def rotations(self) -> tuple[Rot3, ...]:
        return tuple(Rot3(q) for q in self.quats)

    @property
    def entries(self) -> list[tuple[float, Rot3]]:
        return [(float(p), r) for p, r in zip(self.phis, self.rotations)]


def build_goal_manifold(goal: Rot3, sigma: float) -> GoalManifoldIndex:
    """Index every ``Rz(phi) @ goal`` for ``phi`` in ``candidate_steps(sigma)``."""
    phis = candidate_steps(sigma).as_array()
    quats = canonical_quats(quat_multiply(axis_quats("Z", phis), np.array(goal.q)))
    rpy = rpy_from_matrices(quat_to_matrix(quats))
    # Both signs go in the tree so the Euclidean neighbour is the antipodal-aware one.
    tree = cKDTree(np.vstack([quats, -quats]))
    phis.setflags(write=False)
    quats.setflags(write=False)
    rpy.setflags(write=False)
    return GoalManifoldIndex(goal, float(sigma), phis, quats, rpy, tree)


def query_closest_linear(index: GoalManifoldIndex, r_star: Rot3) -> tuple[float, float]:
    """Exhaustive scan; the reference answer for :func:`query_closest`."""
    d = rpy_distance(index.rpy, np.array(r_star.rpy)[:, None])
    i = int(np.argmin(d))  # first minimum = earliest schedule slot
    return float(index.phis[i]), float(d[i])


def query_closest(index: GoalManifoldIndex, r_star: Rot3) -> tuple[float, float]:
    """Entry nearest to ``r_star`` under ``dist_R``, as ``(phi, distance)``.

    Ties go to the earliest schedule position.
    """
    entry, dist = query_closest_batch(index, np.array([r_star.q]))
    return float(index.phis[entry[0]]), float(dist[0])


def query_closest_batch(
    index: GoalManifoldIndex,
    quats: np.ndarray,
    max_dist: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised exact query for an (n, 4) array of unit quaternions.

    Returns entry indices and distances, both of length n.  With ``max_dist``
    set, queries whose certified lower bound already exceeds it are skipped
    and reported as index -1, distance inf.
    """
    quats = np.atleast_2d(np.asarray(quats, dtype=float))
    n_entries = len(index)
    out_idx = np.full(len(quats), -1, dtype=np.int64)
    out_dist = np.full(len(quats), np.inf)
    if len(quats) == 0:
        return out_idx, out_dist

    chord, seed = index.tree.query(quats, k=1)
    live = np.arange(len(quats))
    if max_dist is not None:
        live = np.flatnonzero(chord < _BALL_SCALE * max_dist * (1.0 + _BALL_SLACK) + _BALL_SLACK)
        if live.size == 0:
            return out_idx, out_dist
    rpy_q = rpy_from_matrices(quat_to_matrix(quats[live]))
    seed = np.asarray(seed)[live] % n_entries
    upper = rpy_distance(index.rpy[:, seed], rpy_q)
    radii = _BALL_SCALE * upper * (1.0 + _BALL_SLACK) + _BALL_SLACK

    candidates = index.tree.query_ball_point(quats[live], radii)
    lens = np.fromiter((len(c) for c in candidates), dtype=np.int64, count=len(live))
    # The tree holds +q and -q; fold back to entry numbers.
    ent = np.concatenate([np.asarray(c, dtype=np.int64) for c in candidates]) % n_entries
    group = np.repeat(np.arange(len(live)), lens)
    d = rpy_distance(index.rpy[:, ent], rpy_q[:, group])
    # Per query: smallest distance, then earliest schedule slot.
    order = np.lexsort((ent, d, group))
    first = order[np.r_[0, np.cumsum(lens)[:-1]]]
    out_idx[live] = ent[first]
    out_dist[live] = d[first]
    return out_idx, out_dist
