import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from so3gait.manifold import build_goal_manifold, query_closest, query_closest_batch, query_closest_linear
from so3gait.rotations import Rot3, candidate_steps, dist_R, euler_zxz_decompose, geodesic_angle, rot_about_axis

from conftest import random_rotations, rotations

SIGMAS = [math.radians(d) for d in (0.5, 2.0, 5.0)]


class TestBuild:
    def test_quarter_turn_schedule(self):
        idx = build_goal_manifold(Rot3.identity(), math.pi / 2)
        assert len(idx) == 4
        np.testing.assert_allclose(idx.phis, [0.0, math.pi / 2, -math.pi / 2, math.pi])

    def test_zero_offset_entry_is_goal(self, rng):
        (g,) = random_rotations(rng, 1)
        idx = build_goal_manifold(g, math.radians(2.0))
        assert len(idx) == len(candidate_steps(math.radians(2.0)))
        assert geodesic_angle(idx.rotations[0], g) < 1e-12

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_entries_are_z_offsets_of_goal(self, rng, sigma):
        (g,) = random_rotations(rng, 1)
        idx = build_goal_manifold(g, sigma)
        for phi, r in idx.entries:
            assert geodesic_angle(r, rot_about_axis("Z", phi) @ g) < 1e-9
            # phi comes back out of the relative rotation as a pure z angle.
            e = euler_zxz_decompose(r @ g.inverse())
            assert e.theta < 1e-6
            assert math.cos(e.phi + e.psi - phi) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic(self, rng):
        (g,) = random_rotations(rng, 1)
        a, b = build_goal_manifold(g, 0.03), build_goal_manifold(g, 0.03)
        assert a == b
        np.testing.assert_array_equal(a.quats, b.quats)

    def test_arrays_read_only(self):
        idx = build_goal_manifold(Rot3.identity(), 0.1)
        with pytest.raises(ValueError):
            idx.phis[0] = 1.0


class TestQuery:
    def test_exact_member(self, rng):
        (g,) = random_rotations(rng, 1)
        phi, d = query_closest(build_goal_manifold(g, math.radians(2.0)), g)
        assert phi == 0.0
        assert d == pytest.approx(0.0, abs=1e-12)

    def test_quarter_step_offset(self, rng):
        (g,) = random_rotations(rng, 1)
        s = math.radians(2.0)
        phi, d = query_closest(build_goal_manifold(g, s), rot_about_axis("Z", s / 4) @ g)
        assert phi == 0.0
        assert d == pytest.approx(s / 4, abs=1e-9)

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_matches_linear_scan(self, rng, sigma):
        goals = random_rotations(rng, 20)
        queries = random_rotations(rng, 200)
        for i, q in enumerate(queries):
            idx = build_goal_manifold(goals[i % len(goals)], sigma)
            assert query_closest(idx, q) == query_closest_linear(idx, q)

    def test_ties_go_to_earliest_slot(self):
        # Halfway between the entries at 0 and +sigma: both are equally near.
        s = math.pi / 2
        idx = build_goal_manifold(Rot3.identity(), s)
        phi, _ = query_closest(idx, rot_about_axis("Z", s / 2))
        assert phi == query_closest_linear(idx, rot_about_axis("Z", s / 2))[0]

    @given(rotations(), rotations(), st.sampled_from(SIGMAS))
    def test_oracle_property(self, goal, q, sigma):
        idx = build_goal_manifold(goal, sigma)
        assert query_closest(idx, q) == query_closest_linear(idx, q)

    def test_batch_cutoff(self, rng):
        goal, *qs = random_rotations(rng, 51)
        idx = build_goal_manifold(goal, 0.05)
        arr = np.array([q.q for q in qs])
        full_i, full_d = query_closest_batch(idx, arr)
        cut_i, cut_d = query_closest_batch(idx, arr, max_dist=0.3)
        near = full_d < 0.3
        np.testing.assert_array_equal(cut_i[near], full_i[near])
        np.testing.assert_array_equal(cut_d[near], full_d[near])
        # Skipped queries never hide a hit.
        assert np.all(full_d[cut_i == -1] >= 0.3)

    def test_distance_is_dist_R(self, rng):
        goal, q = random_rotations(rng, 2)
        idx = build_goal_manifold(goal, 0.05)
        phi, d = query_closest(idx, q)
        assert d == pytest.approx(dist_R(rot_about_axis("Z", phi) @ goal, q), abs=1e-12)
