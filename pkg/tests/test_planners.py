import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from so3gait.manifold import build_goal_manifold, query_closest, query_closest_linear
from so3gait.planners import (
    FailureReason,
    Mode,
    ModeAction,
    PlanningFailure,
    enumerate_path,
    plan_blocks,
    replay_rotation,
    schedule_position,
    so3_plan,
    split_steps,
    translation_plan,
)
from so3gait.rotations import Rot3, Vec3, candidate_steps, dist_R, rot_about_axis

from conftest import random_rotations, rotations

DEG = math.pi / 180
RHO = 0.2


def lands_on_manifold(R_s, R_g, plan, rho, sigma):
    idx = build_goal_manifold(R_g, sigma)
    return query_closest_linear(idx, replay_rotation(R_s, plan.actions))[1] < rho


def first_pair_linear(R_s, R_g, rho, sigma):
    """Unpruned reference search over the schedule in (psi, theta) order."""
    sched = candidate_steps(sigma)
    idx = build_goal_manifold(R_g, sigma)
    for psi in sched:
        for theta in sched:
            r = rot_about_axis("X", theta) @ rot_about_axis("Z", psi) @ R_s
            phi, d = query_closest_linear(idx, r)
            if d < rho:
                return psi, theta, phi
    return None


class TestSO3Plan:
    def test_same_pose_empty(self, rng):
        (r,) = random_rotations(rng, 1)
        plan = so3_plan(r, r, RHO, 2 * DEG)
        assert plan.actions == ()
        assert plan.decomposition == (0.0, 0.0, 0.0)

    def test_pure_yaw_goal(self, rng):
        (R_s,) = random_rotations(rng, 1)
        R_g = rot_about_axis("Z", math.pi / 2) @ R_s
        plan = so3_plan(R_s, R_g, RHO, 2 * DEG)
        psi, theta, phi = plan.decomposition
        assert (psi, theta) == (0.0, 0.0)
        assert phi == pytest.approx(-math.pi / 2, abs=1e-12)
        assert [b[0] for b in plan_blocks(plan)] == [Mode.ROT_Z]
        assert plan_blocks(plan)[0][1] == pytest.approx(math.pi / 2, abs=1e-9)
        assert dist_R(replay_rotation(R_s, plan.actions), R_g) < 1e-9

    def test_random_pairs_connect_and_replay(self, rng):
        rs = random_rotations(rng, 400)
        for R_s, R_g in zip(rs[::2], rs[1::2]):
            plan = so3_plan(R_s, R_g, RHO, 2 * DEG)
            assert lands_on_manifold(R_s, R_g, plan, RHO, 2 * DEG)

    @given(rotations(), rotations(), st.sampled_from([2 * DEG, 5 * DEG]))
    @settings(max_examples=40)
    def test_replay_soundness_property(self, R_s, R_g, sigma):
        plan = so3_plan(R_s, R_g, RHO, sigma)
        assert lands_on_manifold(R_s, R_g, plan, RHO, sigma)

    def test_schedule_order_minimality(self, rng):
        rs = random_rotations(rng, 16)
        sigma = 10 * DEG
        for R_s, R_g in zip(rs[::2], rs[1::2]):
            expected = first_pair_linear(R_s, R_g, RHO, sigma)
            if expected is None:
                with pytest.raises(PlanningFailure):
                    so3_plan(R_s, R_g, RHO, sigma)
            else:
                assert so3_plan(R_s, R_g, RHO, sigma).decomposition == pytest.approx(expected, abs=1e-12)

    def test_pruning_does_not_change_result(self, rng):
        rs = random_rotations(rng, 20)
        for R_s, R_g in zip(rs[::2], rs[1::2]):
            a = so3_plan(R_s, R_g, RHO, 3 * DEG)
            b = so3_plan(R_s, R_g, RHO, 3 * DEG, prune=False)
            assert a == b

    def test_deterministic(self, rng):
        R_s, R_g = random_rotations(rng, 2)
        assert so3_plan(R_s, R_g, RHO, 2 * DEG) == so3_plan(R_s, R_g, RHO, 2 * DEG)

    def test_block_structure(self, rng):
        R_s, R_g = random_rotations(rng, 2)
        sigma = 2 * DEG
        plan = so3_plan(R_s, R_g, RHO, sigma)
        psi, theta, phi = plan.decomposition
        expected = [(m, t) for m, t in ((Mode.ROT_Z, psi), (Mode.ROT_X, theta), (Mode.ROT_Z, -phi)) if t != 0.0]
        got = plan_blocks(plan)
        # Adjacent RotZ blocks merge when theta is 0.
        if theta == 0.0 and psi != 0.0 and phi != 0.0:
            expected = [(Mode.ROT_Z, psi - phi)]
        assert [m for m, _ in got] == [m for m, _ in expected]
        for (_, a), (_, b) in zip(got, expected):
            assert a == pytest.approx(b, abs=1e-9)
        assert all(abs(a.magnitude) <= sigma + 1e-12 for a in plan.actions)
        ts = [a.timestamp for a in plan.actions]
        assert all(t1 > t0 for t0, t1 in zip(ts, ts[1:]))

    def test_reuses_index(self, rng):
        R_s, R_g = random_rotations(rng, 2)
        idx = build_goal_manifold(R_g, 2 * DEG)
        assert so3_plan(R_s, R_g, RHO, 1 * DEG, index=idx) == so3_plan(R_s, R_g, RHO, 1 * DEG, index=idx)

    def test_index_for_other_goal_rejected(self, rng):
        R_s, R_g, other = random_rotations(rng, 3)
        with pytest.raises(PlanningFailure) as exc:
            so3_plan(R_s, R_g, RHO, 2 * DEG, index=build_goal_manifold(other, 2 * DEG))
        assert exc.value.reason is FailureReason.INVALID_INPUT

    @pytest.mark.parametrize("rho,sigma", [(0.0, 0.03), (-1.0, 0.03), (0.2, 0.0), (0.2, 4.0), (float("nan"), 0.03)])
    def test_invalid_input(self, rho, sigma):
        with pytest.raises(PlanningFailure) as exc:
            so3_plan(Rot3.identity(), Rot3.identity(), rho, sigma)
        assert exc.value.reason is FailureReason.INVALID_INPUT

    def test_exhausted_schedule(self):
        # A coarse schedule with a tiny threshold cannot reach an off-grid goal.
        R_g = Rot3.from_rpy(0.31, 0.17, 0.05)
        with pytest.raises(PlanningFailure) as exc:
            so3_plan(Rot3.identity(), R_g, 1e-4, math.pi / 2)
        assert exc.value.reason is FailureReason.SCHEDULE_EXHAUSTED


class TestEnumeratePath:
    def test_zero(self):
        assert enumerate_path(Rot3.identity(), 2 * DEG, 0.0, 0.0, 0.0).actions == ()

    def test_exact_division(self):
        plan = enumerate_path(Rot3.identity(), 2 * DEG, 4 * DEG, 0.0, 0.0)
        assert [(a.mode, a.magnitude) for a in plan.actions] == [(Mode.ROT_Z, 2 * DEG)] * 2

    def test_remainder_last(self):
        plan = enumerate_path(Rot3.identity(), 2 * DEG, 5 * DEG, 0.0, 0.0)
        np.testing.assert_allclose([a.magnitude for a in plan.actions], [2 * DEG, 2 * DEG, 1 * DEG], atol=1e-15)

    def test_timestamps(self):
        plan = enumerate_path(Rot3.identity(), 2 * DEG, 5 * DEG, -3 * DEG, 1 * DEG, period=0.25)
        assert [a.timestamp for a in plan.actions] == [0.25 * i for i in range(len(plan))]

    def test_blocks_and_signs(self):
        plan = enumerate_path(Rot3.identity(), 2 * DEG, -3 * DEG, 5 * DEG, 7 * DEG)
        blocks = plan_blocks(plan)
        assert [m for m, _ in blocks] == [Mode.ROT_Z, Mode.ROT_X, Mode.ROT_Z]
        np.testing.assert_allclose([t for _, t in blocks], [-3 * DEG, 5 * DEG, -7 * DEG], atol=1e-12)

    def test_z_blocks_fold_without_theta(self):
        plan = enumerate_path(Rot3.identity(), 2 * DEG, 1 * DEG, 0.0, 6 * DEG)
        np.testing.assert_allclose([a.magnitude for a in plan.actions], [-2 * DEG, -2 * DEG, -1 * DEG], atol=1e-12)
        assert {a.mode for a in plan.actions} == {Mode.ROT_Z}
        assert plan.decomposition == (1 * DEG, 0.0, 6 * DEG)

    @given(st.floats(-math.pi, math.pi), st.floats(0.5 * DEG, 5 * DEG))
    def test_split_preserves_sum(self, total, sigma):
        steps = split_steps(total, sigma)
        assert sum(steps) == pytest.approx(total, abs=1e-9)
        assert all(abs(s) <= sigma + 1e-12 for s in steps)
        assert all(math.copysign(1, s) == math.copysign(1, total) for s in steps)


class TestTranslationPlan:
    def test_negative_y(self):
        plan = translation_plan(Vec3.zero(), Vec3(0.0, -0.018, 0.0), 0.003)
        assert [(a.mode, a.magnitude) for a in plan.actions] == [(Mode.TRANS_Y, -0.003)]

    def test_max_axis(self):
        plan = translation_plan(Vec3.zero(), Vec3(0.001, 0.002, 0.004), 0.003)
        assert [(a.mode, a.magnitude) for a in plan.actions] == [(Mode.TRANS_Z, 0.003)]

    def test_at_goal_is_empty(self):
        assert translation_plan(Vec3(0.01, 0.0, 0.0), Vec3(0.01, 0.0, 0.0), 0.003).actions == ()

    def test_x_maximum_falls_to_larger_controllable_axis(self):
        plan = translation_plan(Vec3.zero(), Vec3(0.01, -0.002, 0.0015), 0.003)
        assert plan.actions[0].mode is Mode.TRANS_Y
        plan = translation_plan(Vec3.zero(), Vec3(0.01, 0.0, -0.002), 0.003)
        assert (plan.actions[0].mode, plan.actions[0].magnitude) == (Mode.TRANS_Z, -0.003)

    def test_x_only_deviation_is_empty(self):
        assert translation_plan(Vec3.zero(), Vec3(0.02, 0.001, -0.001), 0.003).actions == ()

    def test_y_wins_ties_with_z(self):
        plan = translation_plan(Vec3.zero(), Vec3(0.0, 0.004, -0.004), 0.003)
        assert plan.actions[0].mode is Mode.TRANS_Y

    @given(
        st.tuples(*[st.floats(-0.05, 0.05)] * 3),
        st.tuples(*[st.floats(-0.05, 0.05)] * 3),
    )
    def test_reduces_max_controllable_deviation(self, s, g):
        sigma = 0.003
        T_s, T_g = Vec3(*s), Vec3(*g)
        plan = translation_plan(T_s, T_g, sigma)
        before = max(abs(T_g.y - T_s.y), abs(T_g.z - T_s.z))
        if before < sigma / 2 and abs(T_g.x - T_s.x) >= before:
            return
        assert len(plan) == 1
        a = plan.actions[0]
        moved = Vec3(T_s.x, T_s.y + (a.magnitude if a.mode is Mode.TRANS_Y else 0.0),
                     T_s.z + (a.magnitude if a.mode is Mode.TRANS_Z else 0.0))
        axis_gap = lambda T: abs((T_g.y - T.y) if a.mode is Mode.TRANS_Y else (T_g.z - T.z))
        if axis_gap(T_s) >= sigma:
            assert axis_gap(moved) == pytest.approx(axis_gap(T_s) - sigma, abs=1e-12)
        else:
            assert axis_gap(moved) <= sigma

    def test_rejects_bad_step(self):
        with pytest.raises(PlanningFailure):
            translation_plan(Vec3.zero(), Vec3.zero(), 0.0)


class TestModeAction:
    def test_mode_coerced(self):
        assert ModeAction("RotX", 0.1).mode is Mode.ROT_X

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            ModeAction(Mode.ROT_X, float("nan"))

    def test_schedule_position(self):
        s = candidate_steps(math.pi / 2)
        assert schedule_position(-math.pi / 2, s) == 2
        with pytest.raises(ValueError):
            schedule_position(0.1, s)
