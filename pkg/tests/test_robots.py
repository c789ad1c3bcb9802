import math

import numpy as np
import pytest

from navlab.geometry import OCCUPIED_VALUE, OccupancyGrid, Pose
from navlab.robots import (
    DIFFERENTIAL,
    OMNIDIRECTIONAL,
    beam_angles,
    builtin_robots,
    get_robot,
    integrate,
    observe,
)


def empty_grid(size_m=20.0, res=0.05):
    n = int(size_m / res)
    g = OccupancyGrid(width=n, height=n, resolution=res)
    return g


class TestRegistry:
    def test_exactly_ten_presets(self):
        assert len(builtin_robots()) == 10

    def test_paper_names_present(self):
        ids = {r.id for r in builtin_robots()}
        assert ids == {
            "turtlebot3", "robotino", "carobot4", "agv_ota", "ridgeback",
            "youbot", "jackal", "husky", "dingo", "tiago",
        }

    def test_invariants(self):
        for r in builtin_robots():
            assert r.v_max > 0
            assert r.lidar.beams >= 8
            assert r.action_dim == (2 if r.kinematics == DIFFERENTIAL else 3)
            assert r.obs_dim == r.lidar.beams + 2

    def test_ridgeback_is_omnidirectional(self):
        assert get_robot("ridgeback").kinematics == OMNIDIRECTIONAL

    def test_unknown_robot(self):
        with pytest.raises(KeyError):
            get_robot("nonexistent")

    def test_beam_angle_convention(self):
        r = get_robot("turtlebot3")
        a = beam_angles(r)
        lid = r.lidar
        for k in (0, 1, 57, lid.beams - 1):
            assert a[k] == pytest.approx(-lid.fov / 2 + k * lid.fov / (lid.beams - 1))


class TestIntegrate:
    def test_straight_line(self):
        r = get_robot("jackal")
        pose, vel = integrate(r, Pose(0, 0, 0), (1.0, 0.0), (1.0, 0.0), dt=1.0)
        assert pose.x == pytest.approx(1.0)
        assert pose.y == pytest.approx(0.0)
        assert pose.theta == pytest.approx(0.0)

    def test_pure_rotation(self):
        r = get_robot("jackal")
        pose, vel = integrate(r, Pose(0, 0, 0), (0.0, math.pi / 2), (0.0, math.pi / 2), dt=1.0)
        assert pose.x == pytest.approx(0.0)
        assert pose.y == pytest.approx(0.0)
        assert pose.theta == pytest.approx(math.pi / 2)

    def test_arc_matches_rk4(self):
        # constant (v, omega) = (1, 1) for 1 s, integrated in 1000 RK4 substeps
        r = get_robot("jackal")
        v, w = 1.0, 1.0

        def deriv(state):
            x, y, th = state
            return np.array([v * math.cos(th), v * math.sin(th), w])

        state = np.array([0.0, 0.0, 0.0])
        h = 1e-3
        for _ in range(1000):
            k1 = deriv(state)
            k2 = deriv(state + h / 2 * k1)
            k3 = deriv(state + h / 2 * k2)
            k4 = deriv(state + h * k3)
            state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

        pose = Pose(0, 0, 0)
        vel = (v, w)
        for _ in range(10):
            pose, vel = integrate(r, pose, (v, w), vel, dt=0.1)
        assert pose.x == pytest.approx(state[0], abs=1e-6)
        assert pose.y == pytest.approx(state[1], abs=1e-6)
        assert pose.theta == pytest.approx(state[2], abs=1e-6)

    def test_omni_lateral_motion(self):
        r = get_robot("ridgeback")
        pose, vel = integrate(r, Pose(0, 0, 0), (0.0, 0.5, 0.0), (0.0, 0.5, 0.0), dt=1.0)
        assert pose.x == pytest.approx(0.0)
        assert pose.y == pytest.approx(0.5)

    def test_omni_matches_rk4(self):
        r = get_robot("ridgeback")
        vx, vy, w = 0.5, -0.3, 0.8

        def deriv(state):
            x, y, th = state
            return np.array(
                [vx * math.cos(th) - vy * math.sin(th), vx * math.sin(th) + vy * math.cos(th), w]
            )

        state = np.array([0.2, -0.1, 0.4])
        h = 1e-3
        for _ in range(1000):
            k1 = deriv(state)
            k2 = deriv(state + h / 2 * k1)
            k3 = deriv(state + h / 2 * k2)
            k4 = deriv(state + h * k3)
            state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

        pose, _ = integrate(r, Pose(0.2, -0.1, 0.4), (vx, vy, w), (vx, vy, w), dt=1.0)
        assert pose.x == pytest.approx(state[0], abs=1e-6)
        assert pose.y == pytest.approx(state[1], abs=1e-6)

    def test_clamping_and_rate_limits(self):
        rng = np.random.default_rng(0)
        for r in builtin_robots():
            vel = r.zero_velocity()
            pose = Pose(0, 0, 0)
            for _ in range(50):
                action = tuple(rng.uniform(-5, 5, size=r.action_dim))
                new_pose, new_vel = integrate(r, pose, action, vel, dt=0.1)
                if r.kinematics == DIFFERENTIAL:
                    assert r.v_min - 1e-12 <= new_vel[0] <= r.v_max + 1e-12
                    assert abs(new_vel[1]) <= r.omega_max + 1e-12
                    assert abs(new_vel[0] - vel[0]) <= r.accel_lin * 0.1 + 1e-12
                    assert abs(new_vel[1] - vel[1]) <= r.accel_ang * 0.1 + 1e-12
                else:
                    assert math.hypot(new_vel[0], new_vel[1]) <= r.v_max + 1e-9
                    assert abs(new_vel[2]) <= r.omega_max + 1e-12
                    dmag = math.hypot(new_vel[0] - vel[0], new_vel[1] - vel[1])
                    assert dmag <= r.accel_lin * 0.1 + 1e-9
                assert -math.pi < new_pose.theta <= math.pi
                pose, vel = new_pose, new_vel


class TestObserve:
    def test_empty_map_all_ones(self):
        r = get_robot("turtlebot3")
        g = empty_grid()
        obs = observe(r, g, Pose(10, 10, 0.7), (12, 10))
        assert len(obs) == r.obs_dim
        np.testing.assert_allclose(obs[: r.lidar.beams], 1.0)

    def test_goal_straight_ahead(self):
        r = get_robot("turtlebot3")
        g = empty_grid()
        obs = observe(r, g, Pose(10, 10, 0.0), (12, 10))
        assert obs[-2] == pytest.approx(2.0)
        assert obs[-1] == pytest.approx(0.0)

    def test_goal_bearing_relative_to_heading(self):
        r = get_robot("turtlebot3")
        g = empty_grid()
        obs = observe(r, g, Pose(10, 10, math.pi / 2), (12, 10))
        assert obs[-1] == pytest.approx(-math.pi / 2)

    def test_obs_dim_for_every_builtin(self):
        g = empty_grid()
        for r in builtin_robots():
            obs = observe(r, g, Pose(10, 10, 0.3), (11, 11))
            assert len(obs) == r.obs_dim

    def test_dynamic_circle_matches_analytic_intersection(self):
        r = get_robot("turtlebot3")
        g = empty_grid()
        pose = Pose(10, 10, 0.37)
        circle = ((11.5, 10.6), 0.4)
        obs = observe(r, g, pose, (15, 15), [circle])
        angles = pose.theta + beam_angles(r)
        for k, ang in enumerate(angles):
            # quadratic |o + t d - c|^2 = r^2, smallest root >= 0
            dx, dy = math.cos(ang), math.sin(ang)
            ocx, ocy = circle[0][0] - pose.x, circle[0][1] - pose.y
            b = dx * ocx + dy * ocy
            disc = b * b - (ocx**2 + ocy**2 - circle[1] ** 2)
            expected = r.lidar.max_range
            if disc >= 0:
                t = b - math.sqrt(disc)
                if t >= 0:
                    expected = min(expected, t)
            assert obs[k] * r.lidar.max_range == pytest.approx(expected, abs=1e-9), k

    def test_wall_renders_in_scan(self):
        r = get_robot("turtlebot3")
        g = empty_grid()
        wall_col = int(11.0 / g.resolution)
        g.cells[:, wall_col] = OCCUPIED_VALUE
        obs = observe(r, g, Pose(10, 10, 0.0), (12, 10))
        # forward beam sees the wall at ~1 m
        fwd = np.argmin(np.abs(beam_angles(r)))
        assert obs[fwd] * r.lidar.max_range == pytest.approx(1.0, abs=2 * g.resolution)
