import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from navlab.geometry import OCCUPIED_VALUE, OccupancyGrid, Pose
from navlab.mapgen import MapGenParams, generate_map
from navlab.scenario import (
    DynamicObstacle,
    Scenario,
    generate_random_task,
    obstacle_pose_at,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
    validate_scenario_payload,
)


@pytest.fixture(scope="module")
def open_grid():
    return generate_map(MapGenParams(kind="outdoor", width=10, height=10, obstacle_count=0, seed=0))


class TestValidate:
    def test_waypoint_in_wall(self, open_grid):
        s = Scenario(
            robot_start=Pose(3, 3, 0),
            robot_goal=(7, 7),
            obstacles=[DynamicObstacle(kind="pedestrian", start=(5, 5), waypoints=[(0.01, 0.01)])],
        )
        violations = validate_scenario(s, open_grid)
        assert any("waypoints[0]" in v.field for v in violations)

    def test_start_equals_goal(self, open_grid):
        s = Scenario(robot_start=Pose(3, 3, 0), robot_goal=(3, 3))
        assert any(v.field == "robot_goal" for v in validate_scenario(s, open_grid))

    def test_speed_cap(self, open_grid):
        s = Scenario(
            robot_start=Pose(3, 3, 0),
            robot_goal=(7, 7),
            obstacles=[DynamicObstacle(speed=4.0, start=(5, 5), waypoints=[(6, 6)])],
        )
        assert any("speed" in v.field for v in validate_scenario(s, open_grid))

    def test_start_too_close_to_wall(self, open_grid):
        s = Scenario(robot_start=Pose(0.1, 5, 0), robot_goal=(7, 7))
        assert any(v.field == "robot_start" for v in validate_scenario(s, open_grid))

    def test_generated_tasks_always_valid(self, open_grid):
        for seed in range(100):
            s = generate_random_task(open_grid, robot_radius=0.2, n_obstacles=2, seed=seed)
            assert validate_scenario(s, open_grid) == [], f"seed {seed}"


class TestGenerateRandomTask:
    def test_deterministic(self, open_grid):
        a = generate_random_task(open_grid, 0.2, 3, seed=42)
        b = generate_random_task(open_grid, 0.2, 3, seed=42)
        assert scenario_to_dict(a) == scenario_to_dict(b)

    def test_zero_obstacles(self, open_grid):
        s = generate_random_task(open_grid, 0.2, 0, seed=1)
        assert s.obstacles == []
        assert validate_scenario(s, open_grid) == []

    def test_separation_property(self, open_grid):
        diag = math.hypot(open_grid.width_m, open_grid.height_m)
        for seed in range(100):
            s = generate_random_task(open_grid, 0.2, 0, seed=seed)
            d = math.dist((s.robot_start.x, s.robot_start.y), s.robot_goal)
            assert d >= 0.3 * diag

    def test_obstacle_speeds_and_waypoints_in_range(self, open_grid):
        s = generate_random_task(open_grid, 0.2, 5, seed=9)
        for o in s.obstacles:
            assert 0.3 <= o.speed <= 1.5
            assert 2 <= len(o.waypoints) <= 4

    def test_dense_map_fails(self):
        g = OccupancyGrid(width=20, height=20, resolution=0.05)
        g.cells[:] = OCCUPIED_VALUE
        g.cells[10, 10] = 255
        with pytest.raises(ValueError, match="map too dense"):
            generate_random_task(g, 0.2, 0, seed=0)


class TestObstaclePose:
    def square_loop(self, speed=1.0):
        # start (0,0) -> (2,0) -> (2,2) -> (0,2) -> back: perimeter 8
        return DynamicObstacle(
            kind="generic", speed=speed, start=(0, 0), waypoints=[(2, 0), (2, 2), (0, 2)]
        )

    def test_t_zero_is_start(self):
        assert obstacle_pose_at(self.square_loop(), 0.0) == (0, 0)

    def test_period(self):
        o = self.square_loop(speed=1.0)
        x, y = obstacle_pose_at(o, 8.0)
        assert math.isclose(x, 0, abs_tol=1e-12) and math.isclose(y, 0, abs_tol=1e-12)

    def test_midpoints(self):
        o = self.square_loop(speed=1.0)
        assert obstacle_pose_at(o, 1.0) == (1.0, 0.0)
        assert obstacle_pose_at(o, 3.0) == (2.0, 1.0)

    def test_zero_speed_stays_at_start(self):
        o = self.square_loop(speed=0.0)
        assert obstacle_pose_at(o, 17.3) == (0, 0)

    def test_degenerate_loop_stays_at_start(self):
        o = DynamicObstacle(kind="generic", speed=1.0, start=(1, 1), waypoints=[(1, 1)])
        assert obstacle_pose_at(o, 5.0) == (1, 1)

    def test_matches_numerical_integration(self):
        # walk the polyline in tiny increments of arc length as the oracle
        rng = np.random.default_rng(3)
        pts = [(float(x), float(y)) for x, y in rng.uniform(-3, 3, size=(5, 2))]
        o = DynamicObstacle(kind="generic", speed=0.7, start=pts[0], waypoints=pts[1:])
        loop = o.loop()
        seg_lens = [math.dist(a, b) for a, b in zip(loop, loop[1:])]
        perimeter = sum(seg_lens)
        for t in rng.uniform(0, 60, size=1000):
            s = (o.speed * t) % perimeter
            acc = 0.0
            expected = loop[-1]
            for (a, b), L in zip(zip(loop, loop[1:]), seg_lens):
                if s <= acc + L:
                    f = (s - acc) / L
                    expected = (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
                    break
                acc += L
            got = obstacle_pose_at(o, float(t))
            assert math.dist(got, expected) < 1e-9

    @given(st.floats(0, 100), st.floats(0.01, 0.1))
    @settings(max_examples=50, deadline=None)
    def test_continuity(self, t, dt):
        o = self.square_loop(speed=1.3)
        a = obstacle_pose_at(o, t)
        b = obstacle_pose_at(o, t + dt)
        assert math.dist(a, b) <= o.speed * dt + 1e-9


class TestSerialization:
    def test_round_trip_identity(self, open_grid):
        s = generate_random_task(open_grid, 0.25, 4, seed=77)
        doc = json.dumps(scenario_to_dict(s))
        back = scenario_from_dict(json.loads(doc))
        assert scenario_to_dict(back) == scenario_to_dict(s)

    def test_payload_validation(self):
        ok = {
            "map_id": "m1",
            "robot_start": {"x": 1, "y": 1, "theta": 0},
            "robot_goal": [2, 2],
            "obstacles": [{"kind": "pedestrian", "speed": 1.0, "start": [1, 2], "waypoints": [[2, 2]]}],
        }
        assert validate_scenario_payload(ok) == []
        bad = dict(ok, obstacles=[{"kind": "ghost", "speed": 9.0, "start": [1, 2], "waypoints": []}])
        fields = [v.field for v in validate_scenario_payload(bad)]
        assert "obstacles[0].kind" in fields
        assert "obstacles[0].speed" in fields
        assert "obstacles[0].waypoints" in fields
