import json
import math

import numpy as np
import pytest

from navlab.geometry import Pose, Trajectory, TrajectoryPoint
from navlab.metrics import (
    EPISODE_COLUMNS,
    MetricSeries,
    TRAJECTORY_COLUMNS,
    clearing_distance,
    compute_report,
    episode_success,
    movement_jerk,
    normalized_angle,
    path_length,
    plot_data,
    read_episodes_csv,
    read_trajectory_csv,
    roughness,
    success_rate,
    variance,
    write_results,
)
from navlab.simulation import EpisodeRecord


def traj_from_positions(points, dt=1.0, speeds=None, clearances=None, contacts=None):
    samples = []
    for i, (x, y) in enumerate(points):
        samples.append(
            TrajectoryPoint(
                t=i * dt,
                pose=Pose(x, y, 0.0),
                v_lin=0.0 if speeds is None else speeds[i],
                v_ang=0.0,
                min_clearance=1.0 if clearances is None else clearances[i],
                collision_contact=False if contacts is None else contacts[i],
            )
        )
    return Trajectory(samples)


def random_trajectory(rng, n):
    pos = np.cumsum(rng.normal(scale=0.5, size=(n, 2)), axis=0)
    t = np.cumsum(rng.uniform(0.05, 0.3, size=n))
    speeds = rng.normal(scale=1.0, size=n)
    clear = rng.uniform(0, 2, size=n)
    samples = [
        TrajectoryPoint(float(t[i]), Pose(float(pos[i, 0]), float(pos[i, 1]), 0.0),
                        float(speeds[i]), 0.0, float(clear[i]))
        for i in range(n)
    ]
    return Trajectory(samples)


def record(index=0, reached=True, timeout=False, collisions=0, traj=None):
    return EpisodeRecord(
        trajectory=traj if traj is not None else traj_from_positions([(0, 0), (1, 0), (2, 0)]),
        collisions=collisions,
        reached_goal=reached,
        timeout=timeout,
        time_to_goal=2.0 if reached else None,
        scenario_id="s",
        planner_id="p",
        episode_index=index,
    )


class TestPathLength:
    def test_three_four_five(self):
        assert path_length(traj_from_positions([(0, 0), (3, 4)])) == 5.0

    def test_single_point(self):
        assert path_length(traj_from_positions([(1, 1)])) == 0.0

    def test_random_walks_match_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            traj = random_trajectory(rng, int(rng.integers(2, 100)))
            pos = traj.positions()
            expected = sum(
                math.dist(pos[i], pos[i + 1]) for i in range(len(pos) - 1)
            )
            assert abs(path_length(traj) - expected) < 1e-12


class TestRoughness:
    def test_collinear_is_zero(self):
        assert roughness(traj_from_positions([(0, 0), (1, 0), (2, 0), (3, 0)])) == 0.0

    def test_unit_l_shape(self):
        # area 1/2, |x2-x0|^2 = 2 -> 0.25
        assert roughness(traj_from_positions([(0, 0), (1, 0), (1, 1)])) == pytest.approx(0.25)

    def test_too_short_absent(self):
        assert roughness(traj_from_positions([(0, 0), (1, 0)])) is None

    def test_degenerate_windows_skipped(self):
        # x0 == x2: the first window has zero span and is skipped
        traj = traj_from_positions([(0, 0), (1, 0), (0, 0), (1, 1)])
        got = roughness(traj)
        s1 = np.array([0, 0]) - np.array([1, 0])
        assert got is not None

    def test_matches_shoelace_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            traj = random_trajectory(rng, int(rng.integers(3, 120)))
            pos = traj.positions()
            vals = []
            for i in range(len(pos) - 2):
                x0, x1, x2 = pos[i], pos[i + 1], pos[i + 2]
                span = math.dist(x0, x2)
                if span < 1e-9:
                    continue
                # shoelace for the triangle
                area = 0.5 * abs(
                    x0[0] * (x1[1] - x2[1]) + x1[0] * (x2[1] - x0[1]) + x2[0] * (x0[1] - x1[1])
                )
                vals.append(area / span**2)
            expected = float(np.mean(vals)) if vals else None
            got = roughness(traj)
            assert got == pytest.approx(expected, rel=1e-12)


class TestMovementJerk:
    def test_constant_velocity_zero(self):
        traj = traj_from_positions([(i, 0) for i in range(6)], speeds=[1.0] * 6)
        assert movement_jerk(traj) == 0.0

    def test_quadratic_speed(self):
        # v = t^2 sampled at dt=1: second difference is constant 2
        n = 6
        traj = traj_from_positions([(i, 0) for i in range(n)], speeds=[float(i**2) for i in range(n)])
        assert movement_jerk(traj) == pytest.approx(2.0)

    def test_too_short_absent(self):
        traj = traj_from_positions([(0, 0), (1, 0)], speeds=[0.0, 1.0])
        assert movement_jerk(traj) is None

    def test_matches_finite_difference_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            traj = random_trajectory(rng, int(rng.integers(3, 80)))
            t = traj.times()
            v = traj.speeds()
            js = []
            for i in range(len(v) - 2):
                a0 = (v[i + 1] - v[i]) / (t[i + 1] - t[i])
                a1 = (v[i + 2] - v[i + 1]) / (t[i + 2] - t[i + 1])
                js.append(abs((a1 - a0) / (t[i + 1] - t[i])))
            assert movement_jerk(traj) == pytest.approx(float(np.mean(js)), rel=1e-12)


class TestNormalizedAngle:
    def test_straight_line_zero(self):
        assert normalized_angle(traj_from_positions([(0, 0), (1, 0), (2, 0)])) == 0.0

    def test_right_angle_unit_segments(self):
        got = normalized_angle(traj_from_positions([(0, 0), (1, 0), (1, 1)]))
        assert got == pytest.approx((math.pi / 2) / 2)

    def test_matches_atan2_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            traj = random_trajectory(rng, int(rng.integers(3, 90)))
            pos = traj.positions()
            vals = []
            for i in range(len(pos) - 2):
                s1 = pos[i + 1] - pos[i]
                s2 = pos[i + 2] - pos[i + 1]
                l1, l2 = np.hypot(*s1), np.hypot(*s2)
                if l1 < 1e-9 or l2 < 1e-9:
                    continue
                ang = abs(math.atan2(s2[1], s2[0]) - math.atan2(s1[1], s1[0]))
                if ang > math.pi:
                    ang = 2 * math.pi - ang
                vals.append(ang / (l1 + l2))
            assert normalized_angle(traj) == pytest.approx(float(np.mean(vals)), rel=1e-9)


class TestVariance:
    def test_constant_series(self):
        assert variance(MetricSeries("m", [2, 2, 2])) == 0.0

    def test_two_values(self):
        assert variance(MetricSeries("m", [1, 3])) == 1.0

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            vals = rng.normal(size=int(rng.integers(1, 60))).tolist()
            mean = sum(vals) / len(vals)
            expected = math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
            assert variance(MetricSeries("m", vals)) == pytest.approx(expected, rel=1e-12)


class TestSuccessRate:
    def test_collision_boundaries(self):
        records = [record(collisions=c) for c in (0, 1, 2)]
        assert success_rate(records) == pytest.approx(2 / 3)

    def test_all_timeout(self):
        records = [record(reached=False, timeout=True) for _ in range(4)]
        assert success_rate(records) == 0.0

    def test_matches_predicate_counting(self):
        rng = np.random.default_rng(5)
        records = [
            record(
                reached=bool(rng.integers(0, 2)),
                timeout=bool(rng.integers(0, 2)),
                collisions=int(rng.integers(0, 4)),
            )
            for _ in range(200)
        ]
        for r in records:  # reached and timeout are mutually exclusive in real runs
            if r.reached_goal:
                r.timeout = False
        expected = sum(
            1 for r in records if r.reached_goal and not r.timeout and r.collisions < 2
        ) / len(records)
        assert success_rate(records) == expected


class TestClearingDistance:
    def test_constant(self):
        traj = traj_from_positions([(0, 0), (1, 0)], clearances=[0.5, 0.5])
        assert clearing_distance(traj) == (0.5, 0.5)

    def test_contact_step_zero_min(self):
        traj = traj_from_positions([(0, 0), (1, 0), (2, 0)], clearances=[0.4, 0.0, 0.8])
        lo, mean = clearing_distance(traj)
        assert lo == 0.0
        assert mean == pytest.approx(0.4)

    def test_matches_scan(self):
        rng = np.random.default_rng(6)
        traj = random_trajectory(rng, 50)
        c = traj.clearances()
        assert clearing_distance(traj) == (min(c), pytest.approx(sum(c) / len(c)))


class TestInvariances:
    def rigid_transform(self, traj, angle, dx, dy):
        c, s = math.cos(angle), math.sin(angle)
        samples = []
        for p in traj.samples:
            x = c * p.pose.x - s * p.pose.y + dx
            y = s * p.pose.x + c * p.pose.y + dy
            samples.append(
                TrajectoryPoint(p.t, Pose(x, y, p.pose.theta + angle), p.v_lin, p.v_ang,
                                p.min_clearance, p.collision_contact)
            )
        return Trajectory(samples)

    def test_rigid_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            traj = random_trajectory(rng, 40)
            moved = self.rigid_transform(traj, rng.uniform(-3, 3), *rng.uniform(-5, 5, 2))
            assert path_length(moved) == pytest.approx(path_length(traj), rel=1e-9)
            assert roughness(moved) == pytest.approx(roughness(traj), rel=1e-6)
            assert normalized_angle(moved) == pytest.approx(normalized_angle(traj), rel=1e-6)
            assert movement_jerk(moved) == pytest.approx(movement_jerk(traj), rel=1e-12)

    def test_scale_covariance(self):
        rng = np.random.default_rng(8)
        traj = random_trajectory(rng, 40)
        k = 3.7
        scaled = Trajectory(
            [
                TrajectoryPoint(p.t, Pose(k * p.pose.x, k * p.pose.y, p.pose.theta),
                                p.v_lin, p.v_ang, p.min_clearance)
                for p in traj.samples
            ]
        )
        assert roughness(scaled) == pytest.approx(roughness(traj), rel=1e-9)
        assert normalized_angle(scaled) == pytest.approx(normalized_angle(traj) / k, rel=1e-9)


class TestResultsFiles:
    def test_single_episode_two_lines(self, tmp_path):
        episodes_path, _ = write_results([record()], tmp_path)
        lines = episodes_path.read_text().strip().split("\n")
        assert len(lines) == 2
        assert lines[0] == ",".join(EPISODE_COLUMNS)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        records = [
            record(index=i, collisions=int(rng.integers(0, 3)), traj=random_trajectory(rng, 30))
            for i in range(5)
        ]
        episodes_path, trajectory_path = write_results(records, tmp_path)
        rows = read_episodes_csv(episodes_path)
        for rec, row in zip(records, rows):
            m = compute_report([rec]).episodes[0]
            assert row["episode"] == rec.episode_index
            assert row["collisions"] == rec.collisions
            assert row["path_length"] == pytest.approx(m.path_length, rel=1e-8)
            assert row["mean_jerk"] == pytest.approx(m.mean_jerk, rel=1e-8)
        traj_rows = read_trajectory_csv(trajectory_path)
        assert len(traj_rows) == sum(len(r.trajectory) for r in records)
        assert traj_rows[0]["x"] == pytest.approx(records[0].trajectory.samples[0].pose.x, rel=1e-8)

    def test_selection_blanks_but_keeps_columns(self, tmp_path):
        episodes_path, _ = write_results(
            [record()], tmp_path, selected_metrics=["success", "collisions", "path_length"]
        )
        rows = list(read_episodes_csv(episodes_path))
        assert rows[0]["mean_jerk"] is None
        assert rows[0]["mean_roughness"] is None
        assert rows[0]["path_length"] is not None
        header = episodes_path.read_text().split("\n")[0]
        assert header == ",".join(EPISODE_COLUMNS)

    def test_success_rate_from_csv_matches_memory(self, tmp_path):
        rng = np.random.default_rng(10)
        records = [
            record(index=i, reached=bool(rng.integers(0, 2)), collisions=int(rng.integers(0, 3)))
            for i in range(20)
        ]
        episodes_path, _ = write_results(records, tmp_path)
        rows = read_episodes_csv(episodes_path)
        csv_rate = sum(r["success"] for r in rows) / len(rows)
        assert csv_rate == success_rate(records)

    def test_unknown_metric_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unknown metrics"):
            write_results([record()], tmp_path, selected_metrics=["speediness"])


class TestPlotData:
    def test_single_planner_echo(self):
        report = compute_report([record()])
        doc = plot_data([report])
        entry = doc["planners"]["p"]
        assert entry["aggregates"] == report.aggregates
        assert entry["per_episode"]["path_length"] == [report.episodes[0].path_length]
        assert "warning" not in doc

    def test_two_planners_same_schema(self):
        a = compute_report([record()])
        b = compute_report([record()])
        b.planner_id = "q"
        doc = plot_data([a, b])
        assert set(doc["planners"]) == {"p", "q"}
        assert doc["planners"]["p"].keys() == doc["planners"]["q"].keys()
        json.dumps(doc)  # must be JSON-serializable

    def test_scenario_mismatch_warning(self):
        a = compute_report([record()])
        b = compute_report([record()])
        b.planner_id = "q"
        b.scenario_id = "other"
        assert "warning" in plot_data([a, b])

    def test_aggregates_equal_recomputation(self):
        rng = np.random.default_rng(11)
        records = [
            record(index=i, collisions=int(rng.integers(0, 3)), traj=random_trajectory(rng, 25))
            for i in range(8)
        ]
        doc = plot_data([compute_report(records)])
        entry = doc["planners"]["p"]
        for name, stats in entry["aggregates"]["metrics"].items():
            present = [v for v in entry["per_episode"][name] if v is not None]
            if not present:
                assert stats["mean"] is None
                continue
            assert stats["mean"] == pytest.approx(float(np.mean(present)), rel=1e-12)
            assert stats["variance"] == pytest.approx(
                float(np.sqrt(np.mean((np.array(present) - np.mean(present)) ** 2))), rel=1e-12
            )
