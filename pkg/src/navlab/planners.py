"""Planner interface, the dynamic-window baseline, and the learned-policy runner.

A planner maps (observation, robot, pose, goal, current_vel) to a velocity
command. Planners own private state only; the simulator updates
`dynamic_obstacles` (a list of ((x, y), radius) circles) before each step so
rollout collision checks see the current obstacle positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    OccupancyGrid,
    Pose,
    distance_field,
    footprint_clearance,
    footprint_collides,
    wrap_angle,
)
from .network import ModelArtifact, forward
from .robots import DIFFERENTIAL, RobotModel, integrate

PlannerAction = tuple[float, ...]


@dataclass
class DwaParams:
    samples_v: int = 11
    samples_w: int = 21
    horizon: float = 1.5
    weight_heading: float = 0.8
    weight_clearance: float = 0.2
    weight_velocity: float = 0.2
    dt: float = 0.1  # control period: dynamic-window extent and rollout step

    def __post_init__(self):
        if self.samples_v < 3 or self.samples_w < 3:
            raise ValueError("need at least 3 samples per axis")
        if self.horizon <= self.dt:
            raise ValueError("horizon must exceed dt")


def _check_observation(observation, robot: RobotModel):
    if len(observation) != robot.obs_dim:
        raise ValueError(
            f"dimension mismatch: observation has {len(observation)}, robot needs {robot.obs_dim}"
        )


class DwaPlanner:
    """Classic dynamic-window search over (v, omega) samples.

    Candidates are rolled out at constant velocity over the horizon; any
    candidate whose rollout touches an obstacle is discarded. Score:
    w_h*(1 - |bearing error|/pi) + w_c*min(clearance, 1 m) + w_v*v/v_max,
    ties broken by smaller |omega| then smaller sample index.
    """

    planner_id = "dwa"

    def __init__(self, grid: OccupancyGrid, params: DwaParams | None = None):
        self.grid = grid
        self.params = params or DwaParams()
        self._df = distance_field(grid)
        self.dynamic_obstacles: list = []

    def reset(self):
        self.dynamic_obstacles = []

    def _rollout(self, robot, pose, v, w):
        """(collided, clearance, end_pose) for one constant-velocity candidate."""
        p = self.params
        steps = max(1, int(round(p.horizon / p.dt)))
        cur = pose
        vel = (v, w) if robot.kinematics == DIFFERENTIAL else (v, 0.0, w)
        action = vel
        clearance = math.inf
        for _ in range(steps):
            cur, vel = integrate(robot, cur, action, vel, p.dt)
            if footprint_collides(
                self.grid, cur, robot.radius, self.dynamic_obstacles, dist_field=self._df
            ):
                return True, 0.0, cur
            c = footprint_clearance(
                self.grid, cur, robot.radius, self.dynamic_obstacles, dist_field=self._df
            )
            clearance = min(clearance, c)
        return False, clearance, cur

    def score(self, v: float, clearance: float, end_pose: Pose, goal, robot) -> float:
        p = self.params
        bearing = wrap_angle(
            math.atan2(goal[1] - end_pose.y, goal[0] - end_pose.x) - end_pose.theta
        )
        return (
            p.weight_heading * (1.0 - abs(bearing) / math.pi)
            + p.weight_clearance * min(clearance, 1.0)
            + p.weight_velocity * v / robot.v_max
        )

    def plan(self, observation, robot: RobotModel, pose: Pose, goal, current_vel) -> PlannerAction:
        _check_observation(observation, robot)
        p = self.params
        v_cur = current_vel[0]
        w_cur = current_vel[-1]
        v_lo = max(robot.v_min, v_cur - robot.accel_lin * p.dt)
        v_hi = min(robot.v_max, v_cur + robot.accel_lin * p.dt)
        w_lo = max(-robot.omega_max, w_cur - robot.accel_ang * p.dt)
        w_hi = min(robot.omega_max, w_cur + robot.accel_ang * p.dt)
        vs = np.linspace(v_lo, v_hi, p.samples_v)
        ws = np.linspace(w_lo, w_hi, p.samples_w)

        best = None  # (score, -|w|) tuple; replaced only on strict improvement
        best_action = None
        for v in vs:
            for w in ws:
                collided, clearance, end = self._rollout(robot, pose, float(v), float(w))
                if collided:
                    continue
                key = (self.score(float(v), clearance, end, goal, robot), -abs(float(w)))
                if best is None or key > best:
                    best = key
                    best_action = (float(v), float(w))
        if best_action is None:
            # everything collides: rotate in place toward the goal
            bearing = wrap_angle(math.atan2(goal[1] - pose.y, goal[0] - pose.x) - pose.theta)
            best_action = (0.0, robot.omega_max if bearing >= 0 else -robot.omega_max)
        if robot.kinematics == DIFFERENTIAL:
            return best_action
        return (best_action[0], 0.0, best_action[1])


class PolicyPlanner:
    """Runs a trained network deterministically (mean action, no sampling)."""

    def __init__(self, artifact: ModelArtifact, robot: RobotModel, planner_id: str | None = None):
        artifact_robot = artifact.metadata.get("robot_id")
        if artifact_robot != robot.id:
            raise ValueError(
                f"model trained for different robot: {artifact_robot!r} != {robot.id!r}"
            )
        self.net = artifact.instantiate()
        self.robot = robot
        self.planner_id = planner_id or f"policy:{artifact.metadata.get('training_id', 'model')}"

    def reset(self):
        pass

    def plan(self, observation, robot: RobotModel, pose: Pose, goal, current_vel) -> PlannerAction:
        _check_observation(observation, robot)
        action = forward(self.net, np.asarray(observation, dtype=np.float64))
        if robot.kinematics == DIFFERENTIAL:
            v = min(max(float(action[0]), robot.v_min), robot.v_max)
            w = min(max(float(action[1]), -robot.omega_max), robot.omega_max)
            return (v, w)
        vx, vy = float(action[0]), float(action[1])
        speed = math.hypot(vx, vy)
        if speed > robot.v_max:
            vx *= robot.v_max / speed
            vy *= robot.v_max / speed
        w = min(max(float(action[2]), -robot.omega_max), robot.omega_max)
        return (vx, vy, w)


def policy_runner(artifact: ModelArtifact, robot: RobotModel) -> PolicyPlanner:
    """Wrap a trained model artifact as a planner; rejects robot mismatches."""
    return PolicyPlanner(artifact, robot)
