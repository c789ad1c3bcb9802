"""Preset robot models, kinematic integration, and lidar-based observations.

The registry ships as a JSON data file so the numeric defaults stay auditable.
Observation layout: `beams` lidar ranges normalized by max_range, then goal
distance (m) and goal bearing relative to heading (rad) -- obs_dim = beams + 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .geometry import OccupancyGrid, Pose, sweep, wrap_angle

DIFFERENTIAL = "differential"
OMNIDIRECTIONAL = "omnidirectional"


@dataclass(frozen=True)
class Lidar:
    beams: int
    fov: float
    max_range: float


@dataclass(frozen=True)
class RobotModel:
    id: str
    name: str
    kinematics: str
    radius: float
    v_max: float
    v_min: float
    omega_max: float
    accel_lin: float
    accel_ang: float
    lidar: Lidar

    def __post_init__(self):
        if self.kinematics not in (DIFFERENTIAL, OMNIDIRECTIONAL):
            raise ValueError(f"unknown kinematics {self.kinematics!r}")
        if self.v_max <= 0:
            raise ValueError("v_max must be > 0")
        if self.v_min > self.v_max:
            raise ValueError("v_min must be <= v_max")
        if self.lidar.beams < 8:
            raise ValueError("lidar needs at least 8 beams")
        if self.radius <= 0 or self.omega_max <= 0:
            raise ValueError("radius and omega_max must be > 0")

    @property
    def action_dim(self) -> int:
        return 2 if self.kinematics == DIFFERENTIAL else 3

    @property
    def obs_dim(self) -> int:
        return self.lidar.beams + 2

    def zero_velocity(self) -> tuple[float, ...]:
        return (0.0, 0.0) if self.kinematics == DIFFERENTIAL else (0.0, 0.0, 0.0)


@lru_cache(maxsize=1)
def builtin_robots() -> tuple[RobotModel, ...]:
    """The ten bundled presets; immutable after first load."""
    raw = json.loads(resources.files("navlab.data").joinpath("robots.json").read_text())
    robots = []
    for r in raw["robots"]:
        robots.append(
            RobotModel(
                id=r["id"],
                name=r["name"],
                kinematics=r["kinematics"],
                radius=float(r["radius"]),
                v_max=float(r["v_max"]),
                v_min=float(r["v_min"]),
                omega_max=float(r["omega_max"]),
                accel_lin=float(r["accel_lin"]),
                accel_ang=float(r["accel_ang"]),
                lidar=Lidar(
                    beams=int(r["lidar"]["beams"]),
                    fov=float(r["lidar"]["fov"]),
                    max_range=float(r["lidar"]["max_range"]),
                ),
            )
        )
    return tuple(robots)


def get_robot(robot_id: str) -> RobotModel:
    for r in builtin_robots():
        if r.id == robot_id:
            return r
    raise KeyError(f"unknown robot {robot_id!r}")


def beam_angles(model: RobotModel) -> np.ndarray:
    """Heading-relative beam angles: -fov/2 + k*fov/(beams-1)."""
    lid = model.lidar
    return -lid.fov / 2 + np.arange(lid.beams) * (lid.fov / (lid.beams - 1))


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def _rate_limit(target: float, current: float, max_delta: float) -> float:
    return current + _clamp(target - current, -max_delta, max_delta)


def integrate(
    model: RobotModel,
    pose: Pose,
    action: tuple[float, ...],
    current_vel: tuple[float, ...],
    dt: float,
) -> tuple[Pose, tuple[float, ...]]:
    """Clamp + rate-limit the commanded velocities, then integrate exactly over dt.

    Differential: action (v, omega), exact unicycle arc. Omnidirectional:
    action (vx, vy, omega) in the body frame, exact planar rigid-body motion.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if model.kinematics == DIFFERENTIAL:
        v_cmd = _clamp(float(action[0]), model.v_min, model.v_max)
        w_cmd = _clamp(float(action[1]), -model.omega_max, model.omega_max)
        v = _rate_limit(v_cmd, current_vel[0], model.accel_lin * dt)
        w = _rate_limit(w_cmd, current_vel[1], model.accel_ang * dt)
        theta1 = pose.theta + w * dt
        if abs(w) < 1e-12:
            x1 = pose.x + v * math.cos(pose.theta) * dt
            y1 = pose.y + v * math.sin(pose.theta) * dt
        else:
            x1 = pose.x + v / w * (math.sin(theta1) - math.sin(pose.theta))
            y1 = pose.y - v / w * (math.cos(theta1) - math.cos(pose.theta))
        return Pose(x1, y1, theta1), (v, w)

    vx_cmd, vy_cmd, w_cmd = float(action[0]), float(action[1]), float(action[2])
    speed = math.hypot(vx_cmd, vy_cmd)
    if speed > model.v_max:
        scale = model.v_max / speed
        vx_cmd *= scale
        vy_cmd *= scale
    w_cmd = _clamp(w_cmd, -model.omega_max, model.omega_max)
    dvx = vx_cmd - current_vel[0]
    dvy = vy_cmd - current_vel[1]
    dmag = math.hypot(dvx, dvy)
    max_dv = model.accel_lin * dt
    if dmag > max_dv:
        scale = max_dv / dmag
        dvx *= scale
        dvy *= scale
    vx = current_vel[0] + dvx
    vy = current_vel[1] + dvy
    w = _rate_limit(w_cmd, current_vel[2], model.accel_ang * dt)
    theta1 = pose.theta + w * dt
    if abs(w) < 1e-12:
        s = dt * math.cos(pose.theta)
        c = dt * math.sin(pose.theta)
    else:
        s = (math.sin(theta1) - math.sin(pose.theta)) / w
        c = -(math.cos(theta1) - math.cos(pose.theta)) / w
    x1 = pose.x + vx * s - vy * c
    y1 = pose.y + vx * c + vy * s
    return Pose(x1, y1, theta1), (vx, vy, w)


def body_speed(model: RobotModel, vel: tuple[float, ...]) -> float:
    """Scalar linear speed recorded in trajectories."""
    if model.kinematics == DIFFERENTIAL:
        return float(vel[0])
    return float(math.hypot(vel[0], vel[1]))


def _circle_hits(
    origin: tuple[float, float], angles: np.ndarray, circles
) -> np.ndarray:
    """Per-beam distance to the nearest dynamic-obstacle circle (inf = miss)."""
    hits = np.full(angles.shape[0], np.inf)
    if not circles:
        return hits
    dx = np.cos(angles)
    dy = np.sin(angles)
    for (cx, cy), r in circles:
        ocx = cx - origin[0]
        ocy = cy - origin[1]
        oc2 = ocx * ocx + ocy * ocy
        if oc2 <= r * r:  # origin inside the circle
            hits[:] = 0.0
            continue
        proj = ocx * dx + ocy * dy
        closest2 = oc2 - proj * proj
        reach = r * r - closest2
        valid = (reach >= 0) & (proj > 0)
        t = np.where(valid, proj - np.sqrt(np.maximum(reach, 0.0)), np.inf)
        t = np.where(t >= 0, t, np.inf)
        hits = np.minimum(hits, t)
    return hits


def observe(
    model: RobotModel,
    grid: OccupancyGrid,
    pose: Pose,
    goal: tuple[float, float],
    dyn_obstacles=(),
) -> np.ndarray:
    """Observation vector: normalized lidar scan + goal distance and bearing."""
    angles = pose.theta + beam_angles(model)
    ranges = sweep(grid, pose, angles, model.lidar.max_range)
    dyn = _circle_hits((pose.x, pose.y), angles, list(dyn_obstacles))
    ranges = np.minimum(ranges, np.minimum(dyn, model.lidar.max_range))
    goal_dist = math.hypot(goal[0] - pose.x, goal[1] - pose.y)
    goal_bearing = wrap_angle(math.atan2(goal[1] - pose.y, goal[0] - pose.x) - pose.theta)
    return np.concatenate([ranges / model.lidar.max_range, [goal_dist, goal_bearing]])
