"""Evaluation scenarios: robot start/goal plus scripted dynamic obstacles.

Obstacles travel at constant speed along the closed polyline
start -> waypoints -> start, looping forever, and ignore the robot and each
other so that a scenario presents the identical environment on every run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import OccupancyGrid, Pose, distance_field
from .validation import Violation, require

DEFAULT_RADIUS = {"pedestrian": 0.3, "vehicle": 0.6, "generic": 0.3}
MAX_OBSTACLE_SPEED = 3.0
MIN_ENDPOINT_CLEARANCE = 0.3
# random task generation (see generate_random_task)
MIN_SEPARATION_FRACTION = 0.3
SPEED_RANGE = (0.3, 1.5)
MAX_PLACEMENT_REJECTIONS = 200


@dataclass
class DynamicObstacle:
    kind: str = "generic"  # pedestrian | vehicle | generic
    radius: float | None = None  # None: default for kind
    speed: float = 0.5
    start: tuple[float, float] = (0.0, 0.0)
    waypoints: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.radius is None:
            self.radius = DEFAULT_RADIUS.get(self.kind, DEFAULT_RADIUS["generic"])

    def loop(self) -> list[tuple[float, float]]:
        """Closed polyline the obstacle cycles along."""
        return [tuple(self.start)] + [tuple(p) for p in self.waypoints] + [tuple(self.start)]

    def perimeter(self) -> float:
        pts = self.loop()
        return sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))


@dataclass
class Scenario:
    id: str = ""
    name: str = ""
    map_id: str = ""
    robot_start: Pose = field(default_factory=lambda: Pose(0.0, 0.0, 0.0))
    robot_goal: tuple[float, float] = (0.0, 0.0)
    obstacles: list[DynamicObstacle] = field(default_factory=list)
    visibility: str = "private"
    owner: str = ""


def obstacle_pose_at(o: DynamicObstacle, t: float) -> tuple[float, float]:
    """Exact position on the closed loop at time t >= 0 (piecewise linear)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    perimeter = o.perimeter()
    if o.speed <= 0.0 or perimeter < 1e-12:
        return tuple(o.start)
    s = math.fmod(o.speed * t, perimeter)
    pts = o.loop()
    for a, b in zip(pts, pts[1:]):
        seg = math.dist(a, b)
        if s <= seg:
            if seg < 1e-12:
                continue
            f = s / seg
            return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
        s -= seg
    return tuple(o.start)  # numerical spill at the loop end


def obstacle_circles_at(obstacles, t: float) -> list[tuple[tuple[float, float], float]]:
    return [(obstacle_pose_at(o, t), o.radius) for o in obstacles]


def _point_clearance(grid: OccupancyGrid, x: float, y: float, df: np.ndarray) -> float:
    row, col = grid.world_to_cell(x, y)
    if not (0 <= row < grid.height and 0 <= col < grid.width):
        return -math.inf
    return float(df[row, col])


def validate_scenario(
    s: Scenario, grid: OccupancyGrid, df: np.ndarray | None = None
) -> list[Violation]:
    """Check every scenario invariant; empty list means valid."""
    if df is None:
        df = distance_field(grid)
    v: list[Violation] = []
    require(
        _point_clearance(grid, s.robot_start.x, s.robot_start.y, df) >= MIN_ENDPOINT_CLEARANCE,
        "robot_start",
        f"needs free space with clearance >= {MIN_ENDPOINT_CLEARANCE} m",
        v,
    )
    require(
        _point_clearance(grid, s.robot_goal[0], s.robot_goal[1], df) >= MIN_ENDPOINT_CLEARANCE,
        "robot_goal",
        f"needs free space with clearance >= {MIN_ENDPOINT_CLEARANCE} m",
        v,
    )
    require(
        (s.robot_start.x, s.robot_start.y) != tuple(s.robot_goal),
        "robot_goal",
        "start and goal must differ",
        v,
    )
    for i, o in enumerate(s.obstacles):
        prefix = f"obstacles[{i}]"
        require(o.kind in DEFAULT_RADIUS, f"{prefix}.kind", "unknown obstacle kind", v)
        require(o.radius > 0, f"{prefix}.radius", "must be > 0", v)
        require(
            0 <= o.speed <= MAX_OBSTACLE_SPEED,
            f"{prefix}.speed",
            f"must be within [0, {MAX_OBSTACLE_SPEED}] m/s",
            v,
        )
        require(len(o.waypoints) >= 1, f"{prefix}.waypoints", "needs at least one waypoint", v)
        for label, (x, y) in [(f"{prefix}.start", o.start)] + [
            (f"{prefix}.waypoints[{j}]", p) for j, p in enumerate(o.waypoints)
        ]:
            require(
                _point_clearance(grid, x, y, df) >= o.radius,
                label,
                "waypoint in occupied space or too close to walls",
                v,
            )
    return v


def _sample_free_point(
    grid: OccupancyGrid, df: np.ndarray, clearance: float, rng: np.random.Generator
) -> tuple[float, float] | None:
    ox, oy = grid.origin
    for _ in range(MAX_PLACEMENT_REJECTIONS):
        x = ox + rng.uniform(0, grid.width_m)
        y = oy + rng.uniform(0, grid.height_m)
        if _point_clearance(grid, x, y, df) >= clearance:
            return (x, y)
    return None


def generate_random_task(
    grid: OccupancyGrid,
    robot_radius: float,
    n_obstacles: int,
    seed: int,
    map_id: str = "",
) -> Scenario:
    """Seeded random scenario: far-apart start/goal plus waypointed obstacles."""
    rng = np.random.default_rng(int(seed))
    df = distance_field(grid)
    endpoint_clearance = max(MIN_ENDPOINT_CLEARANCE, robot_radius)
    min_separation = MIN_SEPARATION_FRACTION * math.hypot(grid.width_m, grid.height_m)

    start = _sample_free_point(grid, df, endpoint_clearance, rng)
    goal = None
    if start is not None:
        for _ in range(MAX_PLACEMENT_REJECTIONS):
            cand = _sample_free_point(grid, df, endpoint_clearance, rng)
            if cand is None:
                break
            if math.dist(start, cand) >= min_separation:
                goal = cand
                break
    if start is None or goal is None:
        raise ValueError("map too dense")

    obstacles = []
    for _ in range(n_obstacles):
        kind = ["pedestrian", "vehicle", "generic"][rng.integers(0, 3)]
        radius = DEFAULT_RADIUS[kind]
        pts = []
        for _ in range(1 + int(rng.integers(2, 5))):  # start + 2..4 waypoints
            p = _sample_free_point(grid, df, radius, rng)
            if p is None:
                raise ValueError("map too dense")
            pts.append(p)
        obstacles.append(
            DynamicObstacle(
                kind=kind,
                radius=radius,
                speed=float(rng.uniform(*SPEED_RANGE)),
                start=pts[0],
                waypoints=pts[1:],
            )
        )

    heading = float(rng.uniform(-math.pi, math.pi))
    return Scenario(
        id=f"random-{seed}",
        name=f"random task (seed {seed})",
        map_id=map_id,
        robot_start=Pose(start[0], start[1], heading),
        robot_goal=goal,
        obstacles=obstacles,
    )


# --- JSON document form -----------------------------------------------------


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "id": s.id,
        "name": s.name,
        "map_id": s.map_id,
        "robot_start": {"x": s.robot_start.x, "y": s.robot_start.y, "theta": s.robot_start.theta},
        "robot_goal": [s.robot_goal[0], s.robot_goal[1]],
        "obstacles": [
            {
                "kind": o.kind,
                "radius": o.radius,
                "speed": o.speed,
                "start": [o.start[0], o.start[1]],
                "waypoints": [[p[0], p[1]] for p in o.waypoints],
            }
            for o in s.obstacles
        ],
        "visibility": s.visibility,
        "owner": s.owner,
    }


def scenario_from_dict(d: dict) -> Scenario:
    rs = d.get("robot_start", {})
    return Scenario(
        id=d.get("id", ""),
        name=d.get("name", ""),
        map_id=d.get("map_id", ""),
        robot_start=Pose(float(rs.get("x", 0)), float(rs.get("y", 0)), float(rs.get("theta", 0))),
        robot_goal=tuple(d.get("robot_goal", (0.0, 0.0))),
        obstacles=[
            DynamicObstacle(
                kind=o.get("kind", "generic"),
                radius=o.get("radius"),
                speed=float(o.get("speed", 0.0)),
                start=tuple(o.get("start", (0.0, 0.0))),
                waypoints=[tuple(p) for p in o.get("waypoints", [])],
            )
            for o in d.get("obstacles", [])
        ],
        visibility=d.get("visibility", "private"),
        owner=d.get("owner", ""),
    )


def validate_scenario_payload(payload: dict) -> list[Violation]:
    """Schema-level checks of the JSON form (no map lookup)."""
    v: list[Violation] = []
    if not isinstance(payload, dict):
        return [Violation("payload", "must be an object")]
    require(isinstance(payload.get("map_id"), str) and payload.get("map_id"), "map_id", "missing", v)
    rs = payload.get("robot_start")
    if not isinstance(rs, dict) or not {"x", "y"} <= set(rs):
        v.append(Violation("robot_start", "must be an object with x and y"))
    goal = payload.get("robot_goal")
    if not isinstance(goal, (list, tuple)) or len(goal) != 2:
        v.append(Violation("robot_goal", "must be [x, y]"))
    obstacles = payload.get("obstacles", [])
    if not isinstance(obstacles, list):
        v.append(Violation("obstacles", "must be a list"))
        return v
    for i, o in enumerate(obstacles):
        if not isinstance(o, dict):
            v.append(Violation(f"obstacles[{i}]", "must be an object"))
            continue
        require(o.get("kind") in DEFAULT_RADIUS, f"obstacles[{i}].kind", "unknown obstacle kind", v)
        wps = o.get("waypoints", [])
        require(
            isinstance(wps, list) and len(wps) >= 1,
            f"obstacles[{i}].waypoints",
            "needs at least one waypoint",
            v,
        )
        speed = o.get("speed", 0.0)
        require(
            isinstance(speed, (int, float)) and 0 <= speed <= MAX_OBSTACLE_SPEED,
            f"obstacles[{i}].speed",
            f"must be within [0, {MAX_OBSTACLE_SPEED}] m/s",
            v,
        )
    return v
