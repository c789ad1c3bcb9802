"""Grid, pose, and trajectory primitives: raycasting, distance fields, collision tests.

Everything here is a pure function over immutable inputs and safe for
concurrent use. World frame: x right, y up, angles counter-clockwise from +x.
Grid cells are row-major with row 0 at the minimum-y edge; cell (row, col)
covers the square [origin + col*res, origin + (col+1)*res) etc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.ndimage import distance_transform_edt

# Occupancy encoding (map-server convention): cell values in [0, 255],
# <= OCCUPIED_MAX means occupied, >= FREE_MIN means free. Values in between
# are unknown and treated as occupied for collision purposes.
OCCUPIED_MAX = 50
FREE_MIN = 250
OCCUPIED_VALUE = 0
FREE_VALUE = 255


def wrap_angle(a: float) -> float:
    """Normalize an angle into (-pi, pi]."""
    r = a - 2.0 * math.pi * math.floor((a + math.pi) / (2.0 * math.pi))
    if r <= -math.pi:  # guard against floating-point landing exactly on -pi
        r = math.pi
    return r


@dataclass(frozen=True)
class Pose:
    """2D pose; theta is normalized into (-pi, pi] on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class OccupancyGrid:
    """Binary/thresholded 2D world model.

    Parameters
    ----------
    width, height:
        Grid size in cells.
    resolution:
        Cell edge length in meters, > 0.
    origin:
        World coordinates of the corner of cell (0, 0).
    cells:
        Row-major uint8 occupancy values, shape (height, width).
    """

    width: int
    height: int
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)
    cells: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        if self.cells is None:
            self.cells = np.full((self.height, self.width), FREE_VALUE, dtype=np.uint8)
        self.cells = np.ascontiguousarray(self.cells, dtype=np.uint8).reshape(
            self.height, self.width
        )
        if self.cells.size != self.width * self.height:
            raise ValueError("cells size must equal width*height")

    @property
    def width_m(self) -> float:
        return self.width * self.resolution

    @property
    def height_m(self) -> float:
        return self.height * self.resolution

    def blocked_mask(self) -> np.ndarray:
        """Boolean mask of cells treated as occupied (occupied or unknown)."""
        return self.cells < FREE_MIN

    def free_mask(self) -> np.ndarray:
        return self.cells >= FREE_MIN

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        ox, oy = self.origin
        return (
            int(math.floor((y - oy) / self.resolution)),
            int(math.floor((x - ox) / self.resolution)),
        )

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        ox, oy = self.origin
        return (ox + (col + 0.5) * self.resolution, oy + (row + 0.5) * self.resolution)

    def in_bounds(self, x: float, y: float) -> bool:
        row, col = self.world_to_cell(x, y)
        return 0 <= row < self.height and 0 <= col < self.width


@dataclass(frozen=True)
class TrajectoryPoint:
    """One recorded simulation step.

    v_lin is the signed linear speed for differential robots and the speed
    magnitude |(vx, vy)| for omnidirectional ones.
    """

    t: float
    pose: Pose
    v_lin: float
    v_ang: float
    min_clearance: float
    collision_contact: bool = False


@dataclass
class Trajectory:
    samples: list[TrajectoryPoint]

    def __post_init__(self):
        if len(self.samples) < 1:
            raise ValueError("trajectory needs at least one sample")
        ts = [p.t for p in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.samples)

    def positions(self) -> np.ndarray:
        return np.array([[p.pose.x, p.pose.y] for p in self.samples], dtype=float)

    def times(self) -> np.ndarray:
        return np.array([p.t for p in self.samples], dtype=float)

    def speeds(self) -> np.ndarray:
        return np.array([p.v_lin for p in self.samples], dtype=float)

    def clearances(self) -> np.ndarray:
        return np.array([p.min_clearance for p in self.samples], dtype=float)


@njit(cache=True)
def _raycast_kernel(blocked, res, ox, oy, x0, y0, angle, max_range):
    # Amanatides-Woo exact grid traversal. Caller guarantees the origin cell
    # is inside the grid.
    h, w = blocked.shape
    col = int(math.floor((x0 - ox) / res))
    row = int(math.floor((y0 - oy) / res))
    if blocked[row, col]:
        return 0.0
    dx = math.cos(angle)
    dy = math.sin(angle)
    big = 1e30
    if dx > 0.0:
        step_c = 1
        tmax_x = ((col + 1) * res + ox - x0) / dx
        tdelta_x = res / dx
    elif dx < 0.0:
        step_c = -1
        tmax_x = (col * res + ox - x0) / dx
        tdelta_x = -res / dx
    else:
        step_c = 0
        tmax_x = big
        tdelta_x = big
    if dy > 0.0:
        step_r = 1
        tmax_y = ((row + 1) * res + oy - y0) / dy
        tdelta_y = res / dy
    elif dy < 0.0:
        step_r = -1
        tmax_y = (row * res + oy - y0) / dy
        tdelta_y = -res / dy
    else:
        step_r = 0
        tmax_y = big
        tdelta_y = big
    while True:
        if tmax_x < tmax_y:
            t = tmax_x
            col += step_c
            tmax_x += tdelta_x
        else:
            t = tmax_y
            row += step_r
            tmax_y += tdelta_y
        if t > max_range:
            return max_range
        if row < 0 or row >= h or col < 0 or col >= w:
            return max_range
        if blocked[row, col]:
            return t


@njit(cache=True)
def _sweep_kernel(blocked, res, ox, oy, x0, y0, angles, max_range, out):
    for i in range(angles.shape[0]):
        out[i] = _raycast_kernel(blocked, res, ox, oy, x0, y0, angles[i], max_range)


def raycast(grid: OccupancyGrid, origin: Pose, angle: float, max_range: float) -> float:
    """Distance to the first occupied cell along a ray, capped at max_range."""
    if not grid.in_bounds(origin.x, origin.y):
        raise ValueError("out of bounds")
    ox, oy = grid.origin
    return float(
        _raycast_kernel(
            grid.blocked_mask(), grid.resolution, ox, oy, origin.x, origin.y,
            float(angle), float(max_range),
        )
    )


def sweep(grid: OccupancyGrid, origin: Pose, angles: np.ndarray, max_range: float) -> np.ndarray:
    """Raycast a batch of world-frame angles from one origin."""
    if not grid.in_bounds(origin.x, origin.y):
        raise ValueError("out of bounds")
    ox, oy = grid.origin
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    out = np.empty(angles.shape[0], dtype=np.float64)
    _sweep_kernel(
        grid.blocked_mask(), grid.resolution, ox, oy, origin.x, origin.y,
        angles, float(max_range), out,
    )
    return out


def distance_field(grid: OccupancyGrid) -> np.ndarray:
    """Per-cell exact Euclidean distance (meters) to the nearest occupied cell.

    Distances are measured between cell centers; occupied cells map to 0.
    """
    free = grid.free_mask()
    if not free.any():
        return np.zeros((grid.height, grid.width), dtype=float)
    if free.all():
        # no occupied cell anywhere: define distance as +inf
        return np.full((grid.height, grid.width), np.inf)
    return distance_transform_edt(free) * grid.resolution


def _static_distance(
    grid: OccupancyGrid, x: float, y: float, dist_field: np.ndarray | None
) -> float:
    row, col = grid.world_to_cell(x, y)
    if not (0 <= row < grid.height and 0 <= col < grid.width):
        return -math.inf  # outside the grid counts as in contact
    if dist_field is None:
        dist_field = distance_field(grid)
    return float(dist_field[row, col])


def obstacle_distance(x: float, y: float, dyn_obstacles) -> float:
    """Distance from a point to the nearest dynamic obstacle surface."""
    best = math.inf
    for (cx, cy), r in dyn_obstacles:
        d = math.hypot(x - cx, y - cy) - r
        if d < best:
            best = d
    return best


def footprint_collides(
    grid: OccupancyGrid,
    pose: Pose,
    radius: float,
    dyn_obstacles=(),
    dist_field: np.ndarray | None = None,
) -> bool:
    """True iff a circular footprint at `pose` touches the map or an obstacle circle.

    dyn_obstacles is an iterable of ((x, y), radius) circles. A pose outside
    the grid is treated as a collision. Pass a precomputed `dist_field` when
    calling in a loop.
    """
    if radius <= 0:
        raise ValueError("radius must be > 0")
    if _static_distance(grid, pose.x, pose.y, dist_field) < radius:
        return True
    for (cx, cy), r in dyn_obstacles:
        if math.hypot(pose.x - cx, pose.y - cy) < radius + r:
            return True
    return False


def footprint_clearance(
    grid: OccupancyGrid,
    pose: Pose,
    radius: float,
    dyn_obstacles=(),
    dist_field: np.ndarray | None = None,
) -> float:
    """Distance from the footprint circle to the nearest obstacle, clamped at 0."""
    d = _static_distance(grid, pose.x, pose.y, dist_field)
    d = min(d, obstacle_distance(pose.x, pose.y, dyn_obstacles))
    return max(0.0, d - radius)
