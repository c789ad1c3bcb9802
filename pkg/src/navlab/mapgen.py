"""Procedural occupancy-grid map generation and PGM/YAML bundle IO.

Indoor maps are built by binary-space-partition rooms connected with carved
corridors; outdoor maps scatter rectangles and discs over free ground. Both
kinds guarantee an occupied border ring and a single connected free component
(generation retries until connectivity holds).
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml
from scipy.ndimage import label

from .geometry import FREE_MIN, FREE_VALUE, OCCUPIED_MAX, OCCUPIED_VALUE, OccupancyGrid
from .validation import Violation, require

MAX_GENERATION_RETRIES = 50
_CONNECTIVITY_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass
class MapGenParams:
    kind: str = "outdoor"  # "indoor" | "outdoor"
    width: float = 10.0  # meters
    height: float = 10.0
    resolution: float = 0.05
    obstacle_count: int = 0
    obstacle_size: float = 0.8
    corridor_width: float = 1.5  # indoor only
    room_count: int = 4  # indoor only
    room_size: float = 3.0  # indoor only
    seed: int = 0

    def validate(self) -> list[Violation]:
        v: list[Violation] = []
        require(self.kind in ("indoor", "outdoor"), "kind", "must be 'indoor' or 'outdoor'", v)
        require(self.width >= 4.0, "width", "must be >= 4 m", v)
        require(self.height >= 4.0, "height", "must be >= 4 m", v)
        require(self.resolution > 0, "resolution", "must be > 0", v)
        require(self.obstacle_count >= 0, "obstacle_count", "must be >= 0", v)
        require(self.obstacle_size > 0, "obstacle_size", "must be > 0", v)
        if self.kind == "indoor":
            require(self.corridor_width >= 0.6, "corridor_width", "must be >= 0.6 m", v)
            require(
                self.corridor_width <= min(self.width, self.height) / 2,
                "corridor_width",
                "must be at most half the smaller map dimension",
                v,
            )
            require(self.room_count >= 1, "room_count", "must be >= 1", v)
            require(self.room_size > 0, "room_size", "must be > 0", v)
        require(0 <= int(self.seed) < 2**64, "seed", "must fit in 64 bits", v)
        return v


@dataclass
class IndoorLayout:
    """Cell rectangles carved by the indoor generator (r0, c0, r1, c1 exclusive)."""

    rooms: list[tuple[int, int, int, int]] = field(default_factory=list)
    corridors: list[tuple[int, int, int, int]] = field(default_factory=list)


def _free_components(cells: np.ndarray) -> int:
    free = cells >= FREE_MIN
    if not free.any():
        return 0
    _, n = label(free, structure=_CONNECTIVITY_4)
    return int(n)


def _scatter_outdoor(params: MapGenParams, rng: np.random.Generator) -> np.ndarray:
    h = int(round(params.height / params.resolution))
    w = int(round(params.width / params.resolution))
    cells = np.full((h, w), FREE_VALUE, dtype=np.uint8)
    res = params.resolution
    for _ in range(params.obstacle_count):
        shape = rng.integers(0, 2)  # 0 rect, 1 disc
        cx = rng.uniform(1.0, params.width - 1.0)
        cy = rng.uniform(1.0, params.height - 1.0)
        if shape == 0:
            half_w = 0.5 * params.obstacle_size * rng.uniform(0.6, 1.4)
            half_h = 0.5 * params.obstacle_size * rng.uniform(0.6, 1.4)
            c0 = max(1, int((cx - half_w) / res))
            c1 = min(w - 1, int(math.ceil((cx + half_w) / res)))
            r0 = max(1, int((cy - half_h) / res))
            r1 = min(h - 1, int(math.ceil((cy + half_h) / res)))
            cells[r0:r1, c0:c1] = OCCUPIED_VALUE
        else:
            radius = 0.5 * params.obstacle_size * rng.uniform(0.6, 1.4)
            r0 = max(1, int((cy - radius) / res))
            r1 = min(h - 1, int(math.ceil((cy + radius) / res)))
            c0 = max(1, int((cx - radius) / res))
            c1 = min(w - 1, int(math.ceil((cx + radius) / res)))
            rr, cc = np.mgrid[r0:r1, c0:c1]
            inside = ((cc + 0.5) * res - cx) ** 2 + ((rr + 0.5) * res - cy) ** 2 <= radius**2
            cells[r0:r1, c0:c1][inside] = OCCUPIED_VALUE
    cells[0, :] = OCCUPIED_VALUE
    cells[-1, :] = OCCUPIED_VALUE
    cells[:, 0] = OCCUPIED_VALUE
    cells[:, -1] = OCCUPIED_VALUE
    return cells


def _split_regions(h: int, w: int, count: int, min_extent: int, rng: np.random.Generator):
    # BSP: repeatedly split the largest region until `count` leaves (or stuck).
    regions = [(1, 1, h - 1, w - 1)]
    while len(regions) < count:
        regions.sort(key=lambda r: (r[2] - r[0]) * (r[3] - r[1]), reverse=True)
        r0, c0, r1, c1 = regions[0]
        rh, rw = r1 - r0, c1 - c0
        if max(rh, rw) < 2 * min_extent:
            break
        if rh >= rw:
            cut = r0 + int(rng.uniform(0.4, 0.6) * rh)
            cut = min(max(cut, r0 + min_extent), r1 - min_extent)
            regions[0:1] = [(r0, c0, cut, c1), (cut, c0, r1, c1)]
        else:
            cut = c0 + int(rng.uniform(0.4, 0.6) * rw)
            cut = min(max(cut, c0 + min_extent), c1 - min_extent)
            regions[0:1] = [(r0, c0, r1, cut), (r0, cut, r1, c1)]
    return regions


def _generate_indoor(params: MapGenParams, rng: np.random.Generator):
    res = params.resolution
    h = int(round(params.height / res))
    w = int(round(params.width / res))
    cells = np.full((h, w), OCCUPIED_VALUE, dtype=np.uint8)
    layout = IndoorLayout()

    corridor_cells = max(1, int(round(params.corridor_width / res)))
    room_target = max(3, int(round(params.room_size / res)))
    min_extent = min(max(4, room_target // 2 + 2), max(4, (min(h, w) - 2) // 2))
    regions = _split_regions(h, w, params.room_count, min_extent, rng)

    centers = []
    for r0, c0, r1, c1 in regions:
        rh, rw = r1 - r0, c1 - c0
        room_h = min(rh - 2, max(2, int(room_target * rng.uniform(0.7, 1.3))))
        room_w = min(rw - 2, max(2, int(room_target * rng.uniform(0.7, 1.3))))
        rr = r0 + 1 + int(rng.integers(0, max(1, rh - 2 - room_h + 1)))
        cc = c0 + 1 + int(rng.integers(0, max(1, rw - 2 - room_w + 1)))
        cells[rr : rr + room_h, cc : cc + room_w] = FREE_VALUE
        layout.rooms.append((rr, cc, rr + room_h, cc + room_w))
        centers.append((rr + room_h // 2, cc + room_w // 2))

    def carve_corridor(a, b):
        # L-shape: horizontal leg at row ra, then vertical leg at col cb.
        # Anchors are clamped so the full carve width always fits the interior.
        half = corridor_cells // 2
        (ra, ca), (rb, cb) = a, b
        rlo = min(max(1, ra - half), h - 1 - corridor_cells)
        clo = min(max(1, cb - half), w - 1 - corridor_cells)
        for r0, c0, r1, c1 in (
            (rlo, min(ca, cb), rlo + corridor_cells, max(ca, cb) + 1),
            (min(ra, rb), clo, max(ra, rb) + 1, clo + corridor_cells),
        ):
            cells[r0:r1, c0:c1] = FREE_VALUE
            layout.corridors.append((r0, c0, r1, c1))

    for i in range(1, len(centers)):
        carve_corridor(centers[rng.integers(0, i)], centers[i])

    cells[0, :] = OCCUPIED_VALUE
    cells[-1, :] = OCCUPIED_VALUE
    cells[:, 0] = OCCUPIED_VALUE
    cells[:, -1] = OCCUPIED_VALUE
    return cells, layout


def generate_map(params: MapGenParams) -> OccupancyGrid:
    """Generate a bordered occupancy grid deterministically from params.seed.

    Raises ValueError("infeasible parameters") when no connected free space
    can be produced within the retry budget.
    """
    violations = params.validate()
    if violations:
        raise ValueError("; ".join(map(str, violations)))
    rng = np.random.default_rng(int(params.seed))
    for _ in range(MAX_GENERATION_RETRIES):
        if params.kind == "outdoor":
            cells = _scatter_outdoor(params, rng)
        else:
            cells, _ = _generate_indoor(params, rng)
        if _free_components(cells) == 1:
            return OccupancyGrid(
                width=cells.shape[1],
                height=cells.shape[0],
                resolution=params.resolution,
                origin=(0.0, 0.0),
                cells=cells,
            )
    raise ValueError("infeasible parameters")


def export_map(grid: OccupancyGrid, name: str, out_dir) -> tuple[Path, Path]:
    """Write a binary PGM (P5, 0=occupied, 255=free) plus YAML metadata."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pgm_path = out_dir / f"{name}.pgm"
    yaml_path = out_dir / f"{name}.map.yaml"
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    pgm_path.write_bytes(header + grid.cells.tobytes())
    meta = {
        "image": f"{name}.pgm",
        "resolution": float(grid.resolution),
        "origin": [float(grid.origin[0]), float(grid.origin[1]), 0.0],
        "occupied_thresh": OCCUPIED_MAX,
        "free_thresh": FREE_MIN,
    }
    yaml_path.write_text(yaml.safe_dump(meta, sort_keys=False))
    return pgm_path, yaml_path


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # P5 header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed; a single whitespace byte precedes the payload.
    tokens = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise ValueError("truncated PGM header")
        ch = data[i : i + 1]
        if ch == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    i += 1  # single whitespace after maxval
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM (P5) file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError("PGM maxval must be 255")
    payload = data[i : i + width * height]
    if len(payload) != width * height:
        raise ValueError("truncated PGM payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)


def import_map(yaml_path) -> OccupancyGrid:
    """Load a map bundle written by export_map (or an equivalent upload)."""
    yaml_path = Path(yaml_path)
    meta = yaml.safe_load(yaml_path.read_text())
    for key in ("image", "resolution", "origin"):
        if key not in meta:
            raise ValueError(f"map metadata missing '{key}'")
    cells = _read_pgm(yaml_path.parent / meta["image"])
    origin = meta["origin"]
    return OccupancyGrid(
        width=cells.shape[1],
        height=cells.shape[0],
        resolution=float(meta["resolution"]),
        origin=(float(origin[0]), float(origin[1])),
        cells=cells.copy(),
    )


# --- document payload (JSON) form of a map ---------------------------------


def grid_to_payload(grid: OccupancyGrid) -> dict:
    return {
        "width": grid.width,
        "height": grid.height,
        "resolution": float(grid.resolution),
        "origin": [float(grid.origin[0]), float(grid.origin[1]), 0.0],
        "cells_b64": base64.b64encode(grid.cells.tobytes()).decode("ascii"),
    }


def payload_to_grid(payload: dict) -> OccupancyGrid:
    cells = np.frombuffer(
        base64.b64decode(payload["cells_b64"]), dtype=np.uint8
    ).reshape(payload["height"], payload["width"])
    origin = payload.get("origin", [0.0, 0.0, 0.0])
    return OccupancyGrid(
        width=int(payload["width"]),
        height=int(payload["height"]),
        resolution=float(payload["resolution"]),
        origin=(float(origin[0]), float(origin[1])),
        cells=cells.copy(),
    )


def validate_map_payload(payload: dict) -> list[Violation]:
    v: list[Violation] = []
    if not isinstance(payload, dict):
        return [Violation("payload", "must be an object")]
    for key in ("width", "height", "resolution", "cells_b64"):
        require(key in payload, key, "missing", v)
    if v:
        return v
    ok_w = require(
        isinstance(payload["width"], int) and payload["width"] > 0, "width", "must be a positive integer", v
    )
    ok_h = require(
        isinstance(payload["height"], int) and payload["height"] > 0, "height", "must be a positive integer", v
    )
    require(
        isinstance(payload["resolution"], (int, float)) and payload["resolution"] > 0,
        "resolution",
        "must be > 0",
        v,
    )
    if ok_w and ok_h:
        try:
            raw = base64.b64decode(payload["cells_b64"], validate=True)
        except Exception:
            v.append(Violation("cells_b64", "invalid base64"))
            return v
        require(
            len(raw) == payload["width"] * payload["height"],
            "cells_b64",
            "decoded size must equal width*height",
            v,
        )
    return v
