"""Per-episode navigation metrics, CSV result files, and plot-ready summaries.

Smoothness metrics operate on consecutive position triples; windows with a
degenerate span are skipped rather than scored as zero so stationary robots do
not read as maximally smooth. A metric that has no admissible window is absent
(None in memory, empty CSV field). The per-metric "variance" aggregate is the
population standard deviation sqrt(sum((s - mean)^2)/N).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Trajectory
from .simulation import EpisodeRecord

EPISODE_COLUMNS = [
    "episode",
    "success",
    "collisions",
    "path_length",
    "time_to_goal",
    "min_clearance",
    "mean_clearance",
    "mean_jerk",
    "mean_roughness",
    "mean_norm_angle",
]
SELECTABLE_METRICS = EPISODE_COLUMNS[1:]
TRAJECTORY_COLUMNS = ["episode", "t", "x", "y", "theta", "v_lin", "v_ang", "min_clearance", "collision"]

_DEGENERATE_SPAN = 1e-9
MAX_SUCCESS_COLLISIONS = 1  # success requires fewer than 2 collision events


@dataclass
class MetricSeries:
    name: str
    values: list[float]

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("series needs at least one value")


def path_length(traj: Trajectory) -> float:
    pos = traj.positions()
    return float(np.sum(np.hypot(np.diff(pos[:, 0]), np.diff(pos[:, 1]))))


def roughness(traj: Trajectory) -> float | None:
    """Mean of triangle_area(x_i, x_i+1, x_i+2) / |x_i+2 - x_i|^2 over windows."""
    pos = traj.positions()
    if len(pos) < 3:
        return None
    values = []
    for i in range(len(pos) - 2):
        span = pos[i + 2] - pos[i]
        span2 = float(span @ span)
        if math.sqrt(span2) < _DEGENERATE_SPAN:
            continue
        a = pos[i + 1] - pos[i]
        area = 0.5 * abs(a[0] * span[1] - a[1] * span[0])
        values.append(area / span2)
    return float(np.mean(values)) if values else None


def movement_jerk(traj: Trajectory) -> float | None:
    """Mean |(a_i+1 - a_i)/(t_i+1 - t_i)| with a_i = (v_i+1 - v_i)/(t_i+1 - t_i)."""
    v = traj.speeds()
    t = traj.times()
    if len(v) < 3:
        return None
    dt = np.diff(t)
    a = np.diff(v) / dt
    jerk = np.abs(np.diff(a) / dt[:-1])
    return float(np.mean(jerk))


def normalized_angle(traj: Trajectory) -> float | None:
    """Mean turning angle divided by the two adjoining segment lengths (rad/m)."""
    pos = traj.positions()
    if len(pos) < 3:
        return None
    values = []
    for i in range(len(pos) - 2):
        s1 = pos[i + 1] - pos[i]
        s2 = pos[i + 2] - pos[i + 1]
        l1 = float(np.hypot(*s1))
        l2 = float(np.hypot(*s2))
        if l1 < _DEGENERATE_SPAN or l2 < _DEGENERATE_SPAN:
            continue
        ang = abs(
            math.atan2(
                s1[0] * s2[1] - s1[1] * s2[0],  # cross
                s1[0] * s2[0] + s1[1] * s2[1],  # dot
            )
        )
        values.append(ang / (l1 + l2))
    return float(np.mean(values)) if values else None


def variance(series: MetricSeries) -> float:
    """Population standard deviation of the series."""
    vals = np.asarray(series.values, dtype=float)
    return float(np.sqrt(np.mean((vals - vals.mean()) ** 2)))


def episode_success(rec: EpisodeRecord) -> bool:
    """Success rule: reached the goal, no timeout, fewer than 2 collisions."""
    return rec.reached_goal and not rec.timeout and rec.collisions <= MAX_SUCCESS_COLLISIONS


def success_rate(records: list[EpisodeRecord]) -> float:
    if not records:
        raise ValueError("needs at least one record")
    return sum(1 for r in records if episode_success(r)) / len(records)


def clearing_distance(traj: Trajectory) -> tuple[float, float]:
    c = traj.clearances()
    return float(c.min()), float(c.mean())


@dataclass
class EpisodeMetrics:
    episode: int
    success: bool
    collisions: int
    path_length: float
    time_to_goal: float | None
    min_clearance: float
    mean_clearance: float
    mean_jerk: float | None
    mean_roughness: float | None
    mean_norm_angle: float | None

    def as_row(self) -> dict:
        return {
            "episode": self.episode,
            "success": int(self.success),
            "collisions": self.collisions,
            "path_length": self.path_length,
            "time_to_goal": self.time_to_goal,
            "min_clearance": self.min_clearance,
            "mean_clearance": self.mean_clearance,
            "mean_jerk": self.mean_jerk,
            "mean_roughness": self.mean_roughness,
            "mean_norm_angle": self.mean_norm_angle,
        }


def episode_metrics(rec: EpisodeRecord) -> EpisodeMetrics:
    lo, mean = clearing_distance(rec.trajectory)
    return EpisodeMetrics(
        episode=rec.episode_index,
        success=episode_success(rec),
        collisions=rec.collisions,
        path_length=path_length(rec.trajectory),
        time_to_goal=rec.time_to_goal,
        min_clearance=lo,
        mean_clearance=mean,
        mean_jerk=movement_jerk(rec.trajectory),
        mean_roughness=roughness(rec.trajectory),
        mean_norm_angle=normalized_angle(rec.trajectory),
    )


@dataclass
class MetricsReport:
    planner_id: str
    scenario_id: str
    episodes: list[EpisodeMetrics]
    aggregates: dict
    trajectories: list[list[tuple[float, float]]] = field(default_factory=list)


def _aggregate(rows: list[EpisodeMetrics]) -> dict:
    agg: dict = {"success_rate": sum(1 for r in rows if r.success) / len(rows), "metrics": {}}
    for name in SELECTABLE_METRICS:
        values = [getattr(r, name) for r in rows]
        if name == "success":
            values = [int(v) for v in values]
        present = [float(v) for v in values if v is not None]
        if not present:
            agg["metrics"][name] = {"mean": None, "variance": None}
            continue
        series = MetricSeries(name, present)
        agg["metrics"][name] = {
            "mean": float(np.mean(present)),
            "variance": variance(series),
        }
    return agg


def compute_report(records: list[EpisodeRecord]) -> MetricsReport:
    if not records:
        raise ValueError("needs at least one record")
    rows = [episode_metrics(r) for r in records]
    return MetricsReport(
        planner_id=records[0].planner_id,
        scenario_id=records[0].scenario_id,
        episodes=rows,
        aggregates=_aggregate(rows),
        trajectories=[[(p.pose.x, p.pose.y) for p in r.trajectory.samples] for r in records],
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def write_results(
    records: list[EpisodeRecord],
    out_dir,
    selected_metrics: list[str] | None = None,
) -> tuple[Path, Path]:
    """Write episodes.csv and trajectory.csv; schema is fixed, selection only
    blanks out unselected metric columns."""
    if not records:
        raise ValueError("needs at least one record")
    selected = set(SELECTABLE_METRICS if selected_metrics is None else selected_metrics)
    unknown = selected - set(SELECTABLE_METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    episodes_path = out_dir / "episodes.csv"
    trajectory_path = out_dir / "trajectory.csv"

    with open(episodes_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(EPISODE_COLUMNS)
        for rec in records:
            row = episode_metrics(rec).as_row()
            w.writerow(
                [_fmt(row[c]) if c == "episode" or c in selected else "" for c in EPISODE_COLUMNS]
            )

    with open(trajectory_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRAJECTORY_COLUMNS)
        for rec in records:
            for p in rec.trajectory.samples:
                w.writerow(
                    [
                        _fmt(rec.episode_index),
                        _fmt(p.t),
                        _fmt(p.pose.x),
                        _fmt(p.pose.y),
                        _fmt(p.pose.theta),
                        _fmt(p.v_lin),
                        _fmt(p.v_ang),
                        _fmt(p.min_clearance),
                        _fmt(p.collision_contact),
                    ]
                )
    return episodes_path, trajectory_path


def read_episodes_csv(path) -> list[dict]:
    """Parse episodes.csv back into typed rows (None for empty fields)."""
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != EPISODE_COLUMNS:
            raise ValueError("unexpected episodes.csv columns")
        for raw in reader:
            row: dict = {}
            for key, val in raw.items():
                if val == "":
                    row[key] = None
                elif key in ("episode", "success", "collisions"):
                    row[key] = int(val)
                else:
                    row[key] = float(val)
            rows.append(row)
    return rows


def read_trajectory_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != TRAJECTORY_COLUMNS:
            raise ValueError("unexpected trajectory.csv columns")
        for raw in reader:
            rows.append(
                {
                    "episode": int(raw["episode"]),
                    "t": float(raw["t"]),
                    "x": float(raw["x"]),
                    "y": float(raw["y"]),
                    "theta": float(raw["theta"]),
                    "v_lin": float(raw["v_lin"]),
                    "v_ang": float(raw["v_ang"]),
                    "min_clearance": float(raw["min_clearance"]),
                    "collision": bool(int(raw["collision"])),
                }
            )
    return rows


def report_from_csv(episodes_path, trajectory_path, planner_id: str, scenario_id: str = "") -> MetricsReport:
    """Rebuild a MetricsReport from previously written result files."""
    rows = []
    for raw in read_episodes_csv(episodes_path):
        rows.append(
            EpisodeMetrics(
                episode=raw["episode"],
                success=bool(raw["success"]),
                collisions=raw["collisions"] if raw["collisions"] is not None else 0,
                path_length=raw["path_length"],
                time_to_goal=raw["time_to_goal"],
                min_clearance=raw["min_clearance"],
                mean_clearance=raw["mean_clearance"],
                mean_jerk=raw["mean_jerk"],
                mean_roughness=raw["mean_roughness"],
                mean_norm_angle=raw["mean_norm_angle"],
            )
        )
    if not rows:
        raise ValueError("episodes.csv has no rows")
    polylines: dict[int, list[tuple[float, float]]] = {}
    for raw in read_trajectory_csv(trajectory_path):
        polylines.setdefault(raw["episode"], []).append((raw["x"], raw["y"]))
    return MetricsReport(
        planner_id=planner_id,
        scenario_id=scenario_id,
        episodes=rows,
        aggregates=_aggregate(rows),
        trajectories=[polylines.get(r.episode, []) for r in rows],
    )


def plot_data(reports: list[MetricsReport]) -> dict:
    """One JSON-ready document combining per-planner aggregates, per-episode
    arrays, and trajectory polylines."""
    if not reports:
        raise ValueError("needs at least one report")
    doc: dict = {"schema": "navlab-plot-data/1", "planners": {}}
    scenario_ids = {r.scenario_id for r in reports}
    if len(scenario_ids) > 1:
        doc["warning"] = f"reports cover different scenarios: {sorted(scenario_ids)}"
    for r in reports:
        doc["planners"][r.planner_id] = {
            "scenario_id": r.scenario_id,
            "aggregates": r.aggregates,
            "per_episode": {
                name: [
                    (int(v) if name == "success" else v)
                    for v in (getattr(row, name) for row in r.episodes)
                ]
                for name in SELECTABLE_METRICS
            },
            "trajectories": [[[x, y] for x, y in poly] for poly in r.trajectories],
        }
    return doc
