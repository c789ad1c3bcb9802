"""Deterministic discrete-time episode execution.

Step loop: observe -> plan -> integrate -> move obstacles -> contact check.
Motion into contact is blocked (position rolled back, velocity zeroed) and the
episode continues; a collision EVENT is counted when contact begins after at
least `collision_debounce_steps` contact-free steps, so scraping along a wall
counts once. Training episodes may instead terminate at the first event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    OccupancyGrid,
    Trajectory,
    TrajectoryPoint,
    distance_field,
    footprint_clearance,
    footprint_collides,
)
from .robots import RobotModel, body_speed, integrate, observe
from .scenario import Scenario, generate_random_task, obstacle_circles_at

DEFAULT_DT = 0.1
DEFAULT_DEBOUNCE_STEPS = 10


@dataclass
class EpisodeConfig:
    dt: float = DEFAULT_DT
    max_sim_time: float | None = None  # None: max(60, 4*straightline/v_max)
    goal_tolerance: float | None = None  # None: robot.radius + 0.2
    collision_debounce_steps: int = DEFAULT_DEBOUNCE_STEPS
    seed: int = 0  # reserved for seeded noise extensions; episodes are deterministic
    terminate_on_collision: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.goal_tolerance is not None and self.goal_tolerance <= 0:
            raise ValueError("goal_tolerance must be > 0")


@dataclass
class EpisodeRecord:
    trajectory: Trajectory
    collisions: int
    reached_goal: bool
    timeout: bool
    time_to_goal: float | None
    scenario_id: str
    planner_id: str
    episode_index: int
    error: str | None = None


def resolve_limits(scenario: Scenario, robot: RobotModel, config: EpisodeConfig):
    goal_tol = config.goal_tolerance if config.goal_tolerance is not None else robot.radius + 0.2
    if config.max_sim_time is not None:
        max_time = config.max_sim_time
    else:
        straight = math.dist((scenario.robot_start.x, scenario.robot_start.y), scenario.robot_goal)
        max_time = max(60.0, 4.0 * straight / robot.v_max)
    return goal_tol, max_time


def run_episode(
    grid: OccupancyGrid,
    scenario: Scenario,
    robot: RobotModel,
    planner,
    config: EpisodeConfig | None = None,
    episode_index: int = 0,
    df: np.ndarray | None = None,
) -> EpisodeRecord:
    """Execute one episode; always returns a record (planner errors included)."""
    config = config or EpisodeConfig()
    if df is None:
        df = distance_field(grid)
    goal_tol, max_time = resolve_limits(scenario, robot, config)
    goal = tuple(scenario.robot_goal)
    dt = config.dt
    debounce = config.collision_debounce_steps

    pose = scenario.robot_start
    vel = robot.zero_velocity()
    samples: list[TrajectoryPoint] = []
    collisions = 0
    contact_free_run = debounce  # episode start counts as contact-free history
    reached_goal = False
    timeout = False
    time_to_goal = None
    error = None

    circles = obstacle_circles_at(scenario.obstacles, 0.0)
    contact = footprint_collides(grid, pose, robot.radius, circles, dist_field=df)

    k = 0
    while True:
        t = k * dt
        event = False
        if contact:
            if contact_free_run >= debounce:
                collisions += 1
                event = True
            contact_free_run = 0
        else:
            contact_free_run += 1
        samples.append(
            TrajectoryPoint(
                t=t,
                pose=pose,
                v_lin=body_speed(robot, vel),
                v_ang=float(vel[-1]),
                min_clearance=footprint_clearance(
                    grid, pose, robot.radius, circles, dist_field=df
                ),
                collision_contact=contact,
            )
        )
        if math.dist((pose.x, pose.y), goal) <= goal_tol:
            reached_goal = True
            time_to_goal = t
            break
        if event and config.terminate_on_collision:
            break
        if t >= max_time:
            timeout = True
            break

        try:
            obs = observe(robot, grid, pose, goal, circles)
            if hasattr(planner, "dynamic_obstacles"):
                planner.dynamic_obstacles = circles
            action = planner.plan(obs, robot, pose, goal, vel)
        except Exception as exc:  # planner failure: keep the partial record
            error = f"planner error: {exc}"
            break

        k += 1
        candidate, new_vel = integrate(robot, pose, action, vel, dt)
        circles = obstacle_circles_at(scenario.obstacles, k * dt)
        if footprint_collides(grid, candidate, robot.radius, circles, dist_field=df):
            contact = True
            vel = robot.zero_velocity()  # blocked at the boundary
        else:
            contact = False
            pose = candidate
            vel = new_vel

    return EpisodeRecord(
        trajectory=Trajectory(samples),
        collisions=collisions,
        reached_goal=reached_goal,
        timeout=timeout,
        time_to_goal=time_to_goal,
        scenario_id=scenario.id,
        planner_id=getattr(planner, "planner_id", "unknown"),
        episode_index=episode_index,
        error=error,
    )


def run_task(
    grid: OccupancyGrid,
    robot: RobotModel,
    planner_factory,
    episodes: int,
    seed: int = 0,
    scenario: Scenario | None = None,
    n_obstacles: int = 0,
    config: EpisodeConfig | None = None,
    on_episode=None,
    should_stop=None,
) -> list[EpisodeRecord]:
    """Run `episodes` episodes: fixed-scenario replay, or seeded random tasks.

    planner_factory is called once per episode so planners never share state.
    `on_episode` receives each finished record; `should_stop` is polled between
    episodes and ends the run early with the records collected so far.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    df = distance_field(grid)
    records = []
    episode_seeds = np.random.SeedSequence(int(seed)).generate_state(episodes)
    for i in range(episodes):
        if should_stop is not None and should_stop():
            break
        if scenario is not None:
            ep_scenario = scenario
        else:
            ep_scenario = generate_random_task(
                grid, robot.radius, n_obstacles, seed=int(episode_seeds[i])
            )
        planner = planner_factory()
        record = run_episode(grid, ep_scenario, robot, planner, config, episode_index=i, df=df)
        records.append(record)
        if on_episode is not None:
            on_episode(record)
    return records
