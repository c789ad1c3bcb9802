"""Headless command-line access to every pipeline.

Every subcommand is a thin adapter over the library; exit codes are 0 (ok),
1 (validation failure), 2 (runtime error). `--json` switches machine-readable
output on for validate/metrics.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .geometry import Pose, Trajectory, TrajectoryPoint
from . import metrics as metrics_mod
from .mapgen import MapGenParams, export_map, generate_map, import_map
from .network import load_model, validate_architecture
from .planners import DwaPlanner, policy_runner
from .robots import builtin_robots, get_robot
from .scenario import (
    generate_random_task,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
    validate_scenario_payload,
)
from .simulation import run_task
from .training import (
    hyperparams_from_payload,
    rewards_from_payload,
    train,
    validate_hyperparams_payload,
    validate_rewards_payload,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
DATA_DIR_ENV = "NAV_ARENA_DATA_DIR"


class ValidationFailure(Exception):
    def __init__(self, violations):
        self.violations = violations
        super().__init__("; ".join(map(str, violations)))


def _load_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def _print_violations(violations, as_json: bool):
    if as_json:
        print(json.dumps({"valid": False, "violations": [
            {"field": v.field, "reason": v.reason} for v in violations
        ]}))
    else:
        for v in violations:
            print(f"invalid: {v}", file=sys.stderr)


def cmd_gen_map(args) -> int:
    params = MapGenParams(
        kind=args.kind,
        width=args.width,
        height=args.height,
        resolution=args.resolution,
        obstacle_count=args.obstacles,
        obstacle_size=args.obstacle_size,
        corridor_width=args.corridor_width,
        room_count=args.rooms,
        room_size=args.room_size,
        seed=args.seed,
    )
    violations = params.validate()
    if violations:
        raise ValidationFailure(violations)
    grid = generate_map(params)
    pgm, meta = export_map(grid, args.name, args.out)
    print(f"wrote {pgm} and {meta}")
    return EXIT_OK


def cmd_gen_scenario(args) -> int:
    grid = import_map(args.map)
    robot = get_robot(args.robot)
    scenario = generate_random_task(
        grid, robot.radius, n_obstacles=args.obstacles, seed=args.seed,
        map_id=Path(args.map).name.removesuffix(".map.yaml").removesuffix(".yaml"),
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(scenario_to_dict(scenario), indent=2))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    kind = args.kind
    if kind == "map":
        try:
            import_map(args.file)
            violations = []
        except (ValueError, KeyError, OSError) as exc:
            from .validation import Violation

            violations = [Violation("map", str(exc))]
    elif kind == "scenario":
        payload = _load_json(args.file)
        violations = validate_scenario_payload(payload)
        if not violations and args.map:
            grid = import_map(args.map)
            violations = validate_scenario(scenario_from_dict(payload), grid)
    elif kind == "network":
        payload = _load_json(args.file)
        modules = payload["modules"] if isinstance(payload, dict) else payload
        robot_id = args.robot or (payload.get("robot_id") if isinstance(payload, dict) else None)
        if not robot_id:
            raise ValueError("network validation needs --robot or a robot_id field")
        violations = validate_architecture(modules, get_robot(robot_id))
    elif kind == "hyperparams":
        violations = validate_hyperparams_payload(_load_json(args.file))
    else:  # rewards
        violations = validate_rewards_payload(_load_json(args.file))

    if violations:
        _print_violations(violations, args.json)
        return EXIT_VALIDATION
    print(json.dumps({"valid": True, "violations": []}) if args.json else "valid")
    return EXIT_OK


def _load_network_modules(path) -> list:
    payload = _load_json(path)
    return payload["modules"] if isinstance(payload, dict) else payload


def cmd_train(args) -> int:
    grid = import_map(args.map)
    robot = get_robot(args.robot)
    modules = _load_network_modules(args.network)
    hp = hyperparams_from_payload(_load_json(args.hyperparams) if args.hyperparams else {})
    rewards = rewards_from_payload(_load_json(args.rewards) if args.rewards else {})
    scenario = scenario_from_dict(_load_json(args.scenario)) if args.scenario else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = train(
        grid, robot, modules, hp, rewards,
        log=print, artifact_dir=out, scenario=scenario, training_id=args.name,
    )
    (out / "eval_history.json").write_text(json.dumps({"eval_history": artifacts.eval_history}))
    print(f"best model: {artifacts.best_model_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    grid = import_map(args.map)
    robot = get_robot(args.robot)
    scenario = None
    if args.scenario:
        scenario = scenario_from_dict(_load_json(args.scenario))
        violations = validate_scenario(scenario, grid)
        if violations:
            raise ValidationFailure(violations)
    elif args.random is None:
        raise ValueError("provide --scenario FILE or --random N")

    if args.planner == "dwa":
        planner_id = "dwa"

        def planner_factory():
            return DwaPlanner(grid)
    elif args.planner.startswith("model:"):
        artifact = load_model(args.planner[len("model:"):])
        planner_id = f"policy:{artifact.metadata.get('training_id', 'model')}"

        def planner_factory():
            return policy_runner(artifact, robot)
    else:
        raise ValueError("--planner must be 'dwa' or 'model:<path>'")

    records = run_task(
        grid, robot, planner_factory,
        episodes=args.episodes, seed=args.seed,
        scenario=scenario, n_obstacles=args.random or 0,
    )
    out = Path(args.out)
    episodes_path, trajectory_path = metrics_mod.write_results(
        records, out, selected_metrics=args.metrics.split(",") if args.metrics else None
    )
    report = metrics_mod.compute_report(records)
    (out / "plot_data.json").write_text(json.dumps(metrics_mod.plot_data([report])))
    (out / "meta.json").write_text(json.dumps({
        "planner_id": report.planner_id,
        "scenario_id": report.scenario_id,
        "robot_id": robot.id,
        "episodes": args.episodes,
        "seed": args.seed,
    }))
    failed = [r for r in records if r.error]
    print(f"wrote {episodes_path} and {trajectory_path}; success_rate="
          f"{metrics_mod.success_rate(records):.3f}")
    if failed:
        print(f"{len(failed)} episode(s) failed: {failed[0].error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_metrics(args) -> int:
    rows = metrics_mod.read_trajectory_csv(args.trajectory)
    episodes: dict[int, list] = {}
    for row in rows:
        episodes.setdefault(row["episode"], []).append(row)
    out = []
    for index in sorted(episodes):
        samples = [
            TrajectoryPoint(
                t=r["t"], pose=Pose(r["x"], r["y"], r["theta"]), v_lin=r["v_lin"],
                v_ang=r["v_ang"], min_clearance=r["min_clearance"],
                collision_contact=r["collision"],
            )
            for r in episodes[index]
        ]
        traj = Trajectory(samples)
        lo, mean = metrics_mod.clearing_distance(traj)
        out.append({
            "episode": index,
            "path_length": metrics_mod.path_length(traj),
            "min_clearance": lo,
            "mean_clearance": mean,
            "mean_jerk": metrics_mod.movement_jerk(traj),
            "mean_roughness": metrics_mod.roughness(traj),
            "mean_norm_angle": metrics_mod.normalized_angle(traj),
        })
    if args.json:
        print(json.dumps(out))
    else:
        for row in out:
            parts = " ".join(
                f"{k}={'' if v is None else f'{v:.9g}'}" for k, v in row.items() if k != "episode"
            )
            print(f"episode {row['episode']}: {parts}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    reports = []
    for d in args.inputs:
        d = Path(d)
        meta = {}
        meta_path = d / "meta.json"
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
        reports.append(
            metrics_mod.report_from_csv(
                d / "episodes.csv",
                d / "trajectory.csv",
                planner_id=meta.get("planner_id", d.name),
                scenario_id=meta.get("scenario_id", ""),
            )
        )
    doc = metrics_mod.plot_data(reports)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.addr.rpartition(":")
    ui_dir = args.ui_dir
    if ui_dir is None and Path("frontend/index.html").exists():
        ui_dir = "frontend"
    app = create_app(args.data_dir, workers=args.workers, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    return EXIT_OK


def cmd_robots(args) -> int:
    for r in builtin_robots():
        print(f"{r.id}: {r.kinematics}, radius {r.radius} m, v_max {r.v_max} m/s, "
              f"{r.lidar.beams} beams")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="navlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-map", help="generate a map bundle (.pgm + .map.yaml)")
    g.add_argument("--kind", choices=["indoor", "outdoor"], default="outdoor")
    g.add_argument("--width", type=float, default=10.0)
    g.add_argument("--height", type=float, default=10.0)
    g.add_argument("--resolution", type=float, default=0.05)
    g.add_argument("--obstacles", type=int, default=0)
    g.add_argument("--obstacle-size", type=float, default=0.8)
    g.add_argument("--corridor-width", type=float, default=1.5)
    g.add_argument("--rooms", type=int, default=4)
    g.add_argument("--room-size", type=float, default=3.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name", default="map")
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_gen_map)

    g = sub.add_parser("gen-scenario", help="generate a random scenario for a map bundle")
    g.add_argument("--map", required=True, help="path to the .map.yaml of a bundle")
    g.add_argument("--random", action="store_true", help="random placement (the only mode)")
    g.add_argument("--obstacles", type=int, default=0)
    g.add_argument("--robot", default="turtlebot3")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_gen_scenario)

    g = sub.add_parser("validate", help="validate a document file; exit 1 on violations")
    g.add_argument("--kind", choices=["map", "scenario", "network", "hyperparams", "rewards"],
                   required=True)
    g.add_argument("file")
    g.add_argument("--robot", help="robot id (networks)")
    g.add_argument("--map", help="map bundle for deep scenario validation")
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_validate)

    g = sub.add_parser("train", help="train a policy and write artifacts")
    g.add_argument("--map", required=True)
    g.add_argument("--robot", required=True)
    g.add_argument("--network", required=True)
    g.add_argument("--hyperparams")
    g.add_argument("--rewards")
    g.add_argument("--scenario")
    g.add_argument("--name", default="cli-training")
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_train)

    g = sub.add_parser("evaluate", help="run evaluation episodes and write CSVs")
    g.add_argument("--map", required=True)
    g.add_argument("--scenario")
    g.add_argument("--random", type=int, metavar="N_OBSTACLES")
    g.add_argument("--robot", required=True)
    g.add_argument("--planner", required=True, help="dwa | model:<path>")
    g.add_argument("--episodes", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--metrics", help="comma-separated metric selection")
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("metrics", help="compute metrics from a trajectory.csv")
    g.add_argument("--trajectory", required=True)
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_metrics)

    g = sub.add_parser("plot-data", help="merge evaluation outputs into one plot document")
    g.add_argument("--in", dest="inputs", nargs="+", required=True)
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_plot_data)

    g = sub.add_parser("serve", help="run the REST service")
    g.add_argument("--addr", default="127.0.0.1:8080")
    g.add_argument("--data-dir", default=os.environ.get(DATA_DIR_ENV, "navlab-data"))
    g.add_argument("--workers", type=int, default=2)
    g.add_argument("--ui-dir", help="static UI directory to mount at /ui (default: ./frontend if present)")
    g.set_defaults(func=cmd_serve)

    g = sub.add_parser("robots", help="list builtin robot presets")
    g.set_defaults(func=cmd_robots)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        _print_violations(exc.violations, getattr(args, "json", False))
        return EXIT_VALIDATION
    except Exception as exc:  # runtime errors: consistent nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
