#!/usr/bin/env python3
"""Benchmark planners on one scenario and emit CSVs plus a plot-data document.

Usage:
  python3 scripts/compare_planners.py --obstacles 3 --episodes 5 \
      --model runs/smoke/best_model.bin -o runs/benchmark
"""

import argparse
import json
from pathlib import Path

from navlab.mapgen import MapGenParams, generate_map
from navlab.metrics import compute_report, plot_data, success_rate, write_results
from navlab.network import load_model
from navlab.planners import DwaPlanner, policy_runner
from navlab.robots import get_robot
from navlab.scenario import generate_random_task
from navlab.simulation import run_task


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--robot", default="turtlebot3")
    ap.add_argument("--kind", choices=["indoor", "outdoor"], default="outdoor")
    ap.add_argument("--obstacles", type=int, default=2, help="dynamic obstacles in the scenario")
    ap.add_argument("--static", type=int, default=4, help="static obstacles on the map")
    ap.add_argument("--episodes", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--model", help="optional best_model.bin to benchmark against DWA")
    ap.add_argument("-o", "--out", default="runs/benchmark")
    args = ap.parse_args()

    grid = generate_map(
        MapGenParams(kind=args.kind, width=12, height=12, obstacle_count=args.static,
                     seed=args.seed)
    )
    robot = get_robot(args.robot)
    scenario = generate_random_task(grid, robot.radius, args.obstacles, seed=args.seed)
    out = Path(args.out)

    planners = {"dwa": lambda: DwaPlanner(grid)}
    if args.model:
        artifact = load_model(args.model)
        planners["policy"] = lambda: policy_runner(artifact, robot)

    reports = []
    for name, factory in planners.items():
        records = run_task(
            grid, robot, factory, episodes=args.episodes, seed=args.seed, scenario=scenario
        )
        write_results(records, out / name)
        report = compute_report(records)
        reports.append(report)
        print(f"{name}: success_rate={success_rate(records):.2f} "
              f"mean_path={report.aggregates['metrics']['path_length']['mean']}")

    (out / "plot_data.json").write_text(json.dumps(plot_data(reports)))
    print(f"wrote {out}/plot_data.json")


if __name__ == "__main__":
    main()
