#!/usr/bin/env python3
"""Train a policy on an empty map with default settings and report progress.

Usage:
  python3 scripts/smoke_train.py --robot turtlebot3 --steps 200000 -o runs/smoke
"""

import argparse
import json
import time
from pathlib import Path

from navlab.mapgen import MapGenParams, generate_map
from navlab.robots import get_robot
from navlab.training import HyperparameterSet, RewardSet, train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--robot", default="turtlebot3")
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--map-size", type=float, default=10.0)
    ap.add_argument("-o", "--out", default="runs/smoke")
    args = ap.parse_args()

    grid = generate_map(
        MapGenParams(kind="outdoor", width=args.map_size, height=args.map_size,
                     obstacle_count=0, seed=0)
    )
    robot = get_robot(args.robot)
    modules = [
        {"type": "linear", "in_features": robot.obs_dim, "out_features": 64},
        {"type": "relu"},
        {"type": "linear", "in_features": 64, "out_features": robot.action_dim},
    ]
    hp = HyperparameterSet(total_timesteps=args.steps, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.time()
    artifacts = train(grid, robot, modules, hp, RewardSet(), log=print, artifact_dir=out)
    (out / "eval_history.json").write_text(json.dumps({"eval_history": artifacts.eval_history}))
    print(f"done in {time.time() - t0:.0f}s; best model at {artifacts.best_model_path}")
    for step, rate, reward in artifacts.eval_history:
        print(f"  step {step:>8}: success {rate:.2f}, mean reward {reward:.2f}")


if __name__ == "__main__":
    main()
