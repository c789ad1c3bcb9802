"""Reward system and PPO training over the simulator.

The policy mean comes from the user-authored network; a global learnable
log-std (initialized to log 0.5) completes a Gaussian policy. The value
function is a fixed auxiliary MLP (obs -> 64 -> 64 -> 1, relu). Rollouts are
strictly sequential so a (seed, config) pair always reproduces the same run.
Training episodes terminate at the first collision event; the periodic
evaluations replay held-out episodes with the deterministic mean action and
full evaluation semantics (collisions do not end the episode).
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .geometry import OccupancyGrid, distance_field, footprint_clearance, footprint_collides
from .network import (
    AdamState,
    ModelArtifact,
    NetworkInstance,
    adam_step,
    backward,
    forward,
    init_network,
    load_model,
    parse_modules,
    save_model,
    validate_architecture,
)
from .robots import RobotModel, body_speed, integrate, observe
from .scenario import Scenario, generate_random_task, obstacle_circles_at
from .simulation import DEFAULT_DEBOUNCE_STEPS, DEFAULT_DT
from .validation import Violation, require

SAFE_DISTANCE = 0.5  # footprint clearance below this draws the safe-dist penalty
EVAL_EPISODES = 20
VALUE_HIDDEN = 64
INITIAL_STD = 0.5
# Training rollouts cap episodes well below the evaluation timeout: more
# resets per step budget means denser learning signal and more goal discoveries
# under the exploration noise. Evaluations keep the full
# max(60, 4*straightline/v_max) horizon.
TRAIN_EPISODE_TIME_LIMIT = 20.0
# Extra value-only epochs before each policy update. The dense progress term
# is tiny per step; advantages only carry it once the value residual is driven
# well below the reward scale.
VALUE_EXTRA_EPOCHS = 4

TASK_MODES = ("random", "scenario")
BATCH_SIZES = (32, 64, 128, 256)
TOTAL_TIMESTEPS_RANGE = (10_000, 2_000_000)
EVAL_FREQUENCY_RANGE = (1_000, 100_000)
LEARNING_RATE_RANGE = (1e-5, 1e-2)
N_STEPS_RANGE = (256, 8192)
GAMMA_RANGE = (0.9, 0.999)


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient stops being finite."""


@dataclass
class RewardSet:
    id: str = ""
    name: str = "default rewards"
    visibility: str = "private"
    goal_reached: float = 15.0
    collision: float = -15.0
    progress_factor: float = 0.25  # per meter of distance-to-goal closed
    safe_dist_penalty: float = -0.15  # per step with clearance < SAFE_DISTANCE
    step_penalty: float = -0.01

    def validate(self) -> list[Violation]:
        v: list[Violation] = []
        require(self.goal_reached > 0, "goal_reached", "must be > 0", v)
        require(self.collision <= 0, "collision", "must be <= 0", v)
        return v


@dataclass
class Transition:
    prev_goal_dist: float
    goal_dist: float
    clearance: float
    collision_event: bool
    reached_goal: bool


def step_reward(rewards: RewardSet, tr: Transition) -> float:
    """Sum of the applicable reward components, each applied exactly once.

    The terminal goal step earns the goal bonus plus the progress term only;
    per-step shaping penalties do not apply to it.
    """
    r = rewards.progress_factor * (tr.prev_goal_dist - tr.goal_dist)
    if tr.collision_event:
        r += rewards.collision
    if tr.reached_goal:
        r += rewards.goal_reached
    else:
        r += rewards.step_penalty
        if tr.clearance < SAFE_DISTANCE:
            r += rewards.safe_dist_penalty
    return r


@dataclass
class HyperparameterSet:
    id: str = ""
    name: str = "default hyperparameters"
    visibility: str = "private"
    task_mode: str = "random"
    total_timesteps: int = 200_000
    eval_frequency: int = 20_000
    learning_rate: float = 3e-4
    batch_size: int = 64
    n_steps: int = 2048
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    epochs_per_update: int = 4
    seed: int = 0

    def validate(self) -> list[Violation]:
        v: list[Violation] = []
        require(self.task_mode in TASK_MODES, "task_mode", f"must be one of {TASK_MODES}", v)
        require(
            TOTAL_TIMESTEPS_RANGE[0] <= self.total_timesteps <= TOTAL_TIMESTEPS_RANGE[1]
            or self.total_timesteps == 0,
            "total_timesteps",
            f"must be 0 or within {TOTAL_TIMESTEPS_RANGE}",
            v,
        )
        require(
            EVAL_FREQUENCY_RANGE[0] <= self.eval_frequency <= EVAL_FREQUENCY_RANGE[1],
            "eval_frequency",
            f"must be within {EVAL_FREQUENCY_RANGE}",
            v,
        )
        require(
            LEARNING_RATE_RANGE[0] <= self.learning_rate <= LEARNING_RATE_RANGE[1]
            or self.learning_rate == 0.0,
            "learning_rate",
            f"must be 0 or within {LEARNING_RATE_RANGE}",
            v,
        )
        require(self.batch_size in BATCH_SIZES, "batch_size", f"must be one of {BATCH_SIZES}", v)
        require(
            N_STEPS_RANGE[0] <= self.n_steps <= N_STEPS_RANGE[1],
            "n_steps",
            f"must be within {N_STEPS_RANGE}",
            v,
        )
        require(self.batch_size <= self.n_steps, "batch_size", "must be <= n_steps", v)
        require(
            GAMMA_RANGE[0] <= self.gamma <= GAMMA_RANGE[1],
            "gamma",
            f"must be within {GAMMA_RANGE}",
            v,
        )
        require(0.0 <= self.gae_lambda <= 1.0, "gae_lambda", "must be within [0, 1]", v)
        require(0.0 < self.clip_eps < 1.0, "clip_eps", "must be within (0, 1)", v)
        require(self.epochs_per_update >= 1, "epochs_per_update", "must be >= 1", v)
        return v


@dataclass
class TrainingArtifacts:
    best_model: ModelArtifact | None
    best_model_path: Path | None
    eval_history: list[tuple[int, float, float]]  # (step, success_rate, mean_reward)
    cancelled: bool = False


def save_checkpoint(artifact: ModelArtifact, path) -> None:
    save_model(artifact, path)


def load_checkpoint(path) -> ModelArtifact:
    return load_model(path)


def clipped_surrogate(ratio: float, advantage: float, clip_eps: float) -> tuple[float, float]:
    """Per-sample clipped surrogate loss and its gradient w.r.t. the ratio.

    Gradient is zero once the clipped branch is active, so updates cannot push
    a sample's ratio further outside [1-eps, 1+eps].
    """
    surr1 = ratio * advantage
    surr2 = min(max(ratio, 1.0 - clip_eps), 1.0 + clip_eps) * advantage
    if surr1 <= surr2:
        return -surr1, -advantage
    return -surr2, 0.0


class _TrainingEnv:
    """Sequential episode stepper with per-step rewards.

    Mirrors the simulator semantics: blocked motion, debounced collision
    events, timeout = max(60, 4*straightline/v_max). terminate_on_collision
    distinguishes training episodes from evaluation replays.
    """

    def __init__(
        self,
        grid: OccupancyGrid,
        robot: RobotModel,
        rewards: RewardSet,
        task_mode: str,
        scenario: Scenario | None,
        seed: int,
        terminate_on_collision: bool,
        eval_scenario_seeds: list[int] | None = None,
        episode_time_limit: float | None = None,
    ):
        self.grid = grid
        self.robot = robot
        self.rewards = rewards
        self.task_mode = task_mode
        self.fixed_scenario = scenario
        self.terminate_on_collision = terminate_on_collision
        self.episode_time_limit = episode_time_limit
        self.df = distance_field(grid)
        self._task_rng = np.random.default_rng(int(seed))
        self._eval_seeds = eval_scenario_seeds
        self._eval_cursor = 0
        self.scenario: Scenario | None = None
        self.collisions = 0

    def _next_scenario(self) -> Scenario:
        if self.task_mode == "scenario":
            return self.fixed_scenario
        if self._eval_seeds is not None:
            seed = self._eval_seeds[self._eval_cursor % len(self._eval_seeds)]
            self._eval_cursor += 1
        else:
            seed = int(self._task_rng.integers(0, 2**63 - 1))
        return generate_random_task(self.grid, self.robot.radius, 0, seed=seed)

    def reset(self) -> np.ndarray:
        self.scenario = self._next_scenario()
        self.pose = self.scenario.robot_start
        self.vel = self.robot.zero_velocity()
        self.goal = tuple(self.scenario.robot_goal)
        self.k = 0
        self.collisions = 0
        self._contact_free = DEFAULT_DEBOUNCE_STEPS
        straight = math.dist((self.pose.x, self.pose.y), self.goal)
        self.max_time = max(60.0, 4.0 * straight / self.robot.v_max)
        if self.episode_time_limit is not None:
            self.max_time = min(self.max_time, self.episode_time_limit)
        self.goal_tol = self.robot.radius + 0.2
        self._circles = obstacle_circles_at(self.scenario.obstacles, 0.0)
        self.prev_goal_dist = straight
        return observe(self.robot, self.grid, self.pose, self.goal, self._circles)

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        self.k += 1
        t = self.k * DEFAULT_DT
        candidate, new_vel = integrate(self.robot, self.pose, tuple(action), self.vel, DEFAULT_DT)
        self._circles = obstacle_circles_at(self.scenario.obstacles, t)
        if footprint_collides(
            self.grid, candidate, self.robot.radius, self._circles, dist_field=self.df
        ):
            contact = True
            self.vel = self.robot.zero_velocity()
        else:
            contact = False
            self.pose = candidate
            self.vel = new_vel
        event = False
        if contact:
            if self._contact_free >= DEFAULT_DEBOUNCE_STEPS:
                self.collisions += 1
                event = True
            self._contact_free = 0
        else:
            self._contact_free += 1

        goal_dist = math.dist((self.pose.x, self.pose.y), self.goal)
        clearance = footprint_clearance(
            self.grid, self.pose, self.robot.radius, self._circles, dist_field=self.df
        )
        reached = goal_dist <= self.goal_tol
        reward = step_reward(
            self.rewards,
            Transition(
                prev_goal_dist=self.prev_goal_dist,
                goal_dist=goal_dist,
                clearance=clearance,
                collision_event=event,
                reached_goal=reached,
            ),
        )
        self.prev_goal_dist = goal_dist
        timeout = not reached and t >= self.max_time
        done = reached or timeout or (event and self.terminate_on_collision)
        obs = observe(self.robot, self.grid, self.pose, self.goal, self._circles)
        return obs, reward, done, {"reached": reached, "timeout": timeout, "event": event}


def value_network_modules(obs_dim: int) -> list[dict]:
    return [
        {"type": "linear", "in_features": obs_dim, "out_features": VALUE_HIDDEN},
        {"type": "relu"},
        {"type": "linear", "in_features": VALUE_HIDDEN, "out_features": VALUE_HIDDEN},
        {"type": "relu"},
        {"type": "linear", "in_features": VALUE_HIDDEN, "out_features": 1},
    ]


def _gaussian_logp(action, mean, std) -> float:
    z = (action - mean) / std
    return float(-0.5 * np.sum(z * z) - np.sum(np.log(std)) - 0.5 * len(mean) * math.log(2 * math.pi))


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _atomic_save(artifact: ModelArtifact, path: Path) -> None:
    # a concurrent mid-training download must never see a half-written file
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".model-")
    os.close(fd)
    try:
        save_model(artifact, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def train(
    grid: OccupancyGrid,
    robot: RobotModel,
    network_modules: list,
    hyperparams: HyperparameterSet,
    rewards: RewardSet,
    log=None,
    artifact_dir=None,
    scenario: Scenario | None = None,
    should_stop=None,
    training_id: str = "",
) -> TrainingArtifacts:
    """Run PPO; returns the best checkpoint, eval history, and writes logs.

    `log` is a callable taking one preformatted line. `should_stop` is polled
    between updates for cooperative cancellation. The best model is re-saved
    to <artifact_dir>/best_model.bin whenever the evaluation success rate
    matches or beats the previous best (ties keep the latest).
    """
    sink = log or (lambda line: None)
    violations = validate_architecture(network_modules, robot)
    violations += hyperparams.validate()
    violations += rewards.validate()
    if hyperparams.task_mode == "scenario" and scenario is None:
        violations.append(Violation("task_mode", "scenario mode needs a scenario"))
    if violations:
        raise ValueError("; ".join(map(str, violations)))
    hp = hyperparams
    rng = np.random.default_rng(int(hp.seed))

    modules, _ = parse_modules(network_modules)
    policy_init = init_network(network_modules, seed=int(hp.seed))
    action_dim = robot.action_dim
    n_net = policy_init.param_count
    policy_flat = np.concatenate([policy_init.params, np.full(action_dim, math.log(INITIAL_STD))])
    policy_net = NetworkInstance(modules, policy_flat[:n_net])
    log_std = policy_flat[n_net:]

    value_spec = value_network_modules(robot.obs_dim)
    value_init = init_network(value_spec, seed=int(hp.seed) + 1)
    value_net = NetworkInstance(value_init.modules, value_init.params)

    policy_adam = AdamState.zeros(policy_flat.size)
    value_adam = AdamState.zeros(value_net.params.size)

    env = _TrainingEnv(
        grid, robot, rewards, hp.task_mode, scenario, seed=int(hp.seed),
        terminate_on_collision=True, episode_time_limit=TRAIN_EPISODE_TIME_LIMIT,
    )
    # held-out deterministic evaluation tasks, disjoint from the training stream
    eval_seed_rng = np.random.default_rng(int(hp.seed) + 7_777_777)
    eval_seeds = [int(s) for s in eval_seed_rng.integers(0, 2**63 - 1, size=EVAL_EPISODES)]

    best_path = Path(artifact_dir) / "best_model.bin" if artifact_dir is not None else None
    if best_path is not None:
        best_path.parent.mkdir(parents=True, exist_ok=True)

    artifacts = TrainingArtifacts(best_model=None, best_model_path=best_path, eval_history=[])
    best_rate = -1.0

    def snapshot(step: int, eval_score: float) -> ModelArtifact:
        return ModelArtifact(
            modules=list(modules),
            params=policy_flat[:n_net].copy(),
            metadata={
                "robot_id": robot.id,
                "training_id": training_id,
                "step": step,
                "eval_score": eval_score,
            },
        )

    def evaluate(step: int):
        nonlocal best_rate
        eval_env = _TrainingEnv(
            grid, robot, rewards, hp.task_mode, scenario, seed=0,
            terminate_on_collision=False, eval_scenario_seeds=eval_seeds,
        )
        successes = 0
        total_reward = 0.0
        for _ in range(EVAL_EPISODES):
            obs = eval_env.reset()
            done = False
            info: dict = {}
            while not done:
                mean = forward(policy_net, obs)
                obs, reward, done, info = eval_env.step(mean)
                total_reward += reward
            if info["reached"] and not info["timeout"] and eval_env.collisions <= 1:
                successes += 1
        rate = successes / EVAL_EPISODES
        mean_reward = total_reward / EVAL_EPISODES
        artifacts.eval_history.append((step, rate, mean_reward))
        if rate >= best_rate:
            best_rate = rate
            artifacts.best_model = snapshot(step, rate)
            if best_path is not None:
                _atomic_save(artifacts.best_model, best_path)
        sink(
            f"ts={_timestamp()} step={step} event=eval success_rate={rate:.3f} "
            f"mean_reward={mean_reward:.3f} best={best_rate:.3f}"
        )
        return rate

    sink(
        f"ts={_timestamp()} step=0 event=start robot={robot.id} "
        f"total_timesteps={hp.total_timesteps} n_steps={hp.n_steps} "
        f"batch_size={hp.batch_size} lr={hp.learning_rate:g} seed={hp.seed}"
    )
    evaluate(0)

    obs = env.reset()
    steps_done = 0
    next_eval = hp.eval_frequency
    obs_dim = robot.obs_dim

    while steps_done < hp.total_timesteps:
        if should_stop is not None and should_stop():
            artifacts.cancelled = True
            sink(f"ts={_timestamp()} step={steps_done} event=cancelled")
            return artifacts

        n = min(hp.n_steps, hp.total_timesteps - steps_done)
        obs_buf = np.empty((n, obs_dim))
        act_buf = np.empty((n, action_dim))
        logp_buf = np.empty(n)
        val_buf = np.empty(n)
        rew_buf = np.empty(n)
        done_buf = np.empty(n)
        for i in range(n):
            mean = forward(policy_net, obs)
            std = np.exp(log_std)
            action = mean + std * rng.standard_normal(action_dim)
            obs_buf[i] = obs
            act_buf[i] = action
            logp_buf[i] = _gaussian_logp(action, mean, std)
            val_buf[i] = forward(value_net, obs)[0]
            obs, reward, done, info = env.step(action)
            if done and info["timeout"]:
                # time-limit truncation is not a real terminal: bootstrap the
                # continuing value through the reset boundary
                reward += hp.gamma * float(forward(value_net, obs)[0])
            rew_buf[i] = reward
            done_buf[i] = float(done)
            if done:
                obs = env.reset()
        steps_done += n

        last_value = 0.0 if done_buf[-1] else float(forward(value_net, obs)[0])
        adv = np.zeros(n)
        gae = 0.0
        for i in range(n - 1, -1, -1):
            next_val = last_value if i == n - 1 else val_buf[i + 1]
            mask = 1.0 - done_buf[i]
            delta = rew_buf[i] + hp.gamma * next_val * mask - val_buf[i]
            gae = delta + hp.gamma * hp.gae_lambda * mask * gae
            adv[i] = gae
        returns = adv + val_buf

        for _ in range(VALUE_EXTRA_EPOCHS):
            perm = rng.permutation(n)
            for start in range(0, n, hp.batch_size):
                idx = perm[start : start + hp.batch_size]
                if len(idx) < 2:
                    continue
                vgrad = np.zeros_like(value_net.params)
                for sample in idx:
                    v = forward(value_net, obs_buf[sample])[0]
                    vg, _ = backward(value_net, np.array([(v - returns[sample]) / len(idx)]))
                    vgrad += vg
                adam_step(value_net.params, vgrad, value_adam, lr=hp.learning_rate)

        policy_loss_sum = value_loss_sum = 0.0
        clipped = total_samples = 0
        kl_sum = 0.0
        for _ in range(hp.epochs_per_update):
            perm = rng.permutation(n)
            for start in range(0, n, hp.batch_size):
                idx = perm[start : start + hp.batch_size]
                if len(idx) < 2:
                    continue
                mb_adv = adv[idx]
                mb_adv = (mb_adv - mb_adv.mean()) / (mb_adv.std() + 1e-8)
                pgrad = np.zeros_like(policy_flat)
                vgrad = np.zeros_like(value_net.params)
                batch = len(idx)
                for j, sample in enumerate(idx):
                    x = obs_buf[sample]
                    a = act_buf[sample]
                    mean = forward(policy_net, x)
                    std = np.exp(log_std)
                    logp = _gaussian_logp(a, mean, std)
                    ratio = math.exp(logp - logp_buf[sample])
                    loss, dloss_dratio = clipped_surrogate(ratio, float(mb_adv[j]), hp.clip_eps)
                    policy_loss_sum += loss
                    kl_sum += logp_buf[sample] - logp
                    total_samples += 1
                    if dloss_dratio == 0.0:
                        clipped += 1
                    else:
                        z = (a - mean) / std
                        dlogp_dmean = z / std
                        dlogp_dlogstd = z * z - 1.0
                        scale = dloss_dratio * ratio / batch
                        net_grads, _ = backward(policy_net, scale * dlogp_dmean)
                        pgrad[:n_net] += net_grads
                        pgrad[n_net:] += scale * dlogp_dlogstd
                    v = forward(value_net, x)[0]
                    verr = v - returns[sample]
                    value_loss_sum += 0.5 * verr * verr
                    vg, _ = backward(value_net, np.array([verr / batch]))
                    vgrad += vg
                if not (np.all(np.isfinite(pgrad)) and np.all(np.isfinite(vgrad))):
                    sink(f"ts={_timestamp()} step={steps_done} event=diverged")
                    raise TrainingDiverged("non-finite gradient")
                adam_step(policy_flat, pgrad, policy_adam, lr=hp.learning_rate)
                adam_step(value_net.params, vgrad, value_adam, lr=hp.learning_rate)
                # keep the views aliased to the same storage after in-place update
        if not math.isfinite(policy_loss_sum) or not math.isfinite(value_loss_sum):
            sink(f"ts={_timestamp()} step={steps_done} event=diverged")
            raise TrainingDiverged("non-finite loss")

        sink(
            f"ts={_timestamp()} step={steps_done} "
            f"policy_loss={policy_loss_sum / max(total_samples, 1):.6f} "
            f"value_loss={value_loss_sum / max(total_samples, 1):.6f} "
            f"clip_frac={clipped / max(total_samples, 1):.3f} "
            f"approx_kl={kl_sum / max(total_samples, 1):.6f} "
            f"std={np.exp(log_std).mean():.3f}"
        )
        if steps_done >= next_eval:
            evaluate(steps_done)
            while next_eval <= steps_done:
                next_eval += hp.eval_frequency

    if not artifacts.eval_history or artifacts.eval_history[-1][0] != steps_done:
        evaluate(steps_done)
    sink(f"ts={_timestamp()} step={steps_done} event=finished best={best_rate:.3f}")
    return artifacts


# --- document payload helpers -------------------------------------------------


def rewards_from_payload(payload: dict) -> RewardSet:
    return RewardSet(
        goal_reached=float(payload.get("goal_reached", 15.0)),
        collision=float(payload.get("collision", -15.0)),
        progress_factor=float(payload.get("progress_factor", 0.25)),
        safe_dist_penalty=float(payload.get("safe_dist_penalty", -0.15)),
        step_penalty=float(payload.get("step_penalty", -0.01)),
    )


def validate_rewards_payload(payload: dict) -> list[Violation]:
    if not isinstance(payload, dict):
        return [Violation("payload", "must be an object")]
    v: list[Violation] = []
    for key in ("goal_reached", "collision", "progress_factor", "safe_dist_penalty", "step_penalty"):
        if key in payload and not isinstance(payload[key], (int, float)):
            v.append(Violation(key, "must be a number"))
    if v:
        return v
    return rewards_from_payload(payload).validate()


def hyperparams_from_payload(payload: dict) -> HyperparameterSet:
    defaults = HyperparameterSet()
    return HyperparameterSet(
        task_mode=payload.get("task_mode", defaults.task_mode),
        total_timesteps=int(payload.get("total_timesteps", defaults.total_timesteps)),
        eval_frequency=int(payload.get("eval_frequency", defaults.eval_frequency)),
        learning_rate=float(payload.get("learning_rate", defaults.learning_rate)),
        batch_size=int(payload.get("batch_size", defaults.batch_size)),
        n_steps=int(payload.get("n_steps", defaults.n_steps)),
        gamma=float(payload.get("gamma", defaults.gamma)),
        gae_lambda=float(payload.get("gae_lambda", defaults.gae_lambda)),
        clip_eps=float(payload.get("clip_eps", defaults.clip_eps)),
        epochs_per_update=int(payload.get("epochs_per_update", defaults.epochs_per_update)),
        seed=int(payload.get("seed", defaults.seed)),
    )


def validate_hyperparams_payload(payload: dict) -> list[Violation]:
    if not isinstance(payload, dict):
        return [Violation("payload", "must be an object")]
    try:
        hp = hyperparams_from_payload(payload)
    except (TypeError, ValueError) as exc:
        return [Violation("payload", f"malformed: {exc}")]
    return hp.validate()
