// Slider/button definitions for the hyperparameter and reward editors. Bounds
// mirror the server so out-of-range values are unrepresentable in the UI; the
// server still revalidates on save.

export interface SliderDef {
  key: string;
  label: string;
  min: number;
  max: number;
  step: number;
  default: number;
  log?: boolean;
  help: string;
}

export interface ChoiceDef {
  key: string;
  label: string;
  options: (string | number)[];
  default: string | number;
  help: string;
}

export const HYPERPARAM_SLIDERS: SliderDef[] = [
  {
    key: "total_timesteps", label: "Training step size",
    min: 10_000, max: 2_000_000, step: 10_000, default: 200_000,
    help: "Total simulator steps the training may consume.",
  },
  {
    key: "eval_frequency", label: "Evaluation step size",
    min: 1_000, max: 100_000, step: 1_000, default: 20_000,
    help: "How many steps pass between periodic evaluations.",
  },
  {
    key: "learning_rate", label: "Learning rate",
    min: 1e-5, max: 1e-2, step: 1e-5, default: 3e-4, log: true,
    help: "Adam step size for both the policy and the value function.",
  },
  {
    key: "n_steps", label: "Rollout length",
    min: 256, max: 8192, step: 256, default: 2048,
    help: "Steps collected per policy update.",
  },
  {
    key: "gamma", label: "Discount factor",
    min: 0.9, max: 0.999, step: 0.001, default: 0.99,
    help: "Weight of future rewards against immediate ones.",
  },
];

export const HYPERPARAM_CHOICES: ChoiceDef[] = [
  {
    key: "batch_size", label: "Batch size", options: [32, 64, 128, 256], default: 64,
    help: "Minibatch size inside each update.",
  },
  {
    key: "task_mode", label: "Task mode", options: ["random", "scenario"], default: "random",
    help: "Train on freshly randomized tasks or replay one fixed scenario.",
  },
];

export const REWARD_FIELDS: SliderDef[] = [
  {
    key: "goal_reached", label: "Goal reached", min: 0.1, max: 100, step: 0.1, default: 15,
    help: "One-time bonus when the robot arrives at the goal.",
  },
  {
    key: "collision", label: "Collision", min: -100, max: 0, step: 0.1, default: -15,
    help: "One-time penalty when the robot makes contact.",
  },
  {
    key: "progress_factor", label: "Progress per meter", min: 0, max: 5, step: 0.05, default: 0.25,
    help: "Reward per meter of distance-to-goal closed this step.",
  },
  {
    key: "safe_dist_penalty", label: "Safety margin penalty", min: -5, max: 0, step: 0.05, default: -0.15,
    help: "Per-step penalty while closer than 0.5 m to an obstacle.",
  },
  {
    key: "step_penalty", label: "Step penalty", min: -1, max: 0, step: 0.01, default: -0.01,
    help: "Constant per-step cost that discourages dawdling.",
  },
];

export const MAP_SLIDERS: SliderDef[] = [
  { key: "width", label: "Width (m)", min: 4, max: 50, step: 1, default: 10, help: "Map width in meters." },
  { key: "height", label: "Height (m)", min: 4, max: 50, step: 1, default: 10, help: "Map height in meters." },
  { key: "obstacle_count", label: "Obstacles", min: 0, max: 60, step: 1, default: 8, help: "Static obstacles (outdoor)." },
  { key: "obstacle_size", label: "Obstacle size (m)", min: 0.2, max: 4, step: 0.1, default: 0.8, help: "Characteristic obstacle edge length." },
  { key: "room_count", label: "Rooms", min: 1, max: 12, step: 1, default: 4, help: "Rooms carved into indoor maps." },
  { key: "room_size", label: "Room size (m)", min: 1, max: 12, step: 0.5, default: 3, help: "Characteristic room edge length." },
  { key: "corridor_width", label: "Corridor width (m)", min: 0.6, max: 4, step: 0.1, default: 1.5, help: "Width of passages between rooms." },
  { key: "seed", label: "Seed", min: 0, max: 99_999, step: 1, default: 0, help: "Generator seed; identical seeds reproduce the map." },
];

export function defaultsOf(defs: SliderDef[] | ChoiceDef[]): Record<string, number | string> {
  const out: Record<string, number | string> = {};
  for (const d of defs) out[d.key] = d.default as number | string;
  return out;
}

export function clampToDef(def: SliderDef, value: number): number {
  if (Number.isNaN(value)) return def.default;
  return Math.min(def.max, Math.max(def.min, value));
}
