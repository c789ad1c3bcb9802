// Training and evaluation wizards. Each step gates the next on validity and a
// server rejection maps back onto the submit step. On success the browser
// lands on the job monitor.

import { ApiClient, ApiError, DocumentMeta, RobotPreset } from "../api.js";
import { clear, el } from "../dom.js";
import { checkArchitecture } from "../shapes.js";
import { Wizard } from "../wizard.js";

interface TrainingState {
  mapId: string;
  robot: RobotPreset | null;
  hyperparamsId: string;
  scenarioId: string;
  hyperparamsTaskMode: string;
  networkId: string;
  rewardsId: string;
  name: string;
}

function picker(
  id: string, docs: DocumentMeta[], value: string, onPick: (id: string) => void,
): HTMLElement {
  const select = el("select", { id, onchange: (ev: Event) => onPick((ev.target as HTMLSelectElement).value) },
    el("option", { value: "" }, "select..."));
  for (const d of docs) select.append(el("option", { value: d.id }, d.name));
  select.value = value;
  return select;
}

export function trainingWizardView(api: ApiClient, root: HTMLElement): () => void {
  const state: TrainingState = {
    mapId: "", robot: null, hyperparamsId: "", scenarioId: "", hyperparamsTaskMode: "random",
    networkId: "", rewardsId: "", name: "",
  };
  let robots: RobotPreset[] = [];
  let maps: DocumentMeta[] = [];
  let networks: DocumentMeta[] = [];
  let hyperparams: DocumentMeta[] = [];
  let rewards: DocumentMeta[] = [];
  let scenarios: DocumentMeta[] = [];

  const wizard = new Wizard<TrainingState>(
    [
      {
        id: "map-robot", title: "Map & robot",
        validate: (s) => {
          const errors = [];
          if (!s.mapId) errors.push("select a map");
          if (!s.robot) errors.push("select a robot");
          return errors;
        },
      },
      {
        id: "hyperparams", title: "Hyperparameters",
        validate: (s) => {
          if (!s.hyperparamsId) return ["select a hyperparameter set"];
          if (s.hyperparamsTaskMode === "scenario" && !s.scenarioId) {
            return ["scenario task mode needs a scenario"];
          }
          return [];
        },
      },
      {
        id: "network", title: "Network",
        validate: (s) => (s.networkId ? [] : ["select a network architecture"]),
      },
      {
        id: "rewards", title: "Rewards",
        validate: (s) => (s.rewardsId ? [] : ["select a reward set"]),
      },
      {
        id: "name", title: "Name & submit",
        validate: (s) => (s.name.trim() ? [] : ["name the training"]),
      },
    ],
    state,
  );

  const container = el("div", {});
  const errorLine = el("div", { class: "error-banner", id: "wizard-error", style: "display:none" });

  /** Networks usable here: validated for the selected robot's dimensions. */
  function compatibleNetworks(): DocumentMeta[] {
    if (!state.robot) return [];
    return networks.filter((doc) => {
      const modules = doc.payload?.modules ?? [];
      return checkArchitecture(modules, state.robot!.obs_dim, state.robot!.action_dim).issue === null;
    });
  }

  function stepBody(): HTMLElement {
    switch (wizard.current) {
      case 0:
        return el("div", {},
          el("div", {}, "Map ", picker("pick-map", maps, state.mapId, (v) => { state.mapId = v; render(); })),
          el("div", {}, "Robot ", el("select", {
            id: "pick-robot",
            onchange: (ev: Event) => {
              state.robot = robots.find((r) => r.id === (ev.target as HTMLSelectElement).value) ?? null;
              state.networkId = "";
              render();
            },
          }, el("option", { value: "" }, "select..."),
            ...robots.map((r) => {
              const opt = el("option", { value: r.id }, r.name);
              if (state.robot?.id === r.id) opt.setAttribute("selected", "selected");
              return opt;
            }))),
        );
      case 1: {
        const box = el("div", {},
          el("div", {}, "Hyperparameters ", picker("pick-hyperparams", hyperparams, state.hyperparamsId, (v) => {
            state.hyperparamsId = v;
            const doc = hyperparams.find((d) => d.id === v);
            state.hyperparamsTaskMode = doc?.payload?.task_mode ?? "random";
            render();
          })));
        if (state.hyperparamsTaskMode === "scenario") {
          box.append(el("div", {}, "Scenario ",
            picker("pick-scenario", scenarios, state.scenarioId, (v) => { state.scenarioId = v; render(); })));
        }
        return box;
      }
      case 2: {
        const usable = compatibleNetworks();
        return el("div", {},
          el("div", {}, `Architectures valid for ${state.robot?.name ?? "?"}: `,
            picker("pick-network", usable, state.networkId, (v) => { state.networkId = v; render(); })),
          el("small", { class: "help" },
            `${networks.length - usable.length} incompatible architecture(s) hidden`),
        );
      }
      case 3:
        return el("div", {}, "Rewards ",
          picker("pick-rewards", rewards, state.rewardsId, (v) => { state.rewardsId = v; render(); }));
      default:
        return el("div", {},
          el("label", {}, "Training name ", el("input", {
            id: "training-name", value: state.name,
            oninput: (ev: Event) => { state.name = (ev.target as HTMLInputElement).value; updateButtons(); },
          })),
        );
    }
  }

  let nextBtn: HTMLButtonElement;
  let submitBtn: HTMLButtonElement;

  function updateButtons() {
    nextBtn.disabled = !wizard.stepValid(wizard.current) || wizard.current === wizard.steps.length - 1;
    submitBtn.disabled = !(wizard.current === wizard.steps.length - 1 && wizard.canSubmit());
  }

  function render() {
    clear(container);
    container.append(
      el("div", { class: "step-indicator" },
        ...wizard.steps.map((s, i) => el("span", {
          class: i === wizard.current ? "current" : wizard.stepValid(i) ? "completed" : "",
        }, `${i + 1}. ${s.title}`))),
      stepBody(),
    );
    nextBtn = el("button", { id: "wizard-next", onclick: () => { if (wizard.next()) render(); } }, "Next");
    submitBtn = el("button", { id: "wizard-submit", onclick: submit }, "Start training");
    container.append(
      el("div", { class: "wizard-nav" },
        el("button", { id: "wizard-back", onclick: () => { if (wizard.back()) render(); } }, "Back"),
        nextBtn, submitBtn),
      errorLine);
    updateButtons();
  }

  async function submit() {
    if (!wizard.canSubmit()) return;
    try {
      const job = await api.startTraining(state.name, {
        map_id: state.mapId,
        robot_id: state.robot!.id,
        network_id: state.networkId,
        hyperparams_id: state.hyperparamsId,
        rewards_id: state.rewardsId,
        scenario_id: state.scenarioId || undefined,
      });
      window.location.hash = `#/jobs/${job.id}`;
    } catch (err) {
      errorLine.textContent = err instanceof ApiError
        ? err.details.map((d) => `${d.field}: ${d.reason}`).join("; ") || err.message
        : String(err);
      errorLine.style.display = "block";
    }
  }

  (async () => {
    [robots, maps, networks, hyperparams, rewards, scenarios] = await Promise.all([
      api.robots(), api.listDocs("maps"), api.listDocs("networks"),
      api.listDocs("hyperparams"), api.listDocs("rewards"), api.listDocs("scenarios"),
    ]);
    render();
  })();

  root.append(el("h2", {}, "New training"), container);
  render();
  return () => {};
}

interface EvaluationState {
  robot: RobotPreset | null;
  planner: string; // "dwa" | training job id
  mode: "scenario" | "random";
  scenarioId: string;
  mapId: string;
  episodes: number;
  obstacles: number;
  name: string;
}

export function evaluationWizardView(api: ApiClient, root: HTMLElement): () => void {
  const state: EvaluationState = {
    robot: null, planner: "", mode: "scenario", scenarioId: "", mapId: "",
    episodes: 10, obstacles: 0, name: "",
  };
  let robots: RobotPreset[] = [];
  let scenarios: DocumentMeta[] = [];
  let maps: DocumentMeta[] = [];
  let trainings: { id: string; name: string }[] = [];

  const wizard = new Wizard<EvaluationState>(
    [
      { id: "robot", title: "Robot", validate: (s) => (s.robot ? [] : ["select a robot"]) },
      { id: "planner", title: "Planner", validate: (s) => (s.planner ? [] : ["select a planner"]) },
      {
        id: "task", title: "Task",
        validate: (s) => {
          const errors: string[] = [];
          if (s.mode === "scenario" && !s.scenarioId) errors.push("select a scenario");
          if (s.mode === "random" && !s.mapId) errors.push("select a map");
          if (!(s.episodes >= 1)) errors.push("episodes must be at least 1");
          return errors;
        },
      },
      { id: "name", title: "Name & submit", validate: (s) => (s.name.trim() ? [] : ["name the evaluation"]) },
    ],
    state,
  );

  const container = el("div", {});
  const errorLine = el("div", { class: "error-banner", id: "wizard-error", style: "display:none" });

  function stepBody(): HTMLElement {
    switch (wizard.current) {
      case 0:
        return el("div", {}, "Robot ", el("select", {
          id: "pick-robot",
          onchange: (ev: Event) => {
            state.robot = robots.find((r) => r.id === (ev.target as HTMLSelectElement).value) ?? null;
            render();
          },
        }, el("option", { value: "" }, "select..."),
          ...robots.map((r) => {
            const opt = el("option", { value: r.id }, r.name);
            if (state.robot?.id === r.id) opt.setAttribute("selected", "selected");
            return opt;
          })));
      case 1: {
        const select = el("select", {
          id: "pick-planner",
          onchange: (ev: Event) => { state.planner = (ev.target as HTMLSelectElement).value; render(); },
        },
          el("option", { value: "" }, "select..."),
          el("option", { value: "dwa" }, "DWA (builtin)"),
          ...trainings.map((t) => el("option", { value: t.id }, `trained model: ${t.name}`)));
        select.value = state.planner;
        return el("div", {}, "Planner ", select);
      }
      case 2: {
        const toggle = el("button", {
          id: "mode-toggle",
          onclick: () => {
            state.mode = state.mode === "scenario" ? "random" : "scenario";
            render();
          },
        }, `mode: ${state.mode}`);
        const box = el("div", {}, toggle);
        if (state.mode === "scenario") {
          box.append(el("div", {}, "Scenario ", (() => {
            const s = el("select", {
              id: "pick-scenario",
              onchange: (ev: Event) => { state.scenarioId = (ev.target as HTMLSelectElement).value; render(); },
            }, el("option", { value: "" }, "select..."),
              ...scenarios.map((d) => el("option", { value: d.id }, d.name)));
            s.value = state.scenarioId;
            return s;
          })()));
        } else {
          box.append(
            el("div", {}, "Map ", (() => {
              const s = el("select", {
                id: "pick-map",
                onchange: (ev: Event) => { state.mapId = (ev.target as HTMLSelectElement).value; render(); },
              }, el("option", { value: "" }, "select..."),
                ...maps.map((d) => el("option", { value: d.id }, d.name)));
              s.value = state.mapId;
              return s;
            })()),
            el("label", { id: "obstacle-count-row" }, "obstacles ", el("input", {
              id: "eval-obstacles", type: "number", min: 0, value: state.obstacles,
              onchange: (ev: Event) => { state.obstacles = Number((ev.target as HTMLInputElement).value); },
            })),
          );
        }
        box.append(el("label", { id: "episode-count-row" }, " episodes ", el("input", {
          id: "eval-episodes", type: "number", min: 1, value: state.episodes,
          onchange: (ev: Event) => { state.episodes = Number((ev.target as HTMLInputElement).value); updateButtons(); },
        })));
        return box;
      }
      default:
        return el("div", {}, el("label", {}, "Evaluation name ", el("input", {
          id: "evaluation-name", value: state.name,
          oninput: (ev: Event) => { state.name = (ev.target as HTMLInputElement).value; updateButtons(); },
        })));
    }
  }

  let nextBtn: HTMLButtonElement;
  let submitBtn: HTMLButtonElement;

  function updateButtons() {
    nextBtn.disabled = !wizard.stepValid(wizard.current) || wizard.current === wizard.steps.length - 1;
    submitBtn.disabled = !(wizard.current === wizard.steps.length - 1 && wizard.canSubmit());
  }

  function render() {
    clear(container);
    container.append(
      el("div", { class: "step-indicator" },
        ...wizard.steps.map((s, i) => el("span", {
          class: i === wizard.current ? "current" : wizard.stepValid(i) ? "completed" : "",
        }, `${i + 1}. ${s.title}`))),
      stepBody(),
    );
    nextBtn = el("button", { id: "wizard-next", onclick: () => { if (wizard.next()) render(); } }, "Next");
    submitBtn = el("button", { id: "wizard-submit", onclick: submit }, "Start evaluation");
    container.append(
      el("div", { class: "wizard-nav" },
        el("button", { id: "wizard-back", onclick: () => { if (wizard.back()) render(); } }, "Back"),
        nextBtn, submitBtn),
      errorLine);
    updateButtons();
  }

  async function submit() {
    if (!wizard.canSubmit()) return;
    try {
      const config: Record<string, unknown> = {
        robot_id: state.robot!.id,
        planner: state.planner === "dwa" ? { type: "dwa" } : { type: "model", job_id: state.planner },
        episodes: state.episodes,
      };
      if (state.mode === "scenario") config.scenario_id = state.scenarioId;
      else {
        config.map_id = state.mapId;
        config.n_obstacles = state.obstacles;
      }
      const job = await api.startEvaluation(state.name, config);
      window.location.hash = `#/jobs/${job.id}`;
    } catch (err) {
      errorLine.textContent = err instanceof ApiError
        ? err.details.map((d) => `${d.field}: ${d.reason}`).join("; ") || err.message
        : String(err);
      errorLine.style.display = "block";
    }
  }

  (async () => {
    const [r, s, m, jobs] = await Promise.all([
      api.robots(), api.listDocs("scenarios"), api.listDocs("maps"),
      api.listJobs({ kind: "training", status: "finished" }),
    ]);
    robots = r;
    scenarios = s;
    maps = m;
    trainings = jobs
      .filter((j) => j.artifacts.includes("best_model.bin"))
      .map((j) => ({ id: j.id, name: j.name }));
    render();
  })();

  root.append(el("h2", {}, "New evaluation"), container);
  render();
  return () => {};
}
