// Network editor: ordered module list with add / delete-last, per-module type
// switch and parameter fields, live shape propagation with the error pinned to
// the module that breaks the chain, then General Information -> Summary steps.

import { ApiClient, ApiError, RobotPreset } from "../api.js";
import { clear, el } from "../dom.js";
import { NetModule, checkArchitecture, defaultModule } from "../shapes.js";
import { Wizard } from "../wizard.js";

interface EditorState {
  robot: RobotPreset | null;
  modules: NetModule[];
  name: string;
  visibility: string;
}

export function networkEditorView(api: ApiClient, root: HTMLElement): () => void {
  const state: EditorState = { robot: null, modules: [defaultModule()], name: "", visibility: "private" };

  const wizard = new Wizard<EditorState>(
    [
      {
        id: "architecture",
        title: "Architecture",
        validate: (s) => {
          if (!s.robot) return ["select a robot"];
          const { issue } = checkArchitecture(s.modules, s.robot.obs_dim, s.robot.action_dim);
          return issue ? [`module ${issue.moduleIndex}: ${issue.message}`] : [];
        },
      },
      {
        id: "info",
        title: "General Information",
        validate: (s) => (s.name.trim() ? [] : ["name must not be empty"]),
      },
      { id: "summary", title: "Summary", validate: () => [] },
    ],
    state,
  );

  const container = el("div", {});
  const statusLine = el("div", { class: "muted" });

  function moduleFields(m: NetModule, index: number): HTMLElement {
    const fields = el("span", { class: "module-fields" });
    const num = (key: string, value: number) =>
      el("input", {
        type: "number", min: 1, value, class: "module-param", id: `m${index}-${key}`,
        onchange: (ev: Event) => {
          (m as any)[key] = Number((ev.target as HTMLInputElement).value);
          render();
        },
      });
    if (m.type === "linear") {
      fields.append("in ", num("in_features", m.in_features), " out ", num("out_features", m.out_features));
      fields.append(el("label", {}, " bias ", el("input", {
        type: "checkbox", checked: m.bias, id: `m${index}-bias`,
        onchange: (ev: Event) => {
          m.bias = (ev.target as HTMLInputElement).checked;
          render();
        },
      })));
    } else if (m.type === "conv1d") {
      fields.append(
        "in_ch ", num("in_channels", m.in_channels),
        " out_ch ", num("out_channels", m.out_channels),
        " k ", num("kernel_size", m.kernel_size),
        " stride ", num("stride", m.stride),
      );
    }
    return fields;
  }

  function architectureStep(): HTMLElement {
    const box = el("div", {});
    const robotSelect = el("select", { id: "robot-select" }, el("option", { value: "" }, "select a robot..."));
    api.robots().then((robots) => {
      for (const r of robots) {
        const opt = el("option", { value: r.id }, `${r.name} (obs ${r.obs_dim} -> act ${r.action_dim})`);
        robotSelect.append(opt);
      }
      if (state.robot) robotSelect.value = state.robot.id;
    });
    robotSelect.addEventListener("change", async () => {
      const robots = await api.robots();
      state.robot = robots.find((r) => r.id === robotSelect.value) ?? null;
      render();
    });
    box.append(el("div", {}, "Robot: ", robotSelect));

    const check = state.robot
      ? checkArchitecture(state.modules, state.robot.obs_dim, state.robot.action_dim)
      : { issue: null, outputSizes: [] as string[] };

    const list = el("ol", { class: "module-list" });
    state.modules.forEach((m, i) => {
      const typeSelect = el("select", {
        id: `m${i}-type`,
        onchange: (ev: Event) => {
          const kind = (ev.target as HTMLSelectElement).value;
          if (kind === "linear") state.modules[i] = defaultModule();
          else if (kind === "conv1d") state.modules[i] = { type: "conv1d", in_channels: 1, out_channels: 1, kernel_size: 3, stride: 1 };
          else state.modules[i] = { type: "relu" };
          render();
        },
      },
        el("option", { value: "linear" }, "linear"),
        el("option", { value: "conv1d" }, "conv1d"),
        el("option", { value: "relu" }, "relu"));
      typeSelect.value = m.type;
      const item = el("li", { class: "module-item", id: `module-${i}` },
        typeSelect, " ", moduleFields(m, i),
        check.outputSizes[i] ? el("span", { class: "shape-note" }, ` -> ${check.outputSizes[i]}`) : null);
      if (check.issue && check.issue.moduleIndex === i) {
        item.append(el("div", { class: "inline-error", id: `module-${i}-error` }, check.issue.message));
        item.classList.add("module-invalid");
      }
      list.append(item);
    });
    box.append(list, el("div", {},
      el("button", {
        id: "add-module",
        onclick: () => {
          state.modules.push(defaultModule());
          render();
        },
      }, "Add module"),
      el("button", {
        id: "delete-last",
        onclick: () => {
          if (state.modules.length > 1) state.modules.pop();
          render();
        },
      }, "Delete last"),
    ));
    return box;
  }

  function infoStep(): HTMLElement {
    return el("div", {},
      el("label", {}, "Name ", el("input", {
        id: "net-name", value: state.name,
        oninput: (ev: Event) => {
          state.name = (ev.target as HTMLInputElement).value;
          statusLine.textContent = "";
          updateButtons();
        },
      })),
      el("label", {}, " Visibility ", el("select", {
        id: "net-visibility",
        onchange: (ev: Event) => { state.visibility = (ev.target as HTMLSelectElement).value; },
      }, el("option", { value: "private" }, "private"), el("option", { value: "public" }, "public"))),
    );
  }

  function summaryStep(): HTMLElement {
    const kinds = state.modules.map((m) => m.type).join(" -> ");
    return el("div", {},
      el("p", {}, `Robot: ${state.robot?.name ?? "?"}`),
      el("p", {}, `Modules: ${kinds}`),
      el("p", {}, `Name: ${state.name} (${state.visibility})`),
    );
  }

  let nextBtn: HTMLButtonElement;
  let submitBtn: HTMLButtonElement;

  function updateButtons() {
    nextBtn.disabled = !wizard.stepValid(wizard.current) || wizard.current === wizard.steps.length - 1;
    submitBtn.disabled = !(wizard.current === wizard.steps.length - 1 && wizard.canSubmit());
  }

  function render() {
    clear(container);
    const steps = el("div", { class: "step-indicator" },
      ...wizard.steps.map((s, i) => el("span", {
        class: i === wizard.current ? "current" : wizard.stepValid(i) ? "completed" : "",
      }, `${i + 1}. ${s.title}`)));
    const body = wizard.current === 0 ? architectureStep()
      : wizard.current === 1 ? infoStep() : summaryStep();
    nextBtn = el("button", {
      id: "wizard-next",
      onclick: () => {
        if (wizard.next()) render();
      },
    }, "Next");
    submitBtn = el("button", { id: "wizard-submit", onclick: submit }, "Submit");
    const backBtn = el("button", {
      id: "wizard-back",
      onclick: () => {
        if (wizard.back()) render();
      },
    }, "Back");
    container.append(steps, body, el("div", { class: "wizard-nav" }, backBtn, nextBtn, submitBtn), statusLine);
    updateButtons();
  }

  async function submit() {
    if (!wizard.canSubmit() || !state.robot) return;
    try {
      const doc = await api.createDoc("networks", state.name, state.visibility, {
        robot_id: state.robot.id,
        modules: state.modules,
      });
      statusLine.textContent = `saved as ${doc.id}`;
    } catch (err) {
      statusLine.textContent = err instanceof ApiError
        ? err.details.map((d) => `${d.field}: ${d.reason}`).join("; ") || err.message
        : String(err);
    }
  }

  root.append(el("h2", {}, "Network editor"), container);
  render();
  return () => {};
}
