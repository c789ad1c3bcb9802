// Hyperparameter and reward editors: bounded sliders/buttons with a help line
// under each field, then General Information (name + visibility) and Summary.

import { ApiClient, ApiError, DocKind } from "../api.js";
import { clear, el } from "../dom.js";
import {
  ChoiceDef,
  HYPERPARAM_CHOICES,
  HYPERPARAM_SLIDERS,
  REWARD_FIELDS,
  SliderDef,
  clampToDef,
  defaultsOf,
} from "../params.js";
import { Wizard } from "../wizard.js";

interface ParamsState {
  values: Record<string, number | string>;
  name: string;
  visibility: string;
}

function sliderRow(def: SliderDef, state: ParamsState, onChange: () => void): HTMLElement {
  const current = Number(state.values[def.key]);
  const valueLabel = el("span", { class: "slider-value", id: `${def.key}-value` }, String(current));
  const slider = el("input", {
    type: "range", min: def.min, max: def.max, step: def.step, value: current, id: def.key,
    oninput: (ev: Event) => {
      const v = clampToDef(def, Number((ev.target as HTMLInputElement).value));
      state.values[def.key] = v;
      valueLabel.textContent = String(v);
      onChange();
    },
  });
  return el("div", { class: "slider-row" },
    el("label", { for: def.key }, def.label), slider, valueLabel,
    el("small", { class: "help" }, def.help));
}

function choiceRow(def: ChoiceDef, state: ParamsState, onChange: () => void): HTMLElement {
  const group = el("div", { class: "choice-row", id: def.key });
  for (const option of def.options) {
    const button = el("button", {
      class: state.values[def.key] === option ? "choice selected" : "choice",
      "data-value": String(option),
      onclick: () => {
        state.values[def.key] = option;
        group.querySelectorAll("button").forEach((b) => b.classList.remove("selected"));
        button.classList.add("selected");
        onChange();
      },
    }, String(option));
    group.append(button);
  }
  return el("div", { class: "slider-row" },
    el("label", {}, def.label), group, el("small", { class: "help" }, def.help));
}

function editorFactory(
  kind: DocKind,
  title: string,
  sliders: SliderDef[],
  choices: ChoiceDef[],
) {
  return function view(api: ApiClient, root: HTMLElement): () => void {
    const state: ParamsState = {
      values: { ...defaultsOf(sliders), ...defaultsOf(choices) },
      name: "",
      visibility: "private",
    };
    const wizard = new Wizard<ParamsState>(
      [
        { id: "settings", title: "Settings", validate: () => [] },
        { id: "info", title: "General Information", validate: (s) => (s.name.trim() ? [] : ["name required"]) },
        { id: "summary", title: "Summary", validate: () => [] },
      ],
      state,
    );
    const container = el("div", {});
    const statusLine = el("div", { class: "muted", id: "save-status" });

    function settingsStep(): HTMLElement {
      const box = el("div", { class: "editor-fields" });
      for (const def of sliders) box.append(sliderRow(def, state, () => undefined));
      for (const def of choices) box.append(choiceRow(def, state, () => undefined));
      return box;
    }

    function infoStep(): HTMLElement {
      return el("div", {},
        el("label", {}, "Name ", el("input", {
          id: "params-name", value: state.name,
          oninput: (ev: Event) => {
            state.name = (ev.target as HTMLInputElement).value;
            updateButtons();
          },
        })),
        el("label", {}, " Visibility ", el("select", {
          id: "params-visibility",
          onchange: (ev: Event) => { state.visibility = (ev.target as HTMLSelectElement).value; },
        }, el("option", { value: "private" }, "private"), el("option", { value: "public" }, "public"))),
      );
    }

    function summaryStep(): HTMLElement {
      const rows = Object.entries(state.values).map(([k, v]) => el("li", {}, `${k} = ${v}`));
      return el("div", {}, el("p", {}, `${state.name} (${state.visibility})`), el("ul", {}, ...rows));
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
      const body = wizard.current === 0 ? settingsStep() : wizard.current === 1 ? infoStep() : summaryStep();
      nextBtn = el("button", { id: "wizard-next", onclick: () => { if (wizard.next()) render(); } }, "Next");
      submitBtn = el("button", { id: "wizard-submit", onclick: submit }, "Submit");
      container.append(
        steps, body,
        el("div", { class: "wizard-nav" },
          el("button", { id: "wizard-back", onclick: () => { if (wizard.back()) render(); } }, "Back"),
          nextBtn, submitBtn),
        statusLine);
      updateButtons();
    }

    async function submit() {
      if (!wizard.canSubmit()) return;
      try {
        const doc = await api.createDoc(kind, state.name, state.visibility, state.values);
        statusLine.textContent = `saved as ${doc.id}`;
      } catch (err) {
        statusLine.textContent = err instanceof ApiError
          ? err.details.map((d) => `${d.field}: ${d.reason}`).join("; ") || err.message
          : String(err);
      }
    }

    root.append(el("h2", {}, title), container);
    render();
    return () => {};
  };
}

export const hyperparamsEditorView = editorFactory(
  "hyperparams", "Hyperparameter editor", HYPERPARAM_SLIDERS, HYPERPARAM_CHOICES);
export const rewardsEditorView = editorFactory(
  "rewards", "Reward editor", REWARD_FIELDS, []);
