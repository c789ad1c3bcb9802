// Hash-routed single-page app. Every view reads all state from the REST API,
// so a reload reconstructs any screen.

import { ApiClient, ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import { dashboardView } from "./views/dashboard.js";
import { jobMonitorView } from "./views/jobMonitor.js";
import { mapEditorView } from "./views/mapEditor.js";
import { networkEditorView } from "./views/networkEditor.js";
import { hyperparamsEditorView, rewardsEditorView } from "./views/paramsEditor.js";
import { scenarioEditorView } from "./views/scenarioEditor.js";
import { evaluationWizardView, trainingWizardView } from "./views/wizards.js";

const TOKEN_KEY = "navlab-token";

export function createApp(root: HTMLElement, apiBase = ""): ApiClient {
  const api = new ApiClient(apiBase);
  api.token = localStorage.getItem(TOKEN_KEY);

  let teardown: (() => void) | null = null;

  function authScreen() {
    clear(root);
    const username = el("input", { placeholder: "username", id: "auth-username" });
    const password = el("input", { placeholder: "password (8+ chars)", type: "password", id: "auth-password" });
    const message = el("div", { class: "error-banner", style: "display:none" });
    const attempt = async (action: "login" | "register") => {
      try {
        if (action === "login") await api.login(username.value, password.value);
        else await api.register(username.value, password.value);
        localStorage.setItem(TOKEN_KEY, api.token!);
        window.location.hash = "#/";
        route();
      } catch (err) {
        message.textContent = err instanceof ApiError
          ? err.details.map((d) => `${d.field}: ${d.reason}`).join("; ") || err.message
          : String(err);
        message.style.display = "block";
      }
    };
    root.append(
      el("div", { class: "auth-box" },
        el("h2", {}, "navlab"),
        username, password,
        el("div", {},
          el("button", { id: "login-btn", onclick: () => attempt("login") }, "Log in"),
          el("button", { id: "register-btn", onclick: () => attempt("register") }, "Register")),
        message),
    );
  }

  function shell(renderView: (api: ApiClient, body: HTMLElement) => () => void) {
    clear(root);
    const body = el("div", { class: "view-body" });
    root.append(
      el("nav", { class: "topbar" },
        el("a", { href: "#/" }, "Dashboard"),
        el("a", { href: "#/maps" }, "Maps"),
        el("a", { href: "#/scenarios" }, "Scenarios"),
        el("a", { href: "#/networks" }, "Networks"),
        el("a", { href: "#/hyperparams" }, "Hyperparameters"),
        el("a", { href: "#/rewards" }, "Rewards"),
        el("a", { href: "#/train" }, "Train"),
        el("a", { href: "#/evaluate" }, "Evaluate"),
        el("button", {
          class: "logout", onclick: () => {
            localStorage.removeItem(TOKEN_KEY);
            api.token = null;
            route();
          },
        }, "Log out")),
      body,
    );
    teardown = renderView(api, body);
  }

  function route() {
    if (teardown) {
      teardown();
      teardown = null;
    }
    if (!api.token) {
      authScreen();
      return;
    }
    const hash = window.location.hash || "#/";
    const jobMatch = hash.match(/^#\/jobs\/(.+)$/);
    if (jobMatch) {
      shell((a, body) => jobMonitorView(a, body, jobMatch[1]));
      return;
    }
    switch (hash) {
      case "#/maps": shell(mapEditorView); break;
      case "#/scenarios": shell(scenarioEditorView); break;
      case "#/networks": shell(networkEditorView); break;
      case "#/hyperparams": shell(hyperparamsEditorView); break;
      case "#/rewards": shell(rewardsEditorView); break;
      case "#/train": shell(trainingWizardView); break;
      case "#/evaluate": shell(evaluationWizardView); break;
      default: shell(dashboardView);
    }
  }

  window.addEventListener("hashchange", route);
  route();
  return api;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  createApp(document.getElementById("app")!);
}
