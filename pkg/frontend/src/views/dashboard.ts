// Dashboard: latest jobs with live status badges plus links to every tool.

import { ApiClient, Job } from "../api.js";
import { clear, el, statusBadge } from "../dom.js";

const TOOLS: [string, string][] = [
  ["#/maps", "Map editor"],
  ["#/scenarios", "Scenario editor"],
  ["#/networks", "Network editor"],
  ["#/hyperparams", "Hyperparameters"],
  ["#/rewards", "Rewards"],
  ["#/train", "New training"],
  ["#/evaluate", "New evaluation"],
];

export function dashboardView(api: ApiClient, root: HTMLElement): () => void {
  const jobList = el("div", { class: "job-list" });
  root.append(
    el("h2", {}, "Dashboard"),
    el("div", { class: "tool-links" },
      ...TOOLS.map(([href, label]) => el("a", { href, class: "tool-link" }, label))),
    el("h3", {}, "Latest tasks"),
    jobList,
  );

  let stopped = false;

  function render(jobs: Job[]) {
    clear(jobList);
    if (jobs.length === 0) {
      jobList.append(el("p", { class: "muted" }, "No tasks yet."));
      return;
    }
    for (const job of jobs.slice(-12).reverse()) {
      const row = el("div", { class: "job-row" },
        statusBadge(job.status),
        el("a", { href: `#/jobs/${job.id}` }, `${job.kind}: ${job.name}`),
      );
      if (job.kind === "training" && job.status === "finished"
          && job.artifacts.includes("best_model.bin")) {
        row.append(el("a", {
          class: "download-link",
          href: api.artifactUrl(job.id, "best_model.bin"),
          onclick: (ev: Event) => {
            ev.preventDefault();
            api.downloadArtifact(job.id, "best_model.bin").then((blob) => {
              import("../dom.js").then(({ downloadBlob }) => downloadBlob(blob, "best_model.bin"));
            });
          },
        }, "download model"));
      }
      jobList.append(row);
    }
  }

  async function refresh() {
    if (stopped) return;
    try {
      render(await api.listJobs());
    } catch {
      jobList.append(el("p", { class: "error-banner" }, "API unreachable, retrying..."));
    }
    if (!stopped) setTimeout(refresh, 2000);
  }
  refresh();
  return () => { stopped = true; };
}
