// Job monitor: tail-follows the log via offset polling, exposes artifact
// downloads (best model mid-training, CSVs and plot data for evaluations),
// cancel while active, and renders the terminal status prominently.

import { ApiClient, Job } from "../api.js";
import { clear, downloadBlob, el, statusBadge } from "../dom.js";
import { LogPoller } from "../logpoller.js";

const TERMINAL = ["finished", "failed", "cancelled"];

export function jobMonitorView(api: ApiClient, root: HTMLElement, jobId: string): () => void {
  const header = el("div", { class: "job-header" });
  const logView = el("pre", { class: "log-view", id: "log-view" });
  const artifactsBox = el("div", { class: "artifacts" });
  const errorBox = el("div", { class: "error-banner", style: "display:none" });
  root.append(el("h2", {}, "Job monitor"), header, artifactsBox, errorBox, logView);

  let stopped = false;
  let job: Job | null = null;
  const poller = new LogPoller(api, jobId);

  function renderHeader() {
    clear(header);
    if (!job) return;
    header.append(
      statusBadge(job.status),
      el("strong", {}, ` ${job.kind}: ${job.name} `),
      el("span", { class: "muted" }, `(${job.id})`),
    );
    if (!TERMINAL.includes(job.status)) {
      header.append(el("button", {
        id: "cancel-job",
        onclick: async () => {
          job = await api.cancelJob(jobId);
          renderHeader();
        },
      }, "Cancel"));
    }
    if (job.status === "failed" && job.error) {
      errorBox.textContent = job.error;
      errorBox.style.display = "block";
    }
  }

  function renderArtifacts() {
    clear(artifactsBox);
    if (!job || job.artifacts.length === 0) return;
    artifactsBox.append(el("span", {}, "Artifacts: "));
    for (const name of job.artifacts) {
      artifactsBox.append(el("a", {
        href: api.artifactUrl(jobId, name),
        class: "download-link",
        "data-artifact": name,
        onclick: (ev: Event) => {
          ev.preventDefault();
          api.downloadArtifact(jobId, name).then((blob) => downloadBlob(blob, name));
        },
      }, name), " ");
    }
  }

  async function refreshJob() {
    job = await api.getJob(jobId);
    renderHeader();
    renderArtifacts();
  }

  (async () => {
    await refreshJob();
    const statusLoop = setInterval(async () => {
      if (stopped || (job && TERMINAL.includes(job.status))) {
        clearInterval(statusLoop);
        return;
      }
      await refreshJob();
    }, 1000);
    await poller.follow(
      (chunk) => {
        logView.append(document.createTextNode(chunk));
        logView.scrollTop = logView.scrollHeight;
      },
      () => stopped || (job !== null && TERMINAL.includes(job.status)),
    );
    await refreshJob();
  })();

  return () => { stopped = true; };
}
