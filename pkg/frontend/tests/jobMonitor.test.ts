// DOM-level: the monitor tail-follows logs without losing lines, exposes
// artifact downloads as they appear, and cancel flips the status badge.

import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { jobMonitorView } from "../src/views/jobMonitor.js";

function makeApi() {
  const api = new ApiClient("");
  const state = {
    log: "",
    status: "running" as string,
    artifacts: [] as string[],
  };
  api.getJob = vi.fn(async () => ({
    id: "j1", kind: "training", name: "run", owner: "u", status: state.status,
    config: {}, created_at: 0, error: null, artifacts: [...state.artifacts],
  } as any));
  api.jobLogs = vi.fn(async (_id: string, offset: number) => {
    const chunk = state.log.slice(offset);
    return { chunk, next_offset: offset + chunk.length };
  });
  api.cancelJob = vi.fn(async () => {
    state.status = "cancelled";
    return api.getJob("j1");
  });
  return { api, state };
}

async function flush(ms = 5) {
  await new Promise((r) => setTimeout(r, ms));
}

describe("job monitor", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "";
    root = document.createElement("div");
    document.body.append(root);
  });

  it("appends log chunks without losing lines across polls", async () => {
    const { api, state } = makeApi();
    state.log = "ts=1 step=0 event=start\n";
    const stop = jobMonitorView(api, root, "j1");
    await flush(600);
    state.log += "ts=2 step=10 loss=0.5\n";
    await flush(600);
    state.log += "ts=3 step=20 event=finished\n";
    state.status = "finished";
    await flush(1200);
    const text = root.querySelector("#log-view")!.textContent!;
    expect(text).toBe(state.log);
    stop();
  });

  it("shows download links for artifacts", async () => {
    const { api, state } = makeApi();
    state.artifacts = ["best_model.bin"];
    state.status = "finished";
    const stop = jobMonitorView(api, root, "j1");
    await flush(50);
    const link = root.querySelector('[data-artifact="best_model.bin"]');
    expect(link).not.toBeNull();
    stop();
  });

  it("cancel flips the status badge", async () => {
    const { api } = makeApi();
    const stop = jobMonitorView(api, root, "j1");
    await flush(50);
    root.querySelector<HTMLButtonElement>("#cancel-job")!.click();
    await flush(50);
    expect(root.querySelector(".badge")!.textContent).toBe("cancelled");
    stop();
  });
});
