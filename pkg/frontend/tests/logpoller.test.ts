import { describe, expect, it } from "vitest";

import { LogPoller } from "../src/logpoller.js";

class FakeLog {
  full = "";

  async jobLogs(_id: string, offset: number) {
    const chunk = this.full.slice(offset);
    return { chunk, next_offset: offset + chunk.length };
  }
}

describe("log poller", () => {
  it("reconstructs the full log across staggered polls", async () => {
    const server = new FakeLog();
    const poller = new LogPoller(server, "job1");
    server.full = "line1\nli";
    await poller.poll();
    server.full = "line1\nline2\nline3\n";
    await poller.poll();
    expect(poller.text).toBe(server.full);
  });

  it("never loses or duplicates bytes regardless of cadence", async () => {
    const server = new FakeLog();
    const poller = new LogPoller(server, "job1");
    const pieces = ["a", "bc", "", "defg\n", "h"];
    for (const piece of pieces) {
      server.full += piece;
      await poller.poll();
      await poller.poll(); // extra polls are harmless
    }
    expect(poller.text).toBe(server.full);
  });

  it("follow drains the tail after stop flips", async () => {
    const server = new FakeLog();
    const poller = new LogPoller(server, "job1");
    server.full = "early\n";
    const chunks: string[] = [];
    let stop = false;
    const task = poller.follow((c) => chunks.push(c), () => stop, 1);
    await new Promise((r) => setTimeout(r, 10));
    server.full += "late\n";
    stop = true;
    await task;
    expect(chunks.join("")).toBe(server.full);
  });
});
