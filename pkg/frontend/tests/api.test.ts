import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function mockFetch(status: number, body: unknown) {
  return vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    text: async () => JSON.stringify(body),
  })) as unknown as typeof fetch;
}

describe("api client", () => {
  afterEach(() => vi.restoreAllMocks());

  it("sends the bearer token on authenticated calls", async () => {
    const fetchMock = mockFetch(200, []);
    globalThis.fetch = fetchMock;
    const api = new ApiClient("http://x");
    api.token = "tok123";
    await api.robots();
    const [url, init] = (fetchMock as any).mock.calls[0];
    expect(url).toBe("http://x/robots");
    expect(init.headers.Authorization).toBe("Bearer tok123");
  });

  it("stores the token after register", async () => {
    globalThis.fetch = mockFetch(200, { token: "fresh" });
    const api = new ApiClient("");
    await api.register("alice", "password123");
    expect(api.token).toBe("fresh");
  });

  it("raises ApiError with field details on 422", async () => {
    globalThis.fetch = mockFetch(422, {
      error: "validation failed",
      details: [{ field: "modules[0]", reason: "in_features must be 362" }],
    });
    const api = new ApiClient("");
    api.token = "t";
    try {
      await api.createDoc("networks", "n", "private", {});
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(422);
      expect((err as ApiError).details[0].field).toBe("modules[0]");
    }
  });

  it("builds job queries", async () => {
    const fetchMock = mockFetch(200, []);
    globalThis.fetch = fetchMock;
    const api = new ApiClient("");
    api.token = "t";
    await api.listJobs({ kind: "training", status: "finished" });
    expect((fetchMock as any).mock.calls[0][0]).toBe("/jobs?kind=training&status=finished");
  });
});
