// Typed client for the navlab REST API. Every view talks to the backend
// exclusively through this module.

export interface ApiErrorDetail {
  field?: string;
  reason?: string;
  [key: string]: unknown;
}

export class ApiError extends Error {
  status: number;
  details: ApiErrorDetail[];

  constructor(status: number, message: string, details: ApiErrorDetail[] = []) {
    super(message);
    this.status = status;
    this.details = details;
  }
}

export type DocKind = "maps" | "scenarios" | "networks" | "hyperparams" | "rewards";

export interface DocumentMeta {
  id: string;
  kind: DocKind;
  name: string;
  owner: string;
  visibility: "public" | "private";
  created_at: number;
  payload: any;
}

export interface RobotPreset {
  id: string;
  name: string;
  kinematics: "differential" | "omnidirectional";
  radius: number;
  v_max: number;
  v_min: number;
  omega_max: number;
  lidar: { beams: number; fov: number; max_range: number };
  action_dim: number;
  obs_dim: number;
}

export interface Job {
  id: string;
  kind: "training" | "evaluation";
  name: string;
  owner: string;
  status: "queued" | "running" | "finished" | "failed" | "cancelled";
  config: any;
  created_at: number;
  error: string | null;
  artifacts: string[];
}

export interface LogChunk {
  chunk: string;
  next_offset: number;
}

export class ApiClient {
  base: string;
  token: string | null = null;

  constructor(base = "") {
    this.base = base.replace(/\/$/, "");
  }

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const resp = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (resp.status === 204) return null;
    const text = await resp.text();
    let data: any = null;
    try {
      data = text ? JSON.parse(text) : null;
    } catch {
      data = text;
    }
    if (!resp.ok) {
      const message = (data && data.error) || `HTTP ${resp.status}`;
      throw new ApiError(resp.status, message, (data && data.details) || []);
    }
    return data;
  }

  // auth
  async register(username: string, password: string): Promise<string> {
    const out = await this.request("POST", "/auth/register", { username, password });
    this.token = out.token;
    return out.token;
  }

  async login(username: string, password: string): Promise<string> {
    const out = await this.request("POST", "/auth/login", { username, password });
    this.token = out.token;
    return out.token;
  }

  me(): Promise<{ id: string; username: string }> {
    return this.request("GET", "/me");
  }

  robots(): Promise<RobotPreset[]> {
    return this.request("GET", "/robots");
  }

  // documents
  listDocs(kind: DocKind): Promise<DocumentMeta[]> {
    return this.request("GET", `/docs/${kind}`);
  }

  getDoc(kind: DocKind, id: string): Promise<DocumentMeta> {
    return this.request("GET", `/docs/${kind}/${id}`);
  }

  createDoc(
    kind: DocKind, name: string, visibility: string, payload: unknown,
  ): Promise<DocumentMeta> {
    return this.request("POST", `/docs/${kind}`, { name, visibility, payload });
  }

  updateDoc(kind: DocKind, id: string, patch: Partial<DocumentMeta>): Promise<DocumentMeta> {
    return this.request("PUT", `/docs/${kind}/${id}`, patch);
  }

  deleteDoc(kind: DocKind, id: string): Promise<void> {
    return this.request("DELETE", `/docs/${kind}/${id}`);
  }

  generateMap(params: Record<string, unknown>, opts: { store?: boolean; name?: string; visibility?: string } = {}): Promise<DocumentMeta> {
    return this.request("POST", "/docs/maps/generate", { params, ...opts });
  }

  // jobs
  startTraining(name: string, config: Record<string, unknown>): Promise<Job> {
    return this.request("POST", "/jobs/trainings", { name, config });
  }

  startEvaluation(name: string, config: Record<string, unknown>): Promise<Job> {
    return this.request("POST", "/jobs/evaluations", { name, config });
  }

  listJobs(filter: { kind?: string; status?: string } = {}): Promise<Job[]> {
    const params = new URLSearchParams();
    if (filter.kind) params.set("kind", filter.kind);
    if (filter.status) params.set("status", filter.status);
    const qs = params.toString();
    return this.request("GET", `/jobs${qs ? "?" + qs : ""}`);
  }

  getJob(id: string): Promise<Job> {
    return this.request("GET", `/jobs/${id}`);
  }

  jobLogs(id: string, offset: number): Promise<LogChunk> {
    return this.request("GET", `/jobs/${id}/logs?offset=${offset}`);
  }

  cancelJob(id: string): Promise<Job> {
    return this.request("POST", `/jobs/${id}/cancel`);
  }

  artifactUrl(id: string, name: string): string {
    return `${this.base}/jobs/${id}/artifacts/${name}`;
  }

  async downloadArtifact(id: string, name: string): Promise<Blob> {
    const resp = await fetch(this.artifactUrl(id, name), {
      headers: this.token ? { Authorization: `Bearer ${this.token}` } : {},
    });
    if (!resp.ok) throw new ApiError(resp.status, `HTTP ${resp.status}`);
    return resp.blob();
  }
}
