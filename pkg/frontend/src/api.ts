// Thin typed client over the service endpoints. Components depend on the
// ApiClient interface so tests can substitute a scripted fake.

import type {
  ErrorBody,
  ReviewItemPayload,
  RunResponse,
  ScaffoldPayload,
  ScaffoldResponse,
  TaskPayload,
} from "./types";

export class ApiError extends Error {
  constructor(public status: number, public body: ErrorBody) {
    super(body.detail || body.error || `HTTP ${status}`);
  }
}

export interface ApiClient {
  listTasks(): Promise<{ id: string; title: string; usable: boolean }[]>;
  getTask(taskId: string): Promise<TaskPayload>;
  run(taskId: string, source: string, mode: "sample" | "custom", stdin: string): Promise<RunResponse>;
  submit(taskId: string, source: string): Promise<RunResponse>;
  requestScaffold(taskId: string, closeness: "far" | "near"): Promise<ScaffoldResponse>;
  getScaffold(scaffoldId: string): Promise<{ status: string; remaining_quota: number; scaffold: ScaffoldPayload }>;
  reviewQueue(): Promise<ReviewItemPayload[]>;
  decideReview(scaffoldId: string, decision: string, edits?: Record<string, string>): Promise<{ scaffold_id: string; review_status: string }>;
}

export class HttpApiClient implements ApiClient {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchImpl: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: {
        "Content-Type": "application/json",
        Authorization: `Bearer ${this.token}`,
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const parsed = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(response.status, parsed as ErrorBody);
    }
    return parsed as T;
  }

  async listTasks() {
    const data = await this.call<{ tasks: { id: string; title: string; usable: boolean }[] }>(
      "GET", "/tasks",
    );
    return data.tasks;
  }

  getTask(taskId: string) {
    return this.call<TaskPayload>("GET", `/tasks/${encodeURIComponent(taskId)}`);
  }

  run(taskId: string, source: string, mode: "sample" | "custom", stdin: string) {
    return this.call<RunResponse>("POST", `/tasks/${encodeURIComponent(taskId)}/run`, {
      source, mode, stdin,
    });
  }

  submit(taskId: string, source: string) {
    return this.call<RunResponse>("POST", `/tasks/${encodeURIComponent(taskId)}/submit`, {
      source,
    });
  }

  requestScaffold(taskId: string, closeness: "far" | "near") {
    return this.call<ScaffoldResponse>(
      "POST", `/tasks/${encodeURIComponent(taskId)}/scaffold`, { closeness },
    );
  }

  getScaffold(scaffoldId: string) {
    return this.call<{ status: string; remaining_quota: number; scaffold: ScaffoldPayload }>(
      "GET", `/scaffolds/${encodeURIComponent(scaffoldId)}`,
    );
  }

  async reviewQueue() {
    const data = await this.call<{ items: ReviewItemPayload[] }>("GET", "/review/queue");
    return data.items;
  }

  decideReview(scaffoldId: string, decision: string, edits?: Record<string, string>) {
    return this.call<{ scaffold_id: string; review_status: string }>(
      "POST", `/review/${encodeURIComponent(scaffoldId)}`, { decision, edits },
    );
  }
}
