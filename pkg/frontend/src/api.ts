/**
 * Typed client for the annotation-service REST API. Network-level
 * failures raise OfflineError (the editor's cue to queue the submission);
 * HTTP-level rejections raise ApiError with the status and server detail.
 */

import { ExportedPair, SchemaId, SubmitAck, TaskView } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class OfflineError extends Error {}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface SubmitBody {
  annotator: string;
  completion: string;
  client_seconds?: number | null;
  verify_only?: boolean;
}

export class AnnotationApi {
  constructor(
    private baseUrl: string,
    private token: string | null = null,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
        ...init,
        headers: { ...this.headers(), ...(init?.headers ?? {}) },
      });
    } catch (exc) {
      throw new OfflineError(String(exc));
    }
    return resp;
  }

  private async expectJson<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        detail = JSON.stringify(body.detail ?? body.error ?? body);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  async ingest(prompts: string[], schema: SchemaId, modelTag = ""): Promise<string[]> {
    const resp = await this.request("/tasks", {
      method: "POST",
      body: JSON.stringify({ prompts, schema, model_tag: modelTag }),
    });
    const body = await this.expectJson<{ task_ids: string[] }>(resp);
    return body.task_ids;
  }

  /** Claim the oldest pending task; null when the queue is empty. */
  async nextTask(annotator: string): Promise<TaskView | null> {
    const resp = await this.request(
      `/tasks/next?annotator=${encodeURIComponent(annotator)}`,
    );
    if (resp.status === 404) return null;
    return this.expectJson<TaskView>(resp);
  }

  async submit(taskId: string, body: SubmitBody): Promise<SubmitAck> {
    const resp = await this.request(`/tasks/${encodeURIComponent(taskId)}/submit`, {
      method: "POST",
      body: JSON.stringify(body),
    });
    return this.expectJson<SubmitAck>(resp);
  }

  async exportPairs(schema?: SchemaId): Promise<ExportedPair[]> {
    const query = schema ? `?schema=${encodeURIComponent(schema)}` : "";
    const resp = await this.request(`/export${query}`);
    return this.expectJson<ExportedPair[]>(resp);
  }

  async stats(): Promise<Record<string, unknown> | null> {
    const resp = await this.request("/stats");
    if (resp.status === 404) return null;
    return this.expectJson<Record<string, unknown>>(resp);
  }
}
