// Typed client for the compliance service. Every route this module touches
// is declared in ENDPOINTS_USED; the contract test holds that list against
// the service's exported inventory.

import type { ApiError, AuditRecordView, ComponentStatus, PendingAction, Report, RunView } from "./model.js";

export const ENDPOINTS_USED = [
  "GET /components",
  "GET /actions/pending",
  "POST /actions/{action_id}/approve",
  "POST /actions/{action_id}/reject",
  "GET /history",
  "GET /reports/{run_id}",
  "GET /assessments/{run_id}",
] as const;

export class ServiceError extends Error {
  readonly code: ApiError["code"];
  readonly correlationId: string;
  readonly status: number;

  constructor(status: number, body: ApiError) {
    super(`${body.code}: ${body.message}`);
    this.status = status;
    this.code = body.code;
    this.correlationId = body.correlation_id;
  }
}

/** A conditional GET: 304 reports `changed: false` and carries no body. */
export interface Conditional<T> {
  changed: boolean;
  etag: string | null;
  body: T | null;
}

export class ServiceClient {
  private readonly etags = new Map<string, string>();

  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async raise(response: Response): Promise<never> {
    let body: ApiError;
    try {
      body = (await response.json()) as ApiError;
    } catch {
      body = { code: "Internal", message: `HTTP ${response.status}`, correlation_id: "" };
    }
    throw new ServiceError(response.status, body);
  }

  /** GET with If-None-Match bookkeeping per path. */
  private async conditionalGet<T>(path: string): Promise<Conditional<T>> {
    const headers: Record<string, string> = {};
    const previous = this.etags.get(path);
    if (previous) headers["if-none-match"] = previous;
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, { headers });
    if (response.status === 304) {
      return { changed: false, etag: previous ?? null, body: null };
    }
    if (!response.ok) await this.raise(response);
    const etag = response.headers.get("etag");
    if (etag) this.etags.set(path, etag);
    return { changed: true, etag, body: (await response.json()) as T };
  }

  private async plainGet<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) await this.raise(response);
    return (await response.json()) as T;
  }

  components(): Promise<Conditional<ComponentStatus[]>> {
    return this.conditionalGet<ComponentStatus[]>("/components");
  }

  pendingActions(): Promise<Conditional<PendingAction[]>> {
    return this.conditionalGet<PendingAction[]>("/actions/pending");
  }

  history(componentId: string): Promise<AuditRecordView[]> {
    return this.plainGet<AuditRecordView[]>(`/history?component=${encodeURIComponent(componentId)}`);
  }

  run(runId: string): Promise<RunView> {
    return this.plainGet<RunView>(`/assessments/${encodeURIComponent(runId)}`);
  }

  /** Operator decision; resolves only once the server has settled the state. */
  private async decide(path: string, operator: string): Promise<PendingAction> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ operator }),
    });
    if (!response.ok) await this.raise(response);
    return (await response.json()) as PendingAction;
  }

  approveAction(actionId: string, operator: string): Promise<PendingAction> {
    return this.decide(`/actions/${encodeURIComponent(actionId)}/approve`, operator);
  }

  rejectAction(actionId: string, operator: string): Promise<PendingAction> {
    return this.decide(`/actions/${encodeURIComponent(actionId)}/reject`, operator);
  }

  async downloadReport(runId: string, format: "md" | "json"): Promise<string> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/reports/${encodeURIComponent(runId)}?format=${format}`,
    );
    if (!response.ok) await this.raise(response);
    return await response.text();
  }

  reportJson(runId: string): Promise<Report> {
    return this.plainGet<Report>(`/reports/${encodeURIComponent(runId)}?format=json`);
  }
}
