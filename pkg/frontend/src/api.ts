/** Thin typed client for the planner service. One base URL, no retries. */

import type {
  AddSiteBody,
  MutationResult,
  PlanResult,
  RateMapPayload,
  SessionDetail,
  SessionSummary,
} from "./types.js";

export class ApiHttpError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiHttpError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // bind lazily so test stubs installed after construction are still seen
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const doc = (await res.json()) as { detail?: unknown };
        if (typeof doc.detail === "string") detail = doc.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiHttpError(res.status, detail);
    }
    return res.json();
  }

  health(): Promise<{ status: string; sessions: number }> {
    return this.request("GET", "/healthz") as Promise<{ status: string; sessions: number }>;
  }

  createSessionByPath(path: string): Promise<SessionSummary> {
    return this.request("POST", "/sessions", { path }) as Promise<SessionSummary>;
  }

  createSessionInline(texts: { scenario_cfg: string; sites_csv: string; population_csv: string }): Promise<SessionSummary> {
    return this.request("POST", "/sessions", texts) as Promise<SessionSummary>;
  }

  getSession(id: string): Promise<SessionDetail> {
    return this.request("GET", `/sessions/${encodeURIComponent(id)}`) as Promise<SessionDetail>;
  }

  addSite(id: string, body: AddSiteBody): Promise<MutationResult> {
    return this.request("POST", `/sessions/${encodeURIComponent(id)}/sites`, body) as Promise<MutationResult>;
  }

  equipSite(id: string, siteId: string, fullRecompute = false): Promise<MutationResult> {
    const q = fullRecompute ? "?full_recompute=true" : "";
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(id)}/sites/${encodeURIComponent(siteId)}/equip${q}`,
    ) as Promise<MutationResult>;
  }

  removeSite(id: string, siteId: string, fullRecompute = false): Promise<MutationResult> {
    const q = fullRecompute ? "?full_recompute=true" : "";
    return this.request(
      "DELETE",
      `/sessions/${encodeURIComponent(id)}/sites/${encodeURIComponent(siteId)}${q}`,
    ) as Promise<MutationResult>;
  }

  rateMap(id: string, layer: string): Promise<RateMapPayload> {
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(id)}/ratemap?layer=${encodeURIComponent(layer)}`,
    ) as Promise<RateMapPayload>;
  }

  plan(id: string, k: number, exhaustive = false): Promise<PlanResult> {
    return this.request("POST", `/sessions/${encodeURIComponent(id)}/plan`, { k, exhaustive }) as Promise<PlanResult>;
  }

  confirmPlan(id: string): Promise<MutationResult> {
    return this.request("POST", `/sessions/${encodeURIComponent(id)}/plan/confirm`) as Promise<MutationResult>;
  }
}
