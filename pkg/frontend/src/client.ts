/**
 * Typed client for the graph service HTTP API.
 *
 * Covers every documented endpoint and nothing else: /health, /stats,
 * /nodes/{id}, /nodes/{id}/neighbors, /search, /scenarios/{id}/graph and
 * /edits. The fetch implementation is injectable so tests can run against an
 * in-memory service.
 */

import type {
  EditAppliedResponse,
  EditListResponse,
  EditOpName,
  EdgeKind,
  HealthResponse,
  NeighborsResponse,
  NodeResponse,
  ScenarioGraphResponse,
  SearchResponse,
  StatsResponse,
} from "./types.js";

export interface ClientConfig {
  /** Service origin, e.g. "http://127.0.0.1:8763". */
  baseUrl: string;
  /** Bearer token attached to mutating requests when the service requires one. */
  authToken?: string;
  fetchImpl?: typeof fetch;
}

export type Direction = "out" | "in" | "both";

export interface NeighborQuery {
  kinds?: EdgeKind[];
  direction?: Direction;
}

/** Any non-2xx response from the service. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service returned ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** An edit based on a version the service has already moved past. */
export class EditConflictError extends ApiError {
  constructor(
    detail: string,
    readonly currentVersion: number,
  ) {
    super(409, detail);
    this.name = "EditConflictError";
  }
}

/** An edit the service refused for reasons other than staleness. */
export class EditRejectedError extends ApiError {
  constructor(
    status: number,
    detail: string,
    readonly currentVersion: number | null,
  ) {
    super(status, detail);
    this.name = "EditRejectedError";
  }
}

function extractDetail(body: unknown): { detail: string; version: number | null } {
  if (body && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    if (typeof detail === "string") return { detail, version: null };
    if (detail && typeof detail === "object") {
      const inner = detail as { detail?: unknown; version?: unknown };
      return {
        detail: typeof inner.detail === "string" ? inner.detail : JSON.stringify(detail),
        version: typeof inner.version === "number" ? inner.version : null,
      };
    }
  }
  return { detail: JSON.stringify(body), version: null };
}

export class GraphClient {
  private readonly baseUrl: string;
  private readonly authToken: string | null;
  private readonly fetchImpl: typeof fetch;

  constructor(config: ClientConfig) {
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.authToken = config.authToken ?? null;
    // Bind so the injected implementation keeps its own receiver.
    const impl = config.fetchImpl ?? globalThis.fetch;
    this.fetchImpl = impl.bind(globalThis);
  }

  private url(path: string, params?: Record<string, string | undefined>): string {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined) query.set(key, value);
    }
    const suffix = query.size > 0 ? `?${query.toString()}` : "";
    return `${this.baseUrl}${path}${suffix}`;
  }

  private async getJson<T>(path: string, params?: Record<string, string | undefined>): Promise<T> {
    const response = await this.fetchImpl(this.url(path, params));
    const body: unknown = await response.json();
    if (!response.ok) {
      const { detail } = extractDetail(body);
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  async health(): Promise<HealthResponse> {
    return this.getJson<HealthResponse>("/health");
  }

  async stats(): Promise<StatsResponse> {
    return this.getJson<StatsResponse>("/stats");
  }

  async getNode(nodeId: string): Promise<NodeResponse> {
    return this.getJson<NodeResponse>(`/nodes/${encodeURIComponent(nodeId)}`);
  }

  async neighbors(nodeId: string, query: NeighborQuery = {}): Promise<NeighborsResponse> {
    return this.getJson<NeighborsResponse>(`/nodes/${encodeURIComponent(nodeId)}/neighbors`, {
      kinds: query.kinds && query.kinds.length > 0 ? query.kinds.join(",") : undefined,
      direction: query.direction,
    });
  }

  async search(q: string, limit?: number): Promise<SearchResponse> {
    return this.getJson<SearchResponse>("/search", {
      q,
      limit: limit === undefined ? undefined : String(limit),
    });
  }

  async scenarioGraph(scenarioId: string, fraction?: number): Promise<ScenarioGraphResponse> {
    return this.getJson<ScenarioGraphResponse>(
      `/scenarios/${encodeURIComponent(scenarioId)}/graph`,
      { fraction: fraction === undefined ? undefined : String(fraction) },
    );
  }

  async listEdits(): Promise<EditListResponse> {
    return this.getJson<EditListResponse>("/edits");
  }

  /**
   * Submit one edit based on the given graph version.
   *
   * Raises EditConflictError on a stale version (carrying the version the
   * service is at now) and EditRejectedError when the service refuses the
   * edit itself.
   */
  async submitEdit(
    op: EditOpName,
    payload: Record<string, unknown>,
    author: string,
    baseVersion: number,
  ): Promise<EditAppliedResponse> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.authToken) headers["authorization"] = `Bearer ${this.authToken}`;
    const response = await this.fetchImpl(this.url("/edits"), {
      method: "POST",
      headers,
      body: JSON.stringify({ op, payload, author, base_version: baseVersion }),
    });
    const body: unknown = await response.json();
    if (!response.ok) {
      const { detail, version } = extractDetail(body);
      if (response.status === 409) {
        throw new EditConflictError(detail, version ?? -1);
      }
      if (response.status === 404 || response.status === 422) {
        throw new EditRejectedError(response.status, detail, version);
      }
      throw new ApiError(response.status, detail);
    }
    return body as EditAppliedResponse;
  }
}
