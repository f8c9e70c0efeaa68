/** Typed client for the statlink HTTP API.
 *
 * All dashboard state flows through these calls; the UI never mutates
 * state another way. Mutations carry expected_revision, and a 409
 * conflict refreshes the snapshot and retries once before surfacing.
 */

import type {
  CatalogEntryWire,
  DashboardResponseWire,
  HighlightSetWire,
  MutationResponseWire,
  RuleEndpointSpec,
  UserVizKind,
  UserVizWire,
  VizPayloadWire,
  VizType,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    readonly detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

export interface VizUpdate {
  areas?: string[];
  dimension_choice?: Record<string, string>;
  from?: string;
  to?: string;
  viz_type?: VizType;
  layout_hint?: string;
}

export class StatlinkApi {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.base}${path}`, init);
    const doc: unknown = await response.json();
    if (!response.ok) {
      const err = doc as { error?: string; detail?: string };
      throw new ApiError(
        response.status,
        err.error ?? "UnknownError",
        err.detail ?? response.statusText,
      );
    }
    return doc as T;
  }

  listDatasets(q?: string, provider?: string): Promise<CatalogEntryWire[]> {
    const params = new URLSearchParams();
    if (q) params.set("q", q);
    if (provider) params.set("provider", provider);
    const qs = params.toString();
    return this.request("GET", `/api/datasets${qs ? `?${qs}` : ""}`);
  }

  getPayload(dashboardId: string, vizId: string): Promise<VizPayloadWire> {
    return this.request(
      "GET",
      `/api/dashboards/${dashboardId}/visualizations/${vizId}/payload`,
    );
  }

  createDashboard(title: string): Promise<{ dashboard_id: string }> {
    return this.request("POST", "/api/dashboards", { title });
  }

  getDashboard(dashboardId: string): Promise<DashboardResponseWire> {
    return this.request("GET", `/api/dashboards/${dashboardId}`);
  }

  addVisualization(
    dashboardId: string,
    spec: { cube_id?: string; user_viz_id?: string; viz_type?: VizType },
    expectedRevision: number,
  ): Promise<MutationResponseWire> {
    return this.withRetry(dashboardId, expectedRevision, (revision) =>
      this.request("POST", `/api/dashboards/${dashboardId}/visualizations`, {
        ...spec,
        expected_revision: revision,
      }),
    );
  }

  updateVisualization(
    dashboardId: string,
    vizId: string,
    update: VizUpdate,
    expectedRevision: number,
  ): Promise<MutationResponseWire> {
    return this.withRetry(dashboardId, expectedRevision, (revision) =>
      this.request(
        "PATCH",
        `/api/dashboards/${dashboardId}/visualizations/${vizId}`,
        { ...update, expected_revision: revision },
      ),
    );
  }

  addRule(
    dashboardId: string,
    from: RuleEndpointSpec,
    to: RuleEndpointSpec,
    expectedRevision: number,
  ): Promise<MutationResponseWire> {
    return this.withRetry(dashboardId, expectedRevision, (revision) =>
      this.request("POST", `/api/dashboards/${dashboardId}/rules`, {
        from,
        to,
        expected_revision: revision,
      }),
    );
  }

  deleteRule(
    dashboardId: string,
    from: RuleEndpointSpec,
    to: RuleEndpointSpec,
    expectedRevision: number,
  ): Promise<DashboardResponseWire> {
    return this.withRetry(dashboardId, expectedRevision, (revision) =>
      this.request("DELETE", `/api/dashboards/${dashboardId}/rules`, {
        from,
        to,
        expected_revision: revision,
      }),
    );
  }

  resolveRemote(
    dashboardId: string,
    vizId: string,
    localId: string,
  ): Promise<HighlightSetWire> {
    return this.request("POST", `/api/dashboards/${dashboardId}/resolve`, {
      viz_id: vizId,
      local_id: localId,
    });
  }

  createUserViz(kind: UserVizKind, items: unknown[]): Promise<UserVizWire> {
    return this.request("POST", "/api/uservisualizations", { kind, items });
  }

  /** Run one mutation; on a revision conflict refresh and retry once. */
  private async withRetry<T>(
    dashboardId: string,
    revision: number,
    attempt: (revision: number) => Promise<T>,
  ): Promise<T> {
    try {
      return await attempt(revision);
    } catch (error) {
      if (!(error instanceof ApiError) || error.status !== 409) throw error;
      const fresh = await this.getDashboard(dashboardId);
      return attempt(fresh.dashboard.revision);
    }
  }
}
