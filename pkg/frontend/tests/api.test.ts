/** API client: error envelopes, query building, and the one-shot
 * refresh-and-retry on revision conflicts. */

import { describe, expect, it } from "vitest";
import { ApiError, StatlinkApi } from "../src/api.js";
import type {
  DashboardWire,
  LinkTableWire,
  MutationResponseWire,
} from "../src/types.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function scripted(...responses: Response[]) {
  const calls: Call[] = [];
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const next = responses.shift();
    if (!next) throw new Error("no scripted response left");
    return next;
  };
  return { calls, fetchImpl };
}

const dashboard: DashboardWire = {
  dashboard_id: "d1",
  title: "t",
  revision: 9,
  visualizations: [],
  manual_rules: [],
  manual_items: [],
  next_viz_seq: 1,
};
const linkTable: LinkTableWire = { dashboard_id: "d1", revision: 9, items: [], rules: [] };
const mutation: MutationResponseWire = { dashboard, link_table: linkTable };

describe("api client", () => {
  it("wraps error envelopes in ApiError", async () => {
    const { fetchImpl } = scripted(
      jsonResponse(404, { error: "UnknownCube", detail: "no cube 'x'" }),
    );
    const api = new StatlinkApi("http://h", fetchImpl);
    const err: unknown = await api.listDatasets().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    const apiErr = err as ApiError;
    expect(apiErr.status).toBe(404);
    expect(apiErr.errorName).toBe("UnknownCube");
    expect(apiErr.detail).toBe("no cube 'x'");
  });

  it("builds dataset queries with parameters", async () => {
    const { calls, fetchImpl } = scripted(jsonResponse(200, []), jsonResponse(200, []));
    const api = new StatlinkApi("http://api", fetchImpl);
    await api.listDatasets("gdp", "worldbank");
    expect(calls[0]!.url).toBe("http://api/api/datasets?q=gdp&provider=worldbank");
    await api.listDatasets();
    expect(calls[1]!.url).toBe("http://api/api/datasets");
  });

  it("retries a stale mutation once with the fresh revision", async () => {
    const { calls, fetchImpl } = scripted(
      jsonResponse(409, { error: "RevisionConflict", detail: "expected 4, dashboard is at 9" }),
      jsonResponse(200, { dashboard, link_table: linkTable }),
      jsonResponse(200, mutation),
    );
    const api = new StatlinkApi("", fetchImpl);
    const result = await api.updateVisualization("d1", "viz-1", { areas: ["GBR"] }, 4);
    expect(result.dashboard.revision).toBe(9);
    expect(calls.length).toBe(3);
    expect(calls[0]!.url).toBe("/api/dashboards/d1/visualizations/viz-1");
    expect(calls[0]!.init?.method).toBe("PATCH");
    expect(JSON.parse(String(calls[0]!.init?.body))).toEqual({
      areas: ["GBR"],
      expected_revision: 4,
    });
    expect(calls[1]!.url).toBe("/api/dashboards/d1");
    expect(calls[1]!.init?.method).toBe("GET");
    expect(JSON.parse(String(calls[2]!.init?.body))).toEqual({
      areas: ["GBR"],
      expected_revision: 9,
    });
  });

  it("gives up after a second conflict", async () => {
    const { calls, fetchImpl } = scripted(
      jsonResponse(409, { error: "RevisionConflict", detail: "expected 4" }),
      jsonResponse(200, { dashboard, link_table: linkTable }),
      jsonResponse(409, { error: "RevisionConflict", detail: "expected 9" }),
    );
    const api = new StatlinkApi("", fetchImpl);
    const err: unknown = await api
      .addRule("d1", { viz_id: "a", local_id: "x" }, { viz_id: "b", local_id: "y" }, 4)
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect(calls.length).toBe(3);
  });

  it("does not retry non-conflict failures", async () => {
    const { calls, fetchImpl } = scripted(
      jsonResponse(404, { error: "UnknownViz", detail: "no viz 'viz-7'" }),
    );
    const api = new StatlinkApi("", fetchImpl);
    const err: unknown = await api
      .updateVisualization("d1", "viz-7", { viz_type: "bar" }, 4)
      .catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(404);
    expect(calls.length).toBe(1);
  });

  it("sends rule bodies exactly as the endpoint expects", async () => {
    const { calls, fetchImpl } = scripted(jsonResponse(201, mutation));
    const api = new StatlinkApi("", fetchImpl);
    await api.addRule(
      "d1",
      { viz_id: "viz-5", local_id: "event:early-1990s-recession" },
      { viz_id: "viz-1", time_span: ["1990", "1992"] },
      12,
    );
    expect(JSON.parse(String(calls[0]!.init?.body))).toEqual({
      from: { viz_id: "viz-5", local_id: "event:early-1990s-recession" },
      to: { viz_id: "viz-1", time_span: ["1990", "1992"] },
      expected_revision: 12,
    });
  });
});
