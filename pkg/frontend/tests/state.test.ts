/** View-state invariants: revision agreement and single-anchor hovering. */

import { describe, expect, it } from "vitest";
import { resolveLocal } from "../src/resolve.js";
import {
  applySnapshot,
  clearHover,
  hoverDispatch,
  initialState,
  RevisionMismatch,
  setLegendScroll,
} from "../src/state.js";
import { loadContract } from "./helpers.js";

const contract = loadContract();
const gdpViz = contract.viz_by_cube["fixture-gdp"]!;

function snapshot() {
  return { dashboard: contract.dashboard, link_table: contract.link_table };
}

describe("view state", () => {
  it("requires the link table revision to match the dashboard revision", () => {
    expect(() => initialState(snapshot())).not.toThrow();
    const stale = {
      dashboard: contract.dashboard,
      link_table: { ...contract.link_table, revision: contract.link_table.revision + 1 },
    };
    expect(() => initialState(stale)).toThrow(RevisionMismatch);
  });

  it("keeps exactly one hovered anchor, resolved locally", () => {
    let state = initialState(snapshot());
    expect(state.hovered).toBeNull();
    expect(state.highlights).toBeNull();

    state = hoverDispatch(state, { viz_id: gdpViz, local_id: "USA@2001" });
    expect(state.hovered).toEqual({ viz_id: gdpViz, local_id: "USA@2001" });
    expect(state.highlights).toEqual(resolveLocal(contract.link_table, gdpViz, "USA@2001"));

    state = hoverDispatch(state, { viz_id: gdpViz, local_id: "USA@2002" });
    expect(state.hovered).toEqual({ viz_id: gdpViz, local_id: "USA@2002" });

    state = clearHover(state);
    expect(state.hovered).toBeNull();
    expect(state.highlights).toBeNull();
  });

  it("re-resolves a live hover against a fresh snapshot", () => {
    let state = initialState(snapshot());
    state = hoverDispatch(state, { viz_id: gdpViz, local_id: "USA@2001" });
    const next = applySnapshot(state, snapshot());
    expect(next.hovered).toEqual(state.hovered);
    expect(next.highlights).toEqual(state.highlights);
  });

  it("drops the hover when the anchor vanished from the new table", () => {
    let state = initialState(snapshot());
    state = hoverDispatch(state, { viz_id: gdpViz, local_id: "USA@2001" });
    const emptied = {
      dashboard: contract.dashboard,
      link_table: { ...contract.link_table, items: [], rules: [] },
    };
    const next = applySnapshot(state, emptied);
    expect(next.hovered).toBeNull();
    expect(next.highlights).toBeNull();
  });

  it("remembers legend scroll offsets per viz", () => {
    let state = initialState(snapshot());
    state = setLegendScroll(state, gdpViz, 120);
    state = setLegendScroll(state, "viz-2", 40);
    expect(state.legendScroll[gdpViz]).toBe(120);
    expect(state.legendScroll["viz-2"]).toBe(40);
  });
});
