/** Dashboard view state: snapshot + link table + interaction state.
 *
 * Invariants: the link table revision always matches the dashboard
 * revision, and at most one anchor is hovered at a time. All reducers
 * are pure; mutations happen only through the API layer, whose
 * responses feed back in through applySnapshot.
 */

import { resolveLocal } from "./resolve.js";
import type {
  DashboardResponseWire,
  DashboardWire,
  HighlightSetWire,
  ItemRefWire,
  LegendEntryWire,
  LinkTableWire,
  SelectionWire,
  VizUpdateBody,
} from "./types.js";

export class RevisionMismatch extends Error {}

export interface ViewState {
  dashboard: DashboardWire;
  linkTable: LinkTableWire;
  /** The one hovered anchor, or null. */
  hovered: ItemRefWire | null;
  /** Highlights for the hovered anchor; empty when nothing is hovered. */
  highlights: HighlightSetWire | null;
  /** Legend scroll offset per viz, preserved across re-renders. */
  legendScroll: Record<string, number>;
}

export function initialState(snapshot: DashboardResponseWire): ViewState {
  checkRevisions(snapshot.dashboard, snapshot.link_table);
  return {
    dashboard: snapshot.dashboard,
    linkTable: snapshot.link_table,
    hovered: null,
    highlights: null,
    legendScroll: {},
  };
}

function checkRevisions(dashboard: DashboardWire, table: LinkTableWire): void {
  if (dashboard.revision !== table.revision) {
    throw new RevisionMismatch(
      `link table revision ${table.revision} != dashboard revision ${dashboard.revision}`,
    );
  }
}

/** Fold a server response (GET or any mutation) into the state. */
export function applySnapshot(
  state: ViewState,
  snapshot: DashboardResponseWire,
): ViewState {
  checkRevisions(snapshot.dashboard, snapshot.link_table);
  const next: ViewState = {
    ...state,
    dashboard: snapshot.dashboard,
    linkTable: snapshot.link_table,
  };
  if (state.hovered !== null) {
    // Re-resolve the hover against the new table; drop it if the anchor
    // no longer exists.
    try {
      next.highlights = resolveLocal(
        snapshot.link_table,
        state.hovered.viz_id,
        state.hovered.local_id,
      );
    } catch {
      next.hovered = null;
      next.highlights = null;
    }
  }
  return next;
}

/** Hover an anchor: resolves client-side over the compiled link table. */
export function hoverDispatch(state: ViewState, anchor: ItemRefWire): ViewState {
  return {
    ...state,
    hovered: anchor,
    highlights: resolveLocal(state.linkTable, anchor.viz_id, anchor.local_id),
  };
}

/** Leaving the anchor clears all highlights. */
export function clearHover(state: ViewState): ViewState {
  return { ...state, hovered: null, highlights: null };
}

export function setLegendScroll(
  state: ViewState,
  vizId: string,
  offset: number,
): ViewState {
  return { ...state, legendScroll: { ...state.legendScroll, [vizId]: offset } };
}

/** The PATCH body a legend click must send: the entry toggles, and the
 * area list keeps legend (cube) order. */
export function legendToggleBody(
  legend: LegendEntryWire[],
  selection: SelectionWire,
  code: string,
  revision: number,
): VizUpdateBody {
  const selected = new Set(selection.areas);
  if (selected.has(code)) selected.delete(code);
  else selected.add(code);
  return {
    areas: legend.map((e) => e.code).filter((c) => selected.has(c)),
    expected_revision: revision,
  };
}
