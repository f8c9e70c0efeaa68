/** Mapping editor: author a manual link rule by picking two endpoints.
 *
 * Click an item in one viz, then click an item (or drag a time region)
 * in another; the editor emits the POST .../rules body. Picking two
 * endpoints in the same viz is rejected with a visible notice and the
 * first pick stays armed.
 */

import type { ItemRefWire, RuleEndpointSpec } from "./types.js";

export type MappingPhase =
  | { phase: "idle" }
  | { phase: "armed"; first: RuleEndpointSpec; notice: string | null };

export interface RuleRequest {
  from: RuleEndpointSpec;
  to: RuleEndpointSpec;
}

export interface MappingResult {
  state: MappingPhase;
  /** Set when the flow completed and a rule should be POSTed. */
  request: RuleRequest | null;
}

export function startMapping(): MappingPhase {
  return { phase: "idle" };
}

export function cancelMapping(): MappingPhase {
  return { phase: "idle" };
}

/** A click on a concrete item (datapoint, event, place, or region). */
export function clickItem(state: MappingPhase, ref: ItemRefWire): MappingResult {
  return pick(state, { viz_id: ref.viz_id, local_id: ref.local_id });
}

/** A drag over a chart's time axis selecting [from, to]. */
export function dragRegion(
  state: MappingPhase,
  vizId: string,
  from: string,
  to: string,
): MappingResult {
  return pick(state, { viz_id: vizId, time_span: [from, to] });
}

function pick(state: MappingPhase, endpoint: RuleEndpointSpec): MappingResult {
  if (state.phase === "idle") {
    return {
      state: {
        phase: "armed",
        first: endpoint,
        notice: "pick the matching item in another visualization",
      },
      request: null,
    };
  }
  if (endpoint.viz_id === state.first.viz_id) {
    return {
      state: {
        ...state,
        notice: "both endpoints are in the same visualization; pick another view",
      },
      request: null,
    };
  }
  return {
    state: { phase: "idle" },
    request: { from: state.first, to: endpoint },
  };
}
