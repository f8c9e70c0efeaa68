/** Loads the recorded server contract the test suite replays.
 *
 * The fixture is a verbatim export of a live dashboard: its link table,
 * every payload, the server's resolve output for every item, and the
 * request-by-request recording of the four-panel walkthrough.
 */

import { readFileSync } from "node:fs";
import type {
  DashboardWire,
  HighlightSetWire,
  LinkRuleWire,
  LinkTableWire,
  VizConfigWire,
  VizPayloadWire,
} from "../src/types.js";

export interface RecordedResolution {
  viz_id: string;
  local_id: string;
  result: HighlightSetWire;
}

export interface RecordedStep {
  viz_id: string;
  body: Record<string, unknown>;
  revision_after: number;
  viz_after: VizConfigWire;
}

export interface Figure2Recording {
  dashboard_id: string;
  panels: string[];
  fear_viz_id: string;
  clicks: string[];
  initial_dashboard: DashboardWire;
  initial_payloads: Record<string, VizPayloadWire>;
  steps: RecordedStep[];
  final_dashboard: DashboardWire;
  final_payloads: Record<string, VizPayloadWire>;
}

export interface Contract {
  dashboard: DashboardWire;
  viz_by_cube: Record<string, string>;
  timeline_viz_id: string;
  manual_rule: LinkRuleWire;
  link_table: LinkTableWire;
  resolutions: RecordedResolution[];
  payloads: Record<string, VizPayloadWire>;
  figure2: Figure2Recording;
}

let cached: Contract | null = null;

export function loadContract(): Contract {
  if (!cached) {
    const path = new URL("./fixtures/contract.json", import.meta.url);
    cached = JSON.parse(readFileSync(path, "utf8")) as Contract;
  }
  return cached;
}
