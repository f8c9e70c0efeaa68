/** Wire shapes of the statlink HTTP API. Field names match the server. */

export type GranularityText = "year" | "quarter" | "month";
export type ItemKind = "datapoint" | "place" | "event" | "region";
export type RuleOrigin = "auto" | "label" | "manual";
export type VizType = "line" | "bar" | "area" | "pie" | "scatter" | "map" | "timeline";
export type LayoutHint = "full" | "scaled";
export type UserVizKind = "map" | "timeline" | "chart";

export interface ItemRefWire {
  viz_id: string;
  local_id: string;
}

export interface LinkedItemWire {
  viz_id: string;
  kind: ItemKind;
  local_id: string;
  area: string | null;
  time: string | null;
  time_span: [string, string] | null;
  label: string | null;
  display_value: string;
}

export interface LinkRuleWire {
  from: ItemRefWire;
  to: ItemRefWire;
  origin: RuleOrigin;
}

export interface LinkTableWire {
  dashboard_id: string;
  revision: number;
  items: LinkedItemWire[];
  rules: LinkRuleWire[];
}

export interface HighlightItemWire {
  viz_id: string;
  local_id: string;
  display_value: string;
}

export interface HighlightSetWire {
  anchor: HighlightItemWire;
  items: HighlightItemWire[];
}

export interface SelectionWire {
  dimension_choice: Record<string, string>;
  areas: string[];
  from: string;
  to: string;
}

export interface VizConfigWire {
  viz_id: string;
  viz_type: VizType;
  layout_hint: LayoutHint;
  cube_id: string | null;
  selection: SelectionWire | null;
  user_viz_id: string | null;
}

export interface DashboardWire {
  dashboard_id: string;
  title: string;
  revision: number;
  visualizations: VizConfigWire[];
  manual_rules: LinkRuleWire[];
  manual_items: Omit<LinkedItemWire, "display_value">[];
  next_viz_seq: number;
}

/** One observation on the wire: [time text, value, value text, flags]. */
export type SeriesPointWire = [string, number | null, string | null, string];

export interface SeriesWire {
  area: { code: string; label: string };
  points: SeriesPointWire[];
}

export interface SeriesSetWire {
  cube_id: string;
  title: string;
  unit: string;
  dimension_choice: Record<string, string>;
  times: string[];
  series: SeriesWire[];
}

export interface LegendEntryWire {
  code: string;
  label: string;
  selected: boolean;
}

export interface DimensionWire {
  name: string;
  chosen: string | null;
  members: { code: string; label: string }[];
}

export interface MapPointWire {
  label: string;
  lat: number;
  lon: number;
  details: string;
}

export interface TimelineEventWire {
  title: string;
  start: string;
  end: string;
  details: string;
}

export interface ChartEntryWire {
  label: string;
  value: number;
}

export interface UserVizWire {
  user_viz_id: string;
  kind: UserVizKind;
  items: (MapPointWire | TimelineEventWire | ChartEntryWire)[];
}

/** GET .../visualizations/{viz}/payload: the viz config plus render data. */
export interface VizPayloadWire extends VizConfigWire {
  series_set?: SeriesSetWire;
  legend?: LegendEntryWire[];
  dimensions?: DimensionWire[];
  user_viz?: UserVizWire;
}

export interface CatalogEntryWire {
  cube_id: string;
  provider: string;
  title: string;
  unit: string;
  granularity: GranularityText;
  area_count: number;
  time_span: [string, string];
  path: string;
}

export interface DashboardResponseWire {
  dashboard: DashboardWire;
  link_table: LinkTableWire;
}

export interface MutationResponseWire extends DashboardResponseWire {
  viz?: VizConfigWire;
  rule?: LinkRuleWire;
}

/** Manual rule endpoint spec as POST .../rules accepts it. */
export type RuleEndpointSpec =
  | { viz_id: string; local_id: string }
  | { viz_id: string; time_span: [string, string] };

/** PATCH .../visualizations/{viz} body. */
export interface VizUpdateBody {
  areas?: string[];
  dimension_choice?: Record<string, string>;
  from?: string;
  to?: string;
  viz_type?: VizType;
  layout_hint?: LayoutHint;
  expected_revision: number;
}

export interface ErrorWire {
  error: string;
  detail: string;
}
