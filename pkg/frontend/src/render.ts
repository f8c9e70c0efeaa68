/** SVG renderers for every visualization type.
 *
 * Pure functions from payload wire to markup strings. Every hoverable
 * item carries data-viz-id/data-local-id so the dashboard shell can
 * dispatch hovers and apply highlights by attribute lookup. Panels
 * never share axes: one payload, one unit, one scale. A thrown render
 * error is caught by the caller and shown inline, never a blank panel.
 */

import type {
  ChartEntryWire,
  LegendEntryWire,
  MapPointWire,
  SeriesSetWire,
  TimelineEventWire,
  UserVizWire,
  VizPayloadWire,
} from "./types.js";
import { parseTimeKey } from "./time.js";

export interface RenderResult {
  /** What actually rendered, e.g. "line", "bar", "timeline". */
  kind: string;
  html: string;
}

const W = 640;
const H = 320;
const PAD = { left: 48, right: 12, top: 12, bottom: 28 };

/** Chart geometry in viewBox units, for hit-testing outside the svg. */
export const PLOT = { width: W, height: H, pad: PAD } as const;

/** Nearest time index for an x position in viewBox units. */
export function timeIndexForX(count: number, viewX: number): number {
  if (count <= 1) return 0;
  const innerW = W - PAD.left - PAD.right;
  const step = innerW / (count - 1);
  const raw = Math.round((viewX - PAD.left) / step);
  return Math.max(0, Math.min(count - 1, raw));
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Value text next to its unit, the way popups print it: "30%" for
 * percent, "904 US$" otherwise, bare text when unitless. */
export function displayText(valueText: string, unit: string): string {
  if (!unit) return valueText;
  if (unit === "%") return `${valueText}${unit}`;
  return `${valueText} ${unit}`;
}

/** Server-compatible slug for user-content labels. */
export function labelSlug(label: string): string {
  const slug = label
    .toLowerCase()
    .replace(/[^a-z0-9]+/g, "-")
    .replace(/^-+|-+$/g, "");
  return slug || "item";
}

/** Local ids for a user viz's items, with the server's duplicate
 * suffix rule ("-2", "-3", ...). */
export function userItemLocalIds(userViz: UserVizWire): string[] {
  const prefix = userViz.kind === "timeline" ? "event" : "place";
  const seen = new Map<string, number>();
  return userViz.items.map((item) => {
    const label = "title" in item ? item.title : item.label;
    const base = `${prefix}:${labelSlug(label)}`;
    const n = (seen.get(base) ?? 0) + 1;
    seen.set(base, n);
    return n === 1 ? base : `${base}-${n}`;
  });
}

interface PlottedPoint {
  areaCode: string;
  timeText: string;
  timeIndex: number;
  value: number;
  valueText: string;
}

function presentPoints(seriesSet: SeriesSetWire): PlottedPoint[] {
  const timeIndex = new Map(seriesSet.times.map((t, i) => [t, i]));
  const points: PlottedPoint[] = [];
  for (const series of seriesSet.series) {
    for (const [t, value, text] of series.points) {
      if (value === null) continue;
      points.push({
        areaCode: series.area.code,
        timeText: t,
        timeIndex: timeIndex.get(t) ?? 0,
        value,
        valueText: text ?? String(value),
      });
    }
  }
  return points;
}

function valueScale(points: PlottedPoint[]): (v: number) => number {
  let lo = Math.min(0, ...points.map((p) => p.value));
  let hi = Math.max(...points.map((p) => p.value));
  if (hi === lo) hi = lo + 1;
  const innerH = H - PAD.top - PAD.bottom;
  return (v) => PAD.top + innerH - ((v - lo) / (hi - lo)) * innerH;
}

function timeScale(count: number): (i: number) => number {
  const innerW = W - PAD.left - PAD.right;
  const step = innerW / Math.max(1, count - 1);
  return (i) => PAD.left + i * step;
}

function axes(seriesSet: SeriesSetWire): string {
  const times = seriesSet.times;
  const x = timeScale(times.length);
  const labelEvery = Math.max(1, Math.ceil(times.length / 10));
  const ticks = times
    .filter((_, i) => i % labelEvery === 0)
    .map(
      (t, k) =>
        `<text class="tick" x="${x(times.indexOf(t))}" y="${H - 8}" text-anchor="middle">${esc(
          t,
        )}</text>${k === 0 ? "" : ""}`,
    )
    .join("");
  const unitLabel = seriesSet.unit
    ? `<text class="unit" x="4" y="${PAD.top + 10}">${esc(seriesSet.unit)}</text>`
    : "";
  return `<line class="axis" x1="${PAD.left}" y1="${H - PAD.bottom}" x2="${W - PAD.right}" y2="${H - PAD.bottom}"/>${ticks}${unitLabel}`;
}

function svgOpen(kind: string, vizId: string): string {
  return `<svg class="statlink-viz statlink-${kind}" data-viz-id="${esc(vizId)}" viewBox="0 0 ${W} ${H}" role="img">`;
}

function seriesColorIndex(seriesSet: SeriesSetWire): Map<string, number> {
  return new Map(seriesSet.series.map((s, i) => [s.area.code, i]));
}

function marker(
  vizId: string,
  p: PlottedPoint,
  cx: number,
  cy: number,
  colorIdx: number,
): string {
  const localId = `${p.areaCode}@${p.timeText}`;
  return `<circle class="pt series-${colorIdx}" data-viz-id="${esc(vizId)}" data-local-id="${esc(
    localId,
  )}" cx="${cx.toFixed(1)}" cy="${cy.toFixed(1)}" r="3"/>`;
}

function renderLineLike(
  vizId: string,
  seriesSet: SeriesSetWire,
  variant: "line" | "area" | "scatter",
): string {
  const points = presentPoints(seriesSet);
  if (points.length === 0) return noData(vizId, variant);
  const x = timeScale(seriesSet.times.length);
  const y = valueScale(points);
  const colors = seriesColorIndex(seriesSet);
  const parts: string[] = [svgOpen(variant, vizId), axes(seriesSet)];
  for (const series of seriesSet.series) {
    const mine = points
      .filter((p) => p.areaCode === series.area.code)
      .sort((a, b) => a.timeIndex - b.timeIndex);
    if (mine.length === 0) continue;
    const colorIdx = colors.get(series.area.code) ?? 0;
    if (variant !== "scatter") {
      const path = mine
        .map((p, i) => `${i === 0 ? "M" : "L"}${x(p.timeIndex).toFixed(1)} ${y(p.value).toFixed(1)}`)
        .join(" ");
      if (variant === "area") {
        const base = H - PAD.bottom;
        const first = mine[0]!;
        const last = mine[mine.length - 1]!;
        parts.push(
          `<path class="fill series-${colorIdx}" d="${path} L${x(last.timeIndex).toFixed(1)} ${base} L${x(
            first.timeIndex,
          ).toFixed(1)} ${base} Z"/>`,
        );
      }
      parts.push(`<path class="stroke series-${colorIdx}" d="${path}" fill="none"/>`);
    }
    for (const p of mine) {
      parts.push(marker(vizId, p, x(p.timeIndex), y(p.value), colorIdx));
    }
  }
  parts.push("</svg>");
  return parts.join("");
}

function renderBars(vizId: string, seriesSet: SeriesSetWire): string {
  const points = presentPoints(seriesSet);
  if (points.length === 0) return noData(vizId, "bar");
  const x = timeScale(seriesSet.times.length);
  const y = valueScale(points);
  const colors = seriesColorIndex(seriesSet);
  const base = H - PAD.bottom;
  const innerW = W - PAD.left - PAD.right;
  const groupWidth = innerW / Math.max(1, seriesSet.times.length);
  const barWidth = Math.max(
    1.5,
    (groupWidth * 0.8) / Math.max(1, seriesSet.series.length),
  );
  const parts: string[] = [svgOpen("bar", vizId), axes(seriesSet)];
  for (const p of points) {
    const colorIdx = colors.get(p.areaCode) ?? 0;
    const cx = x(p.timeIndex) - (barWidth * seriesSet.series.length) / 2 + colorIdx * barWidth;
    const top = y(p.value);
    const localId = `${p.areaCode}@${p.timeText}`;
    parts.push(
      `<rect class="bar series-${colorIdx}" data-viz-id="${esc(vizId)}" data-local-id="${esc(
        localId,
      )}" x="${cx.toFixed(1)}" y="${Math.min(top, base).toFixed(1)}" width="${barWidth.toFixed(
        1,
      )}" height="${Math.abs(base - top).toFixed(1)}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

function renderPie(vizId: string, seriesSet: SeriesSetWire): string {
  // One slice per area at the latest period that has any present value.
  const points = presentPoints(seriesSet);
  if (points.length === 0) return noData(vizId, "pie");
  const lastIndex = Math.max(...points.map((p) => p.timeIndex));
  const slice = points.filter((p) => p.timeIndex === lastIndex && p.value > 0);
  if (slice.length === 0) return noData(vizId, "pie");
  const total = slice.reduce((sum, p) => sum + p.value, 0);
  const colors = seriesColorIndex(seriesSet);
  const cx = W / 2;
  const cy = H / 2;
  const r = Math.min(W, H) / 2 - 24;
  let angle = -Math.PI / 2;
  const parts: string[] = [svgOpen("pie", vizId)];
  for (const p of slice) {
    const sweep = (p.value / total) * 2 * Math.PI;
    const x1 = cx + r * Math.cos(angle);
    const y1 = cy + r * Math.sin(angle);
    angle += sweep;
    const x2 = cx + r * Math.cos(angle);
    const y2 = cy + r * Math.sin(angle);
    const large = sweep > Math.PI ? 1 : 0;
    const localId = `${p.areaCode}@${p.timeText}`;
    parts.push(
      `<path class="wedge series-${colors.get(p.areaCode) ?? 0}" data-viz-id="${esc(
        vizId,
      )}" data-local-id="${esc(localId)}" d="M${cx} ${cy} L${x1.toFixed(1)} ${y1.toFixed(
        1,
      )} A${r} ${r} 0 ${large} 1 ${x2.toFixed(1)} ${y2.toFixed(1)} Z"/>`,
    );
  }
  parts.push(`<text class="pie-time" x="${cx}" y="${H - 6}" text-anchor="middle">${esc(
    seriesSet.times[lastIndex] ?? "",
  )}</text></svg>`);
  return parts.join("");
}

function noData(vizId: string, kind: string): string {
  return `${svgOpen(kind, vizId)}<text class="empty" x="${W / 2}" y="${
    H / 2
  }" text-anchor="middle">no data in the selected range</text></svg>`;
}

function renderMap(vizId: string, items: MapPointWire[], localIds: string[]): string {
  // Equirectangular projection; the shell pans/zooms via the viewBox.
  const parts: string[] = [
    `<svg class="statlink-viz statlink-map" data-viz-id="${esc(vizId)}" data-pan-zoom="1" viewBox="0 0 ${W} ${H}" role="img">`,
    `<rect class="sea" x="0" y="0" width="${W}" height="${H}"/>`,
    `<g class="world">`,
  ];
  items.forEach((p, i) => {
    const x = ((p.lon + 180) / 360) * W;
    const y = ((90 - p.lat) / 180) * H;
    parts.push(
      `<circle class="place" data-viz-id="${esc(vizId)}" data-local-id="${esc(
        localIds[i] ?? "",
      )}" cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="6"><title>${esc(p.label)}: ${esc(
        p.details,
      )}</title></circle>`,
      `<text class="place-label" x="${(x + 9).toFixed(1)}" y="${(y + 4).toFixed(1)}">${esc(
        p.label,
      )}</text>`,
    );
  });
  parts.push(`</g></svg>`);
  return parts.join("");
}

function renderTimeline(
  vizId: string,
  items: TimelineEventWire[],
  localIds: string[],
): string {
  const years = items.flatMap((e) => [parseTimeKey(e.start).year, parseTimeKey(e.end).year]);
  const lo = Math.min(...years);
  const hi = Math.max(...years) + 1;
  const x = (yr: number) => PAD.left + ((yr - lo) / Math.max(1, hi - lo)) * (W - PAD.left - PAD.right);
  const rowH = Math.min(48, (H - PAD.top - PAD.bottom) / Math.max(1, items.length));
  const parts: string[] = [
    svgOpen("timeline", vizId),
    `<line class="axis" x1="${PAD.left}" y1="${H - PAD.bottom}" x2="${W - PAD.right}" y2="${H - PAD.bottom}"/>`,
  ];
  items.forEach((e, i) => {
    const y = PAD.top + i * rowH;
    const x1 = x(parseTimeKey(e.start).year);
    const x2 = x(parseTimeKey(e.end).year + 1);
    parts.push(
      `<g class="event" data-viz-id="${esc(vizId)}" data-local-id="${esc(localIds[i] ?? "")}">` +
        `<rect class="event-bar" x="${x1.toFixed(1)}" y="${y}" width="${(x2 - x1).toFixed(1)}" height="${(
          rowH * 0.6
        ).toFixed(1)}" rx="4"/>` +
        `<text class="event-title" x="${x1.toFixed(1)}" y="${(y + rowH * 0.6 + 12).toFixed(1)}">${esc(
          e.title,
        )} (${esc(e.start)}–${esc(e.end)})</text>` +
        (e.details ? `<title>${esc(e.details)}</title>` : "") +
        `</g>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

function renderUserChart(
  vizId: string,
  items: ChartEntryWire[],
  localIds: string[],
  variant: "bar" | "pie",
): string {
  const parts: string[] = [svgOpen(variant, vizId)];
  if (variant === "bar") {
    const hi = Math.max(1, ...items.map((e) => e.value));
    const barW = (W - PAD.left - PAD.right) / Math.max(1, items.length);
    const base = H - PAD.bottom;
    items.forEach((e, i) => {
      const h = (Math.max(0, e.value) / hi) * (H - PAD.top - PAD.bottom);
      parts.push(
        `<rect class="bar series-${i}" data-viz-id="${esc(vizId)}" data-local-id="${esc(
          localIds[i] ?? "",
        )}" x="${(PAD.left + i * barW + barW * 0.1).toFixed(1)}" y="${(base - h).toFixed(
          1,
        )}" width="${(barW * 0.8).toFixed(1)}" height="${h.toFixed(1)}"/>`,
        `<text class="tick" x="${(PAD.left + (i + 0.5) * barW).toFixed(1)}" y="${H - 8}" text-anchor="middle">${esc(
          e.label,
        )}</text>`,
      );
    });
  } else {
    const total = items.reduce((sum, e) => sum + Math.max(0, e.value), 0) || 1;
    const cx = W / 2;
    const cy = H / 2;
    const r = Math.min(W, H) / 2 - 24;
    let angle = -Math.PI / 2;
    items.forEach((e, i) => {
      const sweep = (Math.max(0, e.value) / total) * 2 * Math.PI;
      const x1 = cx + r * Math.cos(angle);
      const y1 = cy + r * Math.sin(angle);
      angle += sweep;
      const x2 = cx + r * Math.cos(angle);
      const y2 = cy + r * Math.sin(angle);
      parts.push(
        `<path class="wedge series-${i}" data-viz-id="${esc(vizId)}" data-local-id="${esc(
          localIds[i] ?? "",
        )}" d="M${cx} ${cy} L${x1.toFixed(1)} ${y1.toFixed(1)} A${r} ${r} 0 ${
          sweep > Math.PI ? 1 : 0
        } 1 ${x2.toFixed(1)} ${y2.toFixed(1)} Z"><title>${esc(e.label)}</title></path>`,
      );
    });
  }
  parts.push("</svg>");
  return parts.join("");
}

/** The scrollable legend; each row toggles its area via PATCH. */
export function renderLegend(vizId: string, legend: LegendEntryWire[]): string {
  const rows = legend
    .map(
      (e, i) =>
        `<button type="button" class="legend-entry${e.selected ? " selected" : ""} series-${i}" ` +
        `data-viz-id="${esc(vizId)}" data-legend-code="${esc(e.code)}">` +
        `<span class="swatch"></span>${esc(e.label)}</button>`,
    )
    .join("");
  return `<div class="legend" data-viz-id="${esc(vizId)}">${rows}</div>`;
}

export function renderViz(payload: VizPayloadWire): RenderResult {
  const vizId = payload.viz_id;
  if (payload.user_viz) {
    const userViz = payload.user_viz;
    const localIds = userItemLocalIds(userViz);
    if (userViz.kind === "timeline") {
      return {
        kind: "timeline",
        html: renderTimeline(vizId, userViz.items as TimelineEventWire[], localIds),
      };
    }
    if (userViz.kind === "map") {
      return { kind: "map", html: renderMap(vizId, userViz.items as MapPointWire[], localIds) };
    }
    const variant = payload.viz_type === "pie" ? "pie" : "bar";
    return {
      kind: variant,
      html: renderUserChart(vizId, userViz.items as ChartEntryWire[], localIds, variant),
    };
  }
  const seriesSet = payload.series_set;
  if (!seriesSet) throw new Error(`payload for ${vizId} carries no series`);
  switch (payload.viz_type) {
    case "line":
    case "area":
    case "scatter":
      return { kind: payload.viz_type, html: renderLineLike(vizId, seriesSet, payload.viz_type) };
    case "bar":
      return { kind: "bar", html: renderBars(vizId, seriesSet) };
    case "pie":
      return { kind: "pie", html: renderPie(vizId, seriesSet) };
    default:
      throw new Error(`cube viz cannot render as ${payload.viz_type}`);
  }
}
