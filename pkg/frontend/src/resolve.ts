/** Client-side hover resolution over the compiled link table.
 *
 * Same algorithm as the server's resolve endpoint: one hop along rules,
 * regions act as conduits (a hovered datapoint follows the rules of
 * same-viz regions covering its period; a reached region expands to the
 * datapoints its span covers in its own viz), the anchor and its whole
 * viz are excluded, and results sort by (viz_id, local_id). Equal
 * inputs must produce byte-equal results to POST .../resolve.
 */

import type {
  HighlightSetWire,
  ItemRefWire,
  LinkedItemWire,
  LinkTableWire,
} from "./types.js";
import { parseTimeKey, spanContains, type TimeKey } from "./time.js";

export class UnknownItem extends Error {}

function refKey(ref: ItemRefWire): string {
  return `${ref.viz_id}\u0000${ref.local_id}`;
}

function itemSpan(item: LinkedItemWire): [TimeKey, TimeKey] | null {
  if (!item.time_span) return null;
  return [parseTimeKey(item.time_span[0]), parseTimeKey(item.time_span[1])];
}

export function resolveLocal(
  table: LinkTableWire,
  vizId: string,
  localId: string,
): HighlightSetWire {
  const byRef = new Map<string, LinkedItemWire>();
  for (const item of table.items) byRef.set(refKey(item), item);

  const anchorKey = refKey({ viz_id: vizId, local_id: localId });
  const anchor = byRef.get(anchorKey);
  if (anchor === undefined) {
    throw new UnknownItem(
      `no item ${JSON.stringify(localId)} in viz ${JSON.stringify(vizId)}`,
    );
  }

  const touching = new Map<string, ItemRefWire[]>();
  const touch = (a: ItemRefWire, b: ItemRefWire) => {
    const key = refKey(a);
    const list = touching.get(key);
    if (list === undefined) touching.set(key, [b]);
    else list.push(b);
  };
  for (const rule of table.rules) {
    touch(rule.from, rule.to);
    touch(rule.to, rule.from);
  }

  const neighbors = new Map<string, ItemRefWire>();
  for (const ref of touching.get(anchorKey) ?? []) neighbors.set(refKey(ref), ref);
  if (anchor.kind === "datapoint" && anchor.time !== null) {
    const anchorTime = parseTimeKey(anchor.time);
    for (const item of table.items) {
      if (item.kind !== "region" || item.viz_id !== vizId) continue;
      const span = itemSpan(item);
      if (span === null || !spanContains(span, anchorTime)) continue;
      for (const ref of touching.get(refKey(item)) ?? []) {
        neighbors.set(refKey(ref), ref);
      }
    }
  }

  const reached = new Map<string, LinkedItemWire>();
  for (const key of neighbors.keys()) {
    const item = byRef.get(key);
    if (item === undefined) continue;
    reached.set(key, item);
    if (item.kind === "region") {
      const span = itemSpan(item);
      if (span === null) continue;
      for (const other of table.items) {
        if (other.kind !== "datapoint" || other.viz_id !== item.viz_id) continue;
        if (other.time !== null && spanContains(span, parseTimeKey(other.time))) {
          reached.set(refKey(other), other);
        }
      }
    }
  }

  reached.delete(anchorKey);
  const final = [...reached.values()]
    .filter((item) => item.viz_id !== vizId)
    .sort((a, b) =>
      a.viz_id !== b.viz_id
        ? a.viz_id < b.viz_id
          ? -1
          : 1
        : a.local_id < b.local_id
          ? -1
          : a.local_id > b.local_id
            ? 1
            : 0,
    );

  return {
    anchor: { viz_id: vizId, local_id: localId, display_value: anchor.display_value },
    items: final.map((item) => ({
      viz_id: item.viz_id,
      local_id: item.local_id,
      display_value: item.display_value,
    })),
  };
}
