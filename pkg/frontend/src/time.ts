/** Calendar periods at year, quarter, or month granularity.
 *
 * Mirrors the server's time-key semantics exactly: canonical texts are
 * "YYYY", "YYYY-Qn", and "YYYY-mm", years run 1800..2100, and
 * containment compares calendar month spans within one year.
 */

export type Granularity = "year" | "quarter" | "month";

export interface TimeKey {
  granularity: Granularity;
  year: number;
  /** Quarter 1..4 or month 1..12; 0 for year keys. */
  sub: number;
}

export const MIN_YEAR = 1800;
export const MAX_YEAR = 2100;

const YEAR_RE = /^(\d{4})$/;
const QUARTER_RE = /^(\d{4})-?[Qq](\d)$/;
const MONTH_M_RE = /^(\d{4})[Mm](\d{1,2})$/;
const MONTH_DASH_RE = /^(\d{4})-(\d{1,2})$/;

export class UnparseableTime extends Error {}
export class OutOfRange extends Error {}

function check(granularity: Granularity, year: number, sub: number): TimeKey {
  if (year < MIN_YEAR || year > MAX_YEAR) {
    throw new OutOfRange(`year ${year} outside ${MIN_YEAR}..${MAX_YEAR}`);
  }
  const [lo, hi] = granularity === "year" ? [0, 0] : granularity === "quarter" ? [1, 4] : [1, 12];
  if (sub < lo || sub > hi) {
    throw new OutOfRange(`sub-period ${sub} outside ${lo}..${hi} for ${granularity}`);
  }
  return { granularity, year, sub };
}

export function parseTimeKey(text: string): TimeKey {
  const s = text.trim();
  let m = YEAR_RE.exec(s);
  if (m) return check("year", Number(m[1]), 0);
  m = QUARTER_RE.exec(s);
  if (m) return check("quarter", Number(m[1]), Number(m[2]));
  m = MONTH_M_RE.exec(s) ?? MONTH_DASH_RE.exec(s);
  if (m) return check("month", Number(m[1]), Number(m[2]));
  throw new UnparseableTime(`not a recognized time key: ${JSON.stringify(text)}`);
}

export function timeText(t: TimeKey): string {
  const y = String(t.year).padStart(4, "0");
  if (t.granularity === "year") return y;
  if (t.granularity === "quarter") return `${y}-Q${t.sub}`;
  return `${y}-${String(t.sub).padStart(2, "0")}`;
}

export function startMonth(t: TimeKey): number {
  if (t.granularity === "year") return 1;
  if (t.granularity === "quarter") return 3 * (t.sub - 1) + 1;
  return t.sub;
}

export function endMonth(t: TimeKey): number {
  if (t.granularity === "year") return 12;
  if (t.granularity === "quarter") return 3 * t.sub;
  return t.sub;
}

/** True when inner's calendar span lies within outer's; equal keys contain
 * each other, distinct periods of equal length never do. */
export function timeContains(outer: TimeKey, inner: TimeKey): boolean {
  return (
    outer.year === inner.year &&
    startMonth(outer) <= startMonth(inner) &&
    endMonth(inner) <= endMonth(outer)
  );
}

export function timesMatch(a: TimeKey, b: TimeKey): boolean {
  return timeContains(a, b) || timeContains(b, a);
}

export function spanContains(span: [TimeKey, TimeKey], t: TimeKey): boolean {
  const [lo, hi] = span;
  const startsAfterLo =
    lo.year < t.year || (lo.year === t.year && startMonth(lo) <= startMonth(t));
  const endsBeforeHi =
    t.year < hi.year || (t.year === hi.year && endMonth(t) <= endMonth(hi));
  return startsAfterLo && endsBeforeHi;
}

export function compareTimeKeys(a: TimeKey, b: TimeKey): number {
  if (a.year !== b.year) return a.year - b.year;
  if (startMonth(a) !== startMonth(b)) return startMonth(a) - startMonth(b);
  return endMonth(a) - endMonth(b);
}
