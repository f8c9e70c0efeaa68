"""Brushing and linking across visualizations.

Every visualization contributes indexed items: datapoints for statistical
charts, places and events for user vizzes, regions for manually marked
chart time spans. Rules are undirected edges between items of different
vizzes and come from three origins: auto (shared area and matching
period), label (place or event label equals an area label), and manual.
Hover resolution walks one hop, treating regions as conduits between a
chart's datapoints and whatever the region is linked to, and never
highlights anything inside the hovered viz.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyTimeRange, UnknownItem
from .model import SeriesSet, TimeKey, parse_time_key, time_contains


class ItemKind(str, Enum):
    DATAPOINT = "datapoint"
    PLACE = "place"
    EVENT = "event"
    REGION = "region"


class RuleOrigin(str, Enum):
    AUTO = "auto"
    LABEL = "label"
    MANUAL = "manual"


@dataclass(frozen=True)
class ItemRef:
    viz_id: str
    local_id: str

    def to_wire(self) -> dict:
        return {"viz_id": self.viz_id, "local_id": self.local_id}

    @classmethod
    def from_wire(cls, doc: dict) -> "ItemRef":
        return cls(viz_id=doc["viz_id"], local_id=doc["local_id"])


@dataclass(frozen=True)
class VizItemKey:
    """Identity and linkable coordinates of one hoverable item.

    Attributes:
        viz_id: Owning visualization.
        kind: Datapoint, place, event, or region.
        local_id: Unique within the viz ("USA@2001", "event:oil-crisis").
        area: Area code; datapoints only.
        time: Period; datapoints only.
        time_span: Inclusive period span; events and regions.
        label: Matchable label: area label for datapoints, the display
            label for places and events.
    """

    viz_id: str
    kind: ItemKind
    local_id: str
    area: str | None = None
    time: TimeKey | None = None
    time_span: tuple[TimeKey, TimeKey] | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.viz_id or not self.local_id:
            raise ValueError("viz_id and local_id must be non-empty")
        if self.kind is ItemKind.DATAPOINT:
            if self.area is None or self.time is None:
                raise ValueError("datapoint items need area and time")
        elif self.kind is ItemKind.PLACE:
            if not self.label:
                raise ValueError("place items need a label")
        elif self.kind is ItemKind.EVENT:
            if not self.label or self.time_span is None:
                raise ValueError("event items need a label and a time span")
        elif self.time_span is None:
            raise ValueError("region items need a time span")
        if self.time_span is not None:
            lo, hi = self.time_span
            if (lo.year, lo.start_month) > (hi.year, hi.end_month):
                raise EmptyTimeRange(f"span {lo.text()}..{hi.text()} is empty")

    @property
    def ref(self) -> ItemRef:
        return ItemRef(self.viz_id, self.local_id)

    def to_wire(self) -> dict:
        return {
            "viz_id": self.viz_id,
            "kind": self.kind.value,
            "local_id": self.local_id,
            "area": self.area,
            "time": self.time.text() if self.time else None,
            "time_span": [self.time_span[0].text(), self.time_span[1].text()]
            if self.time_span
            else None,
            "label": self.label,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "VizItemKey":
        span = doc.get("time_span")
        return cls(
            viz_id=doc["viz_id"],
            kind=ItemKind(doc["kind"]),
            local_id=doc["local_id"],
            area=doc.get("area"),
            time=parse_time_key(doc["time"]) if doc.get("time") else None,
            time_span=(parse_time_key(span[0]), parse_time_key(span[1])) if span else None,
            label=doc.get("label"),
        )


@dataclass(frozen=True)
class LinkedItem:
    """An indexed item plus the text a highlight popup shows for it."""

    key: VizItemKey
    display_value: str

    def to_wire(self) -> dict:
        doc = self.key.to_wire()
        doc["display_value"] = self.display_value
        return doc

    @classmethod
    def from_wire(cls, doc: dict) -> "LinkedItem":
        fields = {k: v for k, v in doc.items() if k != "display_value"}
        return cls(key=VizItemKey.from_wire(fields), display_value=doc["display_value"])


@dataclass(frozen=True)
class LinkRule:
    """One undirected edge; from/to order is storage order, not direction."""

    from_ref: ItemRef
    to_ref: ItemRef
    origin: RuleOrigin

    def endpoints(self) -> frozenset[ItemRef]:
        return frozenset((self.from_ref, self.to_ref))

    def to_wire(self) -> dict:
        return {
            "from": self.from_ref.to_wire(),
            "to": self.to_ref.to_wire(),
            "origin": self.origin.value,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "LinkRule":
        return cls(
            from_ref=ItemRef.from_wire(doc["from"]),
            to_ref=ItemRef.from_wire(doc["to"]),
            origin=RuleOrigin(doc["origin"]),
        )


def datapoint_local_id(area_code: str, t: TimeKey) -> str:
    return f"{area_code}@{t.text()}"


def region_local_id(span: tuple[TimeKey, TimeKey]) -> str:
    return f"region:{span[0].text()}-{span[1].text()}"


_LABEL_SLUG_RE = re.compile(r"[^a-z0-9]+")


def label_local_id(prefix: str, label: str) -> str:
    slug = _LABEL_SLUG_RE.sub("-", label.casefold()).strip("-") or "item"
    return f"{prefix}:{slug}"


def render_display(value_text: str, unit: str) -> str:
    """Value text plus unit; percent signs attach without a space."""
    if unit == "%":
        return f"{value_text}%"
    if unit:
        return f"{value_text} {unit}"
    return value_text


def span_display(span: tuple[TimeKey, TimeKey]) -> str:
    return f"{span[0].text()}-{span[1].text()}"


def normalize_label(label: str) -> str:
    return label.strip().casefold()


def index_series_set(viz_id: str, series_set: SeriesSet) -> list[LinkedItem]:
    """One datapoint item per present observation, labeled by its area."""
    items: list[LinkedItem] = []
    for series in series_set.series:
        for t, obs in series.points:
            if not obs.present:
                continue
            key = VizItemKey(
                viz_id=viz_id,
                kind=ItemKind.DATAPOINT,
                local_id=datapoint_local_id(series.area.code, t),
                area=series.area.code,
                time=t,
                label=series.area.label,
            )
            items.append(LinkedItem(key, render_display(obs.text, series_set.unit)))
    return items


def times_match(a: TimeKey, b: TimeKey) -> bool:
    """Equal keys, or one calendar period containing the other."""
    return time_contains(a, b) or time_contains(b, a)


def auto_link_pair(items_a: list[LinkedItem], items_b: list[LinkedItem]) -> list[LinkRule]:
    """Auto rules between two statistical vizzes.

    One rule per pair of datapoints sharing an area code whose periods
    match; deterministic order follows the item index order of the first
    viz.
    """
    by_area: dict[str, list[LinkedItem]] = {}
    for item in items_b:
        if item.key.kind is ItemKind.DATAPOINT:
            by_area.setdefault(item.key.area, []).append(item)
    rules: list[LinkRule] = []
    for item in items_a:
        if item.key.kind is not ItemKind.DATAPOINT:
            continue
        for other in by_area.get(item.key.area, ()):
            if times_match(item.key.time, other.key.time):
                rules.append(LinkRule(item.key.ref, other.key.ref, RuleOrigin.AUTO))
    return rules


def label_link(user_items: list[LinkedItem], stat_items: list[LinkedItem]) -> list[LinkRule]:
    """Label rules: place/event labels matching area labels (trim+casefold)."""
    by_label: dict[str, list[LinkedItem]] = {}
    for item in stat_items:
        if item.key.kind is ItemKind.DATAPOINT and item.key.label:
            by_label.setdefault(normalize_label(item.key.label), []).append(item)
    rules: list[LinkRule] = []
    for item in user_items:
        if item.key.kind not in (ItemKind.PLACE, ItemKind.EVENT) or not item.key.label:
            continue
        for other in by_label.get(normalize_label(item.key.label), ()):
            rules.append(LinkRule(item.key.ref, other.key.ref, RuleOrigin.LABEL))
    return rules


class UserVizKind(str, Enum):
    MAP = "map"
    TIMELINE = "timeline"
    CHART = "chart"


@dataclass(frozen=True)
class MapPoint:
    """A labeled coordinate with free-form detail text."""

    label: str
    lat: float
    lon: float
    details: str = ""

    def __post_init__(self) -> None:
        if not self.label.strip():
            raise ValueError("map points need a label")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of range")

    def to_wire(self) -> dict:
        return {"label": self.label, "lat": self.lat, "lon": self.lon, "details": self.details}

    @classmethod
    def from_wire(cls, doc: dict) -> "MapPoint":
        return cls(
            label=doc["label"],
            lat=float(doc["lat"]),
            lon=float(doc["lon"]),
            details=doc.get("details", ""),
        )


@dataclass(frozen=True)
class TimelineEvent:
    """A titled period on a timeline."""

    title: str
    start: TimeKey
    end: TimeKey
    details: str = ""

    def __post_init__(self) -> None:
        if not self.title.strip():
            raise ValueError("timeline events need a title")
        if (self.start.year, self.start.start_month) > (self.end.year, self.end.end_month):
            raise EmptyTimeRange(f"event span {self.start.text()}..{self.end.text()} is empty")

    def to_wire(self) -> dict:
        return {
            "title": self.title,
            "start": self.start.text(),
            "end": self.end.text(),
            "details": self.details,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "TimelineEvent":
        return cls(
            title=doc["title"],
            start=parse_time_key(doc["start"]),
            end=parse_time_key(doc["end"]),
            details=doc.get("details", ""),
        )


@dataclass(frozen=True)
class ChartEntry:
    """One labeled value in a user-supplied chart."""

    label: str
    value: float

    def __post_init__(self) -> None:
        if not self.label.strip():
            raise ValueError("chart entries need a label")

    def to_wire(self) -> dict:
        return {"label": self.label, "value": self.value}

    @classmethod
    def from_wire(cls, doc: dict) -> "ChartEntry":
        return cls(label=doc["label"], value=float(doc["value"]))


@dataclass(frozen=True)
class UserViz:
    """User-authored content: a map, a timeline, or a small chart."""

    user_viz_id: str
    kind: UserVizKind
    items: tuple

    def __post_init__(self) -> None:
        expected = {
            UserVizKind.MAP: MapPoint,
            UserVizKind.TIMELINE: TimelineEvent,
            UserVizKind.CHART: ChartEntry,
        }[self.kind]
        for item in self.items:
            if not isinstance(item, expected):
                raise ValueError(f"{self.kind.value} viz cannot hold {type(item).__name__}")

    def to_wire(self) -> dict:
        return {
            "user_viz_id": self.user_viz_id,
            "kind": self.kind.value,
            "items": [item.to_wire() for item in self.items],
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "UserViz":
        kind = UserVizKind(doc["kind"])
        loader = {
            UserVizKind.MAP: MapPoint.from_wire,
            UserVizKind.TIMELINE: TimelineEvent.from_wire,
            UserVizKind.CHART: ChartEntry.from_wire,
        }[kind]
        return cls(
            user_viz_id=doc["user_viz_id"],
            kind=kind,
            items=tuple(loader(d) for d in doc["items"]),
        )


def index_user_viz(viz_id: str, viz: UserViz) -> list[LinkedItem]:
    """Index user content: map and chart rows become places, timeline
    rows become events; duplicate labels get numbered local ids."""
    items: list[LinkedItem] = []
    seen: dict[str, int] = {}

    def unique(base: str) -> str:
        n = seen.get(base, 0)
        seen[base] = n + 1
        return base if n == 0 else f"{base}-{n + 1}"

    for entry in viz.items:
        if viz.kind is UserVizKind.TIMELINE:
            key = VizItemKey(
                viz_id=viz_id,
                kind=ItemKind.EVENT,
                local_id=unique(label_local_id("event", entry.title)),
                time_span=(entry.start, entry.end),
                label=entry.title,
            )
            items.append(LinkedItem(key, entry.title))
        else:
            key = VizItemKey(
                viz_id=viz_id,
                kind=ItemKind.PLACE,
                local_id=unique(label_local_id("place", entry.label)),
                label=entry.label,
            )
            items.append(LinkedItem(key, entry.label))
    return items


@dataclass(frozen=True)
class HighlightItem:
    viz_id: str
    local_id: str
    display_value: str

    def to_wire(self) -> dict:
        return {
            "viz_id": self.viz_id,
            "local_id": self.local_id,
            "display_value": self.display_value,
        }


@dataclass(frozen=True)
class HighlightSet:
    """Resolution result: the anchor echoed plus sorted foreign highlights."""

    anchor: HighlightItem
    items: tuple[HighlightItem, ...]

    def refs(self) -> set[tuple[str, str]]:
        return {(h.viz_id, h.local_id) for h in self.items}

    def to_wire(self) -> dict:
        return {
            "anchor": self.anchor.to_wire(),
            "items": [h.to_wire() for h in self.items],
        }


@dataclass(frozen=True)
class LinkTable:
    """Everything a client needs to resolve hovers without the server."""

    dashboard_id: str
    revision: int
    items: tuple[LinkedItem, ...]
    rules: tuple[LinkRule, ...]

    def item_map(self) -> dict[ItemRef, LinkedItem]:
        return {item.key.ref: item for item in self.items}

    def to_wire(self) -> dict:
        return {
            "dashboard_id": self.dashboard_id,
            "revision": self.revision,
            "items": [item.to_wire() for item in self.items],
            "rules": [rule.to_wire() for rule in self.rules],
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "LinkTable":
        return cls(
            dashboard_id=doc["dashboard_id"],
            revision=int(doc["revision"]),
            items=tuple(LinkedItem.from_wire(d) for d in doc["items"]),
            rules=tuple(LinkRule.from_wire(d) for d in doc["rules"]),
        )


def span_contains(span: tuple[TimeKey, TimeKey], t: TimeKey) -> bool:
    lo, hi = span
    return (lo.year, lo.start_month) <= (t.year, t.start_month) and (
        t.year,
        t.end_month,
    ) <= (hi.year, hi.end_month)


def resolve(table: LinkTable, viz_id: str, local_id: str) -> HighlightSet:
    """Resolve one hover over the link table.

    One hop along rules, with regions as conduits: a hovered datapoint
    follows the rules of same-viz regions covering its period, and a
    reached region expands to the datapoints its span covers in its own
    viz. The result excludes the anchor and everything in the anchor's
    viz, deduplicates, and sorts by (viz_id, local_id). The same algorithm
    runs client-side over the wire form of the table; equal inputs must
    produce equal results there.
    """
    imap = table.item_map()
    anchor_ref = ItemRef(viz_id, local_id)
    anchor = imap.get(anchor_ref)
    if anchor is None:
        raise UnknownItem(f"no item {local_id!r} in viz {viz_id!r}")

    touching: dict[ItemRef, list[ItemRef]] = {}
    for rule in table.rules:
        touching.setdefault(rule.from_ref, []).append(rule.to_ref)
        touching.setdefault(rule.to_ref, []).append(rule.from_ref)

    neighbors: set[ItemRef] = set(touching.get(anchor_ref, ()))
    if anchor.key.kind is ItemKind.DATAPOINT:
        for item in table.items:
            if (
                item.key.kind is ItemKind.REGION
                and item.key.viz_id == viz_id
                and span_contains(item.key.time_span, anchor.key.time)
            ):
                neighbors.update(touching.get(item.key.ref, ()))

    reached: dict[ItemRef, LinkedItem] = {}
    for ref in neighbors:
        item = imap.get(ref)
        if item is None:
            continue
        reached[ref] = item
        if item.key.kind is ItemKind.REGION:
            for other in table.items:
                if (
                    other.key.kind is ItemKind.DATAPOINT
                    and other.key.viz_id == item.key.viz_id
                    and span_contains(item.key.time_span, other.key.time)
                ):
                    reached[other.key.ref] = other

    reached.pop(anchor_ref, None)
    final = sorted(
        (item for ref, item in reached.items() if item.key.viz_id != viz_id),
        key=lambda it: (it.key.viz_id, it.key.local_id),
    )
    return HighlightSet(
        anchor=HighlightItem(viz_id, local_id, anchor.display_value),
        items=tuple(
            HighlightItem(it.key.viz_id, it.key.local_id, it.display_value) for it in final
        ),
    )
