"""Dashboards: persisted visualization collections with linking state.

A dashboard owns an ordered list of visualization configs, the manual
rules its author drew in the mapping editor, and the manual region items
those rules created. Every mutation bumps the revision; writers pass the
revision they read and lose with RevisionConflict when someone else got
there first. The compiled link table is derived state, cached per
revision.
"""

from __future__ import annotations

import os
import secrets
import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from . import links
from .catalog import Catalog
from .errors import (
    IncompatibleVizType,
    RevisionConflict,
    SameViz,
    UnknownDashboard,
    UnknownDimensionMember,
    UnknownItem,
    UnknownViz,
    ValidationError,
)
from .links import (
    ItemRef,
    LinkRule,
    LinkTable,
    LinkedItem,
    RuleOrigin,
    UserViz,
    UserVizKind,
    VizItemKey,
)
from .model import (
    DataCube,
    Selection,
    default_selection,
    parse_time_key,
    slice_cube,
)
from .storage import atomic_write_json, read_json


class VizType(str, Enum):
    LINE = "line"
    BAR = "bar"
    AREA = "area"
    PIE = "pie"
    SCATTER = "scatter"
    MAP = "map"
    TIMELINE = "timeline"


class LayoutHint(str, Enum):
    FULL = "full"
    SCALED = "scaled"


STAT_VIZ_TYPES = frozenset(
    {VizType.LINE, VizType.BAR, VizType.AREA, VizType.PIE, VizType.SCATTER}
)

USER_VIZ_DEFAULTS = {
    UserVizKind.MAP: VizType.MAP,
    UserVizKind.TIMELINE: VizType.TIMELINE,
    UserVizKind.CHART: VizType.BAR,
}

USER_VIZ_ALLOWED = {
    UserVizKind.MAP: frozenset({VizType.MAP}),
    UserVizKind.TIMELINE: frozenset({VizType.TIMELINE}),
    UserVizKind.CHART: frozenset({VizType.BAR, VizType.PIE}),
}


def selection_to_wire(sel: Selection) -> dict:
    return {
        "dimension_choice": dict(sel.dimension_choice),
        "areas": list(sel.areas),
        "from": sel.time_from.text(),
        "to": sel.time_to.text(),
    }


def selection_from_wire(doc: dict) -> Selection:
    return Selection(
        dimension_choice=doc["dimension_choice"],
        areas=tuple(doc["areas"]),
        time_from=parse_time_key(doc["from"]),
        time_to=parse_time_key(doc["to"]),
    )


@dataclass(frozen=True)
class VizConfig:
    """One visualization: a cube slice or a user viz, plus styling."""

    viz_id: str
    viz_type: VizType
    layout_hint: LayoutHint
    cube_id: str | None = None
    selection: Selection | None = None
    user_viz_id: str | None = None

    def __post_init__(self) -> None:
        if (self.cube_id is None) == (self.user_viz_id is None):
            raise ValidationError("a viz shows exactly one of a cube or a user viz")
        if (self.cube_id is None) != (self.selection is None):
            raise ValidationError("cube vizzes carry a selection, user vizzes none")

    @property
    def is_stat(self) -> bool:
        return self.cube_id is not None

    def to_wire(self) -> dict:
        return {
            "viz_id": self.viz_id,
            "viz_type": self.viz_type.value,
            "layout_hint": self.layout_hint.value,
            "cube_id": self.cube_id,
            "selection": selection_to_wire(self.selection) if self.selection else None,
            "user_viz_id": self.user_viz_id,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "VizConfig":
        sel = doc.get("selection")
        return cls(
            viz_id=doc["viz_id"],
            viz_type=VizType(doc["viz_type"]),
            layout_hint=LayoutHint(doc["layout_hint"]),
            cube_id=doc.get("cube_id"),
            selection=selection_from_wire(sel) if sel else None,
            user_viz_id=doc.get("user_viz_id"),
        )


@dataclass(frozen=True)
class Dashboard:
    dashboard_id: str
    title: str
    revision: int
    visualizations: tuple[VizConfig, ...] = ()
    manual_rules: tuple[LinkRule, ...] = ()
    manual_items: tuple[VizItemKey, ...] = ()
    next_viz_seq: int = 1

    def viz(self, viz_id: str) -> VizConfig:
        for v in self.visualizations:
            if v.viz_id == viz_id:
                return v
        raise UnknownViz(f"no viz {viz_id!r} in dashboard {self.dashboard_id!r}")

    def to_wire(self) -> dict:
        return {
            "dashboard_id": self.dashboard_id,
            "title": self.title,
            "revision": self.revision,
            "visualizations": [v.to_wire() for v in self.visualizations],
            "manual_rules": [r.to_wire() for r in self.manual_rules],
            "manual_items": [k.to_wire() for k in self.manual_items],
            "next_viz_seq": self.next_viz_seq,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "Dashboard":
        return cls(
            dashboard_id=doc["dashboard_id"],
            title=doc["title"],
            revision=int(doc["revision"]),
            visualizations=tuple(VizConfig.from_wire(d) for d in doc["visualizations"]),
            manual_rules=tuple(LinkRule.from_wire(d) for d in doc["manual_rules"]),
            manual_items=tuple(VizItemKey.from_wire(d) for d in doc["manual_items"]),
            next_viz_seq=int(doc["next_viz_seq"]),
        )


def _rule_spec_ref(spec: dict) -> tuple[str, str | None, tuple | None]:
    """Split a rule endpoint spec into (viz_id, local_id, span)."""
    viz_id = spec.get("viz_id")
    if not viz_id:
        raise ValidationError("rule endpoint needs a viz_id")
    span = spec.get("time_span")
    local_id = spec.get("local_id")
    if (span is None) == (local_id is None):
        raise ValidationError("rule endpoint needs exactly one of local_id or time_span")
    if span is not None:
        if not isinstance(span, (list, tuple)) or len(span) != 2:
            raise ValidationError("time_span is a [from, to] pair")
        lo, hi = parse_time_key(str(span[0])), parse_time_key(str(span[1]))
        return viz_id, None, (lo, hi)
    return viz_id, str(local_id), None


class DashboardStore:
    """Loads, mutates, and persists dashboards and user vizzes."""

    def __init__(self, data_dir: str | os.PathLike[str], catalog: Catalog) -> None:
        self.data_dir = Path(data_dir)
        self.catalog = catalog
        self.dashboards_dir = self.data_dir / "dashboards"
        self.uservis_dir = self.data_dir / "uservis"
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._dashboards: dict[str, Dashboard] = {}
        self._user_vizzes: dict[str, UserViz] = {}
        self._tables: dict[tuple[str, int], LinkTable] = {}

    def _lock_for(self, dashboard_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(dashboard_id, threading.Lock())

    def _save(self, dashboard: Dashboard) -> None:
        path = self.dashboards_dir / f"{dashboard.dashboard_id}.json"
        atomic_write_json(path, dashboard.to_wire())
        self._dashboards[dashboard.dashboard_id] = dashboard

    def _load(self, dashboard_id: str) -> Dashboard:
        cached = self._dashboards.get(dashboard_id)
        if cached is not None:
            return cached
        path = self.dashboards_dir / f"{dashboard_id}.json"
        if not path.exists():
            raise UnknownDashboard(f"no dashboard {dashboard_id!r}")
        dashboard = Dashboard.from_wire(read_json(path))
        self._dashboards[dashboard_id] = dashboard
        return dashboard

    @staticmethod
    def _check_revision(dashboard: Dashboard, expected: int | None) -> None:
        if expected is not None and expected != dashboard.revision:
            raise RevisionConflict(
                f"dashboard {dashboard.dashboard_id!r} is at revision "
                f"{dashboard.revision}, caller expected {expected}"
            )

    def create_dashboard(self, title: str) -> Dashboard:
        if not title.strip():
            raise ValidationError("dashboard title must be non-empty")
        dashboard = Dashboard(
            dashboard_id=f"d-{secrets.token_hex(4)}",
            title=title.strip(),
            revision=1,
        )
        with self._lock_for(dashboard.dashboard_id):
            self._save(dashboard)
        return dashboard

    def get_dashboard(self, dashboard_id: str) -> Dashboard:
        with self._lock_for(dashboard_id):
            return self._load(dashboard_id)

    def create_user_viz(self, kind: UserVizKind, items: tuple) -> UserViz:
        viz = UserViz(user_viz_id=f"u-{secrets.token_hex(4)}", kind=kind, items=items)
        atomic_write_json(self.uservis_dir / f"{viz.user_viz_id}.json", viz.to_wire())
        self._user_vizzes[viz.user_viz_id] = viz
        return viz

    def get_user_viz(self, user_viz_id: str) -> UserViz:
        cached = self._user_vizzes.get(user_viz_id)
        if cached is not None:
            return cached
        path = self.uservis_dir / f"{user_viz_id}.json"
        if not path.exists():
            raise UnknownViz(f"no user viz {user_viz_id!r}")
        viz = UserViz.from_wire(read_json(path))
        self._user_vizzes[user_viz_id] = viz
        return viz

    def add_visualization(
        self,
        dashboard_id: str,
        *,
        cube_id: str | None = None,
        user_viz_id: str | None = None,
        viz_type: VizType | None = None,
        expected_revision: int | None = None,
    ) -> tuple[Dashboard, VizConfig]:
        if (cube_id is None) == (user_viz_id is None):
            raise ValidationError("pass exactly one of cube_id or user_viz_id")
        with self._lock_for(dashboard_id):
            dashboard = self._load(dashboard_id)
            self._check_revision(dashboard, expected_revision)
            if cube_id is not None:
                cube = self.catalog.load_cube(cube_id)
                vt = viz_type or VizType.LINE
                if vt not in STAT_VIZ_TYPES:
                    raise IncompatibleVizType(f"{vt.value} cannot render a cube slice")
                viz = VizConfig(
                    viz_id=f"viz-{dashboard.next_viz_seq}",
                    viz_type=vt,
                    layout_hint=LayoutHint.FULL,
                    cube_id=cube_id,
                    selection=default_selection(cube),
                )
            else:
                user_viz = self.get_user_viz(user_viz_id)
                vt = viz_type or USER_VIZ_DEFAULTS[user_viz.kind]
                if vt not in USER_VIZ_ALLOWED[user_viz.kind]:
                    raise IncompatibleVizType(
                        f"{vt.value} cannot render a {user_viz.kind.value} viz"
                    )
                viz = VizConfig(
                    viz_id=f"viz-{dashboard.next_viz_seq}",
                    viz_type=vt,
                    layout_hint=LayoutHint.FULL,
                    user_viz_id=user_viz_id,
                )
            demoted = tuple(
                replace(v, layout_hint=LayoutHint.SCALED) for v in dashboard.visualizations
            )
            dashboard = replace(
                dashboard,
                visualizations=demoted + (viz,),
                next_viz_seq=dashboard.next_viz_seq + 1,
                revision=dashboard.revision + 1,
            )
            self._save(dashboard)
            return dashboard, viz

    def update_visualization(
        self,
        dashboard_id: str,
        viz_id: str,
        *,
        areas: list[str] | None = None,
        dimension_choice: dict | None = None,
        time_from: str | None = None,
        time_to: str | None = None,
        viz_type: VizType | None = None,
        layout_hint: LayoutHint | None = None,
        expected_revision: int | None = None,
    ) -> tuple[Dashboard, VizConfig]:
        with self._lock_for(dashboard_id):
            dashboard = self._load(dashboard_id)
            self._check_revision(dashboard, expected_revision)
            viz = dashboard.viz(viz_id)
            wants_selection_change = (
                areas is not None
                or dimension_choice is not None
                or time_from is not None
                or time_to is not None
            )
            if viz.is_stat:
                cube = self.catalog.load_cube(viz.cube_id)
                if viz_type is not None and viz_type not in STAT_VIZ_TYPES:
                    raise IncompatibleVizType(f"{viz_type.value} cannot render a cube slice")
                sel = viz.selection
                if wants_selection_change:
                    sel = _merge_selection(
                        cube, sel, areas, dimension_choice, time_from, time_to
                    )
                viz = replace(
                    viz,
                    selection=sel,
                    viz_type=viz_type or viz.viz_type,
                    layout_hint=layout_hint or viz.layout_hint,
                )
            else:
                if wants_selection_change:
                    raise ValidationError("user vizzes have no selection to update")
                user_viz = self.get_user_viz(viz.user_viz_id)
                if viz_type is not None and viz_type not in USER_VIZ_ALLOWED[user_viz.kind]:
                    raise IncompatibleVizType(
                        f"{viz_type.value} cannot render a {user_viz.kind.value} viz"
                    )
                viz = replace(
                    viz,
                    viz_type=viz_type or viz.viz_type,
                    layout_hint=layout_hint or viz.layout_hint,
                )
            vizzes = tuple(viz if v.viz_id == viz_id else v for v in dashboard.visualizations)
            dashboard = replace(
                dashboard, visualizations=vizzes, revision=dashboard.revision + 1
            )
            self._save(dashboard)
            return dashboard, viz

    def add_rule(
        self,
        dashboard_id: str,
        from_spec: dict,
        to_spec: dict,
        expected_revision: int | None = None,
    ) -> tuple[Dashboard, LinkRule]:
        with self._lock_for(dashboard_id):
            dashboard = self._load(dashboard_id)
            self._check_revision(dashboard, expected_revision)
            new_items: list[VizItemKey] = []
            refs = []
            for spec in (from_spec, to_spec):
                viz_id, local_id, span = _rule_spec_ref(spec)
                viz = dashboard.viz(viz_id)
                if span is not None:
                    ref, item = self._region_endpoint(dashboard, viz, span, new_items)
                    if item is not None:
                        new_items.append(item)
                else:
                    table = self._table_for(dashboard)
                    ref = ItemRef(viz_id, local_id)
                    if ref not in table.item_map():
                        raise UnknownItem(f"no item {local_id!r} in viz {viz_id!r}")
                refs.append(ref)
            from_ref, to_ref = refs
            if from_ref.viz_id == to_ref.viz_id:
                raise SameViz("links connect items of two different visualizations")
            rule = LinkRule(from_ref, to_ref, RuleOrigin.MANUAL)
            for existing in dashboard.manual_rules:
                if existing.endpoints() == rule.endpoints():
                    return dashboard, existing
            dashboard = replace(
                dashboard,
                manual_rules=dashboard.manual_rules + (rule,),
                manual_items=dashboard.manual_items + tuple(new_items),
                revision=dashboard.revision + 1,
            )
            self._save(dashboard)
            return dashboard, rule

    def _region_endpoint(self, dashboard, viz, span, pending):
        """Find or create the manual region item for a span endpoint."""
        if not viz.is_stat or viz.viz_type not in STAT_VIZ_TYPES:
            raise IncompatibleVizType("time-span endpoints live on cube charts")
        local_id = links.region_local_id(span)
        ref = ItemRef(viz.viz_id, local_id)
        for key in tuple(dashboard.manual_items) + tuple(pending):
            if key.ref == ref:
                return ref, None
        item = VizItemKey(
            viz_id=viz.viz_id,
            kind=links.ItemKind.REGION,
            local_id=local_id,
            time_span=span,
        )
        return ref, item

    def delete_rule(
        self,
        dashboard_id: str,
        from_spec: dict,
        to_spec: dict,
        expected_revision: int | None = None,
    ) -> Dashboard:
        with self._lock_for(dashboard_id):
            dashboard = self._load(dashboard_id)
            self._check_revision(dashboard, expected_revision)
            refs = []
            for spec in (from_spec, to_spec):
                viz_id, local_id, span = _rule_spec_ref(spec)
                refs.append(
                    ItemRef(viz_id, local_id if span is None else links.region_local_id(span))
                )
            endpoints = frozenset(refs)
            kept = tuple(r for r in dashboard.manual_rules if r.endpoints() != endpoints)
            if len(kept) == len(dashboard.manual_rules):
                raise UnknownItem("no manual rule between those endpoints")
            live = {ref for r in kept for ref in (r.from_ref, r.to_ref)}
            items = tuple(k for k in dashboard.manual_items if k.ref in live)
            dashboard = replace(
                dashboard,
                manual_rules=kept,
                manual_items=items,
                revision=dashboard.revision + 1,
            )
            self._save(dashboard)
            return dashboard

    def link_table(self, dashboard_id: str) -> LinkTable:
        with self._lock_for(dashboard_id):
            return self._table_for(self._load(dashboard_id))

    def _table_for(self, dashboard: Dashboard) -> LinkTable:
        cache_key = (dashboard.dashboard_id, dashboard.revision)
        cached = self._tables.get(cache_key)
        if cached is not None:
            return cached

        stat_items: dict[str, list[LinkedItem]] = {}
        user_items: dict[str, list[LinkedItem]] = {}
        items: list[LinkedItem] = []
        for viz in dashboard.visualizations:
            if viz.is_stat:
                cube = self.catalog.load_cube(viz.cube_id)
                series_set = slice_cube(cube, viz.selection)
                indexed = links.index_series_set(viz.viz_id, series_set)
                stat_items[viz.viz_id] = indexed
            else:
                user_viz = self.get_user_viz(viz.user_viz_id)
                indexed = links.index_user_viz(viz.viz_id, user_viz)
                user_items[viz.viz_id] = indexed
            items.extend(indexed)
        for key in dashboard.manual_items:
            items.append(LinkedItem(key, links.span_display(key.time_span)))

        rules: list[LinkRule] = []
        stat_ids = list(stat_items)
        for i, a in enumerate(stat_ids):
            for b in stat_ids[i + 1 :]:
                rules.extend(links.auto_link_pair(stat_items[a], stat_items[b]))
        all_stat = [item for sid in stat_ids for item in stat_items[sid]]
        for indexed in user_items.values():
            rules.extend(links.label_link(indexed, all_stat))
        rules.extend(dashboard.manual_rules)

        table = LinkTable(
            dashboard_id=dashboard.dashboard_id,
            revision=dashboard.revision,
            items=tuple(items),
            rules=tuple(rules),
        )
        self._tables[cache_key] = table
        return table

    def resolve(self, dashboard_id: str, viz_id: str, local_id: str) -> links.HighlightSet:
        return links.resolve(self.link_table(dashboard_id), viz_id, local_id)

    def payload(self, dashboard_id: str, viz_id: str) -> dict:
        """Everything one viz needs to render itself."""
        with self._lock_for(dashboard_id):
            dashboard = self._load(dashboard_id)
        viz = dashboard.viz(viz_id)
        doc = viz.to_wire()
        if viz.is_stat:
            cube = self.catalog.load_cube(viz.cube_id)
            sel = viz.selection
            doc["series_set"] = slice_cube(cube, sel).to_wire()
            doc["legend"] = [
                {"code": a.code, "label": a.label, "selected": a.code in set(sel.areas)}
                for a in cube.areas
            ]
            doc["dimensions"] = [
                {
                    "name": dim.name,
                    "chosen": sel.dimension_choice.get(dim.name),
                    "members": [{"code": m.code, "label": m.label} for m in dim.members],
                }
                for dim in cube.dimensions
            ]
        else:
            doc["user_viz"] = self.get_user_viz(viz.user_viz_id).to_wire()
        return doc


def _merge_selection(
    cube: DataCube,
    sel: Selection,
    areas: list[str] | None,
    dimension_choice: dict | None,
    time_from: str | None,
    time_to: str | None,
) -> Selection:
    """Apply a partial update to a selection, validating against the cube."""
    new_areas = sel.areas if areas is None else tuple(areas)
    for code in new_areas:
        cube.area_by_code(code)
    choice = dict(sel.dimension_choice)
    if dimension_choice:
        for name, member in dimension_choice.items():
            dim = cube.dimension_by_name(name)
            if member not in {m.code for m in dim.members}:
                raise UnknownDimensionMember(f"dimension {name!r} has no member {member!r}")
            choice[name] = member
    t_from = sel.time_from if time_from is None else parse_time_key(time_from)
    t_to = sel.time_to if time_to is None else parse_time_key(time_to)
    return Selection(
        dimension_choice=choice, areas=new_areas, time_from=t_from, time_to=t_to
    )
