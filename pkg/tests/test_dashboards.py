"""Dashboard lifecycle, rule editing, link table compilation."""

import pytest

from statlink.catalog import Catalog
from statlink.dashboards import (
    Dashboard,
    DashboardStore,
    LayoutHint,
    VizConfig,
    VizType,
    selection_from_wire,
    selection_to_wire,
)
from statlink.errors import (
    EmptyTimeRange,
    IncompatibleVizType,
    RevisionConflict,
    SameViz,
    UnknownArea,
    UnknownCube,
    UnknownDashboard,
    UnknownDimensionMember,
    UnknownItem,
    UnknownViz,
    ValidationError,
)
from statlink.links import (
    ChartEntry,
    MapPoint,
    RuleOrigin,
    TimelineEvent,
    UserVizKind,
)
from statlink.model import (
    AreaKey,
    DataCube,
    DimensionSpec,
    Granularity,
    Member,
    Observation,
    Provider,
    Selection,
    TimeKey,
)


def year(y):
    return TimeKey(Granularity.YEAR, y)


AREAS = (AreaKey("DEU", "Germany"), AreaKey("USA", "United States"))


def build_cube(cube_id, unit, y0, y1, dims=()):
    times = tuple(year(y) for y in range(y0, y1 + 1))
    first = tuple(d.members[0].code for d in dims)
    cells = {}
    for i, area in enumerate(AREAS):
        for j, t in enumerate(times):
            cells[(first, area.code, t)] = Observation(float(10 * (i + 1) + j))
    return DataCube(
        id=cube_id,
        provider=Provider.USER,
        title=cube_id,
        unit=unit,
        dimensions=dims,
        areas=AREAS,
        granularity=Granularity.YEAR,
        times=times,
        cells=cells,
    )


SEX = DimensionSpec("sex", (Member("T", "Total"), Member("F", "Female")))


@pytest.fixture
def store(tmp_path):
    catalog = Catalog(tmp_path / "data")
    catalog.register(build_cube("fear", "%", 1996, 2002, dims=(SEX,)))
    catalog.register(build_cube("gdp", "US$", 1990, 1998))
    return DashboardStore(tmp_path / "data", catalog)


def add_stat(store, d, cube_id, **kw):
    return store.add_visualization(d.dashboard_id, cube_id=cube_id, **kw)


class TestDashboardLifecycle:
    def test_create(self, store):
        d = store.create_dashboard("  Crime and GDP ")
        assert d.title == "Crime and GDP"
        assert d.revision == 1
        assert d.visualizations == ()

    def test_empty_title(self, store):
        with pytest.raises(ValidationError):
            store.create_dashboard("   ")

    def test_get_unknown(self, store):
        with pytest.raises(UnknownDashboard):
            store.get_dashboard("d-missing")

    def test_round_trip_wire(self, store):
        d = store.create_dashboard("T")
        d, _ = add_stat(store, d, "fear")
        loaded = Dashboard.from_wire(d.to_wire())
        assert loaded == d


class TestAddVisualization:
    def test_defaults(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        assert viz.viz_id == "viz-1"
        assert viz.viz_type is VizType.LINE
        assert viz.layout_hint is LayoutHint.FULL
        assert viz.selection.dimension_choice == {"sex": "T"}
        assert viz.selection.areas == ("DEU", "USA")
        assert viz.selection.time_from == year(1996)
        assert viz.selection.time_to == year(2002)
        assert d.revision == 2

    def test_sequential_ids(self, store):
        d = store.create_dashboard("T")
        d, v1 = add_stat(store, d, "fear")
        d, v2 = add_stat(store, d, "gdp")
        assert (v1.viz_id, v2.viz_id) == ("viz-1", "viz-2")

    def test_new_viz_full_others_scaled(self, store):
        d = store.create_dashboard("T")
        d, _ = add_stat(store, d, "fear")
        d, _ = add_stat(store, d, "gdp")
        hints = [v.layout_hint for v in d.visualizations]
        assert hints == [LayoutHint.SCALED, LayoutHint.FULL]

    def test_unknown_cube(self, store):
        d = store.create_dashboard("T")
        with pytest.raises(UnknownCube):
            add_stat(store, d, "nope")

    def test_map_type_rejected_for_cube(self, store):
        d = store.create_dashboard("T")
        with pytest.raises(IncompatibleVizType):
            add_stat(store, d, "fear", viz_type=VizType.MAP)

    def test_exactly_one_source(self, store):
        d = store.create_dashboard("T")
        with pytest.raises(ValidationError):
            store.add_visualization(d.dashboard_id)
        with pytest.raises(ValidationError):
            store.add_visualization(d.dashboard_id, cube_id="fear", user_viz_id="u-1")

    def test_user_viz_defaults(self, store):
        d = store.create_dashboard("T")
        umap = store.create_user_viz(UserVizKind.MAP, (MapPoint("Berlin", 52.5, 13.4),))
        utl = store.create_user_viz(
            UserVizKind.TIMELINE, (TimelineEvent("War", year(1991), year(1992)),)
        )
        uchart = store.create_user_viz(UserVizKind.CHART, (ChartEntry("Germany", 83.0),))
        _, v1 = store.add_visualization(d.dashboard_id, user_viz_id=umap.user_viz_id)
        _, v2 = store.add_visualization(d.dashboard_id, user_viz_id=utl.user_viz_id)
        _, v3 = store.add_visualization(d.dashboard_id, user_viz_id=uchart.user_viz_id)
        assert (v1.viz_type, v2.viz_type, v3.viz_type) == (
            VizType.MAP,
            VizType.TIMELINE,
            VizType.BAR,
        )

    def test_user_viz_type_compat(self, store):
        d = store.create_dashboard("T")
        uchart = store.create_user_viz(UserVizKind.CHART, (ChartEntry("x", 1.0),))
        with pytest.raises(IncompatibleVizType):
            store.add_visualization(
                d.dashboard_id, user_viz_id=uchart.user_viz_id, viz_type=VizType.LINE
            )
        _, viz = store.add_visualization(
            d.dashboard_id, user_viz_id=uchart.user_viz_id, viz_type=VizType.PIE
        )
        assert viz.viz_type is VizType.PIE

    def test_unknown_user_viz(self, store):
        d = store.create_dashboard("T")
        with pytest.raises(UnknownViz):
            store.add_visualization(d.dashboard_id, user_viz_id="u-missing")


class TestUpdateVisualization:
    def test_partial_updates(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        d, viz = store.update_visualization(
            d.dashboard_id,
            viz.viz_id,
            areas=["USA"],
            dimension_choice={"sex": "F"},
            time_from="1998",
            viz_type=VizType.BAR,
        )
        assert viz.selection.areas == ("USA",)
        assert viz.selection.dimension_choice == {"sex": "F"}
        assert viz.selection.time_from == year(1998)
        assert viz.selection.time_to == year(2002)
        assert viz.viz_type is VizType.BAR
        assert d.revision == 3

    def test_unknown_viz(self, store):
        d = store.create_dashboard("T")
        with pytest.raises(UnknownViz):
            store.update_visualization(d.dashboard_id, "viz-9", areas=["DEU"])

    def test_unknown_area(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        with pytest.raises(UnknownArea):
            store.update_visualization(d.dashboard_id, viz.viz_id, areas=["FRA"])

    def test_unknown_member(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        with pytest.raises(UnknownDimensionMember):
            store.update_visualization(
                d.dashboard_id, viz.viz_id, dimension_choice={"sex": "X"}
            )
        with pytest.raises(UnknownDimensionMember):
            store.update_visualization(
                d.dashboard_id, viz.viz_id, dimension_choice={"age": "T"}
            )

    def test_empty_range_rejected(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        with pytest.raises(EmptyTimeRange):
            store.update_visualization(
                d.dashboard_id, viz.viz_id, time_from="2002", time_to="1996"
            )

    def test_user_viz_has_no_selection(self, store):
        d = store.create_dashboard("T")
        u = store.create_user_viz(UserVizKind.MAP, (MapPoint("Berlin", 52.5, 13.4),))
        d, viz = store.add_visualization(d.dashboard_id, user_viz_id=u.user_viz_id)
        with pytest.raises(ValidationError):
            store.update_visualization(d.dashboard_id, viz.viz_id, areas=["DEU"])

    def test_revision_conflict(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        store.update_visualization(
            d.dashboard_id, viz.viz_id, areas=["DEU"], expected_revision=d.revision
        )
        with pytest.raises(RevisionConflict):
            store.update_visualization(
                d.dashboard_id, viz.viz_id, areas=["USA"], expected_revision=d.revision
            )


class TestRules:
    def fixture_dashboard(self, store):
        d = store.create_dashboard("T")
        d, v_fear = add_stat(store, d, "fear")
        d, v_gdp = add_stat(store, d, "gdp")
        utl = store.create_user_viz(
            UserVizKind.TIMELINE, (TimelineEvent("Recession", year(1990), year(1992)),)
        )
        d, v_tl = store.add_visualization(d.dashboard_id, user_viz_id=utl.user_viz_id)
        return d, v_fear, v_gdp, v_tl

    def test_manual_rule_by_local_ids(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        d, rule = store.add_rule(
            d.dashboard_id,
            {"viz_id": v_tl.viz_id, "local_id": "event:recession"},
            {"viz_id": v_fear.viz_id, "local_id": "DEU@1996"},
        )
        assert rule.origin is RuleOrigin.MANUAL
        assert rule in d.manual_rules

    def test_unknown_item(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        with pytest.raises(UnknownItem):
            store.add_rule(
                d.dashboard_id,
                {"viz_id": v_tl.viz_id, "local_id": "event:nope"},
                {"viz_id": v_fear.viz_id, "local_id": "DEU@1996"},
            )

    def test_same_viz_rejected(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        with pytest.raises(SameViz):
            store.add_rule(
                d.dashboard_id,
                {"viz_id": v_fear.viz_id, "local_id": "DEU@1996"},
                {"viz_id": v_fear.viz_id, "local_id": "USA@1996"},
            )

    def test_span_endpoint_creates_region(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        d, rule = store.add_rule(
            d.dashboard_id,
            {"viz_id": v_tl.viz_id, "local_id": "event:recession"},
            {"viz_id": v_gdp.viz_id, "time_span": ["1990", "1992"]},
        )
        assert rule.to_ref.local_id == "region:1990-1992"
        assert any(k.local_id == "region:1990-1992" for k in d.manual_items)

    def test_span_on_user_viz_rejected(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        with pytest.raises(IncompatibleVizType):
            store.add_rule(
                d.dashboard_id,
                {"viz_id": v_tl.viz_id, "time_span": ["1990", "1992"]},
                {"viz_id": v_gdp.viz_id, "local_id": "DEU@1990"},
            )

    def test_duplicate_rule_is_idempotent(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        spec_a = {"viz_id": v_tl.viz_id, "local_id": "event:recession"}
        spec_b = {"viz_id": v_gdp.viz_id, "time_span": ["1990", "1992"]}
        d1, r1 = store.add_rule(d.dashboard_id, spec_a, spec_b)
        d2, r2 = store.add_rule(d.dashboard_id, spec_b, spec_a)
        assert r1.endpoints() == r2.endpoints()
        assert d2.revision == d1.revision
        assert len(d2.manual_rules) == 1
        assert len(d2.manual_items) == 1

    def test_bad_specs(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        with pytest.raises(ValidationError):
            store.add_rule(d.dashboard_id, {"local_id": "x"}, {"viz_id": v_gdp.viz_id, "local_id": "DEU@1990"})
        with pytest.raises(ValidationError):
            store.add_rule(
                d.dashboard_id,
                {"viz_id": v_tl.viz_id},
                {"viz_id": v_gdp.viz_id, "local_id": "DEU@1990"},
            )
        with pytest.raises(ValidationError):
            store.add_rule(
                d.dashboard_id,
                {"viz_id": v_tl.viz_id, "local_id": "x", "time_span": ["1990", "1991"]},
                {"viz_id": v_gdp.viz_id, "local_id": "DEU@1990"},
            )

    def test_delete_rule_prunes_orphan_region(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        spec_a = {"viz_id": v_tl.viz_id, "local_id": "event:recession"}
        spec_b = {"viz_id": v_gdp.viz_id, "time_span": ["1990", "1992"]}
        d, _ = store.add_rule(d.dashboard_id, spec_a, spec_b)
        d = store.delete_rule(d.dashboard_id, spec_a, spec_b)
        assert d.manual_rules == ()
        assert d.manual_items == ()

    def test_delete_missing_rule(self, store):
        d, v_fear, v_gdp, v_tl = self.fixture_dashboard(store)
        with pytest.raises(UnknownItem):
            store.delete_rule(
                d.dashboard_id,
                {"viz_id": v_tl.viz_id, "local_id": "event:recession"},
                {"viz_id": v_gdp.viz_id, "local_id": "DEU@1990"},
            )


class TestLinkTable:
    def test_compiles_items_and_rules(self, store):
        d = store.create_dashboard("T")
        d, v_fear = add_stat(store, d, "fear")
        d, v_gdp = add_stat(store, d, "gdp")
        table = store.link_table(d.dashboard_id)
        ids = {(i.key.viz_id, i.key.local_id) for i in table.items}
        assert ("viz-1", "DEU@1996") in ids
        assert ("viz-2", "DEU@1996") in ids
        auto = [r for r in table.rules if r.origin is RuleOrigin.AUTO]
        overlap_years = range(1996, 1999)
        assert len(auto) == 2 * len(list(overlap_years))

    def test_label_rules_from_timeline(self, store):
        d = store.create_dashboard("T")
        d, v_fear = add_stat(store, d, "fear")
        utl = store.create_user_viz(
            UserVizKind.TIMELINE, (TimelineEvent("Germany", year(1996), year(1997)),)
        )
        d, v_tl = store.add_visualization(d.dashboard_id, user_viz_id=utl.user_viz_id)
        table = store.link_table(d.dashboard_id)
        label_rules = [r for r in table.rules if r.origin is RuleOrigin.LABEL]
        assert len(label_rules) == 7
        assert all(r.from_ref.viz_id == v_tl.viz_id for r in label_rules)

    def test_cached_per_revision(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        t1 = store.link_table(d.dashboard_id)
        assert store.link_table(d.dashboard_id) is t1
        store.update_visualization(d.dashboard_id, viz.viz_id, areas=["DEU"])
        t2 = store.link_table(d.dashboard_id)
        assert t2 is not t1
        assert t2.revision == t1.revision + 1

    def test_resolve_through_store(self, store):
        d = store.create_dashboard("T")
        d, v_fear = add_stat(store, d, "fear")
        d, v_gdp = add_stat(store, d, "gdp")
        hs = store.resolve(d.dashboard_id, v_fear.viz_id, "DEU@1996")
        assert (v_gdp.viz_id, "DEU@1996") in hs.refs()

    def test_selection_scopes_items(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        store.update_visualization(
            d.dashboard_id, viz.viz_id, areas=["DEU"], time_from="1998", time_to="1999"
        )
        table = store.link_table(d.dashboard_id)
        ids = sorted(i.key.local_id for i in table.items)
        assert ids == ["DEU@1998", "DEU@1999"]


class TestPayload:
    def test_stat_payload(self, store):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        store.update_visualization(d.dashboard_id, viz.viz_id, areas=["USA"])
        doc = store.payload(d.dashboard_id, viz.viz_id)
        assert doc["series_set"]["cube_id"] == "fear"
        assert doc["legend"] == [
            {"code": "DEU", "label": "Germany", "selected": False},
            {"code": "USA", "label": "United States", "selected": True},
        ]
        assert doc["dimensions"][0]["name"] == "sex"
        assert doc["dimensions"][0]["chosen"] == "T"
        assert {m["code"] for m in doc["dimensions"][0]["members"]} == {"T", "F"}

    def test_user_payload(self, store):
        d = store.create_dashboard("T")
        u = store.create_user_viz(UserVizKind.MAP, (MapPoint("Berlin", 52.5, 13.4),))
        d, viz = store.add_visualization(d.dashboard_id, user_viz_id=u.user_viz_id)
        doc = store.payload(d.dashboard_id, viz.viz_id)
        assert doc["user_viz"]["kind"] == "map"
        assert doc["user_viz"]["items"][0]["label"] == "Berlin"


class TestPersistence:
    def test_restart_round_trip(self, store, tmp_path):
        d = store.create_dashboard("T")
        d, v_fear = add_stat(store, d, "fear")
        d, v_gdp = add_stat(store, d, "gdp")
        utl = store.create_user_viz(
            UserVizKind.TIMELINE, (TimelineEvent("Recession", year(1990), year(1992)),)
        )
        d, v_tl = store.add_visualization(d.dashboard_id, user_viz_id=utl.user_viz_id)
        d, _ = store.add_rule(
            d.dashboard_id,
            {"viz_id": v_tl.viz_id, "local_id": "event:recession"},
            {"viz_id": v_gdp.viz_id, "time_span": ["1990", "1992"]},
        )
        hs_before = store.resolve(d.dashboard_id, v_gdp.viz_id, "DEU@1991")

        fresh = DashboardStore(tmp_path / "data", Catalog(tmp_path / "data"))
        reloaded = fresh.get_dashboard(d.dashboard_id)
        assert reloaded == d
        hs_after = fresh.resolve(d.dashboard_id, v_gdp.viz_id, "DEU@1991")
        assert hs_after == hs_before
        assert fresh.get_user_viz(utl.user_viz_id) == utl

    def test_revision_monotonic_across_restart(self, store, tmp_path):
        d = store.create_dashboard("T")
        d, viz = add_stat(store, d, "fear")
        fresh = DashboardStore(tmp_path / "data", Catalog(tmp_path / "data"))
        d2, _ = fresh.update_visualization(d.dashboard_id, viz.viz_id, areas=["DEU"])
        assert d2.revision == d.revision + 1


class TestSelectionWire:
    def test_round_trip(self):
        sel = Selection({"sex": "F"}, ("DEU", "USA"), year(1996), year(2002))
        doc = selection_to_wire(sel)
        assert doc == {
            "dimension_choice": {"sex": "F"},
            "areas": ["DEU", "USA"],
            "from": "1996",
            "to": "2002",
        }
        assert selection_from_wire(doc) == sel

    def test_viz_config_validation(self):
        with pytest.raises(ValidationError):
            VizConfig("viz-1", VizType.LINE, LayoutHint.FULL)
        with pytest.raises(ValidationError):
            VizConfig("viz-1", VizType.LINE, LayoutHint.FULL, cube_id="c")
