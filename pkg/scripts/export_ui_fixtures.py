"""Export the case-study dashboard contract for the frontend test suite.

Builds the fixture catalog in a scratch directory, assembles the
four-chart dashboard plus the recession timeline and its manual rule,
then snapshots the compiled link table, the server-side resolution of
every item, and each visualization payload. The frontend asserts its
client-side resolver reproduces every resolution byte for byte.
"""

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from statlink.dashboards import DashboardStore, VizType
from statlink.fixtures import build_fixture_catalog
from statlink.links import TimelineEvent, UserVizKind
from statlink.model import Granularity, TimeKey

OUT = Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures" / "contract.json"


def year(y: int) -> TimeKey:
    return TimeKey(Granularity.YEAR, y)


def export_figure2(store: DashboardStore, cube_ids: tuple) -> dict:
    """Record the legend-click path from the default four-panel dashboard
    to the figure-2 configuration (GBR+PRT everywhere, fear as bars).

    Each step stores the exact PATCH body the UI must emit, so the
    frontend replays its reducer against this recording.
    """
    d = store.create_dashboard("Figure 2")
    panels = []
    for cube_id in cube_ids:
        d, viz = store.add_visualization(d.dashboard_id, cube_id=cube_id)
        panels.append(viz.viz_id)

    initial_dashboard = d.to_wire()
    initial_payloads = {vid: store.payload(d.dashboard_id, vid) for vid in panels}
    steps = []

    def record(viz_id: str, body: dict, **kwargs) -> None:
        nonlocal d
        d, viz = store.update_visualization(
            d.dashboard_id,
            viz_id,
            expected_revision=body["expected_revision"],
            **kwargs,
        )
        steps.append(
            {
                "viz_id": viz_id,
                "body": body,
                "revision_after": d.revision,
                "viz_after": viz.to_wire(),
            }
        )

    for viz_id in panels:
        legend_codes = [e["code"] for e in initial_payloads[viz_id]["legend"]]
        selected = set(legend_codes)
        for click in ("USA", "EUU", "AFR", "DEU"):
            selected.remove(click)
            areas = [c for c in legend_codes if c in selected]
            record(
                viz_id,
                {"areas": areas, "expected_revision": d.revision},
                areas=areas,
            )

    fear_viz = panels[cube_ids.index("fixture-fear-of-crime")]
    record(
        fear_viz,
        {"viz_type": "bar", "expected_revision": d.revision},
        viz_type=VizType.BAR,
    )

    return {
        "dashboard_id": d.dashboard_id,
        "panels": panels,
        "fear_viz_id": fear_viz,
        "clicks": ["USA", "EUU", "AFR", "DEU"],
        "initial_dashboard": initial_dashboard,
        "initial_payloads": initial_payloads,
        "steps": steps,
        "final_dashboard": d.to_wire(),
        "final_payloads": {vid: store.payload(d.dashboard_id, vid) for vid in panels},
    }


def main() -> None:
    with tempfile.TemporaryDirectory() as scratch:
        root = Path(scratch) / "data"
        catalog = build_fixture_catalog(root)
        store = DashboardStore(root, catalog)

        d = store.create_dashboard("Case study")
        cube_ids = (
            "fixture-gdp",
            "fixture-life-expectancy",
            "fixture-fear-of-crime",
            "fixture-population",
        )
        viz_by_cube = {}
        for cube_id in cube_ids:
            d, viz = store.add_visualization(d.dashboard_id, cube_id=cube_id)
            viz_by_cube[cube_id] = viz.viz_id

        timeline = store.create_user_viz(
            UserVizKind.TIMELINE,
            (
                TimelineEvent("Early 1980s recession", year(1980), year(1981)),
                TimelineEvent("Early 1990s recession", year(1990), year(1992)),
                TimelineEvent("Late 2000s recession", year(2008), year(2009)),
            ),
        )
        d, tl_viz = store.add_visualization(d.dashboard_id, user_viz_id=timeline.user_viz_id)

        d, rule = store.add_rule(
            d.dashboard_id,
            {"viz_id": tl_viz.viz_id, "local_id": "event:early-1990s-recession"},
            {"viz_id": viz_by_cube["fixture-gdp"], "time_span": ["1990", "1992"]},
        )

        table = store.link_table(d.dashboard_id)
        resolutions = [
            {
                "viz_id": item.key.viz_id,
                "local_id": item.key.local_id,
                "result": store.resolve(
                    d.dashboard_id, item.key.viz_id, item.key.local_id
                ).to_wire(),
            }
            for item in table.items
        ]
        payloads = {
            viz.viz_id: store.payload(d.dashboard_id, viz.viz_id)
            for viz in d.visualizations
        }

        contract = {
            "dashboard": d.to_wire(),
            "viz_by_cube": viz_by_cube,
            "timeline_viz_id": tl_viz.viz_id,
            "manual_rule": rule.to_wire(),
            "link_table": table.to_wire(),
            "resolutions": resolutions,
            "payloads": payloads,
            "figure2": export_figure2(store, cube_ids),
        }

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(contract, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes, {len(resolutions)} resolutions)")


if __name__ == "__main__":
    main()
