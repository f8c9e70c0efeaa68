"""HTTP API over the catalog and dashboard store.

JSON in, JSON out, UTF-8. Domain errors map onto status codes in one
place: unknown resources are 404, revision conflicts 409, storage
problems 500, and every other domain rejection 400 with the error class
name in the body so clients can branch without parsing prose.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .catalog import Catalog
from .config import data_dir as default_data_dir
from .dashboards import DashboardStore, LayoutHint, VizType
from .errors import (
    RevisionConflict,
    StatlinkError,
    StorageFailure,
    UnknownCube,
    UnknownDashboard,
    UnknownDimensionMember,
    UnknownItem,
    UnknownViz,
    ValidationError,
)
from .links import ChartEntry, MapPoint, TimelineEvent, UserVizKind
from .model import Provider, Selection, parse_time_key, slice_cube

_NOT_FOUND = (UnknownDashboard, UnknownCube, UnknownViz, UnknownItem)

_USER_ITEM_LOADERS = {
    UserVizKind.MAP: MapPoint.from_wire,
    UserVizKind.TIMELINE: TimelineEvent.from_wire,
    UserVizKind.CHART: ChartEntry.from_wire,
}


def _status_for(exc: StatlinkError) -> int:
    if isinstance(exc, _NOT_FOUND):
        return 404
    if isinstance(exc, RevisionConflict):
        return 409
    if isinstance(exc, StorageFailure):
        return 500
    return 400


async def _body(request: Request) -> dict:
    try:
        doc = await request.json()
    except Exception:
        raise ValidationError("request body must be a JSON object") from None
    if not isinstance(doc, dict):
        raise ValidationError("request body must be a JSON object")
    return doc


def _expected_revision(doc: dict) -> int | None:
    value = doc.get("expected_revision")
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError("expected_revision must be an integer")
    return value


def _enum_field(doc: dict, key: str, enum_cls):
    value = doc.get(key)
    if value is None:
        return None
    try:
        return enum_cls(value)
    except ValueError:
        raise ValidationError(f"{key} must be one of {[e.value for e in enum_cls]}") from None


def _require(doc: dict, key: str):
    value = doc.get(key)
    if value is None:
        raise ValidationError(f"body needs a {key!r} field")
    return value


def create_app(data_dir: str | os.PathLike[str] | None = None) -> FastAPI:
    root = default_data_dir(data_dir)
    catalog = Catalog(root)
    store = DashboardStore(root, catalog)
    app = FastAPI(title="statlink", docs_url=None, redoc_url=None)

    @app.exception_handler(StatlinkError)
    async def on_domain_error(request: Request, exc: StatlinkError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/api/datasets")
    def list_datasets(provider: str | None = None, q: str | None = None):
        entries = catalog.search_titles(q) if q is not None else catalog.entries()
        if provider is not None:
            try:
                wanted = Provider(provider.casefold())
            except ValueError:
                raise ValidationError(f"unknown provider {provider!r}") from None
            entries = [e for e in entries if e.provider is wanted]
        return [e.to_wire() for e in entries]

    @app.get("/api/datasets/{cube_id}")
    def dataset_detail(cube_id: str):
        entry = catalog.get(cube_id)
        cube = catalog.load_cube(cube_id)
        doc = entry.to_wire()
        doc["dimensions"] = [
            {
                "name": dim.name,
                "members": [{"code": m.code, "label": m.label} for m in dim.members],
            }
            for dim in cube.dimensions
        ]
        doc["areas"] = [{"code": a.code, "label": a.label} for a in cube.areas]
        doc["times"] = [t.text() for t in cube.times]
        return doc

    @app.get("/api/datasets/{cube_id}/slice")
    def dataset_slice(request: Request, cube_id: str):
        cube = catalog.load_cube(cube_id)
        params = request.query_params
        if "areas" in params:
            areas = tuple(a for a in params["areas"].split(",") if a)
        else:
            areas = tuple(a.code for a in cube.areas)
        lo, hi = cube.time_span()
        t_from = parse_time_key(params["from"]) if "from" in params else lo
        t_to = parse_time_key(params["to"]) if "to" in params else hi
        choice = {dim.name: dim.members[0].code for dim in cube.dimensions}
        for key, value in params.items():
            if not key.startswith("dim."):
                continue
            name = key[len("dim.") :]
            if name not in choice:
                raise UnknownDimensionMember(f"cube {cube_id} has no dimension {name!r}")
            choice[name] = value
        sel = Selection(choice, areas, t_from, t_to)
        return slice_cube(cube, sel).to_wire()

    @app.post("/api/dashboards", status_code=201)
    async def create_dashboard(request: Request):
        doc = await _body(request)
        title = _require(doc, "title")
        if not isinstance(title, str):
            raise ValidationError("title must be a string")
        return store.create_dashboard(title).to_wire()

    @app.get("/api/dashboards/{dashboard_id}")
    def get_dashboard(dashboard_id: str):
        dashboard = store.get_dashboard(dashboard_id)
        return {
            "dashboard": dashboard.to_wire(),
            "link_table": store.link_table(dashboard_id).to_wire(),
        }

    @app.post("/api/dashboards/{dashboard_id}/visualizations", status_code=201)
    async def add_visualization(dashboard_id: str, request: Request):
        doc = await _body(request)
        dashboard, viz = store.add_visualization(
            dashboard_id,
            cube_id=doc.get("cube_id"),
            user_viz_id=doc.get("user_viz_id"),
            viz_type=_enum_field(doc, "viz_type", VizType),
            expected_revision=_expected_revision(doc),
        )
        return {
            "dashboard": dashboard.to_wire(),
            "viz": viz.to_wire(),
            "link_table": store.link_table(dashboard_id).to_wire(),
        }

    @app.patch("/api/dashboards/{dashboard_id}/visualizations/{viz_id}")
    async def update_visualization(dashboard_id: str, viz_id: str, request: Request):
        doc = await _body(request)
        areas = doc.get("areas")
        if areas is not None and (
            not isinstance(areas, list) or not all(isinstance(a, str) for a in areas)
        ):
            raise ValidationError("areas must be a list of area codes")
        choice = doc.get("dimension_choice")
        if choice is not None and not isinstance(choice, dict):
            raise ValidationError("dimension_choice must be an object")
        dashboard, viz = store.update_visualization(
            dashboard_id,
            viz_id,
            areas=areas,
            dimension_choice=choice,
            time_from=doc.get("from"),
            time_to=doc.get("to"),
            viz_type=_enum_field(doc, "viz_type", VizType),
            layout_hint=_enum_field(doc, "layout_hint", LayoutHint),
            expected_revision=_expected_revision(doc),
        )
        return {
            "dashboard": dashboard.to_wire(),
            "viz": viz.to_wire(),
            "link_table": store.link_table(dashboard_id).to_wire(),
        }

    @app.post("/api/dashboards/{dashboard_id}/rules", status_code=201)
    async def add_rule(dashboard_id: str, request: Request):
        doc = await _body(request)
        dashboard, rule = store.add_rule(
            dashboard_id,
            _require(doc, "from"),
            _require(doc, "to"),
            expected_revision=_expected_revision(doc),
        )
        return {
            "dashboard": dashboard.to_wire(),
            "rule": rule.to_wire(),
            "link_table": store.link_table(dashboard_id).to_wire(),
        }

    @app.delete("/api/dashboards/{dashboard_id}/rules")
    async def delete_rule(dashboard_id: str, request: Request):
        doc = await _body(request)
        dashboard = store.delete_rule(
            dashboard_id,
            _require(doc, "from"),
            _require(doc, "to"),
            expected_revision=_expected_revision(doc),
        )
        return {
            "dashboard": dashboard.to_wire(),
            "link_table": store.link_table(dashboard_id).to_wire(),
        }

    @app.post("/api/dashboards/{dashboard_id}/resolve")
    async def resolve_hover(dashboard_id: str, request: Request):
        doc = await _body(request)
        viz_id = _require(doc, "viz_id")
        local_id = _require(doc, "local_id")
        return store.resolve(dashboard_id, str(viz_id), str(local_id)).to_wire()

    @app.get("/api/dashboards/{dashboard_id}/visualizations/{viz_id}/payload")
    def viz_payload(dashboard_id: str, viz_id: str):
        return store.payload(dashboard_id, viz_id)

    @app.post("/api/uservisualizations", status_code=201)
    async def create_user_viz(request: Request):
        doc = await _body(request)
        kind = _enum_field(doc, "kind", UserVizKind)
        if kind is None:
            raise ValidationError("body needs a 'kind' field")
        raw_items = doc.get("items")
        if not isinstance(raw_items, list):
            raise ValidationError("items must be a list")
        loader = _USER_ITEM_LOADERS[kind]
        items = []
        for raw in raw_items:
            if not isinstance(raw, dict):
                raise ValidationError("each item must be an object")
            try:
                items.append(loader(raw))
            except StatlinkError:
                raise
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"bad {kind.value} item: {exc}") from None
        return store.create_user_viz(kind, tuple(items)).to_wire()

    return app
