"""Command line interface.

Commands operate on the same data directory the HTTP service uses, so
anything ingested here is immediately visible to a running dashboard
after restart or via a fresh request.
"""

from __future__ import annotations

import functools
import json
from pathlib import Path

import click

from . import config
from .catalog import Catalog
from .dashboards import DashboardStore
from .errors import StatlinkError
from .fixtures import build_fixture_catalog
from .ingest import parse_payload
from .model import Provider, Selection, parse_time_key, slice_cube
from .sources import FetchCache, SourceDescriptor, ingest_source, looks_like_descriptor


def _friendly(fn):
    """Turn domain errors into clean CLI failures instead of tracebacks."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StatlinkError as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc

    return wrapper


def _parse_dims(pairs: tuple[str, ...]) -> dict[str, str]:
    choice = {}
    for pair in pairs:
        name, sep, member = pair.partition("=")
        if not sep or not name or not member:
            raise click.ClickException(f"--dim takes name=member, got {pair!r}")
        choice[name] = member
    return choice


@click.group()
@click.option(
    "--data-dir",
    envvar=config.DATA_DIR_ENV,
    default=None,
    type=click.Path(file_okay=False),
    help="Where cubes, the catalog, and dashboards live.",
)
@click.option(
    "--cache-dir",
    envvar=config.CACHE_DIR_ENV,
    default=None,
    type=click.Path(file_okay=False),
    help="Where fetched source payloads are cached.",
)
@click.pass_context
def main(ctx: click.Context, data_dir: str | None, cache_dir: str | None) -> None:
    """Ingest statistical time series and serve linked dashboards."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = config.data_dir(data_dir)
    ctx.obj["cache_dir"] = config.cache_dir(cache_dir)


def _ingest_descriptor(desc: SourceDescriptor, ctx_obj: dict, selection: Selection | None):
    cache = FetchCache(ctx_obj["cache_dir"])
    return ingest_source(desc, selection=selection, cache=cache)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--dataset-id", default=None, help="Override the cube id (default: file stem).")
@click.option(
    "--provider",
    default=None,
    type=click.Choice([p.value for p in Provider]),
    help="Provider to register the cubes under.",
)
@click.option("--areas", default=None, help="Comma-separated area codes (endpoint sources).")
@click.option("--from", "time_from", default=None, help="Start period (endpoint sources).")
@click.option("--to", "time_to", default=None, help="End period (endpoint sources).")
@click.option("--dim", "dims", multiple=True, help="Dimension choice name=member, repeatable.")
@click.pass_context
@_friendly
def ingest(ctx, path: Path, dataset_id, provider, areas, time_from, time_to, dims):
    """Ingest a data file, a source descriptor, or a descriptor registry."""
    catalog = Catalog(ctx.obj["data_dir"])
    descriptors = None
    if path.suffix == ".json":
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            doc = None
        if looks_like_descriptor(doc):
            descriptors = [SourceDescriptor.from_wire(doc)]
        elif isinstance(doc, list) and doc and all(looks_like_descriptor(d) for d in doc):
            descriptors = [SourceDescriptor.from_wire(d) for d in doc]

    cubes = []
    if descriptors is not None:
        selection = None
        if areas or time_from or time_to or dims:
            if not (areas and time_from and time_to):
                raise click.ClickException(
                    "endpoint slicing needs --areas, --from, and --to together"
                )
            selection = Selection(
                dimension_choice=_parse_dims(dims),
                areas=tuple(a for a in areas.split(",") if a),
                time_from=parse_time_key(time_from),
                time_to=parse_time_key(time_to),
            )
        for desc in descriptors:
            cubes.extend(_ingest_descriptor(desc, ctx.obj, selection))
    else:
        cubes = parse_payload(
            path.read_bytes(),
            dataset_id=dataset_id,
            provider=Provider(provider) if provider else None,
            source_name=path.name,
        )

    for cube in cubes:
        entry = catalog.register(cube)
        click.echo(
            f"registered {entry.cube_id} ({entry.provider.value}, "
            f"{entry.granularity.value}, {entry.area_count} areas, "
            f"{entry.time_span[0].text()}..{entry.time_span[1].text()})"
        )
    if not cubes:
        click.echo("nothing ingested")


@main.command("catalog")
@click.option("--provider", default=None, type=click.Choice([p.value for p in Provider]))
@click.option("--search", default=None, help="Keyword to match against titles.")
@click.option("--json", "as_json", is_flag=True, help="Print entries as JSON.")
@click.pass_context
@_friendly
def catalog_cmd(ctx, provider, search, as_json):
    """List registered cubes."""
    catalog = Catalog(ctx.obj["data_dir"])
    entries = catalog.search_titles(search) if search else catalog.entries()
    if provider:
        entries = [e for e in entries if e.provider.value == provider]
    if as_json:
        click.echo(json.dumps([e.to_wire() for e in entries], indent=2))
        return
    if not entries:
        click.echo("catalog is empty")
        return
    for e in entries:
        span = f"{e.time_span[0].text()}..{e.time_span[1].text()}"
        click.echo(
            f"{e.cube_id}\t{e.provider.value}\t{e.granularity.value}\t"
            f"{e.area_count} areas\t{span}\t{e.title}"
        )


@main.command("slice")
@click.argument("cube_id")
@click.option("--areas", default=None, help="Comma-separated area codes (default: all).")
@click.option("--from", "time_from", default=None, help="Start period (default: cube start).")
@click.option("--to", "time_to", default=None, help="End period (default: cube end).")
@click.option("--dim", "dims", multiple=True, help="Dimension choice name=member, repeatable.")
@click.option("--json", "as_json", is_flag=True, help="Print the series set as JSON.")
@click.pass_context
@_friendly
def slice_cmd(ctx, cube_id, areas, time_from, time_to, dims, as_json):
    """Print a slice of one cube as a time-by-area table."""
    catalog = Catalog(ctx.obj["data_dir"])
    cube = catalog.load_cube(cube_id)
    lo, hi = cube.time_span()
    choice = {d.name: d.members[0].code for d in cube.dimensions}
    choice.update(_parse_dims(dims))
    sel = Selection(
        dimension_choice=choice,
        areas=tuple(a for a in areas.split(",") if a)
        if areas is not None
        else tuple(a.code for a in cube.areas),
        time_from=parse_time_key(time_from) if time_from else lo,
        time_to=parse_time_key(time_to) if time_to else hi,
    )
    series_set = slice_cube(cube, sel)
    if as_json:
        click.echo(json.dumps(series_set.to_wire(), indent=2))
        return
    codes = [s.area.code for s in series_set.series]
    click.echo("\t".join(["time", *codes]))
    columns = {s.area.code: dict(s.points) for s in series_set.series}
    for t in series_set.times:
        row = [t.text()]
        for code in codes:
            obs = columns[code][t]
            row.append(obs.text if obs.present else ":")
        click.echo("\t".join(row))


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--data-dir",
    "data_dir_override",
    default=None,
    type=click.Path(file_okay=False),
    help="Overrides the group-level data directory.",
)
@click.pass_context
@_friendly
def serve(ctx, port, host, data_dir_override):
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    data_dir = Path(data_dir_override) if data_dir_override else ctx.obj["data_dir"]
    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="info")


@main.command()
@click.argument("dashboard_id")
@click.argument("viz_id")
@click.argument("local_id")
@click.option("--json", "as_json", is_flag=True, help="Print the highlight set as JSON.")
@click.pass_context
@_friendly
def resolve(ctx, dashboard_id, viz_id, local_id, as_json):
    """Resolve one hover: which items light up elsewhere."""
    catalog = Catalog(ctx.obj["data_dir"])
    store = DashboardStore(ctx.obj["data_dir"], catalog)
    highlight = store.resolve(dashboard_id, viz_id, local_id)
    if as_json:
        click.echo(json.dumps(highlight.to_wire(), indent=2))
        return
    click.echo(f"anchor\t{highlight.anchor.viz_id}\t{highlight.anchor.local_id}\t{highlight.anchor.display_value}")
    for item in highlight.items:
        click.echo(f"match\t{item.viz_id}\t{item.local_id}\t{item.display_value}")


@main.command()
@click.pass_context
@_friendly
def fixtures(ctx):
    """Register the built-in demonstration cubes."""
    catalog = build_fixture_catalog(ctx.obj["data_dir"])
    for entry in catalog.entries():
        click.echo(f"registered {entry.cube_id} ({entry.title})")


if __name__ == "__main__":
    main()
