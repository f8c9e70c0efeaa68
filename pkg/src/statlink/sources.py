"""Source acquisition: descriptors, SPARQL slicing, and the fetch cache.

A SourceDescriptor says where a dataset lives and how to reach it. Remote
payloads flow through FetchCache, which keeps content-addressed copies on
disk, serves them while fresh, refetches after the freshness window, and
falls back to the stale copy when the origin is down. The transport and
the clock are injectable so tests never touch the network or sleep.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import requests

from .areas import AreaResolver, lookup
from .config import DEFAULT_TTL_SECONDS
from .errors import (
    BadStatus,
    EmptySelection,
    FetchFailed,
    MalformedHeader,
    OutOfRange,
    RaggedRow,
    StorageFailure,
    UnparseableNumber,
    UnparseableTime,
)
from .ingest import TableHints, normalize_cell, parse_payload
from .model import (
    CellKey,
    DataCube,
    Granularity,
    Observation,
    Provider,
    Selection,
    parse_time_key,
    time_in_range,
)


class Access(str, Enum):
    STATIC_URL = "static_url"
    SPARQL_ENDPOINT = "sparql_endpoint"
    LOCAL_FILE = "local_file"


@dataclass(frozen=True)
class SourceDescriptor:
    """Where one dataset lives and how to fetch and read it.

    Attributes:
        provider: Origin provider for the resulting cubes.
        dataset_id: Cube id base; also names the remote dataset.
        access: Static document, SPARQL endpoint, or local file.
        location: URL or filesystem path.
        freshness_ttl: Seconds a cached copy stays fresh (default half a day).
        result_format: Tabular result flavor for endpoints: "csv" or "tsv".
        title: Optional cube title override.
        unit: Unit for cubes that do not carry one in-band.
        decimal_comma: Source writes decimal commas in wide tables.
    """

    provider: Provider
    dataset_id: str
    access: Access
    location: str
    freshness_ttl: float = DEFAULT_TTL_SECONDS
    result_format: str = "csv"
    title: str | None = None
    unit: str = ""
    decimal_comma: bool = False

    def __post_init__(self) -> None:
        if not self.location:
            raise ValueError("descriptor location must be non-empty")
        if not self.dataset_id:
            raise ValueError("descriptor dataset_id must be non-empty")
        if self.freshness_ttl <= 0:
            raise ValueError("freshness_ttl must be positive")
        if self.result_format not in ("csv", "tsv"):
            raise ValueError(f"result_format must be csv or tsv, got {self.result_format!r}")

    def to_wire(self) -> dict:
        return {
            "provider": self.provider.value,
            "dataset_id": self.dataset_id,
            "access": self.access.value,
            "location": self.location,
            "freshness_ttl": self.freshness_ttl,
            "result_format": self.result_format,
            "title": self.title,
            "unit": self.unit,
            "decimal_comma": self.decimal_comma,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "SourceDescriptor":
        return cls(
            provider=Provider(doc["provider"]),
            dataset_id=doc["dataset_id"],
            access=Access(doc["access"]),
            location=doc["location"],
            freshness_ttl=float(doc.get("freshness_ttl", DEFAULT_TTL_SECONDS)),
            result_format=doc.get("result_format", "csv"),
            title=doc.get("title"),
            unit=doc.get("unit", ""),
            decimal_comma=bool(doc.get("decimal_comma", False)),
        )


def looks_like_descriptor(doc: object) -> bool:
    return isinstance(doc, dict) and {"provider", "dataset_id", "access", "location"} <= set(doc)


def load_registry(path: str | os.PathLike[str]) -> list[SourceDescriptor]:
    """Read a JSON array of descriptors from disk."""
    docs = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(docs, list):
        raise ValueError("source registry must be a JSON array")
    return [SourceDescriptor.from_wire(d) for d in docs]


# --- SPARQL -------------------------------------------------------------------


def _sparql_literal(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def build_sparql_select(dataset_id: str, selection: Selection) -> str:
    """Build the SELECT that slices one RDF data-cube dataset.

    Observations bind geo, period, and value through the standard qb and
    sdmx vocabularies; extra dimension choices become dim: properties in
    sorted name order. Areas arrive via VALUES using the codes exactly as
    given (endpoint vocabulary), and the period is restricted lexically to
    the canonical renderings of the selection bounds, which is faithful
    when the query uses keys at the dataset's own granularity. Output is
    deterministic: equal inputs yield the identical string.
    """
    if not selection.areas:
        raise EmptySelection(f"dataset {dataset_id}: a SPARQL slice needs at least one area")
    dataset_uri = dataset_id if "://" in dataset_id else f"urn:dataset:{dataset_id}"
    props = ""
    for name in sorted(selection.dimension_choice):
        member = selection.dimension_choice[name]
        props += f" ;\n       dim:{name} {_sparql_literal(member)}"
    values = " ".join(_sparql_literal(a) for a in selection.areas)
    lo = _sparql_literal(selection.time_from.text())
    hi = _sparql_literal(selection.time_to.text())
    return (
        "PREFIX qb: <http://purl.org/linked-data/cube#>\n"
        "PREFIX sdmx-dimension: <http://purl.org/linked-data/sdmx/2009/dimension#>\n"
        "PREFIX sdmx-measure: <http://purl.org/linked-data/sdmx/2009/measure#>\n"
        "PREFIX dim: <urn:dataset-dimension:>\n"
        "SELECT ?geo ?time ?value\n"
        "WHERE {\n"
        "  ?obs a qb:Observation ;\n"
        f"       qb:dataSet <{dataset_uri}> ;\n"
        "       sdmx-dimension:refArea ?geo ;\n"
        "       sdmx-dimension:refPeriod ?time ;\n"
        f"       sdmx-measure:obsValue ?value{props} .\n"
        f"  VALUES ?geo {{ {values} }}\n"
        f"  FILTER (STR(?time) >= {lo} && STR(?time) <= {hi})\n"
        "}\n"
        "ORDER BY ?geo ?time"
    )


_GEO_COLUMNS = {"geo", "area", "refarea"}
_TIME_COLUMNS = {"time", "period", "refperiod"}
_VALUE_COLUMNS = {"value", "obsvalue"}


def parse_sparql_csv(
    data: bytes | str,
    descriptor: SourceDescriptor,
    selection: Selection,
) -> list[DataCube]:
    """Read tabular SELECT results into cubes.

    Rows outside the requested areas or window are dropped defensively;
    area codes canonicalize through the alias table. Mixed-granularity
    results split into one cube per granularity, like Eurostat files.
    """
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    delim = "," if descriptor.result_format == "csv" else "\t"
    rows = list(csv.reader(io.StringIO(text), delimiter=delim))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise MalformedHeader(f"{descriptor.dataset_id}: empty SPARQL result")
    header = [c.strip().lstrip("?").casefold() for c in rows[0]]

    def col(names: set[str], what: str) -> int:
        for i, name in enumerate(header):
            if name in names:
                return i
        raise MalformedHeader(f"{descriptor.dataset_id}: result lacks a {what} column")

    geo_col = col(_GEO_COLUMNS, "geo")
    time_col = col(_TIME_COLUMNS, "time")
    value_col = col(_VALUE_COLUMNS, "value")
    need = max(geo_col, time_col, value_col) + 1

    wanted = {lookup(a).code for a in selection.areas}
    resolver = AreaResolver()
    cells: dict[CellKey, Observation] = {}
    times_seen: list = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) < need:
            raise RaggedRow(
                f"{descriptor.dataset_id}: result line {line_no} has {len(row)} fields"
            )
        try:
            t = parse_time_key(row[time_col])
        except (UnparseableTime, OutOfRange) as e:
            raise MalformedHeader(
                f"{descriptor.dataset_id}: result line {line_no}: {e}"
            ) from None
        area = resolver.resolve(row[geo_col])
        if area.code not in wanted or not time_in_range(t, selection):
            continue
        try:
            obs = normalize_cell(row[value_col])
        except UnparseableNumber as e:
            raise UnparseableNumber(
                f"{descriptor.dataset_id}: result line {line_no}: {e}"
            ) from None
        if obs.present or obs.flags:
            cells[((), area.code, t)] = obs
        if t not in times_seen:
            times_seen.append(t)

    granularities: list[Granularity] = []
    for t in times_seen:
        if t.granularity not in granularities:
            granularities.append(t.granularity)
    if not granularities:
        granularities = [selection.time_from.granularity]

    kept = {ck[1] for ck in cells}
    areas = tuple(a for a in resolver.areas() if a.code in kept)
    title = descriptor.title or descriptor.dataset_id
    cubes = []
    for g in granularities:
        times = tuple(sorted({t for t in times_seen if t.granularity is g}))
        sub = {ck: obs for ck, obs in cells.items() if ck[2].granularity is g}
        cube_id = (
            descriptor.dataset_id
            if len(granularities) == 1
            else f"{descriptor.dataset_id}-{g.value}"
        )
        cubes.append(
            DataCube(
                id=cube_id,
                provider=descriptor.provider,
                title=title,
                unit=descriptor.unit,
                dimensions=(),
                areas=areas,
                granularity=g,
                times=times,
                cells=sub,
            )
        )
    return cubes


# --- fetch cache ---------------------------------------------------------------


def cache_key(location: str, query: str | None = None) -> str:
    h = hashlib.sha256()
    h.update(location.encode("utf-8"))
    h.update(b"\x00")
    if query is not None:
        h.update(query.encode("utf-8"))
    return h.hexdigest()


@dataclass(frozen=True)
class FetchResult:
    data: bytes
    from_cache: bool
    stale: bool
    fetched_at: float


def http_transport(location: str, query: str | None, accept: str) -> tuple[int, bytes]:
    """Default transport: plain GET, query passed as the ?query= parameter."""
    headers = {"Accept": accept} if accept else {}
    params = {"query": query} if query is not None else None
    resp = requests.get(location, params=params, headers=headers, timeout=60)
    return resp.status_code, resp.content


class FetchCache:
    """Disk cache keyed by sha256(location + NUL + query).

    Entries are a .bin payload plus a .json metadata sidecar, both written
    to temp names and atomically renamed, metadata last, so a reader never
    sees a half-written entry. One in-process lock per key means
    concurrent fetches of the same key hit the origin once.
    """

    def __init__(
        self,
        directory: str | os.PathLike[str],
        transport=None,
        clock=time.time,
    ) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.transport = transport or http_transport
        self.clock = clock
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(key, threading.Lock())

    def _read_entry(self, key: str) -> tuple[dict, bytes] | None:
        meta_path = self.directory / f"{key}.json"
        bin_path = self.directory / f"{key}.bin"
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            return meta, bin_path.read_bytes()
        except (OSError, json.JSONDecodeError):
            return None

    def _write_entry(
        self, key: str, descriptor: SourceDescriptor, query: str | None, body: bytes, now: float
    ) -> None:
        meta = {
            "location": descriptor.location,
            "query": query,
            "fetched_at": now,
            "etag": None,
        }
        try:
            bin_path = self.directory / f"{key}.bin"
            tmp = bin_path.with_suffix(f".tmp{os.getpid()}")
            tmp.write_bytes(body)
            os.replace(tmp, bin_path)
            meta_path = self.directory / f"{key}.json"
            tmp = meta_path.with_suffix(f".tmp{os.getpid()}")
            tmp.write_text(json.dumps(meta), encoding="utf-8")
            os.replace(tmp, meta_path)
        except OSError as e:
            raise StorageFailure(f"cache write for {descriptor.location} failed: {e}") from e

    def fetch(self, descriptor: SourceDescriptor, query: str | None = None) -> FetchResult:
        """Serve fresh cache, else refetch, else serve stale, else raise.

        A transport exception or non-2xx status with no cached copy raises
        FetchFailed or its BadStatus subclass; with a cached copy it
        degrades to the stale bytes instead.
        """
        key = cache_key(descriptor.location, query)
        accept = "text/csv" if descriptor.result_format == "csv" else "text/tab-separated-values"
        with self._lock_for(key):
            entry = self._read_entry(key)
            now = self.clock()
            if entry is not None:
                meta, body = entry
                if now - meta["fetched_at"] < descriptor.freshness_ttl:
                    return FetchResult(body, True, False, meta["fetched_at"])
            try:
                status, body = self.transport(descriptor.location, query, accept)
            except Exception as e:
                if entry is not None:
                    meta, cached = entry
                    return FetchResult(cached, True, True, meta["fetched_at"])
                raise FetchFailed(f"{descriptor.location}: {e}") from e
            if not 200 <= status < 300:
                if entry is not None:
                    meta, cached = entry
                    return FetchResult(cached, True, True, meta["fetched_at"])
                raise BadStatus(f"{descriptor.location}: HTTP status {status}")
            self._write_entry(key, descriptor, query, body, now)
            return FetchResult(body, False, False, now)


class RecordedTransport:
    """Replays exchanges recorded on disk; unknown requests fail to connect.

    Each recording is one file named by the cache key: a first line
    "GET <status> <location>" followed by the raw response bytes.
    """

    def __init__(self, directory: str | os.PathLike[str]) -> None:
        self.directory = Path(directory)
        self.calls: list[tuple[str, str | None]] = []

    def path_for(self, location: str, query: str | None = None) -> Path:
        return self.directory / f"{cache_key(location, query)}.http"

    def record(self, location: str, query: str | None, status: int, body: bytes) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(location, query)
        path.write_bytes(f"GET {status} {location}\n".encode() + body)
        return path

    def __call__(self, location: str, query: str | None, accept: str) -> tuple[int, bytes]:
        self.calls.append((location, query))
        path = self.path_for(location, query)
        if not path.exists():
            raise ConnectionError(f"no recording for GET {location}")
        raw = path.read_bytes()
        line, _, body = raw.partition(b"\n")
        status = int(line.decode("utf-8").split(" ")[1])
        return status, body


def ingest_source(
    descriptor: SourceDescriptor,
    selection: Selection | None = None,
    cache: FetchCache | None = None,
) -> list[DataCube]:
    """Acquire one source and parse it into cubes.

    Local files read directly; static URLs and endpoints go through the
    cache (required for those access kinds). SPARQL access also requires a
    selection, since endpoints are sliced, never bulk-downloaded.
    """
    hints = TableHints(
        dataset_id=descriptor.dataset_id,
        title=descriptor.title,
        unit=descriptor.unit or None,
        provider=descriptor.provider,
        decimal_comma=descriptor.decimal_comma,
    )
    if descriptor.access is Access.LOCAL_FILE:
        try:
            data = Path(descriptor.location).read_bytes()
        except OSError as e:
            raise FetchFailed(f"{descriptor.location}: {e}") from e
        return parse_payload(
            data,
            dataset_id=descriptor.dataset_id,
            provider=descriptor.provider,
            hints=hints,
            source_name=descriptor.location,
        )
    if cache is None:
        raise ValueError(f"{descriptor.access.value} access requires a FetchCache")
    if descriptor.access is Access.SPARQL_ENDPOINT:
        if selection is None:
            raise EmptySelection(
                f"dataset {descriptor.dataset_id}: a SPARQL source needs a selection"
            )
        query = build_sparql_select(descriptor.dataset_id, selection)
        result = cache.fetch(descriptor, query)
        return parse_sparql_csv(result.data, descriptor, selection)
    result = cache.fetch(descriptor)
    return parse_payload(
        result.data,
        dataset_id=descriptor.dataset_id,
        provider=descriptor.provider,
        hints=hints,
        source_name=descriptor.location,
    )
