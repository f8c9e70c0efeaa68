"""Parsers that turn source payloads into canonical cubes.

Three text formats arrive here: Eurostat bulk TSV (dimension values packed
into the first column, one time per data column), generic wide tables with
a time axis on either side, and already-canonical cube documents. Cell
texts normalize through one function so the missing-token and flag rules
cannot drift between formats.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import re
from dataclasses import dataclass
from enum import Enum

from .areas import AreaResolver
from .config import MISSING_TOKENS, TIME_AXIS_THRESHOLD
from .errors import (
    AmbiguousOrientation,
    EmptyBody,
    MalformedHeader,
    NoParseableTimes,
    NotText,
    OutOfRange,
    RaggedRow,
    UnknownFormat,
    UnparseableNumber,
    UnparseableTime,
)
from .model import (
    CellKey,
    DataCube,
    DimensionSpec,
    Granularity,
    Member,
    Observation,
    Provider,
    TimeKey,
    parse_canonical,
    parse_time_key,
)


class FormatKind(str, Enum):
    EUROSTAT_TSV = "eurostat_tsv"
    WIDE_TABLE = "wide_table"
    CANONICAL_CUBE = "canonical_cube"
    UNKNOWN = "unknown"


class Orientation(str, Enum):
    TIMES_IN_COLUMNS = "times_in_columns"
    TIMES_IN_ROWS = "times_in_rows"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class RawTable:
    """A rectangular grid of trimmed cell texts plus its preamble lines."""

    rows: tuple[tuple[str, ...], ...]
    source_name: str = "<memory>"
    delimiter: str = ","
    preamble: tuple[str, ...] = ()


@dataclass(frozen=True)
class TableHints:
    """Caller-supplied overrides for wide-table parsing."""

    dataset_id: str | None = None
    title: str | None = None
    unit: str | None = None
    provider: Provider | None = None
    orientation: Orientation | None = None
    decimal_comma: bool = False


def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8-sig")
        except UnicodeDecodeError as e:
            raise NotText(f"payload is not UTF-8 text: {e}") from e
    else:
        text = data.lstrip("﻿")
    if "\x00" in text:
        raise NotText("payload contains NUL bytes")
    return text


def read_raw_table(
    data: bytes | str,
    source_name: str = "<memory>",
    delimiter: str | None = None,
) -> RawTable:
    """Decode, split off '#' preamble lines, and grid the rest.

    The delimiter is sniffed as tab when the first data line contains one,
    comma otherwise. Rows pad to the widest row; fully blank lines drop.
    """
    text = _decode(data)
    lines = text.splitlines()
    preamble: list[str] = []
    body_start = 0
    for line in lines:
        if line.startswith("#"):
            preamble.append(line)
            body_start += 1
        else:
            break
    body_lines = lines[body_start:]
    first_data = next((ln for ln in body_lines if ln.strip()), "")
    delim = delimiter or ("\t" if "\t" in first_data else ",")
    reader = csv.reader(io.StringIO("\n".join(body_lines)), delimiter=delim)
    rows = [tuple(c.strip() for c in row) for row in reader]
    rows = [r for r in rows if any(c != "" for c in r)]
    width = max((len(r) for r in rows), default=0)
    rows = [r + ("",) * (width - len(r)) for r in rows]
    return RawTable(
        rows=tuple(rows),
        source_name=source_name,
        delimiter=delim,
        preamble=tuple(preamble),
    )


def transpose_table(table: RawTable) -> RawTable:
    return dataclasses.replace(table, rows=tuple(zip(*table.rows)) if table.rows else ())


def _is_time(cell: str) -> bool:
    try:
        parse_time_key(cell)
        return True
    except (UnparseableTime, OutOfRange):
        return False


def _time_score(cells: tuple[str, ...]) -> float:
    if not cells:
        return 0.0
    return sum(1 for c in cells if _is_time(c)) / len(cells)


def detect_orientation(table: RawTable) -> Orientation:
    """Which axis of the grid carries the time keys.

    Score each axis by the fraction of its header cells that parse as time
    keys (corner cell excluded). An axis wins with a score of at least 0.5
    that strictly beats the other; an exact tie stays ambiguous so the
    answer flips cleanly under transposition.
    """
    rows = table.rows
    if not rows:
        return Orientation.AMBIGUOUS
    row_score = _time_score(rows[0][1:])
    col_score = _time_score(tuple(r[0] for r in rows[1:]))
    if max(row_score, col_score) >= TIME_AXIS_THRESHOLD:
        if row_score > col_score:
            return Orientation.TIMES_IN_COLUMNS
        if col_score > row_score:
            return Orientation.TIMES_IN_ROWS
    return Orientation.AMBIGUOUS


def normalize_cell(text: str, *, decimal_comma: bool = False) -> Observation:
    """One cell text to one observation.

    Trailing alphabetic tokens after a value are single-letter flags
    ("39.4 b", ": c"). The residue is either a missing token, or a number
    with optional space or comma group separators. A bare word is neither
    flags nor a number and raises UnparseableNumber; "0" is a present zero.
    """
    tokens = text.strip().split()
    flags: set[str] = set()
    while len(tokens) > 1 and tokens[-1].isalpha():
        flags.update(tokens.pop())
    residue = " ".join(tokens)
    if residue.casefold() in MISSING_TOKENS:
        return Observation(flags=frozenset(flags))
    if decimal_comma:
        cleaned = residue.replace(" ", "").replace(".", "").replace(",", ".")
    else:
        cleaned = residue.replace(" ", "").replace(",", "")
    try:
        value = float(cleaned)
    except ValueError:
        raise UnparseableNumber(f"cell {text!r} is neither missing nor a number") from None
    if not math.isfinite(value):
        raise UnparseableNumber(f"cell {text!r} is not a finite number")
    return Observation(value=value, flags=frozenset(flags), text=cleaned)


_PREAMBLE_RE = re.compile(r"^#\s*(title|unit|provider)\s*:\s*(.*?)\s*$", re.IGNORECASE)

_ID_SLUG_RE = re.compile(r"[^a-z0-9]+")


def _slug_id(text: str) -> str:
    out = _ID_SLUG_RE.sub("-", text.casefold()).strip("-.")
    return out or "table"


def _source_stem(source_name: str) -> str | None:
    stem = source_name.rsplit("/", 1)[-1].rsplit("\\", 1)[-1]
    if "." in stem:
        stem = stem.rsplit(".", 1)[0]
    if stem in ("", "<memory>", "-"):
        return None
    return stem


def _parse_preamble(preamble: tuple[str, ...]) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in preamble:
        m = _PREAMBLE_RE.match(line)
        if m:
            out[m.group(1).casefold()] = m.group(2)
    return out


# ties between granularity counts prefer the coarser axis
_COARSENESS = {Granularity.YEAR: 0, Granularity.QUARTER: 1, Granularity.MONTH: 2}


def parse_wide_table(table: RawTable, hints: TableHints | None = None) -> DataCube:
    """Parse a wide table: one axis of time keys against one axis of areas.

    Header columns that do not parse as times (code or note columns) are
    skipped. When time columns mix granularities the majority granularity
    wins (ties prefer coarser) and the minority columns are skipped; this
    signature yields a single cube. Metadata comes from hints, then the
    '#title:'/'#unit:'/'#provider:' preamble, then the source name.
    """
    hints = hints or TableHints()
    pre = _parse_preamble(table.preamble)

    orientation = hints.orientation or detect_orientation(table)
    if orientation is Orientation.AMBIGUOUS:
        raise AmbiguousOrientation(
            f"{table.source_name}: neither axis reads as a time axis"
        )
    if orientation is Orientation.TIMES_IN_ROWS:
        table = transpose_table(table)

    rows = table.rows
    if len(rows) < 2:
        raise EmptyBody(f"{table.source_name}: no data rows")
    header = rows[0]

    time_cols: list[tuple[int, TimeKey]] = []
    for j, cell in enumerate(header[1:], start=1):
        try:
            time_cols.append((j, parse_time_key(cell)))
        except (UnparseableTime, OutOfRange):
            continue
    if not time_cols:
        raise NoParseableTimes(f"{table.source_name}: no header cell parses as a time")

    counts: dict[Granularity, int] = {}
    for _, key in time_cols:
        counts[key.granularity] = counts.get(key.granularity, 0) + 1
    granularity = min(counts, key=lambda g: (-counts[g], _COARSENESS[g]))
    time_cols = [(j, k) for j, k in time_cols if k.granularity is granularity]
    seen_times = [k for _, k in time_cols]
    if len(set(seen_times)) != len(seen_times):
        raise MalformedHeader(f"{table.source_name}: duplicate time column")

    resolver = AreaResolver()
    seen_labels: set[str] = set()
    cells: dict[CellKey, Observation] = {}
    for i, row in enumerate(rows[1:], start=2):
        label = row[0]
        if label == "":
            if any(row[j] != "" for j, _ in time_cols):
                raise MalformedHeader(f"{table.source_name}: row {i} has data but no label")
            continue
        if label in seen_labels:
            raise MalformedHeader(f"{table.source_name}: duplicate row label {label!r}")
        seen_labels.add(label)
        area = resolver.resolve(label)
        for j, key in time_cols:
            try:
                obs = normalize_cell(row[j], decimal_comma=hints.decimal_comma)
            except UnparseableNumber as e:
                raise UnparseableNumber(
                    f"{table.source_name}: row {label!r}, column {header[j]!r}: {e}"
                ) from None
            if obs.present or obs.flags:
                cells[((), area.code, key)] = obs

    areas = resolver.areas()
    if not areas:
        raise EmptyBody(f"{table.source_name}: no data rows")

    stem = _source_stem(table.source_name)
    title = hints.title or pre.get("title") or stem or "Untitled table"
    provider = hints.provider
    if provider is None and "provider" in pre:
        try:
            provider = Provider(pre["provider"].casefold())
        except ValueError:
            provider = None
    cube_id = hints.dataset_id or _slug_id(stem or title)
    return DataCube(
        id=cube_id,
        provider=provider or Provider.USER,
        title=title,
        unit=hints.unit or pre.get("unit") or "",
        dimensions=(),
        areas=areas,
        granularity=granularity,
        times=tuple(sorted(set(seen_times))),
        cells=cells,
    )


def parse_eurostat_tsv(
    data: bytes | str,
    *,
    dataset_id: str = "eurostat",
    provider: Provider = Provider.EUROSTAT,
    title: str | None = None,
    unit: str = "",
) -> list[DataCube]:
    """Parse Eurostat bulk-download TSV.

    The first header cell names the dimensions, comma-joined, with the last
    one the area axis and a literal backslash-time marker at the end
    ("unit,sex,geo\\time"). Every remaining header cell must parse as a
    time key; a file mixing granularities splits into one cube per
    granularity with "-year"/"-quarter"/"-month" id suffixes. Duplicate
    series rows and rows whose field or dimension count disagrees with the
    header raise RaggedRow.
    """
    text = _decode(data)
    lines = [ln for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MalformedHeader(f"{dataset_id}: empty payload")

    header = lines[0].split("\t")
    corner = header[0].strip()
    head, sep, tail = corner.partition("\\")
    if not sep or tail.strip().casefold() != "time":
        raise MalformedHeader(
            f"{dataset_id}: first header cell must be 'dims\\time', got {corner!r}"
        )
    dim_names = [d.strip() for d in head.split(",")]
    if not dim_names or any(not d for d in dim_names):
        raise MalformedHeader(f"{dataset_id}: bad dimension list in {corner!r}")
    extra_dims = dim_names[:-1]

    time_texts = [c.strip() for c in header[1:]]
    keys: list[TimeKey | None] = []
    for cell in time_texts:
        try:
            keys.append(parse_time_key(cell))
        except (UnparseableTime, OutOfRange):
            keys.append(None)
    parsed = [k for k in keys if k is not None]
    if not parsed:
        raise NoParseableTimes(f"{dataset_id}: no time column parses")
    if len(parsed) != len(keys):
        bad = time_texts[keys.index(None)]
        raise MalformedHeader(f"{dataset_id}: unparseable time column {bad!r}")
    if len(set(parsed)) != len(parsed):
        raise MalformedHeader(f"{dataset_id}: duplicate time column")
    time_cols: list[tuple[int, TimeKey]] = list(enumerate(parsed, start=1))

    resolver = AreaResolver()
    member_order: dict[str, dict[str, None]] = {d: {} for d in extra_dims}
    cells: dict[CellKey, Observation] = {}
    seen_rows: set[tuple[tuple[str, ...], str]] = set()
    any_row = False
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        any_row = True
        parts = line.split("\t")
        if len(parts) != len(header):
            raise RaggedRow(
                f"{dataset_id}: line {line_no} has {len(parts)} fields, header has {len(header)}"
            )
        raw_members = [m.strip() for m in parts[0].split(",")]
        if len(raw_members) != len(dim_names):
            raise RaggedRow(
                f"{dataset_id}: line {line_no} has {len(raw_members)} dimension values, "
                f"header names {len(dim_names)}"
            )
        if any(not m for m in raw_members):
            raise RaggedRow(f"{dataset_id}: line {line_no} has an empty dimension value")
        member_tuple = tuple(raw_members[:-1])
        area = resolver.resolve(raw_members[-1])
        row_key = (member_tuple, area.code)
        if row_key in seen_rows:
            raise RaggedRow(f"{dataset_id}: line {line_no} duplicates an earlier series row")
        seen_rows.add(row_key)
        for name, code in zip(extra_dims, member_tuple):
            member_order[name].setdefault(code)
        for j, key in time_cols:
            try:
                obs = normalize_cell(parts[j])
            except UnparseableNumber as e:
                raise UnparseableNumber(
                    f"{dataset_id}: line {line_no}, column {key.text()}: {e}"
                ) from None
            if obs.present or obs.flags:
                cells[(member_tuple, area.code, key)] = obs

    if not any_row:
        raise EmptyBody(f"{dataset_id}: no data rows")

    dimensions = tuple(
        DimensionSpec(name, tuple(Member(code) for code in member_order[name]))
        for name in extra_dims
    )
    areas = resolver.areas()

    granularities: list[Granularity] = []
    for _, key in time_cols:
        if key.granularity not in granularities:
            granularities.append(key.granularity)

    cubes: list[DataCube] = []
    for g in granularities:
        times = tuple(sorted({k for _, k in time_cols if k.granularity is g}))
        sub_cells = {ck: obs for ck, obs in cells.items() if ck[2].granularity is g}
        cube_id = dataset_id if len(granularities) == 1 else f"{dataset_id}-{g.value}"
        cubes.append(
            DataCube(
                id=cube_id,
                provider=provider,
                title=title or dataset_id,
                unit=unit,
                dimensions=dimensions,
                areas=areas,
                granularity=g,
                times=times,
                cells=sub_cells,
            )
        )
    return cubes


_CANONICAL_MARKERS = {"id", "provider", "granularity", "times", "cells"}


def sniff_format(data: bytes | str) -> FormatKind:
    """Classify a payload without fully parsing it.

    Raises NotText for undecodable bytes; otherwise always returns a kind.
    """
    text = _decode(data)
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError:
            return FormatKind.UNKNOWN
        if isinstance(doc, dict) and _CANONICAL_MARKERS <= set(doc):
            return FormatKind.CANONICAL_CUBE
        return FormatKind.UNKNOWN
    first_data = next(
        (ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")), ""
    )
    if "\t" in first_data and "\\time" in first_data.split("\t", 1)[0]:
        return FormatKind.EUROSTAT_TSV
    table = read_raw_table(data)
    if detect_orientation(table) is not Orientation.AMBIGUOUS:
        return FormatKind.WIDE_TABLE
    return FormatKind.UNKNOWN


def parse_payload(
    data: bytes | str,
    *,
    dataset_id: str | None = None,
    provider: Provider | None = None,
    hints: TableHints | None = None,
    source_name: str = "<memory>",
) -> list[DataCube]:
    """Sniff and parse one payload into cubes, whatever its format."""
    kind = sniff_format(data)
    if kind is FormatKind.CANONICAL_CUBE:
        return [parse_canonical(data if isinstance(data, str) else data.decode("utf-8"))]
    if kind is FormatKind.EUROSTAT_TSV:
        return parse_eurostat_tsv(
            data,
            dataset_id=dataset_id or _slug_id(_source_stem(source_name) or "eurostat"),
            provider=provider or Provider.EUROSTAT,
            title=(hints.title if hints else None) or None,
            unit=(hints.unit if hints else None) or "",
        )
    if kind is FormatKind.WIDE_TABLE:
        table = read_raw_table(data, source_name=source_name)
        merged = hints or TableHints()
        if dataset_id and not merged.dataset_id:
            merged = dataclasses.replace(merged, dataset_id=dataset_id)
        if provider and not merged.provider:
            merged = dataclasses.replace(merged, provider=provider)
        return [parse_wide_table(table, hints=merged)]
    raise UnknownFormat(f"{source_name}: payload matches no supported format")
