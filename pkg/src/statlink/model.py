"""Core data model: time keys, observations, cubes, selections, slices.

A cube is a sparse mapping (member tuple, area, period) -> observation with
one time granularity throughout. Cells distinguish "present zero" from
"missing": missing cells are simply absent, and an absent observation with
source flags is stored with a null value so the flags survive round trips.
"""

from __future__ import annotations

import functools
import json
import math
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum

from .areas import AreaKey
from .config import MAX_DEFAULT_AREAS, MAX_YEAR, MIN_YEAR
from .errors import (
    EmptyCube,
    EmptyTimeRange,
    MalformedCube,
    OutOfRange,
    UnknownArea,
    UnknownDimensionMember,
    UnparseableTime,
)


class Provider(str, Enum):
    """Origin of a cube."""

    EUROSTAT = "eurostat"
    WORLDBANK = "worldbank"
    GAPMINDER = "gapminder"
    EUSI = "eusi"
    USER = "user"
    FIXTURE = "fixture"


class Granularity(str, Enum):
    """Period length of every time key in one cube."""

    YEAR = "year"
    QUARTER = "quarter"
    MONTH = "month"


# granularity -> inclusive bounds of the sub-period index (0 means "none")
_SUB_BOUNDS = {
    Granularity.YEAR: (0, 0),
    Granularity.QUARTER: (1, 4),
    Granularity.MONTH: (1, 12),
}


@functools.total_ordering
@dataclass(frozen=True)
class TimeKey:
    """One calendar period at year, quarter, or month granularity.

    Attributes:
        granularity: Period length.
        year: Calendar year, 1800..2100.
        sub: Quarter 1..4 or month 1..12; 0 for year keys.
    """

    granularity: Granularity
    year: int
    sub: int = 0

    def __post_init__(self) -> None:
        if not MIN_YEAR <= self.year <= MAX_YEAR:
            raise OutOfRange(f"year {self.year} outside {MIN_YEAR}..{MAX_YEAR}")
        lo, hi = _SUB_BOUNDS[self.granularity]
        if not lo <= self.sub <= hi:
            raise OutOfRange(
                f"sub-period {self.sub} outside {lo}..{hi} for {self.granularity.value}"
            )

    @property
    def start_month(self) -> int:
        if self.granularity is Granularity.YEAR:
            return 1
        if self.granularity is Granularity.QUARTER:
            return 3 * (self.sub - 1) + 1
        return self.sub

    @property
    def end_month(self) -> int:
        if self.granularity is Granularity.YEAR:
            return 12
        if self.granularity is Granularity.QUARTER:
            return 3 * self.sub
        return self.sub

    def text(self) -> str:
        """Canonical rendering: "2008", "2008-Q3", or "2008-03"."""
        if self.granularity is Granularity.YEAR:
            return f"{self.year:04d}"
        if self.granularity is Granularity.QUARTER:
            return f"{self.year:04d}-Q{self.sub}"
        return f"{self.year:04d}-{self.sub:02d}"

    def _order_key(self) -> tuple[int, int, int]:
        return (self.year, self.start_month, self.end_month)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, TimeKey):
            return NotImplemented
        return self._order_key() < other._order_key()


_YEAR_RE = re.compile(r"^(\d{4})$")
_QUARTER_RE = re.compile(r"^(\d{4})-?[Qq](\d)$")
_MONTH_M_RE = re.compile(r"^(\d{4})[Mm](\d{1,2})$")
_MONTH_DASH_RE = re.compile(r"^(\d{4})-(\d{1,2})$")


def parse_time_key(text: str) -> TimeKey:
    """Parse "YYYY", "YYYYQn", "YYYY-Qn", "YYYYMmm", or "YYYY-mm".

    Raises UnparseableTime for anything shaped differently and OutOfRange
    for a recognized shape whose year or sub-period is out of bounds.
    """
    s = text.strip()
    m = _YEAR_RE.match(s)
    if m:
        return TimeKey(Granularity.YEAR, int(m.group(1)))
    m = _QUARTER_RE.match(s)
    if m:
        return TimeKey(Granularity.QUARTER, int(m.group(1)), int(m.group(2)))
    m = _MONTH_M_RE.match(s) or _MONTH_DASH_RE.match(s)
    if m:
        return TimeKey(Granularity.MONTH, int(m.group(1)), int(m.group(2)))
    raise UnparseableTime(f"not a recognized time key: {text!r}")


def time_contains(outer: TimeKey, inner: TimeKey) -> bool:
    """True when inner's calendar span lies within outer's.

    Equal keys contain each other; distinct periods of equal length never do.
    """
    return (
        outer.year == inner.year
        and outer.start_month <= inner.start_month
        and inner.end_month <= outer.end_month
    )


def format_decimal(value: float) -> str:
    """Shortest plain-decimal text for a finite value; whole floats lose .0"""
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class Observation:
    """One cell: a present value with flags, or an explicit gap.

    Attributes:
        value: Finite number, or None when the cell is missing.
        flags: Single-letter source qualifiers (b, p, e, s, ...).
        text: Canonical decimal text; preserved from the source so writing
            a cube back out never reformats "39.40" into "39.4".
    """

    value: float | None = None
    flags: frozenset[str] = frozenset()
    text: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "flags", frozenset(self.flags))
        for f in self.flags:
            if len(f) != 1 or not f.isalpha():
                raise ValueError(f"flags are single letters, got {f!r}")
        if self.value is None:
            if self.text is not None:
                raise ValueError("missing observation cannot carry value text")
            return
        if not math.isfinite(self.value):
            raise ValueError(f"observation value must be finite, got {self.value!r}")
        if self.text is None:
            object.__setattr__(self, "text", format_decimal(self.value))
        elif float(self.text) != self.value:
            raise ValueError(f"text {self.text!r} does not equal value {self.value!r}")

    @property
    def present(self) -> bool:
        return self.value is not None


MISSING = Observation()

@dataclass(frozen=True)
class Member:
    """One member of an extra dimension."""

    code: str
    label: str = ""

    def __post_init__(self) -> None:
        if not self.code:
            raise ValueError("member code must be non-empty")
        if not self.label:
            object.__setattr__(self, "label", self.code)


@dataclass(frozen=True)
class DimensionSpec:
    """A named extra dimension and its ordered members."""

    name: str
    members: tuple[Member, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if not self.name:
            raise ValueError("dimension name must be non-empty")
        if not self.members:
            raise ValueError(f"dimension {self.name!r} has no members")
        codes = [m.code for m in self.members]
        if len(set(codes)) != len(codes):
            raise ValueError(f"dimension {self.name!r} has duplicate member codes")

    def member_codes(self) -> tuple[str, ...]:
        return tuple(m.code for m in self.members)


CellKey = tuple[tuple[str, ...], str, TimeKey]

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


@dataclass
class DataCube:
    """Canonical sparse cube. Treated as immutable once constructed.

    Attributes:
        id: Catalog identity, filesystem-safe.
        provider: Origin.
        title: Human-readable dataset title.
        unit: Unit rendered next to values ("" when unitless).
        dimensions: Extra dimensions beyond area and time.
        areas: Ordered unique areas.
        granularity: Shared granularity of all times.
        times: Strictly ascending periods.
        cells: (member tuple, area code, time) -> Observation for every cell
            that is present or carries flags; all other cells are missing.
    """

    id: str
    provider: Provider
    title: str
    unit: str
    dimensions: tuple[DimensionSpec, ...]
    areas: tuple[AreaKey, ...]
    granularity: Granularity
    times: tuple[TimeKey, ...]
    cells: dict[CellKey, Observation] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not _ID_RE.match(self.id):
            raise ValueError(f"cube id {self.id!r} is not filesystem-safe")
        self.dimensions = tuple(self.dimensions)
        self.areas = tuple(self.areas)
        self.times = tuple(self.times)
        dim_names = [d.name for d in self.dimensions]
        if len(set(dim_names)) != len(dim_names):
            raise ValueError("duplicate dimension names")
        area_codes = [a.code for a in self.areas]
        if len(set(area_codes)) != len(area_codes):
            raise ValueError("duplicate area codes")
        for t in self.times:
            if t.granularity is not self.granularity:
                raise ValueError(
                    f"time {t.text()} is not {self.granularity.value} granularity"
                )
        for a, b in zip(self.times, self.times[1:]):
            if not a < b:
                raise ValueError("times must be strictly ascending")
        members_ok = {d.name: set(d.member_codes()) for d in self.dimensions}
        areas_ok = set(area_codes)
        times_ok = set(self.times)
        for (members, area, t), obs in self.cells.items():
            if len(members) != len(self.dimensions):
                raise ValueError(f"cell member tuple {members!r} has wrong arity")
            for name, code in zip(dim_names, members):
                if code not in members_ok[name]:
                    raise ValueError(f"cell references unknown member {code!r} of {name!r}")
            if area not in areas_ok:
                raise ValueError(f"cell references unknown area {area!r}")
            if t not in times_ok:
                raise ValueError(f"cell references undeclared time {t.text()}")
            if not obs.present and not obs.flags:
                raise ValueError("plain missing cells must be omitted, not stored")

    def area_by_code(self, code: str) -> AreaKey:
        for a in self.areas:
            if a.code == code:
                return a
        raise UnknownArea(f"cube {self.id} has no area {code!r}")

    def dimension_by_name(self, name: str) -> DimensionSpec:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise UnknownDimensionMember(f"cube {self.id} has no dimension {name!r}")

    def observation(self, members: tuple[str, ...], area: str, t: TimeKey) -> Observation:
        return self.cells.get((members, area, t), MISSING)

    def time_span(self) -> tuple[TimeKey, TimeKey]:
        if not self.times:
            raise EmptyCube(f"cube {self.id} has no periods")
        return (self.times[0], self.times[-1])


@dataclass(frozen=True)
class Selection:
    """What one visualization shows of one cube.

    Attributes:
        dimension_choice: Exactly one chosen member code per extra dimension.
        areas: Ordered area codes to plot.
        time_from: Inclusive start.
        time_to: Inclusive end; must not end before time_from starts.
    """

    dimension_choice: Mapping[str, str]
    areas: tuple[str, ...]
    time_from: TimeKey
    time_to: TimeKey

    def __post_init__(self) -> None:
        object.__setattr__(self, "dimension_choice", dict(self.dimension_choice))
        object.__setattr__(self, "areas", tuple(self.areas))
        starts = (self.time_from.year, self.time_from.start_month)
        ends = (self.time_to.year, self.time_to.end_month)
        if starts > ends:
            raise EmptyTimeRange(
                f"time range {self.time_from.text()}..{self.time_to.text()} is empty"
            )


def default_selection(cube: DataCube) -> Selection:
    """First member per dimension, first 40 areas in source order, full range."""
    if not cube.areas or not cube.times:
        raise EmptyCube(f"cube {cube.id} has no areas or no periods")
    return Selection(
        dimension_choice={d.name: d.members[0].code for d in cube.dimensions},
        areas=tuple(a.code for a in cube.areas[:MAX_DEFAULT_AREAS]),
        time_from=cube.times[0],
        time_to=cube.times[-1],
    )


def time_in_range(t: TimeKey, sel: Selection) -> bool:
    """Calendar overlap, so a year-keyed range captures its months and quarters."""
    return (t.year, t.end_month) >= (sel.time_from.year, sel.time_from.start_month) and (
        t.year,
        t.start_month,
    ) <= (sel.time_to.year, sel.time_to.end_month)


@dataclass(frozen=True)
class Series:
    """One area's observations over the filtered time vector."""

    area: AreaKey
    points: tuple[tuple[TimeKey, Observation], ...]

    def first_present(self) -> tuple[TimeKey, Observation] | None:
        for t, obs in self.points:
            if obs.present:
                return (t, obs)
        return None

    def last_present(self) -> tuple[TimeKey, Observation] | None:
        for t, obs in reversed(self.points):
            if obs.present:
                return (t, obs)
        return None


@dataclass(frozen=True)
class SeriesSet:
    """Result of slicing a cube: aligned series, one per selected area."""

    cube_id: str
    title: str
    unit: str
    dimension_choice: Mapping[str, str]
    times: tuple[TimeKey, ...]
    series: tuple[Series, ...]

    def to_wire(self) -> dict:
        return {
            "cube_id": self.cube_id,
            "title": self.title,
            "unit": self.unit,
            "dimension_choice": dict(self.dimension_choice),
            "times": [t.text() for t in self.times],
            "series": [
                {
                    "area": {"code": s.area.code, "label": s.area.label},
                    "points": [
                        [
                            t.text(),
                            obs.value,
                            obs.text,
                            "".join(sorted(obs.flags)),
                        ]
                        for t, obs in s.points
                    ],
                }
                for s in self.series
            ],
        }


def slice_cube(cube: DataCube, sel: Selection) -> SeriesSet:
    """Filter one cube down to the selection.

    Every requested area yields a series over the same filtered time vector;
    cells the cube does not state come back as MISSING. An empty overlap is
    a legal zero-point result, not an error.
    """
    chosen = dict(sel.dimension_choice)
    member_tuple = []
    for d in cube.dimensions:
        code = chosen.pop(d.name, None)
        if code is None:
            raise UnknownDimensionMember(
                f"no member chosen for dimension {d.name!r} of cube {cube.id}"
            )
        if code not in d.member_codes():
            raise UnknownDimensionMember(
                f"dimension {d.name!r} of cube {cube.id} has no member {code!r}"
            )
        member_tuple.append(code)
    if chosen:
        name = sorted(chosen)[0]
        raise UnknownDimensionMember(f"cube {cube.id} has no dimension {name!r}")
    members = tuple(member_tuple)

    areas = [cube.area_by_code(code) for code in sel.areas]
    times = tuple(t for t in cube.times if time_in_range(t, sel))
    series = tuple(
        Series(
            area=a,
            points=tuple((t, cube.observation(members, a.code, t)) for t in times),
        )
        for a in areas
    )
    return SeriesSet(
        cube_id=cube.id,
        title=cube.title,
        unit=cube.unit,
        dimension_choice={d.name: m for d, m in zip(cube.dimensions, members)},
        times=times,
        series=series,
    )


# --- canonical serialization --------------------------------------------------

_CANONICAL_FIELDS = (
    "id",
    "provider",
    "title",
    "unit",
    "dimensions",
    "areas",
    "granularity",
    "times",
    "cells",
)


def _jstr(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def write_canonical(cube: DataCube) -> bytes:
    """Serialize one cube to its canonical byte form.

    Deterministic layout: fixed field order, one line per area and per cell,
    cells sorted by declared member, area, and time order, UTF-8 with a
    trailing newline. Equal cubes serialize to equal bytes.
    """
    member_index = {
        d.name: {m.code: i for i, m in enumerate(d.members)} for d in cube.dimensions
    }
    area_index = {a.code: i for i, a in enumerate(cube.areas)}
    time_index = {t: i for i, t in enumerate(cube.times)}

    def cell_order(item: tuple[CellKey, Observation]):
        (members, area, t), _ = item
        member_pos = tuple(
            member_index[d.name][code] for d, code in zip(cube.dimensions, members)
        )
        return (member_pos, area_index[area], time_index[t])

    out: list[str] = []
    a = out.append
    a("{")
    a(f'  "id": {_jstr(cube.id)},')
    a(f'  "provider": {_jstr(cube.provider.value)},')
    a(f'  "title": {_jstr(cube.title)},')
    a(f'  "unit": {_jstr(cube.unit)},')
    if cube.dimensions:
        a('  "dimensions": [')
        for i, dim in enumerate(cube.dimensions):
            members = ", ".join(
                f'{{"code": {_jstr(m.code)}, "label": {_jstr(m.label)}}}'
                for m in dim.members
            )
            comma = "," if i < len(cube.dimensions) - 1 else ""
            a(f'    {{"name": {_jstr(dim.name)}, "members": [{members}]}}{comma}')
        a("  ],")
    else:
        a('  "dimensions": [],')
    if cube.areas:
        a('  "areas": [')
        for i, ar in enumerate(cube.areas):
            comma = "," if i < len(cube.areas) - 1 else ""
            a(f'    {{"code": {_jstr(ar.code)}, "label": {_jstr(ar.label)}}}{comma}')
        a("  ],")
    else:
        a('  "areas": [],')
    a(f'  "granularity": {_jstr(cube.granularity.value)},')
    times = ", ".join(_jstr(t.text()) for t in cube.times)
    a(f'  "times": [{times}],')
    ordered = sorted(cube.cells.items(), key=cell_order)
    if ordered:
        a('  "cells": [')
        last = len(ordered) - 1
        for i, ((members, area, t), obs) in enumerate(ordered):
            mjson = "[" + ", ".join(_jstr(m) for m in members) + "]"
            vjson = "null" if obs.text is None else _jstr(obs.text)
            fjson = _jstr("".join(sorted(obs.flags)))
            comma = "," if i < last else ""
            a(
                f"    [{mjson}, {_jstr(area)}, {_jstr(t.text())}, {vjson}, {fjson}]{comma}"
            )
        a("  ]")
    else:
        a('  "cells": []')
    a("}")
    return ("\n".join(out) + "\n").encode("utf-8")


def _cell_from_wire(raw: object) -> tuple[CellKey, Observation]:
    if not isinstance(raw, list) or len(raw) != 5:
        raise MalformedCube(f"cell must be a 5-element list, got {raw!r}")
    members, area, time_text, value_text, flags = raw
    if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
        raise MalformedCube(f"cell member tuple must be a list of strings: {raw!r}")
    if not isinstance(area, str) or not isinstance(time_text, str):
        raise MalformedCube(f"cell area and time must be strings: {raw!r}")
    if not isinstance(flags, str):
        raise MalformedCube(f"cell flags must be a string: {raw!r}")
    try:
        t = parse_time_key(time_text)
    except (UnparseableTime, OutOfRange) as e:
        raise MalformedCube(f"cell time: {e}") from e
    try:
        if value_text is None:
            obs = Observation(flags=frozenset(flags))
        elif isinstance(value_text, str):
            obs = Observation(value=float(value_text), text=value_text, flags=frozenset(flags))
        else:
            raise MalformedCube(f"cell value must be a string or null: {raw!r}")
    except ValueError as e:
        raise MalformedCube(f"cell value: {e}") from e
    return ((tuple(members), area, t), obs)


def parse_canonical(data: bytes | str) -> DataCube:
    """Read a canonical cube document, validating structure strictly."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedCube(f"not UTF-8: {e}") from e
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise MalformedCube(f"not JSON: {e}") from e
    if not isinstance(doc, dict):
        raise MalformedCube("canonical cube must be a JSON object")
    missing = [f for f in _CANONICAL_FIELDS if f not in doc]
    extra = [f for f in doc if f not in _CANONICAL_FIELDS]
    if missing or extra:
        raise MalformedCube(
            f"canonical cube fields wrong: missing {missing!r}, unexpected {extra!r}"
        )
    try:
        provider = Provider(doc["provider"])
        granularity = Granularity(doc["granularity"])
    except ValueError as e:
        raise MalformedCube(str(e)) from e
    try:
        dimensions = tuple(
            DimensionSpec(
                name=d["name"],
                members=tuple(Member(code=m["code"], label=m["label"]) for m in d["members"]),
            )
            for d in doc["dimensions"]
        )
        areas = tuple(AreaKey(code=a["code"], label=a["label"]) for a in doc["areas"])
    except (TypeError, KeyError, ValueError) as e:
        raise MalformedCube(f"bad dimensions or areas: {e}") from e
    try:
        times = tuple(parse_time_key(t) for t in doc["times"])
    except (UnparseableTime, OutOfRange, TypeError) as e:
        raise MalformedCube(f"bad times: {e}") from e
    cells: dict[CellKey, Observation] = {}
    if not isinstance(doc["cells"], list):
        raise MalformedCube("cells must be a list")
    for raw in doc["cells"]:
        key, obs = _cell_from_wire(raw)
        if key in cells:
            raise MalformedCube(f"duplicate cell for {raw!r}")
        cells[key] = obs
    if not isinstance(doc["id"], str) or not isinstance(doc["title"], str) or not isinstance(doc["unit"], str):
        raise MalformedCube("id, title, and unit must be strings")
    try:
        return DataCube(
            id=doc["id"],
            provider=provider,
            title=doc["title"],
            unit=doc["unit"],
            dimensions=dimensions,
            areas=areas,
            granularity=granularity,
            times=times,
            cells=cells,
        )
    except ValueError as e:
        raise MalformedCube(str(e)) from e


def observations_equal(a: Observation, b: Observation, rel_tol: float = 1e-9) -> bool:
    if a.flags != b.flags:
        return False
    if (a.value is None) != (b.value is None):
        return False
    if a.value is None:
        return True
    return math.isclose(a.value, b.value, rel_tol=rel_tol, abs_tol=1e-12)


def cubes_equal(a: DataCube, b: DataCube, rel_tol: float = 1e-9) -> bool:
    """Structural equality with numeric tolerance on values."""
    if (
        a.id != b.id
        or a.provider is not b.provider
        or a.title != b.title
        or a.unit != b.unit
        or a.dimensions != b.dimensions
        or a.areas != b.areas
        or a.granularity is not b.granularity
        or a.times != b.times
        or set(a.cells) != set(b.cells)
    ):
        return False
    return all(observations_equal(obs, b.cells[k], rel_tol) for k, obs in a.cells.items())


def members_for(cube: DataCube, choice: Mapping[str, str] | Iterable[str]) -> tuple[str, ...]:
    """Member tuple in declared dimension order from a name->code mapping."""
    if isinstance(choice, Mapping):
        return tuple(choice[d.name] for d in cube.dimensions)
    return tuple(choice)
