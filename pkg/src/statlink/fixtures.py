"""Built-in demonstration catalog: four indicator cubes.

Values fall in two classes: reported values pinned exactly (no flags),
and synthetic filler joining them (flag "s"). Two indicators carry a
variant dimension because the sources disagree for Africa in 2008; the
conflicting numbers live under the NOTE member (flag "n") instead of
silently replacing the reported ones. Everything here is deterministic:
rebuilding produces byte-identical canonical files.
"""

from __future__ import annotations

import math

from .areas import AreaKey
from .catalog import Catalog
from .model import (
    DataCube,
    DimensionSpec,
    Granularity,
    Member,
    Observation,
    Provider,
    TimeKey,
)

FIXTURE_AREAS = (
    AreaKey("USA", "United States"),
    AreaKey("GBR", "United Kingdom"),
    AreaKey("EUU", "European Union"),
    AreaKey("AFR", "Africa"),
    AreaKey("DEU", "Germany"),
    AreaKey("PRT", "Portugal"),
)

VARIANT = DimensionSpec(
    "variant", (Member("REPORTED", "Reported"), Member("NOTE", "Conflicting note"))
)

# Downturn years give the GBR/PRT filler pronounced local minima so chart
# regions around them are meaningful targets for manual mappings.
DIP_YEARS = frozenset({1980, 1981, 1990, 1991, 1992, 2008, 2009})
DIP_FACTOR = 0.88

GDP_ANCHORS = {
    "USA": {1960: 2881, 2001: 35898, 2002: 36796, 2009: 46999},
    "GBR": {1960: 1380, 2009: 35455},
    "EUU": {1960: 904, 1993: 15749, 2008: 36834, 2009: 32838},
    "AFR": {1960: 151, 1980: 650, 1992: 720, 2002: 790, 2008: 1593},
    "DEU": {1960: 1300, 1996: 29769, 2000: 23114, 2009: 40270},
    "PRT": {1960: 360, 2009: 23063},
}
GDP_SYNTH_ONLY = frozenset({"GBR", "PRT"})
GDP_NOTE = {("AFR", 2008): 1350}

LIFE_ANCHORS = {
    "USA": {1960: 69.77, 2001: 77.0341, 2002: 77.2366, 2008: 78.24},
    "GBR": {1960: 71.13, 2008: 79.9},
    "EUU": {1960: 69, 1993: 75, 2008: 79},
    "AFR": {1960: 42, 1992: 53, 2008: 54},
    "DEU": {1960: 69.31, 1996: 76.6732, 2000: 77.9268, 2008: 79.53},
    "PRT": {1960: 62.85, 2008: 79.33},
}
LIFE_SYNTH_ONLY = frozenset({"GBR", "PRT"})
LIFE_NOTE = {("AFR", 2008): 55}

FEAR_VALUES = {
    ("USA", 2001): 30,
    ("USA", 2002): 35,
    ("DEU", 1996): 39.4,
    ("DEU", 2000): 35.1,
}
FEAR_MARKED_MISSING = ("GBR", "PRT")

POPULATION_ANCHORS = {
    "USA": {1960: 180671000, 2009: 306772000},
    "GBR": {1960: 52400000, 2009: 62276000},
    "EUU": {1960: 409300000, 2009: 502090000},
    "AFR": {1960: 285270000, 2009: 1008740000},
    "DEU": {1960: 72815000, 2009: 81902000},
    "PRT": {1960: 8858000, 2009: 10568000},
}


def _bracket(anchors: dict[int, float], y: int) -> tuple[int, int]:
    years = sorted(anchors)
    lo = max(a for a in years if a <= y)
    hi = min(a for a in years if a >= y)
    return lo, hi


def _interp_geometric(anchors: dict[int, float], y: int) -> float:
    lo, hi = _bracket(anchors, y)
    if lo == hi:
        return float(anchors[lo])
    frac = (y - lo) / (hi - lo)
    return math.exp(
        math.log(anchors[lo]) + frac * (math.log(anchors[hi]) - math.log(anchors[lo]))
    )


def _interp_linear(anchors: dict[int, float], y: int) -> float:
    lo, hi = _bracket(anchors, y)
    if lo == hi:
        return float(anchors[lo])
    frac = (y - lo) / (hi - lo)
    return anchors[lo] + frac * (anchors[hi] - anchors[lo])


def _year_series(
    anchors: dict[int, float],
    *,
    geometric: bool,
    decimals: int | None,
    dips: bool = False,
    all_synthetic: bool = False,
) -> dict[int, Observation]:
    out: dict[int, Observation] = {}
    for y in range(min(anchors), max(anchors) + 1):
        if y in anchors and not all_synthetic:
            out[y] = Observation(float(anchors[y]))
            continue
        v = _interp_geometric(anchors, y) if geometric else _interp_linear(anchors, y)
        if dips and y in DIP_YEARS:
            v *= DIP_FACTOR
        v = round(v) if decimals is None else round(v, decimals)
        out[y] = Observation(float(v), flags="s")
    return out


def _cube(cube_id, title, unit, dims, times, cells):
    return DataCube(
        id=cube_id,
        provider=Provider.FIXTURE,
        title=title,
        unit=unit,
        dimensions=dims,
        areas=FIXTURE_AREAS,
        granularity=Granularity.YEAR,
        times=times,
        cells=cells,
    )


def _years(y0: int, y1: int) -> tuple[TimeKey, ...]:
    return tuple(TimeKey(Granularity.YEAR, y) for y in range(y0, y1 + 1))


def _variant_cells(anchors, note, synth_only, *, geometric, decimals, dip_areas=frozenset()):
    cells = {}
    for code, area_anchors in anchors.items():
        series = _year_series(
            anchors=area_anchors,
            geometric=geometric,
            decimals=decimals,
            dips=code in dip_areas,
            all_synthetic=code in synth_only,
        )
        for y, obs in series.items():
            cells[(("REPORTED",), code, TimeKey(Granularity.YEAR, y))] = obs
    for (code, y), value in note.items():
        cells[(("NOTE",), code, TimeKey(Granularity.YEAR, y))] = Observation(
            float(value), flags="n"
        )
    return cells


def gdp_cube() -> DataCube:
    return _cube(
        "fixture-gdp",
        "GDP per capita",
        "US$",
        (VARIANT,),
        _years(1960, 2009),
        _variant_cells(
            GDP_ANCHORS,
            GDP_NOTE,
            GDP_SYNTH_ONLY,
            geometric=True,
            decimals=None,
            dip_areas=GDP_SYNTH_ONLY,
        ),
    )


def life_expectancy_cube() -> DataCube:
    return _cube(
        "fixture-life-expectancy",
        "Life expectancy at birth",
        "years",
        (VARIANT,),
        _years(1960, 2008),
        _variant_cells(LIFE_ANCHORS, LIFE_NOTE, LIFE_SYNTH_ONLY, geometric=False, decimals=2),
    )


def fear_of_crime_cube() -> DataCube:
    cells = {}
    for (code, y), value in FEAR_VALUES.items():
        cells[((), code, TimeKey(Granularity.YEAR, y))] = Observation(float(value))
    for code in FEAR_MARKED_MISSING:
        for y in range(1996, 2003):
            cells[((), code, TimeKey(Granularity.YEAR, y))] = Observation(None, flags="u")
    return _cube(
        "fixture-fear-of-crime",
        "General fear of crime",
        "%",
        (),
        _years(1996, 2002),
        cells,
    )


def population_cube() -> DataCube:
    cells = {}
    for code, anchors in POPULATION_ANCHORS.items():
        series = _year_series(anchors=anchors, geometric=False, decimals=None, all_synthetic=True)
        for y, obs in series.items():
            cells[((), code, TimeKey(Granularity.YEAR, y))] = obs
    return _cube(
        "fixture-population",
        "Population size",
        "persons",
        (),
        _years(1960, 2009),
        cells,
    )


def build_cubes() -> list[DataCube]:
    return [gdp_cube(), life_expectancy_cube(), fear_of_crime_cube(), population_cube()]


def build_fixture_catalog(data_dir) -> Catalog:
    """Register the four demo cubes into a catalog at data_dir."""
    catalog = Catalog(data_dir)
    for cube in build_cubes():
        catalog.register(cube)
    return catalog
