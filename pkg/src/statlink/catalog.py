"""Cube catalog: canonical files on disk plus a searchable index.

Layout under the data dir: cubes/<provider>/<cube_id>.json holds each
canonical cube; catalog.json is a JSON list of entry records. The cube
files are the source of truth, so a catalog whose index is missing
rebuilds itself by scanning them.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyCube, UnknownCube
from .model import (
    DataCube,
    Granularity,
    Provider,
    TimeKey,
    parse_canonical,
    parse_time_key,
    write_canonical,
)
from .storage import atomic_write_json, atomic_write_bytes, read_json


@dataclass(frozen=True)
class CatalogEntry:
    """Searchable summary of one registered cube."""

    cube_id: str
    provider: Provider
    title: str
    unit: str
    granularity: Granularity
    area_count: int
    time_span: tuple[TimeKey, TimeKey]
    path: str

    def to_wire(self) -> dict:
        return {
            "cube_id": self.cube_id,
            "provider": self.provider.value,
            "title": self.title,
            "unit": self.unit,
            "granularity": self.granularity.value,
            "area_count": self.area_count,
            "time_span": [self.time_span[0].text(), self.time_span[1].text()],
            "path": self.path,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "CatalogEntry":
        return cls(
            cube_id=doc["cube_id"],
            provider=Provider(doc["provider"]),
            title=doc["title"],
            unit=doc["unit"],
            granularity=Granularity(doc["granularity"]),
            area_count=int(doc["area_count"]),
            time_span=(parse_time_key(doc["time_span"][0]), parse_time_key(doc["time_span"][1])),
            path=doc["path"],
        )


class Catalog:
    """Registers cubes to disk and answers browse/search/load requests."""

    def __init__(self, data_dir: str | os.PathLike[str]) -> None:
        self.data_dir = Path(data_dir)
        self.cubes_dir = self.data_dir / "cubes"
        self.index_path = self.data_dir / "catalog.json"
        self._lock = threading.RLock()
        self._entries: dict[str, CatalogEntry] = {}
        self._cubes: dict[str, DataCube] = {}
        if self.index_path.exists():
            for doc in read_json(self.index_path):
                entry = CatalogEntry.from_wire(doc)
                self._entries[entry.cube_id] = entry
        elif self.cubes_dir.exists():
            self._rebuild()

    def _rebuild(self) -> None:
        for path in sorted(self.cubes_dir.glob("*/*.json")):
            cube = parse_canonical(path.read_bytes())
            self._entries[cube.id] = self._entry_for(cube)
        if self._entries:
            self._write_index()

    def _entry_for(self, cube: DataCube) -> CatalogEntry:
        return CatalogEntry(
            cube_id=cube.id,
            provider=cube.provider,
            title=cube.title,
            unit=cube.unit,
            granularity=cube.granularity,
            area_count=len(cube.areas),
            time_span=cube.time_span(),
            path=f"cubes/{cube.provider.value}/{cube.id}.json",
        )

    def _write_index(self) -> None:
        docs = [self._entries[k].to_wire() for k in sorted(self._entries)]
        atomic_write_json(self.index_path, docs)

    def register(self, cube: DataCube) -> CatalogEntry:
        """Persist one cube and index it; re-registering an id replaces it."""
        if not cube.areas or not cube.times:
            raise EmptyCube(f"cube {cube.id} has no areas or no periods")
        with self._lock:
            entry = self._entry_for(cube)
            atomic_write_bytes(self.data_dir / entry.path, write_canonical(cube))
            self._entries[cube.id] = entry
            self._cubes[cube.id] = cube
            self._write_index()
            return entry

    def get(self, cube_id: str) -> CatalogEntry:
        with self._lock:
            try:
                return self._entries[cube_id]
            except KeyError:
                raise UnknownCube(f"no cube {cube_id!r} in catalog") from None

    def load_cube(self, cube_id: str) -> DataCube:
        with self._lock:
            entry = self.get(cube_id)
            cube = self._cubes.get(cube_id)
            if cube is None:
                cube = parse_canonical((self.data_dir / entry.path).read_bytes())
                self._cubes[cube_id] = cube
            return cube

    def entries(self) -> list[CatalogEntry]:
        """All entries, ordered by provider then cube id."""
        with self._lock:
            return sorted(self._entries.values(), key=lambda e: (e.provider.value, e.cube_id))

    def browse(self, provider: Provider) -> list[CatalogEntry]:
        return [e for e in self.entries() if e.provider is provider]

    def search_titles(self, keyword: str) -> list[CatalogEntry]:
        needle = keyword.strip().casefold()
        return [e for e in self.entries() if needle in e.title.casefold()]
