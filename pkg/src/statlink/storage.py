"""Atomic file writes shared by the catalog and the dashboard store."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import StorageFailure


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a temp file and rename so readers never see partial files."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as e:
        raise StorageFailure(f"write to {path} failed: {e}") from e


def atomic_write_json(path: Path, doc: object) -> None:
    text = json.dumps(doc, ensure_ascii=False, indent=2) + "\n"
    atomic_write_bytes(path, text.encode("utf-8"))


def read_json(path: Path) -> object:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise StorageFailure(f"read of {path} failed: {e}") from e
    except json.JSONDecodeError as e:
        raise StorageFailure(f"{path} is not valid JSON: {e}") from e
