"""Regenerate the committed fixture cubes under tests/fixtures/."""

import hashlib
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from statlink.fixtures import build_cubes
from statlink.model import write_canonical


def main() -> None:
    out_dir = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    for cube in build_cubes():
        data = write_canonical(cube)
        path = out_dir / f"{cube.id}.json"
        path.write_bytes(data)
        digest = hashlib.sha256(data).hexdigest()
        print(f"{digest}  {path.name}  ({len(data)} bytes)")


if __name__ == "__main__":
    main()
