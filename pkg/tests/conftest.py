import json
from pathlib import Path
from typing import Callable

import pytest

SQUARE = {"type": "polytope_h", "A": [[1, 0], [0, 1], [-1, 0], [0, -1]], "b": [1, 1, 1, 1]}
DISK = {"type": "pball", "p": 2, "dim": 2}
TRIANGLE = {"type": "polytope_v", "vertices": [[0, 0], [1, 0], [0, 1]]}
DIAMOND = {"type": "pball", "p": 1, "dim": 2}


@pytest.fixture
def square() -> dict:
    return dict(SQUARE)


@pytest.fixture
def disk() -> dict:
    return dict(DISK)


@pytest.fixture
def triangle() -> dict:
    return dict(TRIANGLE)


@pytest.fixture
def write_json(tmp_path: Path) -> Callable[[str, object], str]:
    def _write(name: str, payload: object) -> str:
        p = tmp_path / name
        p.write_text(json.dumps(payload), encoding="utf-8")
        return str(p)

    return _write
