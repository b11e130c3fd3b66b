import pytest

from app.core.errors import SpecParseError
from app.services.body_spec import (
    PBallSpec,
    PolytopeHSpec,
    TranslateSpec,
    body_spec_to_dict,
    load_body_spec,
    load_json_text,
    parse_body_spec,
)


def test_parse_polytope_h(square):
    spec = parse_body_spec(square)
    assert isinstance(spec, PolytopeHSpec)
    assert spec.dim == 2


def test_nested_spec_dim(disk):
    spec = parse_body_spec({"type": "translate", "inner": disk, "offset": [0.1, 0.2]})
    assert isinstance(spec, TranslateSpec)
    assert isinstance(spec.inner, PBallSpec)
    assert spec.dim == 2


def test_dump_keeps_type_tag(square):
    data = body_spec_to_dict(parse_body_spec(square))
    assert data["type"] == "polytope_h"
    assert parse_body_spec(data) == parse_body_spec(square)


@pytest.mark.parametrize(
    "payload",
    [
        {"type": "hexagon"},
        {"type": "pball", "p": 2},
        {"type": "polytope_h", "A": [[1, 0], [0, 1]], "b": [1, 1]},
        {"type": "polytope_h", "A": [[1, 0], [0, 1], [-1, -1]], "b": [1, 1]},
        {"type": "ellipsoid", "center": [0, 0], "factor": [[1, 0.5], [0, 1]]},
        {"type": "ellipsoid", "center": [0, 0], "factor": [[-1, 0], [0, 1]]},
        {"type": "translate", "inner": {"type": "pball", "p": 2, "dim": 2}, "offset": [1]},
        {"type": "linear_image", "inner": {"type": "pball", "p": 2, "dim": 2}, "map": [[1, 0]]},
        {"type": "pball", "p": 2, "dim": 2, "color": "red"},
    ],
)
def test_schema_violations(payload):
    with pytest.raises(SpecParseError):
        parse_body_spec(payload)


def test_malformed_json_reports_position():
    with pytest.raises(SpecParseError, match=r"line 1, column"):
        load_json_text('{"type": "pball", "p": }', "body.json")


def test_load_missing_file(tmp_path):
    with pytest.raises(SpecParseError):
        load_body_spec(tmp_path / "nope.json")


def test_load_from_file(write_json, disk):
    spec = load_body_spec(write_json("disk.json", disk))
    assert spec == PBallSpec(p=2.0, dim=2)
