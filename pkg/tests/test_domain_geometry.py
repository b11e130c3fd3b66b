import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import DomainNotUnitBall, NotInterior, PathExitsDomain, PointOnBoundary, SpecParseError
from app.services.domain_geometry import (
    ZermeloField,
    counterexample_field,
    counterexample_profile,
    funk_ball_radius,
    funk_distance,
    funk_field,
    funk_norm,
    hilbert_distance,
    hilbert_norm,
    parse_field_spec,
    parse_polyline_spec,
    path_length,
    reverse_field,
    rfunk_distance,
    rfunk_field,
    rfunk_norm,
    finsler_norm,
    shell_radius,
)


def test_norms_on_disk(disk):
    x = [0.5, 0.0]
    assert funk_norm(disk, x, [1.0, 0.0]) == pytest.approx(2.0)
    assert rfunk_norm(disk, x, [1.0, 0.0]) == pytest.approx(2.0 / 3.0)
    assert hilbert_norm(disk, x, [1.0, 0.0]) == pytest.approx(4.0 / 3.0)


@pytest.mark.parametrize("domain", ["disk", "square"])
def test_distances(domain, request):
    body = request.getfixturevalue(domain)
    p, q = [0.0, 0.0], [0.5, 0.0]
    assert funk_distance(body, p, q) == pytest.approx(np.log(2.0))
    assert rfunk_distance(body, p, q) == pytest.approx(np.log(1.5))
    assert hilbert_distance(body, p, q) == pytest.approx(0.5 * np.log(3.0))
    assert hilbert_distance(body, q, p) == pytest.approx(hilbert_distance(body, p, q))


def test_triangle_inequality(square):
    a, b, c = [0.1, 0.2], [-0.4, 0.5], [0.6, -0.3]
    assert funk_distance(square, a, c) <= funk_distance(square, a, b) + funk_distance(square, b, c) + 1e-12


def test_interior_checks(disk):
    with pytest.raises(NotInterior):
        funk_distance(disk, [0.0, 0.0], [1.5, 0.0])
    with pytest.raises(PointOnBoundary):
        funk_norm(disk, [1.0, 0.0], [0.0, 1.0])


def test_funk_ball_radius(disk, square):
    assert funk_ball_radius(np.log(2.0), disk) == pytest.approx(0.5)
    assert funk_ball_radius(0.0, disk) == 0.0
    assert funk_ball_radius(40.0, {"type": "pball", "p": 2, "dim": 3}) == pytest.approx(1.0)
    with pytest.raises(DomainNotUnitBall):
        funk_ball_radius(1.0, square)
    with pytest.raises(DomainNotUnitBall):
        funk_ball_radius(1.0, {"type": "translate", "inner": disk, "offset": [0.1, 0.0]})
    with pytest.raises(TypeError):
        funk_ball_radius(1.0)


def test_segment_length_equals_funk_distance(disk):
    length = path_length(funk_field(disk), [[0.0, 0.0], [0.5, 0.0]])
    assert length == pytest.approx(np.log(2.0), abs=1e-6)
    back = path_length(rfunk_field(disk), [[0.0, 0.0], [0.5, 0.0]])
    assert back == pytest.approx(np.log(1.5), abs=1e-6)


def test_constant_drift_is_minkowski(disk):
    spec = parse_field_spec({"domain": disk, "drift": {"kind": "constant", "c": [0.2, 0.0]}})
    field = ZermeloField.from_spec(spec)
    length = path_length(field, parse_polyline_spec({"points": [[-0.5, 0.0], [0.5, 0.0]]}))
    assert length == pytest.approx(1.0 / 0.8, rel=1e-9)


def test_reverse_field_flips_direction(square):
    field = funk_field(square)
    rev = reverse_field(field)
    x = np.array([0.3, -0.1])
    for xi in ([1.0, 0.0], [0.3, 0.7], [-0.2, 0.5]):
        assert finsler_norm(rev, x, xi) == pytest.approx(finsler_norm(field, x, -np.asarray(xi)))
    assert finsler_norm(rfunk_field(square), x, [0.3, 0.7]) == pytest.approx(rfunk_norm(square, x, [0.3, 0.7]))


def test_path_must_stay_inside(disk):
    with pytest.raises(PathExitsDomain):
        path_length(funk_field(disk), [[0.0, 0.0], [1.2, 0.0]])
    with pytest.raises(SpecParseError):
        parse_polyline_spec({"points": [[0.0, 0.0], [0.0, 0.0]]})


def test_counterexample_profile_bands():
    assert counterexample_profile(0.0) == 1.0
    assert counterexample_profile(shell_radius(0.5)) == 1.0
    assert counterexample_profile(shell_radius(2.5)) == -1.0
    assert counterexample_profile(shell_radius(4.5)) == 1.0
    assert counterexample_profile(shell_radius(40.0), k_max=3) == -1.0
    r = np.linspace(0.0, shell_radius(3.0), 2001)
    phi = counterexample_profile(r)
    assert np.all(np.abs(phi) <= 1.0)
    assert np.max(np.abs(np.diff(phi))) < 0.1


def test_shell_costs_are_one():
    field = counterexample_field(2)
    e = np.array([1.0, 0.0])
    out = path_length(field, [shell_radius(4.0) * e, shell_radius(5.0) * e])
    inward = path_length(field, [shell_radius(3.0) * e, shell_radius(2.0) * e])
    assert out == pytest.approx(1.0, abs=1e-4)
    assert inward == pytest.approx(1.0, abs=1e-4)


def test_radial_families_need_unit_ball(square):
    spec = parse_field_spec({"domain": square, "drift": {"kind": "counterexample_radial"}})
    with pytest.raises(DomainNotUnitBall):
        ZermeloField.from_spec(spec)


def test_field_spec_validation(disk):
    with pytest.raises(SpecParseError):
        parse_field_spec({"domain": disk, "drift": {"kind": "radial_profile", "radii": [0.0, 0.5], "values": [1.0, 2.0]}})
    with pytest.raises(SpecParseError):
        parse_field_spec({"domain": disk, "drift": {"kind": "swirl"}})


def test_radial_profile_field(disk):
    spec = parse_field_spec({"domain": disk, "drift": {"kind": "radial_profile", "radii": [0.0, 1.0], "values": [1.0, 1.0]}})
    field = ZermeloField.from_spec(spec)
    assert_allclose(finsler_norm(field, [0.5, 0.0], [1.0, 0.0]), 2.0)


def _klein_translation(x, a):
    x = np.asarray(x, dtype=float)
    d = 1.0 + a * x[0]
    return np.array([(x[0] + a) / d, np.sqrt(1.0 - a * a) * x[1] / d])


def _seeded_points(seed, k):
    return np.random.default_rng(seed).uniform(-0.6, 0.6, size=(k, 2))


def test_hilbert_invariant_under_projective_disk_map(disk):
    pts = _seeded_points(11, 40)
    for p, q in zip(pts[::2], pts[1::2]):
        moved = hilbert_distance(disk, _klein_translation(p, 0.4), _klein_translation(q, 0.4))
        assert moved == pytest.approx(hilbert_distance(disk, p, q), rel=1e-9, abs=1e-12)


def test_hilbert_invariant_under_affine_maps(square):
    M = np.array([[1.5, 0.4], [-0.2, 0.8]])
    c = np.array([0.3, -1.1])
    image = {"type": "translate", "inner": {"type": "linear_image", "inner": square, "map": M.tolist()}, "offset": c.tolist()}
    pts = _seeded_points(12, 20)
    for p, q in zip(pts[::2], pts[1::2]):
        assert hilbert_distance(image, M @ p + c, M @ q + c) == pytest.approx(hilbert_distance(square, p, q), rel=1e-9)
        assert funk_distance(image, M @ p + c, M @ q + c) == pytest.approx(funk_distance(square, p, q), rel=1e-9)


@pytest.mark.parametrize("domain", ["disk", "square"])
def test_funk_is_asymmetric_and_hilbert_averages_it(domain, request):
    body = request.getfixturevalue(domain)
    pts = _seeded_points(13, 40)
    gaps = []
    for p, q in zip(pts[::2], pts[1::2]):
        forward, backward = funk_distance(body, p, q), funk_distance(body, q, p)
        gaps.append(abs(forward - backward))
        assert rfunk_distance(body, p, q) == pytest.approx(backward, rel=1e-12)
        assert hilbert_distance(body, p, q) == pytest.approx(0.5 * (forward + backward), rel=1e-12)
    assert max(gaps) > 1e-2


@pytest.mark.parametrize("domain", ["disk", "square"])
@pytest.mark.parametrize("distance", [funk_distance, rfunk_distance, hilbert_distance])
def test_triangle_inequality_on_random_triples(domain, distance, request):
    body = request.getfixturevalue(domain)
    pts = _seeded_points(14, 150).reshape(50, 3, 2)
    for a, b, c in pts:
        assert distance(body, a, c) <= distance(body, a, b) + distance(body, b, c) + 1e-12


def test_segment_lengths_match_funk_distance_on_random_pairs(disk):
    field = funk_field(disk)
    pts = _seeded_points(15, 20)
    for p, q in zip(pts[::2], pts[1::2]):
        assert path_length(field, [p, q]) == pytest.approx(funk_distance(disk, p, q), rel=1e-5, abs=1e-7)
