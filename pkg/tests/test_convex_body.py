import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import DegenerateDirection, InvalidBody
from app.services.body_spec import PBallSpec, TranslateSpec, parse_body_spec
from app.services.convex_body import (
    EllipsoidBody,
    HPolytope,
    PBall,
    TranslatedBody,
    as_body,
    boundary_hit,
    contains,
    gauge,
    polytope_halfspaces,
    polytope_vertices,
    quasireversibility_constant,
    validate_body,
)
from app.services.corpus import funk_ball
from app.services.sampling import default_directions, direction_set


def test_gauge_examples(square, disk, triangle):
    assert gauge(square, [0.5, 0.25]) == pytest.approx(0.5)
    assert gauge(disk, [3.0, 4.0]) == pytest.approx(5.0)
    assert gauge({"type": "pball", "p": 1, "dim": 2}, [1.0, 1.0]) == pytest.approx(2.0)
    assert gauge(square, [0.0, 0.0]) == 0.0


def test_gauge_is_positively_homogeneous(square):
    xi = np.array([[0.3, -0.7], [1.2, 0.4]])
    assert_allclose(gauge(square, 2.5 * xi), 2.5 * gauge(square, xi))


def test_gauge_needs_interior_origin(triangle):
    with pytest.raises(InvalidBody):
        gauge(triangle, [0.1, 0.1])


def test_contains_without_interior_origin(triangle):
    assert contains(triangle, [0.2, 0.2])
    assert not contains(triangle, [0.8, 0.8])


@pytest.mark.parametrize(
    "payload",
    [
        {"type": "polytope_h", "A": [[1, 0], [0, 1], [-1, 0], [0, -1]], "b": [1, 1, 1, 1]},
        {"type": "pball", "p": 1.5, "dim": 2},
        {"type": "pball", "p": 4, "dim": 3},
        {"type": "ellipsoid", "center": [0.1, -0.2], "factor": [[1, 0], [0.3, 0.5]]},
        {"type": "translate", "inner": {"type": "pball", "p": 3, "dim": 2}, "offset": [0.2, 0.1]},
        {"type": "symmetrize", "inner": {"type": "translate", "inner": {"type": "pball", "p": 2, "dim": 2}, "offset": [-0.5, 0]}},
    ],
)
def test_subadditivity(payload):
    body = as_body(payload)
    n = body.dim
    rng = np.random.default_rng(11)
    xi = rng.standard_normal((200, n))
    eta = rng.standard_normal((200, n))
    lhs = np.asarray(gauge(body, xi + eta))
    rhs = np.asarray(gauge(body, xi)) + np.asarray(gauge(body, eta))
    assert np.all(lhs <= rhs + 1e-9)


def test_build_folds_closed_families(square):
    assert isinstance(as_body(PBallSpec(p=2.0, dim=3)), EllipsoidBody)
    assert isinstance(as_body({"type": "translate", "inner": square, "offset": [0.1, 0]}), HPolytope)
    stretched = as_body({"type": "linear_image", "inner": {"type": "pball", "p": 2, "dim": 2}, "map": [[2, 0], [0, 1]]})
    assert isinstance(stretched, EllipsoidBody)
    assert gauge(stretched, [2.0, 0.0]) == pytest.approx(1.0)
    shifted = as_body(TranslateSpec(inner=PBallSpec(p=3.0, dim=2), offset=[0.1, 0.0]))
    assert isinstance(shifted, TranslatedBody)
    assert isinstance(shifted.inner, PBall)


def test_boundary_hit(disk, square):
    assert boundary_hit(disk, [0.5, 0.0], [1.0, 0.0]) == pytest.approx(0.5)
    assert boundary_hit(square, [0.0, 0.0], [1.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(DegenerateDirection):
        boundary_hit(disk, [0.0, 0.0], [0.0, 0.0])


def test_quasireversibility():
    dirs = default_directions(2)
    assert quasireversibility_constant({"type": "pball", "p": 2, "dim": 2}, dirs) == pytest.approx(1.0)
    c = quasireversibility_constant(funk_ball([0.5, 0.0]).spec, dirs)
    assert c == pytest.approx(3.0, rel=1e-4)
    assert c <= 3.0 + 1e-9


def test_h_to_v_and_back(square, triangle):
    A, b = polytope_halfspaces(np.array(triangle["vertices"], dtype=float))
    assert A.shape == (3, 2)
    V = polytope_vertices(np.array(square["A"], dtype=float), np.array(square["b"], dtype=float))
    assert_allclose(np.sort(np.abs(V), axis=0), np.ones((4, 2)), atol=1e-12)


def test_validate_body(triangle, square):
    with pytest.raises(InvalidBody):
        validate_body(triangle, direction_set(64, 0, 2))
    assert validate_body(square, direction_set(64, 0, 2)).dim == 2


def test_unbounded_polytope_rejected():
    spec = parse_body_spec({"type": "polytope_h", "A": [[1, 0], [0, 1], [-1, 0]], "b": [1, 1, 1]})
    with pytest.raises(InvalidBody):
        validate_body(spec, direction_set(64, 0, 2))


def test_unbounded_polytope_vertices_raise_invalid_body():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(InvalidBody):
        polytope_vertices(A, np.ones(3))
    with pytest.raises(InvalidBody):
        as_body({"type": "polytope_h", "A": A.tolist(), "b": [1, 1, 1]}).exact_box()


def test_nonconvex_pball_flagged():
    assert not as_body({"type": "pball", "p": 0.5, "dim": 2}).convex
