import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import InvalidBody
from app.services.convex_body import polytope_halfspaces
from app.services.maxvol import solve_max_volume, symmetric_basis


def test_symmetric_basis_shape():
    B = symmetric_basis(3)
    assert B.shape == (6, 3, 3)
    assert_allclose(B, np.transpose(B, (0, 2, 1)))


def test_square_gives_unit_disk():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    sol = solve_max_volume(A, np.ones(4))
    assert_allclose(sol.center, 0.0, atol=1e-6)
    assert_allclose(sol.shape, np.eye(2), atol=1e-6)


def test_triangle_ellipse():
    A, b = polytope_halfspaces(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    sol = solve_max_volume(A, b)
    assert_allclose(sol.center, [1 / 3, 1 / 3], atol=1e-6)
    area = np.pi * np.linalg.det(sol.shape)
    assert area == pytest.approx(np.pi / (6.0 * np.sqrt(3.0)), rel=1e-6)
    assert area == pytest.approx(0.302300, abs=1e-6)


def test_scaled_rows_give_same_answer():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    a = solve_max_volume(A, np.ones(4))
    b = solve_max_volume(3.0 * A, 3.0 * np.ones(4))
    assert_allclose(a.shape, b.shape, atol=1e-6)


def test_too_few_facets():
    with pytest.raises(InvalidBody):
        solve_max_volume(np.eye(2), np.ones(2))


def test_many_facets_still_center():
    theta = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    A = np.column_stack([np.cos(theta), np.sin(theta)])
    sol = solve_max_volume(A, np.ones(4096))
    assert_allclose(sol.center, 0.0, atol=1e-6)
    assert_allclose(sol.shape, np.eye(2), atol=1e-5)
    assert sol.duality_gap <= 1e-6
