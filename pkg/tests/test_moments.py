import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.services.moments import (
    ellipsoid_moments,
    linear_moments,
    pball_moments,
    polytope_moments,
    translate_moments,
    unit_ball_volume,
)

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
SQUARE = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])


def test_unit_ball_volume():
    assert unit_ball_volume(2) == pytest.approx(np.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * np.pi / 3.0)


def test_triangle_moments():
    m = polytope_moments(TRIANGLE)
    assert m.volume == pytest.approx(0.5)
    assert_allclose(m.mean, [1 / 3, 1 / 3])
    assert_allclose(m.second, [[1 / 6, 1 / 12], [1 / 12, 1 / 6]])


def test_square_moments():
    m = polytope_moments(SQUARE)
    assert m.volume == pytest.approx(4.0)
    assert_allclose(m.second, np.eye(2) / 3.0, atol=1e-15)


def test_disk_moments_agree():
    e = ellipsoid_moments(np.zeros(2), np.eye(2))
    p = pball_moments(2.0, 2)
    assert_allclose(e.second, np.eye(2) / 4.0)
    assert_allclose(p.second, e.second)
    assert p.volume == pytest.approx(np.pi)


def test_diamond_moments():
    m = pball_moments(1.0, 2)
    assert m.volume == pytest.approx(2.0)
    assert_allclose(m.second, np.eye(2) / 6.0)


def test_translate_matches_shifted_vertices():
    o = np.array([0.3, -0.2])
    shifted = translate_moments(polytope_moments(TRIANGLE), o)
    direct = polytope_moments(TRIANGLE + o)
    assert_allclose(shifted.second, direct.second, atol=1e-14)
    assert_allclose(shifted.mean, direct.mean, atol=1e-14)


def test_linear_image_scales_volume():
    A = np.array([[2.0, 1.0], [0.0, 3.0]])
    m = linear_moments(polytope_moments(TRIANGLE), A)
    direct = polytope_moments(TRIANGLE @ A.T)
    assert m.volume == pytest.approx(3.0)
    assert_allclose(m.second, direct.second, atol=1e-14)
