import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.core.config import settings
from app.core.errors import MethodUnsupported, SampleBudgetTooSmall, SpecParseError
from app.services.binet_legendre import second_moment
from app.services.sampling import bounding_box, direction_set, rejection_sample, sample_uniform, volume


def test_direction_set_is_deterministic():
    a = direction_set(128, 5, 3)
    b = direction_set(128, 5, 3)
    assert_array_equal(a.points, b.points)
    assert_allclose(np.linalg.norm(a.points, axis=1), 1.0)
    assert not np.array_equal(a.points, direction_set(128, 6, 3).points)


def test_direction_set_rejects_bad_input():
    with pytest.raises(SpecParseError):
        direction_set(0, 0, 2)
    with pytest.raises(SpecParseError):
        direction_set(8, 0, 1)


def test_bounding_box(triangle, disk):
    lo, hi = bounding_box(triangle)
    assert_allclose(lo, [0.0, 0.0], atol=1e-12)
    assert_allclose(hi, [1.0, 1.0], atol=1e-12)
    lo, hi = bounding_box({"type": "symmetrize", "inner": disk})
    assert np.all(lo <= -1.0) and np.all(hi >= 1.0)


def test_samples_stay_inside(disk):
    X = sample_uniform(disk, 2000, 3)
    assert X.shape == (2000, 2)
    assert np.all(np.linalg.norm(X, axis=1) <= 1.0)


def test_sampling_independent_of_worker_count(monkeypatch, triangle):
    monkeypatch.setattr(settings, "threads", 1)
    one, acc1, trials1 = rejection_sample(triangle, 5000, 42)
    monkeypatch.setattr(settings, "threads", 4)
    four, acc4, trials4 = rejection_sample(triangle, 5000, 42)
    assert_array_equal(one, four)
    assert (acc1, trials1) == (acc4, trials4)


def test_montecarlo_moment_volume_independent_of_worker_count(monkeypatch, triangle):
    monkeypatch.setattr(settings, "threads", 1)
    one = second_moment(triangle, "montecarlo", samples=20_000, seed=9)
    monkeypatch.setattr(settings, "threads", 3)
    three = second_moment(triangle, "montecarlo", samples=20_000, seed=9)
    assert one.volume == three.volume
    assert_array_equal(one.matrix, three.matrix)


def test_exact_volume(square):
    assert volume(square).volume == pytest.approx(4.0)


def test_montecarlo_volume_within_four_sigma(disk):
    est = volume(disk, "montecarlo", samples=50_000, seed=3)
    assert est.method == "montecarlo"
    assert abs(est.volume - np.pi) <= 4.0 * est.stderr


def test_volume_errors(disk):
    with pytest.raises(SampleBudgetTooSmall):
        volume(disk, "montecarlo", samples=10)
    with pytest.raises(MethodUnsupported):
        volume({"type": "symmetrize", "inner": disk}, "exact")
    with pytest.raises(MethodUnsupported):
        volume(disk, "quadrature")


def test_samples_avoid_the_boundary(square):
    X = sample_uniform(square, 5000, 1)
    assert np.all(np.max(np.abs(X), axis=1) < 1.0)


def test_sample_mean_matches_centroid(triangle):
    X = sample_uniform(triangle, 100_000, 11)
    # per-coordinate sd of the triangle is 1/sqrt(18)
    assert_allclose(X.mean(axis=0), [1 / 3, 1 / 3], atol=4.0 * np.sqrt(1 / 18) / np.sqrt(len(X)))


@pytest.mark.parametrize(
    "spec, exact",
    [
        ({"type": "polytope_h", "A": [[1, 0], [0, 1], [-1, 0], [0, -1]], "b": [1, 1, 1, 1]}, 4.0),
        ({"type": "pball", "p": 1, "dim": 2}, 2.0),
        ({"type": "pball", "p": 1, "dim": 3}, 4.0 / 3.0),
    ],
)
def test_montecarlo_volume_matches_exact(spec, exact):
    est = volume(spec, "montecarlo", samples=100_000, seed=5)
    assert abs(est.volume - exact) <= 4.0 * est.stderr
    assert volume(spec, "exact").volume == pytest.approx(exact)
