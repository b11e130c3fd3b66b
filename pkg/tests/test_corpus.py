import numpy as np
import pytest
from numpy.testing import assert_array_equal

from app.core.errors import SpecParseError
from app.services.convex_body import quasireversibility_constant
from app.services.corpus import (
    bl_corpus,
    default_count,
    density_corpus,
    john_corpus,
    named_bodies,
    random_polytope,
    random_polytopes,
)
from app.services.sampling import direction_set


def test_random_polytope_is_reproducible():
    a = random_polytope(2, seed=9, index=3, symmetric=False)
    b = random_polytope(2, seed=9, index=3, symmetric=False)
    assert a.body_id == "gen-n2-003"
    assert_array_equal(np.array(a.spec.vertices), np.array(b.spec.vertices))


@pytest.mark.parametrize("n", [2, 3])
def test_random_polytopes_keep_origin_inside(n):
    for cb in random_polytopes(n, seed=1, count=5, symmetric=False):
        body = cb.to_body()
        A, b = body.halfspaces()
        assert b.min() > 0.05
        assert 3 * n <= len(cb.spec.vertices) <= 10 * n


def test_symmetric_variant_is_symmetric():
    cb = random_polytope(3, seed=2, index=0, symmetric=True)
    assert cb.symmetric
    c = quasireversibility_constant(cb.to_body(), direction_set(256, 0, 3))
    assert c == pytest.approx(1.0, abs=1e-9)


def test_unsupported_dimension():
    with pytest.raises(SpecParseError):
        random_polytope(4, seed=0, index=0, symmetric=True)


def test_named_bodies():
    ids = [cb.body_id for cb in named_bodies(2)]
    assert {"square", "disk", "triangle-centered"} <= set(ids)
    assert "triangle-centered" not in [cb.body_id for cb in named_bodies(3)]


def test_corpus_sizes():
    assert default_count(2) == 100
    assert default_count(3) == 50
    named = len(named_bodies(2)) + 1
    assert len(john_corpus(2, seed=0, count=3)) == named + 6
    bl = bl_corpus(2, seed=0, count=3)
    assert any(cb.body_id.startswith("hilbert-ball") for cb in bl)
    assert all(cb.exact for cb in density_corpus(2, seed=0, count=3))
    assert len(density_corpus(2, seed=0, count=3)) == len(bl) - 1
