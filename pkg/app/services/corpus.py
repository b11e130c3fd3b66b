"""Named test bodies and seeded random polytopes for the verification suites."""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.core.errors import SpecParseError
from app.services.body_spec import (
    BodySpec,
    EllipsoidSpec,
    PBallSpec,
    PolytopeHSpec,
    PolytopeVSpec,
    SymmetrizeSpec,
    TranslateSpec,
)
from app.services.convex_body import ConvexBody, as_body, polytope_halfspaces

logger = logging.getLogger(__name__)

_SEED_MASK = (1 << 64) - 1
_INTERIOR_MARGIN = 0.05
_MAX_RESAMPLE = 200


@dataclass(frozen=True)
class CorpusBody:
    body_id: str
    spec: BodySpec
    symmetric: bool
    exact: bool = True

    @property
    def dim(self) -> int:
        return self.spec.dim

    def to_body(self) -> ConvexBody:
        return as_body(self.spec)


def cube(n: int = 2) -> CorpusBody:
    eye = np.eye(n)
    A = np.vstack([eye, -eye])
    spec = PolytopeHSpec(A=A.tolist(), b=[1.0] * (2 * n))
    return CorpusBody("square" if n == 2 else f"cube-n{n}", spec, symmetric=True)


def ball(n: int = 2) -> CorpusBody:
    return CorpusBody("disk" if n == 2 else f"ball-n{n}", PBallSpec(p=2.0, dim=n), symmetric=True)


def cross_polytope(n: int = 2) -> CorpusBody:
    return CorpusBody(f"cross-n{n}", PBallSpec(p=1.0, dim=n), symmetric=True)


def pball(p: float, n: int = 2) -> CorpusBody:
    return CorpusBody(f"pball-p{p:g}-n{n}", PBallSpec(p=p, dim=n), symmetric=True)


def triangle() -> CorpusBody:
    return CorpusBody(
        "triangle",
        PolytopeVSpec(vertices=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        symmetric=False,
    )


def centered_triangle() -> CorpusBody:
    """Triangle moved so that its centroid sits at the origin."""
    third = 1.0 / 3.0
    spec = TranslateSpec(inner=triangle().spec, offset=[-third, -third])
    return CorpusBody("triangle-centered", spec, symmetric=False)


def funk_ball(x: List[float]) -> CorpusBody:
    """Funk unit ball of the unit ball at x, the translate Omega - x."""
    n = len(x)
    spec = TranslateSpec(inner=PBallSpec(p=2.0, dim=n), offset=[-float(v) for v in x])
    radius = float(np.linalg.norm(x))
    return CorpusBody(f"funk-ball-r{radius:g}-n{n}", spec, symmetric=radius == 0.0)


def hilbert_ball(x: List[float]) -> CorpusBody:
    inner = funk_ball(x)
    radius = float(np.linalg.norm(x))
    return CorpusBody(f"hilbert-ball-r{radius:g}-n{len(x)}", SymmetrizeSpec(inner=inner.spec), symmetric=True, exact=False)


def random_ellipsoid(n: int, seed: int, index: int = 0) -> CorpusBody:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & _SEED_MASK, n, index, 7]))
    L = np.tril(rng.uniform(-0.3, 0.3, (n, n)), -1) + np.diag(rng.uniform(0.5, 1.5, n))
    center = rng.uniform(-0.2, 0.2, n) * float(np.min(np.diag(L)))
    spec = EllipsoidSpec(center=center.tolist(), factor=L.tolist())
    return CorpusBody(f"ellipsoid-n{n}-{index:03d}", spec, symmetric=False)


def random_polytope(n: int, seed: int, index: int, symmetric: bool) -> CorpusBody:
    """Hull of 3n..10n seeded sphere points; the symmetric variant takes +-points,
    the general one is shifted off-center. Draws repeat until the origin keeps a margin.
    """
    if n not in (2, 3):
        raise SpecParseError("random polytopes are generated for n = 2, 3")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & _SEED_MASK, n, index, int(symmetric)]))
    for _ in range(_MAX_RESAMPLE):
        k = int(rng.integers(3 * n, 10 * n + 1))
        pts = rng.standard_normal((k, n))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        if symmetric:
            pts = np.vstack([pts, -pts])
        else:
            pts = pts + rng.uniform(-0.3, 0.3, n)
        try:
            _, b = polytope_halfspaces(pts)
        except Exception:
            continue
        if b.min() > _INTERIOR_MARGIN:
            tag = "sym" if symmetric else "gen"
            spec = PolytopeVSpec(vertices=pts.tolist())
            return CorpusBody(f"{tag}-n{n}-{index:03d}", spec, symmetric=symmetric)
    raise SpecParseError(f"could not draw a polytope with interior origin (n={n}, index={index})")


def random_polytopes(n: int, seed: int, count: int, symmetric: bool) -> List[CorpusBody]:
    return [random_polytope(n, seed, i, symmetric) for i in range(count)]


def default_count(n: int) -> int:
    return 100 if n == 2 else 50


def named_bodies(n: int) -> List[CorpusBody]:
    bodies = [cube(n), ball(n), cross_polytope(n), pball(1.5, n), pball(3.0, n)]
    x = [0.5] + [0.0] * (n - 1)
    bodies.append(funk_ball(x))
    if n == 2:
        bodies.append(centered_triangle())
    return bodies


def john_corpus(n: int, seed: int, count: Optional[int] = None) -> List[CorpusBody]:
    count = default_count(n) if count is None else count
    bodies = named_bodies(n) + [random_ellipsoid(n, seed)]
    bodies += random_polytopes(n, seed, count, symmetric=True)
    bodies += random_polytopes(n, seed, count, symmetric=False)
    return bodies


def bl_corpus(n: int, seed: int, count: Optional[int] = None) -> List[CorpusBody]:
    count = default_count(n) if count is None else count
    bodies = named_bodies(n) + [random_ellipsoid(n, seed)]
    if n == 2:
        bodies.append(hilbert_ball([0.5, 0.0]))
    bodies += random_polytopes(n, seed, count, symmetric=True)
    bodies += random_polytopes(n, seed, count, symmetric=False)
    return bodies


def density_corpus(n: int, seed: int, count: Optional[int] = None) -> List[CorpusBody]:
    return [cb for cb in bl_corpus(n, seed, count) if cb.exact]
