import logging
from abc import ABC, abstractmethod
from functools import cached_property
from typing import Any, Optional, Tuple

import numpy as np
from scipy import linalg, optimize, spatial

from app.core.config import settings
from app.core.errors import (
    DegenerateDirection,
    InvalidBody,
    MethodUnsupported,
    NotInterior,
    SpecParseError,
)
from app.services.body_spec import (
    BodySpec,
    EllipsoidSpec,
    LinearImageSpec,
    PBallSpec,
    PolytopeHSpec,
    PolytopeVSpec,
    SymmetrizeSpec,
    TranslateSpec,
    parse_body_spec,
)
from app.services.moments import (
    BodyMoments,
    ellipsoid_moments,
    linear_moments,
    pball_moments,
    polytope_moments,
    translate_moments,
)

logger = logging.getLogger(__name__)

Box = Tuple[np.ndarray, np.ndarray]

EXACT_POLYTOPE_MAX_DIM = 3


class ConvexBody(ABC):
    """Bounded convex body, immutable once built.

    ``_gauge`` and ``ray_exit`` work on row-stacked arrays; the module-level
    functions below add shape handling and the interior checks.
    """

    def __init__(self, spec: Optional[BodySpec], dim: int) -> None:
        self.spec = spec
        self.dim = int(dim)

    @property
    def convex(self) -> bool:
        return True

    @property
    def is_polytope(self) -> bool:
        return self.halfspaces() is not None

    def halfspaces(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        return None

    def vertices(self) -> Optional[np.ndarray]:
        return None

    def exact_box(self) -> Optional[Box]:
        return None

    def exact_moments(self) -> Optional[BodyMoments]:
        return None

    @abstractmethod
    def origin_interior(self) -> bool: ...

    @abstractmethod
    def _gauge(self, xi: np.ndarray) -> np.ndarray: ...

    def contains(self, x: np.ndarray, margin: float = 0.0) -> np.ndarray:
        return self._gauge(x) <= 1.0 - margin

    def interior(self, x: np.ndarray) -> np.ndarray:
        """Membership in the open body."""
        return self._gauge(x) < 1.0

    def ray_exit(self, base: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        self.require_origin_interior()
        if self._gauge(base[None, :])[0] >= 1.0:
            raise NotInterior("base point is not interior to the body")
        return bisect_exit(self._gauge, base, dirs)

    def require_origin_interior(self) -> None:
        if not self._origin_interior_cached:
            raise InvalidBody("origin is not interior to the body")

    @cached_property
    def _origin_interior_cached(self) -> bool:
        return bool(self.origin_interior())

    def describe(self) -> str:
        return type(self).__name__


def bisect_exit(gauge_fn, base: np.ndarray, dirs: np.ndarray, rel_tol: Optional[float] = None) -> np.ndarray:
    """Solve gauge_fn(base + t d) = 1 for t > 0 per direction, base strictly inside."""
    tol = float(settings.bisection_tol if rel_tol is None else rel_tol)
    k = dirs.shape[0]
    lo = np.zeros(k)
    hi = np.ones(k)

    for _ in range(1100):
        out = gauge_fn(base + hi[:, None] * dirs) < 1.0
        if not out.any():
            break
        lo = np.where(out, hi, lo)
        hi = np.where(out, 2.0 * hi, hi)
    else:
        raise InvalidBody("ray never leaves the body; body is unbounded")

    for _ in range(200):
        if np.all(hi - lo <= tol * hi):
            break
        mid = 0.5 * (lo + hi)
        inside = gauge_fn(base + mid[:, None] * dirs) < 1.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def chebyshev_center(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, float]:
    """Center and radius of the largest Euclidean ball in {A x <= b}."""
    m, n = A.shape
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = optimize.linprog(
        c,
        A_ub=np.hstack([A, norms[:, None]]),
        b_ub=b,
        bounds=[(None, None)] * n + [(0.0, None)],
        method="highs",
    )
    if res.status == 3:
        raise InvalidBody("polytope is unbounded")
    if res.status != 0:
        raise InvalidBody(f"polytope interior search failed: {res.message}")
    r = float(res.x[-1])
    if r <= 0.0:
        raise InvalidBody("polytope has empty interior")
    return np.asarray(res.x[:n], dtype=float), r


def _dedupe_rows(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    key = np.round(np.hstack([A, b[:, None]]), 10)
    _, idx = np.unique(key, axis=0, return_index=True)
    idx.sort()
    return A[idx], b[idx]


class HPolytope(ConvexBody):

    def __init__(
        self,
        A: np.ndarray,
        b: np.ndarray,
        spec: Optional[BodySpec] = None,
        vertices: Optional[np.ndarray] = None,
    ) -> None:
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise InvalidBody("A must be m x n and b of length m")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidBody("polytope data must be finite")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms <= 0.0):
            raise InvalidBody("facet normals must be nonzero")
        super().__init__(spec, A.shape[1])
        self.A = A
        self.b = b
        self._norms = norms
        self._vertices = None if vertices is None else np.asarray(vertices, dtype=float)

    def halfspaces(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.A, self.b

    def origin_interior(self) -> bool:
        return bool(np.all(self.b > 0.0))

    def _gauge(self, xi: np.ndarray) -> np.ndarray:
        return np.maximum(0.0, np.max((xi @ self.A.T) / self.b, axis=1))

    def contains(self, x: np.ndarray, margin: float = 0.0) -> np.ndarray:
        slack = self.b - x @ self.A.T
        return np.all(slack >= margin * self._norms, axis=1)

    def interior(self, x: np.ndarray) -> np.ndarray:
        return np.all(self.b - x @ self.A.T > 0.0, axis=1)

    def ray_exit(self, base: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        slack = self.b - self.A @ base
        if np.any(slack <= 0.0):
            raise NotInterior("base point is not interior to the polytope")
        den = dirs @ self.A.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(den > 0.0, slack / den, np.inf)
        t = ratio.min(axis=1)
        if np.any(~np.isfinite(t)):
            raise InvalidBody("polytope is unbounded along a tested direction")
        return t

    @cached_property
    def interior_point(self) -> np.ndarray:
        center, _ = chebyshev_center(self.A, self.b)
        return center

    def vertices(self) -> np.ndarray:
        if self._vertices is None:
            self._vertices = polytope_vertices(self.A, self.b)
        return self._vertices

    def exact_box(self) -> Box:
        return self._box

    @cached_property
    def _box(self) -> Box:
        if self.dim <= EXACT_POLYTOPE_MAX_DIM:
            v = self.vertices()
            return v.min(axis=0), v.max(axis=0)
        return polytope_extent(self.A, self.b)

    def exact_moments(self) -> Optional[BodyMoments]:
        if self.dim > EXACT_POLYTOPE_MAX_DIM:
            return None
        return self._moments

    @cached_property
    def _moments(self) -> BodyMoments:
        return polytope_moments(self.vertices())

    def translated(self, offset: np.ndarray, spec: Optional[BodySpec] = None) -> "HPolytope":
        o = np.asarray(offset, dtype=float)
        verts = None if self._vertices is None else self._vertices + o
        return HPolytope(self.A, self.b + self.A @ o, spec=spec, vertices=verts)

    def linear_image(self, M: np.ndarray, spec: Optional[BodySpec] = None) -> "HPolytope":
        Minv = np.linalg.inv(M)
        verts = None if self._vertices is None else self._vertices @ M.T
        return HPolytope(self.A @ Minv, self.b, spec=spec, vertices=verts)


def polytope_extent(A: np.ndarray, b: np.ndarray) -> Box:
    """Coordinate bounding box by 2n linear programs; raises InvalidBody when unbounded."""
    n = A.shape[1]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = -sign
            res = optimize.linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
            if res.status == 3:
                raise InvalidBody("polytope is unbounded")
            if res.status != 0:
                raise InvalidBody(f"polytope extent search failed: {res.message}")
            if sign > 0:
                hi[i] = res.x[i]
            else:
                lo[i] = res.x[i]
    return lo, hi


def polytope_vertices(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """H to V conversion through a halfspace intersection about the Chebyshev center."""
    n = A.shape[1]
    if n > EXACT_POLYTOPE_MAX_DIM:
        raise MethodUnsupported(f"vertex enumeration is provided for n <= {EXACT_POLYTOPE_MAX_DIM}, got n={n}")
    polytope_extent(A, b)
    center, _ = chebyshev_center(A, b)
    try:
        hs = spatial.HalfspaceIntersection(np.hstack([A, -b[:, None]]), center)
        pts = hs.intersections
        pts = pts[np.all(np.isfinite(pts), axis=1)]
        hull = spatial.ConvexHull(pts)
    except spatial.QhullError as e:
        raise InvalidBody(f"vertex enumeration failed: {e}") from e
    return pts[np.sort(hull.vertices)]


def polytope_halfspaces(vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """V to H conversion; facets are merged when qhull triangulates them."""
    pts = np.asarray(vertices, dtype=float)
    n = pts.shape[1]
    if n > EXACT_POLYTOPE_MAX_DIM:
        raise MethodUnsupported(f"facet enumeration is provided for n <= {EXACT_POLYTOPE_MAX_DIM}, got n={n}")
    try:
        hull = spatial.ConvexHull(pts)
    except spatial.QhullError as e:
        raise InvalidBody(f"vertices do not span a full-dimensional body: {e}") from e
    A = hull.equations[:, :-1]
    b = -hull.equations[:, -1]
    return _dedupe_rows(A, b)


def polytope_from_vertices(vertices: np.ndarray, spec: Optional[BodySpec] = None) -> HPolytope:
    pts = np.asarray(vertices, dtype=float)
    A, b = polytope_halfspaces(pts)
    hull = spatial.ConvexHull(pts)
    return HPolytope(A, b, spec=spec, vertices=pts[np.sort(hull.vertices)])


class PBall(ConvexBody):

    def __init__(self, p: float, dim: int, spec: Optional[BodySpec] = None) -> None:
        super().__init__(spec, dim)
        self.p = float(p)
        if self.p < 1.0:
            logger.warning("pball with p=%g < 1 has a non-convex gauge", self.p)

    @property
    def convex(self) -> bool:
        return self.p >= 1.0

    def origin_interior(self) -> bool:
        return True

    def _gauge(self, xi: np.ndarray) -> np.ndarray:
        a = np.abs(xi)
        m = a.max(axis=1)
        out = np.zeros(a.shape[0])
        nz = m > 0.0
        scaled = a[nz] / m[nz, None]
        out[nz] = m[nz] * np.sum(scaled**self.p, axis=1) ** (1.0 / self.p)
        return out

    def exact_box(self) -> Box:
        return -np.ones(self.dim), np.ones(self.dim)

    def exact_moments(self) -> BodyMoments:
        return pball_moments(self.p, self.dim)

    def describe(self) -> str:
        return f"PBall(p={self.p:g}, n={self.dim})"


class EllipsoidBody(ConvexBody):

    def __init__(self, center: np.ndarray, factor: np.ndarray, spec: Optional[BodySpec] = None) -> None:
        c = np.asarray(center, dtype=float)
        L = np.asarray(factor, dtype=float)
        n = c.shape[0]
        if L.shape != (n, n):
            raise InvalidBody("ellipsoid factor must be n x n")
        if np.any(np.diag(L) <= 0.0) or np.any(np.triu(L, 1) != 0.0):
            raise InvalidBody("ellipsoid factor must be lower-triangular with a positive diagonal")
        super().__init__(spec, n)
        self.center = c
        self.factor = L
        self._sigma_min = float(np.linalg.svd(L, compute_uv=False).min())
        self._e = self._whiten(-c[None, :])[0]

    def _whiten(self, x: np.ndarray) -> np.ndarray:
        return linalg.solve_triangular(self.factor, x.T, lower=True).T

    def origin_interior(self) -> bool:
        return bool(np.linalg.norm(self._e) < 1.0)

    def _gauge(self, xi: np.ndarray) -> np.ndarray:
        w = self._whiten(xi)
        # ellipsoid written about the origin: z = w / t + e with e = -L^{-1} c
        e = -self._e
        we = w @ e
        ww = np.sum(w * w, axis=1)
        ee = float(e @ e)
        disc = np.sqrt(np.maximum(we * we + ww * (1.0 - ee), 0.0))
        return (disc - we) / (1.0 - ee)

    def contains(self, x: np.ndarray, margin: float = 0.0) -> np.ndarray:
        z = np.linalg.norm(self._whiten(x - self.center), axis=1)
        return (1.0 - z) * self._sigma_min >= margin

    def interior(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self._whiten(x - self.center), axis=1) < 1.0

    def ray_exit(self, base: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        e = self._whiten((base - self.center)[None, :])[0]
        ee = float(e @ e)
        if ee >= 1.0:
            raise NotInterior("base point is not interior to the ellipsoid")
        w = self._whiten(dirs)
        we = w @ e
        ww = np.sum(w * w, axis=1)
        return (np.sqrt(we * we + ww * (1.0 - ee)) - we) / ww

    def exact_box(self) -> Box:
        half = np.linalg.norm(self.factor, axis=1)
        return self.center - half, self.center + half

    def exact_moments(self) -> BodyMoments:
        return ellipsoid_moments(self.center, self.factor)

    def translated(self, offset: np.ndarray, spec: Optional[BodySpec] = None) -> "EllipsoidBody":
        return EllipsoidBody(self.center + np.asarray(offset, dtype=float), self.factor, spec=spec)

    def linear_image(self, M: np.ndarray, spec: Optional[BodySpec] = None) -> "EllipsoidBody":
        ML = M @ self.factor
        return EllipsoidBody(M @ self.center, np.linalg.cholesky(ML @ ML.T), spec=spec)


class TranslatedBody(ConvexBody):

    def __init__(self, inner: ConvexBody, offset: np.ndarray, spec: Optional[BodySpec] = None) -> None:
        super().__init__(spec, inner.dim)
        self.inner = inner
        self.offset = np.asarray(offset, dtype=float)

    def origin_interior(self) -> bool:
        return bool(self.inner.contains(-self.offset[None, :], margin=settings.boundary_margin)[0])

    def _gauge(self, xi: np.ndarray) -> np.ndarray:
        return 1.0 / self.inner.ray_exit(-self.offset, xi)

    def contains(self, x: np.ndarray, margin: float = 0.0) -> np.ndarray:
        return self.inner.contains(x - self.offset, margin)

    def interior(self, x: np.ndarray) -> np.ndarray:
        return self.inner.interior(x - self.offset)

    def ray_exit(self, base: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        return self.inner.ray_exit(base - self.offset, dirs)

    def exact_box(self) -> Optional[Box]:
        box = self.inner.exact_box()
        if box is None:
            return None
        return box[0] + self.offset, box[1] + self.offset

    def exact_moments(self) -> Optional[BodyMoments]:
        m = self.inner.exact_moments()
        return None if m is None else translate_moments(m, self.offset)

    @property
    def convex(self) -> bool:
        return self.inner.convex

    def describe(self) -> str:
        return f"Translate({self.inner.describe()})"


class LinearImageBody(ConvexBody):

    def __init__(self, inner: ConvexBody, M: np.ndarray, spec: Optional[BodySpec] = None) -> None:
        super().__init__(spec, inner.dim)
        self.inner = inner
        self.M = np.asarray(M, dtype=float)
        self.Minv = np.linalg.inv(self.M)
        self._sigma_min = float(np.linalg.svd(self.M, compute_uv=False).min())

    def origin_interior(self) -> bool:
        return self.inner.origin_interior()

    def _gauge(self, xi: np.ndarray) -> np.ndarray:
        return self.inner._gauge(xi @ self.Minv.T)

    def contains(self, x: np.ndarray, margin: float = 0.0) -> np.ndarray:
        return self.inner.contains(x @ self.Minv.T, margin / self._sigma_min)

    def interior(self, x: np.ndarray) -> np.ndarray:
        return self.inner.interior(x @ self.Minv.T)

    def ray_exit(self, base: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        return self.inner.ray_exit(self.Minv @ base, dirs @ self.Minv.T)

    def exact_moments(self) -> Optional[BodyMoments]:
        m = self.inner.exact_moments()
        return None if m is None else linear_moments(m, self.M)

    @property
    def convex(self) -> bool:
        return self.inner.convex

    def describe(self) -> str:
        return f"LinearImage({self.inner.describe()})"


class SymmetrizedBody(ConvexBody):

    def __init__(self, inner: ConvexBody, spec: Optional[BodySpec] = None) -> None:
        super().__init__(spec, inner.dim)
        self.inner = inner

    def origin_interior(self) -> bool:
        return self.inner.origin_interior()

    def _gauge(self, xi: np.ndarray) -> np.ndarray:
        return 0.5 * (self.inner._gauge(xi) + self.inner._gauge(-xi))

    @property
    def convex(self) -> bool:
        return self.inner.convex

    def describe(self) -> str:
        return f"Symmetrized({self.inner.describe()})"


def _check_map(M: np.ndarray, n: int) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (n, n) or not np.all(np.isfinite(M)):
        raise InvalidBody("linear map must be a finite n x n matrix")
    if np.linalg.cond(M) > 1e12:
        raise InvalidBody("linear map is not invertible")
    return M


def build_body(spec: BodySpec) -> ConvexBody:
    """Compile a spec. Polytopes and ellipsoids stay closed under translations and linear maps."""
    if isinstance(spec, PolytopeHSpec):
        return HPolytope(np.array(spec.A, dtype=float), np.array(spec.b, dtype=float), spec=spec)

    if isinstance(spec, PolytopeVSpec):
        return polytope_from_vertices(np.array(spec.vertices, dtype=float), spec=spec)

    if isinstance(spec, PBallSpec):
        if spec.p == 2.0:
            return EllipsoidBody(np.zeros(spec.dim), np.eye(spec.dim), spec=spec)
        return PBall(spec.p, spec.dim, spec=spec)

    if isinstance(spec, EllipsoidSpec):
        return EllipsoidBody(np.array(spec.center, dtype=float), np.array(spec.factor, dtype=float), spec=spec)

    if isinstance(spec, TranslateSpec):
        inner = build_body(spec.inner)
        offset = np.array(spec.offset, dtype=float)
        if isinstance(inner, (HPolytope, EllipsoidBody)):
            return inner.translated(offset, spec=spec)
        return TranslatedBody(inner, offset, spec=spec)

    if isinstance(spec, LinearImageSpec):
        inner = build_body(spec.inner)
        M = _check_map(np.array(spec.map, dtype=float), inner.dim)
        if isinstance(inner, (HPolytope, EllipsoidBody)):
            return inner.linear_image(M, spec=spec)
        return LinearImageBody(inner, M, spec=spec)

    if isinstance(spec, SymmetrizeSpec):
        return SymmetrizedBody(build_body(spec.inner), spec=spec)

    raise SpecParseError(f"unknown body spec: {spec!r}")


def as_body(obj: Any) -> ConvexBody:
    if isinstance(obj, ConvexBody):
        return obj
    to_body = getattr(obj, "to_body", None)
    if callable(to_body):
        return to_body()
    if isinstance(obj, dict):
        obj = parse_body_spec(obj)
    return build_body(obj)


def _rows(body: ConvexBody, x: Any) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != body.dim:
        raise SpecParseError(f"expected vectors of dimension {body.dim}, got shape {np.shape(x)}")
    return arr, single


def gauge(body: Any, xi: Any) -> np.ndarray | float:
    b = as_body(body)
    X, single = _rows(b, xi)
    b.require_origin_interior()
    out = np.zeros(X.shape[0])
    nz = np.any(X != 0.0, axis=1)
    if nz.any():
        out[nz] = b._gauge(X[nz])
    return float(out[0]) if single else out


def contains(body: Any, points: Any, margin: float = 0.0) -> np.ndarray | bool:
    b = as_body(body)
    X, single = _rows(b, points)
    inside = b.contains(X, margin)
    return bool(inside[0]) if single else inside


def boundary_hit(body: Any, base: Any, direction: Any) -> np.ndarray | float:
    b = as_body(body)
    base_arr = np.asarray(base, dtype=float)
    if base_arr.shape != (b.dim,):
        raise SpecParseError(f"base point must have dimension {b.dim}")
    D, single = _rows(b, direction)
    if np.any(np.all(D == 0.0, axis=1)):
        raise DegenerateDirection("direction must be nonzero")
    t = b.ray_exit(base_arr, D)
    return float(t[0]) if single else t


def quasireversibility_constant(body: Any, dirs: Any) -> float:
    b = as_body(body)
    pts = getattr(dirs, "points", dirs)
    g_plus = np.asarray(gauge(b, pts))
    g_minus = np.asarray(gauge(b, -np.asarray(pts)))
    ratio = np.maximum(g_minus / g_plus, g_plus / g_minus)
    return float(max(1.0, ratio.max()))


def validate_body(body: Any, dirs: Any) -> ConvexBody:
    b = as_body(body)
    if not b.origin_interior():
        raise InvalidBody(f"{b.describe()}: origin is not interior")
    if isinstance(b, HPolytope):
        b.exact_box()
    pts = getattr(dirs, "points", dirs)
    g = np.asarray(gauge(b, pts))
    if not np.all(np.isfinite(g)):
        raise InvalidBody(f"{b.describe()}: gauge is not finite on every sampled direction")
    if np.any(g <= 0.0):
        raise InvalidBody(f"{b.describe()}: body is unbounded along a sampled direction")
    return b
