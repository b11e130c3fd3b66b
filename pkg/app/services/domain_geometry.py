import logging
from typing import Annotated, Any, Callable, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.config import settings
from app.core.errors import (
    DomainNotUnitBall,
    DriftOutsideTarget,
    NotInterior,
    PathExitsDomain,
    PointOnBoundary,
    SpecParseError,
)
from app.services.body_spec import BodySpec, LinearImageSpec, PBallSpec
from app.services.convex_body import ConvexBody, EllipsoidBody, HPolytope, LinearImageBody, as_body

logger = logging.getLogger(__name__)


class IdentityDrift(BaseModel):

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["identity"] = "identity"


class NegationDrift(BaseModel):

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["negation"] = "negation"


class ConstantDrift(BaseModel):

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["constant"] = "constant"
    c: List[float]


class CounterexampleDrift(BaseModel):

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["counterexample_radial"] = "counterexample_radial"
    k_max: int = Field(default_factory=lambda: settings.counterexample_k_max, ge=0)


class RadialProfileDrift(BaseModel):

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["radial_profile"] = "radial_profile"
    radii: List[float] = Field(..., min_length=2)
    values: List[float] = Field(..., min_length=2)

    @model_validator(mode="after")
    def _check_table(self) -> "RadialProfileDrift":
        if len(self.radii) != len(self.values):
            raise ValueError("radii and values must have equal length")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if self.radii[0] < 0.0:
            raise ValueError("radii must be nonnegative")
        if any(abs(v) > 1.0 for v in self.values):
            raise ValueError("profile values must lie in [-1, 1]")
        return self


DriftSpec = Annotated[
    Union[IdentityDrift, NegationDrift, ConstantDrift, CounterexampleDrift, RadialProfileDrift],
    Field(discriminator="kind"),
]


class ZermeloFieldSpec(BaseModel):

    model_config = ConfigDict(extra="forbid", frozen=True)

    domain: BodySpec
    target: Optional[BodySpec] = Field(default=None, description="Defaults to the domain")
    drift: DriftSpec


class PolylineSpec(BaseModel):

    model_config = ConfigDict(extra="forbid", frozen=True)

    points: List[List[float]] = Field(..., min_length=2)
    order: int = Field(default_factory=lambda: settings.quadrature_order, ge=1, le=64)

    @model_validator(mode="after")
    def _check_points(self) -> "PolylineSpec":
        n = len(self.points[0])
        if any(len(p) != n for p in self.points):
            raise ValueError("polyline points must share one dimension")
        for a, b in zip(self.points, self.points[1:]):
            if a == b:
                raise ValueError("consecutive polyline points must be distinct")
        return self


def parse_field_spec(payload: object, source: str = "<input>") -> ZermeloFieldSpec:
    try:
        return ZermeloFieldSpec.model_validate(payload)
    except ValidationError as e:
        raise SpecParseError(f"{source}: invalid field spec: {e}") from e


def parse_polyline_spec(payload: object, source: str = "<input>") -> PolylineSpec:
    try:
        return PolylineSpec.model_validate(payload)
    except ValidationError as e:
        raise SpecParseError(f"{source}: invalid polyline: {e}") from e


def shell_radius(t: float | np.ndarray) -> float | np.ndarray:
    out = -np.expm1(-np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out


def smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def counterexample_profile(r: Any, k_max: Optional[int] = None) -> np.ndarray | float:
    """Radial factor: +1 on outward Funk bands, -1 on reverse bands, C2 quintic blends between.

    Radii past the last reverse band keep the value -1.
    """
    k_max = int(settings.counterexample_k_max if k_max is None else k_max)
    arr = np.asarray(r, dtype=float)
    edges = shell_radius(np.arange(4 * k_max + 4, dtype=float))
    phi = np.full(arr.shape, -1.0)
    for j in range(4 * k_max + 3):
        lo, hi = edges[j], edges[j + 1]
        mask = (arr >= lo) & (arr < hi)
        if not mask.any():
            continue
        tau = (arr[mask] - lo) / (hi - lo)
        phase = j % 4
        if phase == 0:
            phi[mask] = 1.0
        elif phase == 1:
            phi[mask] = 1.0 - 2.0 * smoothstep(tau)
        elif phase == 2:
            phi[mask] = -1.0
        else:
            phi[mask] = -1.0 + 2.0 * smoothstep(tau)
    return float(phi) if arr.ndim == 0 else phi


def counterexample_drift(x: Any, k_max: Optional[int] = None) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(v))
    if r >= 1.0:
        raise NotInterior("counterexample drift is defined on the open unit ball")
    return counterexample_profile(r, k_max) * v


def is_unit_ball(body: Any) -> bool:
    b = as_body(body)
    if not isinstance(b, EllipsoidBody):
        return False
    return bool(np.all(b.center == 0.0) and np.allclose(b.factor, np.eye(b.dim), rtol=0.0, atol=1e-12))


class ZermeloField:
    """Pointwise unit ball Omega - u(x) over a convex domain U."""

    def __init__(
        self,
        domain: ConvexBody,
        target: ConvexBody,
        drift: Callable[[np.ndarray], np.ndarray],
        kind: str,
        spec: Optional[ZermeloFieldSpec] = None,
    ) -> None:
        if domain.dim != target.dim:
            raise SpecParseError("domain and target must share one dimension")
        self.domain = domain
        self.target = target
        self.drift = drift
        self.kind = kind
        self.spec = spec

    @property
    def dim(self) -> int:
        return self.domain.dim

    @classmethod
    def from_spec(cls, spec: ZermeloFieldSpec) -> "ZermeloField":
        domain = as_body(spec.domain)
        d = spec.drift

        if isinstance(d, (IdentityDrift, NegationDrift)):
            if spec.target is not None and spec.target != spec.domain:
                raise SpecParseError("funk and reverse-funk fields need target equal to the domain")
            if isinstance(d, IdentityDrift):
                return funk_field(domain, spec=spec)
            return rfunk_field(domain, spec=spec)

        target = as_body(spec.target if spec.target is not None else spec.domain)

        if isinstance(d, ConstantDrift):
            c = np.array(d.c, dtype=float)
            if c.shape != (target.dim,):
                raise SpecParseError("constant drift must match the dimension")
            return cls(domain, target, lambda x: c, "constant", spec=spec)

        if not (is_unit_ball(domain) and is_unit_ball(target)):
            raise DomainNotUnitBall("radial drift families live on the unit ball")

        if isinstance(d, CounterexampleDrift):
            k_max = d.k_max
            return cls(domain, target, lambda x: counterexample_drift(x, k_max), "counterexample_radial", spec=spec)

        radii = np.array(d.radii, dtype=float)
        values = np.array(d.values, dtype=float)
        return cls(
            domain,
            target,
            lambda x: float(np.interp(np.linalg.norm(x), radii, values)) * x,
            "radial_profile",
            spec=spec,
        )


def funk_field(domain: Any, spec: Optional[ZermeloFieldSpec] = None) -> ZermeloField:
    b = as_body(domain)
    return ZermeloField(b, b, lambda x: x, "funk", spec=spec)


def _reflected(body: ConvexBody) -> ConvexBody:
    flip = -np.eye(body.dim)
    if body.spec is not None:
        return as_body(LinearImageSpec(inner=body.spec, map=flip.tolist()))
    if isinstance(body, (HPolytope, EllipsoidBody)):
        return body.linear_image(flip)
    return LinearImageBody(body, flip)


def rfunk_field(domain: Any, spec: Optional[ZermeloFieldSpec] = None) -> ZermeloField:
    b = as_body(domain)
    return ZermeloField(b, _reflected(b), lambda x: -x, "rfunk", spec=spec)


def reverse_field(field: ZermeloField) -> ZermeloField:
    """Zermelo field of -u over -Omega, the reverse metric F(x, -xi)."""
    drift = field.drift
    return ZermeloField(field.domain, _reflected(field.target), lambda x: -drift(x), f"reverse({field.kind})")


def counterexample_field(n: int = 2, k_max: Optional[int] = None) -> ZermeloField:
    spec = ZermeloFieldSpec(
        domain=PBallSpec(p=2.0, dim=n),
        drift=CounterexampleDrift(k_max=settings.counterexample_k_max if k_max is None else k_max),
    )
    return ZermeloField.from_spec(spec)


def require_interior(body: ConvexBody, x: np.ndarray, what: str = "point") -> None:
    if x.shape != (body.dim,):
        raise SpecParseError(f"{what} must have dimension {body.dim}")
    if not body.contains(x[None, :], 0.0)[0]:
        raise NotInterior(f"{what} {x.tolist()} lies outside the domain")
    if not body.contains(x[None, :], settings.boundary_margin)[0]:
        raise PointOnBoundary(f"{what} {x.tolist()} is within {settings.boundary_margin:g} of the boundary")


def _norms_at(target: ConvexBody, u: np.ndarray, xi: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(xi)
    out = np.zeros(X.shape[0])
    nz = np.any(X != 0.0, axis=1)
    if nz.any():
        out[nz] = 1.0 / target.ray_exit(u, X[nz])
    return out


def finsler_norm(field: ZermeloField, x: Any, xi: Any) -> np.ndarray | float:
    xv = np.asarray(x, dtype=float)
    require_interior(field.domain, xv)
    u = np.asarray(field.drift(xv), dtype=float)
    if not field.target.contains(u[None, :], settings.boundary_margin)[0]:
        raise DriftOutsideTarget(f"drift {u.tolist()} at {xv.tolist()} is not interior to the target")
    xi_arr = np.asarray(xi, dtype=float)
    out = _norms_at(field.target, u, xi_arr)
    return float(out[0]) if xi_arr.ndim == 1 else out


def funk_norm(domain: Any, x: Any, xi: Any) -> np.ndarray | float:
    b = as_body(domain)
    xv = np.asarray(x, dtype=float)
    require_interior(b, xv)
    xi_arr = np.asarray(xi, dtype=float)
    out = _norms_at(b, xv, xi_arr)
    return float(out[0]) if xi_arr.ndim == 1 else out


def rfunk_norm(domain: Any, x: Any, xi: Any) -> np.ndarray | float:
    return funk_norm(domain, x, -np.asarray(xi, dtype=float))


def hilbert_norm(domain: Any, x: Any, xi: Any) -> np.ndarray | float:
    b = as_body(domain)
    forward = funk_norm(b, x, xi)
    backward = rfunk_norm(b, x, xi)
    return 0.5 * (forward + backward)


def funk_distance(domain: Any, p: Any, q: Any) -> float:
    """log(|a-p| / |a-q|) with a the boundary point past q on the ray from p."""
    b = as_body(domain)
    pv = np.asarray(p, dtype=float)
    qv = np.asarray(q, dtype=float)
    require_interior(b, pv, "p")
    require_interior(b, qv, "q")
    d = qv - pv
    length = float(np.linalg.norm(d))
    if length == 0.0:
        return 0.0
    t = float(b.ray_exit(qv, (d / length)[None, :])[0])
    return float(np.log1p(length / t))


def rfunk_distance(domain: Any, p: Any, q: Any) -> float:
    return funk_distance(domain, q, p)


def hilbert_distance(domain: Any, p: Any, q: Any) -> float:
    b = as_body(domain)
    return 0.5 * (funk_distance(b, p, q) + funk_distance(b, q, p))


def funk_ball_radius(t: float, domain: Any) -> float:
    """Euclidean radius of the Funk ball of radius t about the origin of the unit ball."""
    if not is_unit_ball(domain):
        raise DomainNotUnitBall("Funk balls about the origin have closed form only on the unit ball")
    if t < 0.0:
        raise SpecParseError("radius parameter must be nonnegative")
    return float(-np.expm1(-t))


def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _segment_length(field: ZermeloField, a: np.ndarray, b: np.ndarray, order: int) -> float:
    nodes, weights = _gauss_legendre(order)
    step = b - a

    def integrand(s: np.ndarray) -> np.ndarray:
        return np.array([finsler_norm(field, a + si * step, step) for si in s])

    def rule(lo: float, hi: float) -> float:
        s = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        return 0.5 * (hi - lo) * float(weights @ integrand(s))

    def adapt(lo: float, hi: float, whole: float, depth: int) -> float:
        mid = 0.5 * (lo + hi)
        left = rule(lo, mid)
        right = rule(mid, hi)
        halves = left + right
        if abs(halves - whole) <= settings.quadrature_rel_tol * abs(halves) or depth >= settings.quadrature_max_depth:
            return halves
        return adapt(lo, mid, left, depth + 1) + adapt(mid, hi, right, depth + 1)

    return adapt(0.0, 1.0, rule(0.0, 1.0), 0)


def path_length(field: ZermeloField, path: Any) -> float:
    if isinstance(path, PolylineSpec):
        pts = np.array(path.points, dtype=float)
        order = path.order
    else:
        pts = np.atleast_2d(np.asarray(path, dtype=float))
        order = settings.quadrature_order
    if pts.shape[0] < 2 or pts.shape[1] != field.dim:
        raise SpecParseError(f"path needs at least two points of dimension {field.dim}")
    inside = field.domain.contains(pts, settings.boundary_margin)
    if not np.all(inside):
        bad = int(np.argmin(inside))
        raise PathExitsDomain(f"path vertex {bad} {pts[bad].tolist()} is not interior to the domain")
    if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
        raise SpecParseError("consecutive path points must be distinct")

    return float(sum(_segment_length(field, pts[i], pts[i + 1], order) for i in range(pts.shape[0] - 1)))
