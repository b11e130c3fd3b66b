import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from scipy import optimize

from app.core.config import settings
from app.core.errors import NoCommonInteriorPoint, NonConvexDetected, NotConverged, SpecParseError
from app.services.body_spec import EllipsoidSpec
from app.services.convex_body import ConvexBody, EllipsoidBody, TranslatedBody, as_body, gauge, quasireversibility_constant
from app.services.maxvol import solve_max_volume
from app.services.metric import MetricTensor
from app.services.moments import unit_ball_volume
from app.services.sampling import DirectionSet, default_directions, direction_set
from app.state.worker_pool import parallel_map

logger = logging.getLogger(__name__)

InclusionMode = Literal["exact-facet", "vertex", "radial-sample"]


@dataclass(frozen=True)
class Ellipsoid:
    center: np.ndarray
    factor: np.ndarray
    iterations: int = 0
    duality_gap: float = 0.0
    cuts: int = 0

    @property
    def dim(self) -> int:
        return int(self.center.shape[0])

    @property
    def shape_matrix(self) -> np.ndarray:
        return self.factor @ self.factor.T

    @property
    def log_det(self) -> float:
        return float(np.sum(np.log(np.diag(self.factor))))

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dim) * float(np.exp(self.log_det))

    def mean_radius(self) -> float:
        return float(np.exp(self.log_det / self.dim))

    def aspect_ratio(self) -> float:
        sv = np.linalg.svd(self.factor, compute_uv=False)
        return float(sv.max() / sv.min())

    def centered(self) -> "Ellipsoid":
        return Ellipsoid(
            center=np.zeros(self.dim),
            factor=self.factor,
            iterations=self.iterations,
            duality_gap=self.duality_gap,
            cuts=self.cuts,
        )

    def scaled(self, s: float) -> "Ellipsoid":
        return Ellipsoid(center=self.center, factor=s * self.factor, iterations=self.iterations,
                         duality_gap=self.duality_gap, cuts=self.cuts)

    def to_spec(self) -> EllipsoidSpec:
        return EllipsoidSpec(
            center=[float(v) for v in self.center],
            factor=[[float(v) for v in row] for row in np.tril(self.factor)],
        )

    def to_body(self) -> EllipsoidBody:
        return EllipsoidBody(self.center, np.tril(self.factor), spec=self.to_spec())

    def to_payload(self) -> Dict[str, Any]:
        return {
            "center": [float(v) for v in self.center],
            "factor": [[float(v) for v in row] for row in self.factor],
            "volume": float(self.volume),
            "iterations": int(self.iterations),
            "duality_gap": float(self.duality_gap),
            "cuts": int(self.cuts),
            "aspect_ratio": float(self.aspect_ratio()),
        }


@dataclass(frozen=True)
class InclusionCertificate:
    factor: float
    max_violation: float
    mode: InclusionMode
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_payload(self) -> Dict[str, Any]:
        return {
            "factor": float(self.factor),
            "mode": self.mode,
            "max_violation": float(self.max_violation),
            "pass": bool(self.passed),
        }


def _gauge_gradients(body: ConvexBody, Z: np.ndarray) -> np.ndarray:
    """Central finite differences at boundary points, step scaled by radial extent."""
    k, n = Z.shape
    h = settings.fd_rel_step * np.linalg.norm(Z, axis=1)
    G = np.empty((k, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        plus = body._gauge(Z + h[:, None] * e)
        minus = body._gauge(Z - h[:, None] * e)
        G[:, i] = (plus - minus) / (2.0 * h)
    return G


def _supporting_cuts(body: ConvexBody, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    G = _gauge_gradients(body, Z)
    norms = np.linalg.norm(G, axis=1)
    if np.any(norms <= 0.0) or not np.all(np.isfinite(G)):
        raise NonConvexDetected(f"{body.describe()}: gauge gradient vanished on the boundary")
    A = G / norms[:, None]
    return A, np.sum(A * Z, axis=1)


def _max_cut_excess(A: np.ndarray, b: np.ndarray, points: np.ndarray, chunk: int = 512) -> float:
    worst = -np.inf
    for lo in range(0, A.shape[0], chunk):
        ex = points @ A[lo : lo + chunk].T - b[lo : lo + chunk]
        worst = max(worst, float(ex.max()))
    return worst


def _check_cuts(body: ConvexBody, A: np.ndarray, b: np.ndarray, points: np.ndarray, center: Optional[np.ndarray], tol: float) -> None:
    scale = float(np.linalg.norm(points, axis=1).max())
    limit = max(tol, settings.cutting_plane_tol) * scale
    if center is not None:
        excess = float((A @ center - b).max())
        if excess > limit:
            raise NonConvexDetected(f"{body.describe()}: supporting cut excludes the current John point by {excess:.3g}")
    excess = _max_cut_excess(A, b, points)
    if excess > limit:
        raise NonConvexDetected(f"{body.describe()}: supporting cut excludes a boundary point by {excess:.3g}")


def _polish(body: ConvexBody, center: np.ndarray, L: np.ndarray, w0: np.ndarray) -> Tuple[float, np.ndarray]:
    def neg(w: np.ndarray) -> float:
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        return -float(body._gauge((center + L @ (w / nw))[None, :])[0])

    res = optimize.minimize(
        neg,
        w0,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * len(w0)},
    )
    w = res.x / np.linalg.norm(res.x)
    if -res.fun < -neg(w0):
        w = w0 / np.linalg.norm(w0)
    z = center + L @ w
    return float(body._gauge(z[None, :])[0]), z


def _violations(body: ConvexBody, E: Ellipsoid, round_index: int) -> Tuple[float, np.ndarray, np.ndarray]:
    """Worst gauge on the ellipsoid boundary plus violating boundary points of the ellipsoid."""
    n = E.dim
    dirs = direction_set(settings.violation_samples, round_index + 1, n).points
    X = E.center + dirs @ E.factor.T
    vals = body._gauge(X)

    order = np.argsort(-vals, kind="stable")
    starts: List[int] = []
    for idx in order:
        if all(float(dirs[idx] @ dirs[j]) < 0.999 for j in starts):
            starts.append(int(idx))
        if len(starts) >= settings.multistart_per_dim * n:
            break

    polished = parallel_map(lambda i: (*_polish(body, E.center, E.factor, dirs[i]), i), starts)
    polished.sort(key=lambda item: (-item[0], item[2]))

    peak_vals = np.array([p[0] for p in polished])
    peak_pts = np.array([p[1] for p in polished])
    worst = float(max(vals.max(), peak_vals.max()))

    bad = vals > 1.0
    cand_vals = np.concatenate([peak_vals, vals[bad]])
    cand_pts = np.vstack([peak_pts, X[bad]])
    return worst, cand_vals, cand_pts


def _select_cuts(cand_vals: np.ndarray, cand_pts: np.ndarray, center: np.ndarray, tol: float) -> np.ndarray:
    keep = cand_vals > 1.0 + tol
    vals = cand_vals[keep]
    pts = cand_pts[keep]
    order = np.argsort(-vals, kind="stable")
    units = pts - center
    units = units / np.linalg.norm(units, axis=1)[:, None]
    chosen: List[int] = []
    for idx in order:
        if not chosen or float((units[chosen] @ units[idx]).max()) < 1.0 - 1e-9:
            chosen.append(int(idx))
        if len(chosen) >= settings.max_new_cuts:
            break
    return pts[chosen] / vals[chosen, None]


def _cutting_plane(body: ConvexBody, tol: float) -> Ellipsoid:
    body.require_origin_interior()
    n = body.dim
    seeds = np.vstack([np.eye(n), -np.eye(n), direction_set(settings.cut_seed_directions, 0, n).points])
    Z = seeds / body._gauge(seeds)[:, None]
    A, b = _supporting_cuts(body, Z)
    _check_cuts(body, A, b, Z, None, tol)

    boundary = Z
    warm = None
    newton = 0
    for rnd in range(settings.max_cuts):
        sol = solve_max_volume(A, b, tol=settings.polytope_tol, warm_start=warm)
        newton += sol.newton_steps
        E = Ellipsoid(center=sol.center, factor=sol.factor(), iterations=newton, duality_gap=sol.duality_gap, cuts=rnd)
        worst, cand_vals, cand_pts = _violations(body, E, rnd)
        logger.debug("cutting-plane round %d: facets=%d worst gauge=%.12g", rnd, A.shape[0], worst)
        if worst <= 1.0 + tol:
            g_center = float(body._gauge(E.center[None, :])[0])
            scale = 1.0 if worst <= 1.0 else (1.0 - g_center) / (worst - g_center)
            return E.scaled(scale)

        Znew = _select_cuts(cand_vals, cand_pts, E.center, tol)
        An, bn = _supporting_cuts(body, Znew)
        _check_cuts(body, An, bn, np.vstack([boundary, Znew]), E.center, tol)
        A = np.vstack([A, An])
        b = np.concatenate([b, bn])
        boundary = np.vstack([boundary, Znew])
        warm = (sol.center, sol.shape)

    raise NotConverged(f"{body.describe()}: no inscribed ellipsoid within tol after {settings.max_cuts} cutting rounds")


def max_inscribed_ellipsoid(body: Any, tol: Optional[float] = None) -> Ellipsoid:
    b = as_body(body)
    if tol is not None and tol < 1e-10:
        raise SpecParseError("tol must be >= 1e-10")

    if isinstance(b, EllipsoidBody):
        E = Ellipsoid(center=b.center.copy(), factor=b.factor.copy())
    elif b.is_polytope:
        b.exact_box()
        A, bb = b.halfspaces()
        sol = solve_max_volume(A, bb, tol=settings.polytope_tol if tol is None else tol)
        E = Ellipsoid(center=sol.center, factor=sol.factor(), iterations=sol.newton_steps, duality_gap=sol.duality_gap)
    else:
        if not b.convex:
            logger.warning("%s is flagged non-convex; expecting the cutting-plane check to reject it", b.describe())
        E = _cutting_plane(b, settings.cutting_plane_tol if tol is None else tol)

    ar = E.aspect_ratio()
    if ar > settings.aspect_ratio_flag:
        logger.warning("%s: John ellipsoid aspect ratio %.3g exceeds %.3g", b.describe(), ar, settings.aspect_ratio_flag)
    return E


def centered_john(body: Any, tol: Optional[float] = None) -> Tuple[Ellipsoid, np.ndarray]:
    E = max_inscribed_ellipsoid(body, tol)
    return E.centered(), E.center.copy()


def john_metric(body: Any, tol: Optional[float] = None) -> MetricTensor:
    J0, _ = centered_john(body, tol)
    Linv = np.linalg.inv(J0.factor)
    g = Linv.T @ Linv
    w = np.linalg.eigvalsh(g)
    return MetricTensor(matrix=0.5 * (g + g.T), provenance="exact", condition_number=float(w.max() / w.min()))


def _as_inclusion_side(obj: Any) -> ConvexBody:
    if isinstance(obj, Ellipsoid):
        return obj.to_body()
    return as_body(obj)


def check_inclusion(
    inner: Any,
    outer: Any,
    factor: float,
    dirs: Optional[DirectionSet] = None,
    tol: Optional[float] = None,
) -> InclusionCertificate:
    """Certify inner ⊆ factor·outer, the scaling taken about the origin.

    The violation is the supremum over the inner body of the scaled outer
    gauge, minus one.
    """
    s = float(factor)
    tol = float(settings.inclusion_tol if tol is None else tol)
    inn = _as_inclusion_side(inner)
    out = _as_inclusion_side(outer)
    if inn.dim != out.dim:
        raise SpecParseError("inclusion sides must share one dimension")

    if isinstance(inn, EllipsoidBody) and out.is_polytope:
        A, b = out.halfspaces()
        if np.any(b <= 0.0):
            raise NoCommonInteriorPoint("origin is not interior to the outer polytope")
        reach = A @ inn.center + np.linalg.norm(A @ inn.factor, axis=1)
        return InclusionCertificate(factor=s, max_violation=float((reach / (s * b)).max() - 1.0), mode="exact-facet", tolerance=tol)

    verts = inn.vertices() if inn.is_polytope and inn.dim <= 3 else None
    if verts is not None:
        if not out.origin_interior():
            raise NoCommonInteriorPoint("origin is not interior to the outer body")
        g = np.asarray(gauge(out, verts))
        return InclusionCertificate(factor=s, max_violation=float(g.max() / s - 1.0), mode="vertex", tolerance=tol)

    if not (inn.origin_interior() and out.origin_interior()):
        raise NoCommonInteriorPoint("bodies are not both star-shaped about the origin")
    pts = (dirs or default_directions(inn.dim)).points
    ratio = np.asarray(gauge(out, pts)) / (s * np.asarray(gauge(inn, pts)))
    return InclusionCertificate(factor=s, max_violation=float(ratio.max() - 1.0), mode="radial-sample", tolerance=tol)


def appendix_radius(p: float, n: int) -> float:
    if p < 1.0 or n < 2:
        raise SpecParseError("appendix radius needs p >= 1 and n >= 2")
    return float(min(1.0, n ** (0.5 - 1.0 / p)))


def john_report(body: Any, tol: Optional[float] = None, dirs: Optional[DirectionSet] = None) -> Dict[str, Any]:
    """John ellipsoid, John point, metric and the inclusion certificates that apply to the body."""
    b = as_body(body)
    n = b.dim
    d = dirs or default_directions(n)
    E = max_inscribed_ellipsoid(b, tol)
    J0 = E.centered()
    # the John point is interior, so both inclusions about it are always defined
    shifted = b.translated(-E.center) if hasattr(b, "translated") else TranslatedBody(b, -E.center)
    certs: Dict[str, Any] = {
        "inside": check_inclusion(J0, shifted, 1.0, d).to_payload(),
        "n_centered": check_inclusion(shifted, J0, float(n), d).to_payload(),
    }
    if b.origin_interior() and quasireversibility_constant(b, d) <= 1.0 + settings.exact_tol:
        certs["sqrt_n"] = check_inclusion(b, E, float(np.sqrt(n)), d).to_payload()
    if b.origin_interior():
        certs["2n"] = check_inclusion(b, J0, 2.0 * n, d).to_payload()
        certs["improved"] = check_inclusion(b, J0, float(np.sqrt(2.0 * n * (n + 1.0))), d).to_payload()
    Linv = np.linalg.inv(J0.factor)
    return {
        "ellipsoid": E.to_payload(),
        "john_point": [float(v) for v in E.center],
        "radius": E.mean_radius(),
        "metric": [[float(v) for v in row] for row in Linv.T @ Linv],
        "certificates": certs,
    }
