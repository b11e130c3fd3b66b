import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from app.core.config import settings
from app.core.errors import DriftOutsideTarget, MethodUnsupported, SampleBudgetTooSmall, SingularDual, SpecParseError
from app.services.convex_body import ConvexBody, EllipsoidBody, as_body, quasireversibility_constant
from app.services.john import john_metric
from app.services.metric import MetricTensor, symmetrize
from app.services.moments import unit_ball_volume
from app.services.sampling import DirectionSet, bounding_box, default_directions, rejection_sample, volume

logger = logging.getLogger(__name__)

GAMMA_NOTE = "moment metric constant gamma resolved to n+2; the alternative n-2 reading does not give g_BL(ball) = I"


@dataclass(frozen=True)
class SecondMoment:
    matrix: np.ndarray
    volume: float
    mean: np.ndarray
    method: str
    stderr: Optional[np.ndarray] = None
    samples: Optional[int] = None
    seed: Optional[int] = None

    def centered(self) -> np.ndarray:
        return self.matrix - np.outer(self.mean, self.mean)


def second_moment(
    body: Any,
    method: str = "auto",
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> SecondMoment:
    """Normalized second moment about the origin, (1/vol) * integral of eta eta^T."""
    b = as_body(body)
    if method == "auto":
        method = "exact" if b.exact_moments() is not None else "montecarlo"

    if method == "exact":
        m = b.exact_moments()
        if m is None:
            raise MethodUnsupported(f"{b.describe()}: no exact moments in n={b.dim}")
        return SecondMoment(matrix=m.second, volume=m.volume, mean=m.mean, method="exact")

    if method != "montecarlo":
        raise MethodUnsupported(f"unknown moment method {method!r}")

    samples = int(settings.samples if samples is None else samples)
    seed = int(settings.seed if seed is None else seed)
    if samples < settings.min_mc_samples:
        raise SampleBudgetTooSmall(f"samples must be >= {settings.min_mc_samples}, got {samples}")

    X, accepted, trials = rejection_sample(b, samples, seed)
    N = X.shape[0]
    M = (X.T @ X) / N
    sq = X * X
    var = np.maximum((sq.T @ sq) / N - M * M, 0.0) * (N / (N - 1.0))
    lo, hi = bounding_box(b)
    return SecondMoment(
        matrix=symmetrize(M),
        volume=float(np.prod(hi - lo)) * accepted / trials,
        mean=X.mean(axis=0),
        method="montecarlo",
        stderr=np.sqrt(var / N),
        samples=samples,
        seed=seed,
    )


def _from_moment(mom: SecondMoment, n: int) -> MetricTensor:
    dual = (n + 2.0) * mom.matrix
    w = np.linalg.eigvalsh(dual)
    return MetricTensor(
        matrix=symmetrize(dual),
        provenance="exact" if mom.method == "exact" else "montecarlo",
        stderr=None if mom.stderr is None else (n + 2.0) * mom.stderr,
        samples=mom.samples,
        seed=mom.seed,
        condition_number=float(w.max() / w.min()) if w.min() > 0 else float("inf"),
        dual=True,
    )


def bl_dual_metric(
    body: Any,
    method: str = "auto",
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> MetricTensor:
    b = as_body(body)
    return _from_moment(second_moment(b, method, samples, seed), b.dim)


def invert_dual(dual: MetricTensor) -> MetricTensor:
    w, V = np.linalg.eigh(dual.matrix)
    if w.min() < settings.singular_rel_tol * w.max():
        raise SingularDual(f"dual metric is degenerate: eigenvalues {w.min():.3g} .. {w.max():.3g}")
    g = symmetrize((V / w) @ V.T)

    stderr = None
    if dual.stderr is not None:
        # first-order propagation of d(g*^-1) = -g dg* g with independent entries
        g2 = g * g
        stderr = np.sqrt(g2 @ (dual.stderr**2) @ g2)

    return MetricTensor(
        matrix=g,
        provenance=dual.provenance,
        stderr=stderr,
        samples=dual.samples,
        seed=dual.seed,
        condition_number=float(w.max() / w.min()),
        dual=False,
    )


def bl_metric(
    body: Any,
    method: str = "auto",
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> MetricTensor:
    return invert_dual(bl_dual_metric(body, method, samples, seed))


def moment_metric(points: np.ndarray, weights: Optional[np.ndarray], u: np.ndarray, gamma: Optional[float] = None) -> MetricTensor:
    """Metric of a discrete probability measure: dual gamma * E[(zeta - u)(zeta - u)^T]."""
    Z = np.atleast_2d(np.asarray(points, dtype=float))
    n = Z.shape[1]
    w = np.ones(Z.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (Z.shape[0],) or np.any(w < 0.0) or w.sum() <= 0.0:
        raise SpecParseError("weights must be nonnegative with positive total, one per point")
    gamma = float(n + 2 if gamma is None else gamma)
    D = Z - np.asarray(u, dtype=float)
    dual = gamma * (D.T * (w / w.sum())) @ D
    return invert_dual(MetricTensor(matrix=symmetrize(dual), provenance="exact", dual=True))


def inverse_sqrt(C: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(symmetrize(C))
    if w.min() < settings.sqrt_clamp_rel * w.max():
        raise SingularDual(f"covariance is degenerate: eigenvalues {w.min():.3g} .. {w.max():.3g}")
    return symmetrize((V / np.sqrt(w)) @ V.T)


def pull_to_normalized(g: np.ndarray, T: np.ndarray) -> np.ndarray:
    Tinv = np.linalg.inv(T)
    return symmetrize(Tinv @ g @ Tinv)


def pull_back(g_prime: np.ndarray, T: np.ndarray) -> np.ndarray:
    return symmetrize(T.T @ g_prime @ T)


@dataclass(frozen=True)
class ZermeloBL:
    """Closed-form BL metric of a Zermelo unit ball Omega - u in normalized coordinates x' = T(x - beta)."""

    metric: np.ndarray
    T: np.ndarray
    beta: np.ndarray
    u_prime: np.ndarray
    gamma: float
    provenance: str = "exact"
    notes: Dict[str, Any] = field(default_factory=dict)

    def pulled_back(self) -> np.ndarray:
        return pull_back(self.metric, self.T)

    def to_payload(self) -> Dict[str, Any]:
        return {
            "metric": [[float(v) for v in row] for row in self.metric],
            "T": [[float(v) for v in row] for row in self.T],
            "beta": [float(v) for v in self.beta],
            "u_prime": [float(v) for v in self.u_prime],
            "gamma": float(self.gamma),
            "metric_original_coordinates": [[float(v) for v in row] for row in self.pulled_back()],
            "provenance": self.provenance,
            "notes": dict(self.notes),
        }


def normalization(omega: Any, method: str = "auto", samples: Optional[int] = None, seed: Optional[int] = None):
    b = as_body(omega)
    mom = second_moment(b, method, samples, seed)
    n = b.dim
    T = inverse_sqrt((n + 2.0) * mom.centered())
    return T, mom.mean.copy(), mom


def zermelo_bl_closed_form(
    omega: Any,
    u_value: Any,
    method: str = "auto",
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> ZermeloBL:
    b = as_body(omega)
    u = np.asarray(u_value, dtype=float)
    if u.shape != (b.dim,):
        raise SpecParseError(f"drift value must have dimension {b.dim}")
    if not b.contains(u[None, :], margin=settings.boundary_margin)[0]:
        raise DriftOutsideTarget("drift value is not interior to the target body")

    n = b.dim
    gamma = n + 2.0
    T, beta, mom = normalization(b, method, samples, seed)
    up = T @ (u - beta)
    g_prime = np.eye(n) - gamma * np.outer(up, up) / (1.0 + gamma * float(up @ up))
    return ZermeloBL(
        metric=symmetrize(g_prime),
        T=T,
        beta=beta,
        u_prime=up,
        gamma=gamma,
        provenance=mom.method,
        notes={"gamma": GAMMA_NOTE},
    )


@dataclass(frozen=True)
class DensityReport:
    busemann_density: float
    john_density: float
    bl_density: float
    symmetric: bool
    is_ellipsoid: bool
    n: int
    volume_stderr: float = 0.0

    @property
    def john_ratio(self) -> float:
        return self.john_density / self.busemann_density

    @property
    def bl_ratio(self) -> float:
        return self.bl_density / self.busemann_density

    @property
    def john_upper_bound(self) -> float:
        return float(self.n ** (self.n / 2.0)) if self.symmetric else float(self.n**self.n)

    def flags(self, slack: Optional[float] = None) -> Dict[str, bool]:
        s = float(settings.bound_slack if slack is None else slack)
        return {
            "john_lower": self.john_ratio >= 1.0 - s,
            "john_upper": self.john_ratio <= self.john_upper_bound + s,
            "bl_le_busemann": self.bl_ratio <= 1.0 + s,
            "ellipsoid_equality": (not self.is_ellipsoid) or abs(self.bl_ratio - 1.0) <= settings.exact_tol,
        }

    def to_payload(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "busemann_density": float(self.busemann_density),
            "john_density": float(self.john_density),
            "bl_density": float(self.bl_density),
            "john_ratio": float(self.john_ratio),
            "bl_ratio": float(self.bl_ratio),
            "symmetric": bool(self.symmetric),
            "is_ellipsoid": bool(self.is_ellipsoid),
            "flags": self.flags(),
        }


def is_symmetric(body: Any, dirs: Optional[DirectionSet] = None) -> bool:
    b = as_body(body)
    if not b.origin_interior():
        return False
    d = dirs or default_directions(b.dim)
    return quasireversibility_constant(b, d) <= 1.0 + settings.exact_tol


def busemann_densities(
    body: Any,
    method: str = "auto",
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    dirs: Optional[DirectionSet] = None,
) -> DensityReport:
    b: ConvexBody = as_body(body)
    n = b.dim
    mom = second_moment(b, method, samples, seed)
    vol = mom.volume
    vol_stderr = 0.0
    if mom.method != "exact":
        est = volume(b, "montecarlo", samples, seed)
        vol = est.volume
        vol_stderr = est.stderr / est.volume
    g_bl = invert_dual(_from_moment(mom, n))
    g_john = john_metric(b)
    return DensityReport(
        busemann_density=unit_ball_volume(n) / vol,
        john_density=g_john.sqrt_det(),
        bl_density=g_bl.sqrt_det(),
        symmetric=is_symmetric(b, dirs),
        is_ellipsoid=isinstance(b, EllipsoidBody) and bool(np.all(np.abs(b.center) <= settings.exact_tol)),
        n=n,
        volume_stderr=vol_stderr,
    )
