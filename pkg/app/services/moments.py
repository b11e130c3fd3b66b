"""Closed-form volumes and moments used by the exact integration paths."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import spatial, special


@dataclass(frozen=True)
class BodyMoments:
    """Volume, barycenter and second moment about the origin (normalized by volume)."""

    volume: float
    mean: np.ndarray
    second: np.ndarray

    def centered(self) -> np.ndarray:
        return self.second - np.outer(self.mean, self.mean)


def unit_ball_volume(n: int) -> float:
    return float(np.exp(0.5 * n * np.log(np.pi) - special.gammaln(0.5 * n + 1.0)))


def simplex_integrals(simplex: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Volume, first and second raw integrals over one simplex given as (n+1, n) vertices."""
    v = np.asarray(simplex, dtype=float)
    n = v.shape[1]
    vol = abs(float(np.linalg.det(v[1:] - v[0]))) / math.factorial(n)
    s = v.sum(axis=0)
    first = vol * s / (n + 1)
    second = vol / ((n + 1) * (n + 2)) * (v.T @ v + np.outer(s, s))
    return vol, first, second


def polytope_moments(vertices: np.ndarray) -> BodyMoments:
    pts = np.asarray(vertices, dtype=float)
    n = pts.shape[1]
    hull = spatial.ConvexHull(pts)
    apex = pts[hull.vertices].mean(axis=0)

    vol = 0.0
    first = np.zeros(n)
    second = np.zeros((n, n))
    for facet in hull.simplices:
        simplex = np.vstack([pts[facet], apex])
        dv, d1, d2 = simplex_integrals(simplex)
        vol += dv
        first += d1
        second += d2

    if vol <= 0.0:
        raise ValueError("polytope has zero volume")
    second = second / vol
    return BodyMoments(volume=vol, mean=first / vol, second=0.5 * (second + second.T))


def ellipsoid_moments(center: np.ndarray, factor: np.ndarray) -> BodyMoments:
    c = np.asarray(center, dtype=float)
    L = np.asarray(factor, dtype=float)
    n = c.shape[0]
    vol = unit_ball_volume(n) * float(np.prod(np.diag(L)))
    second = np.outer(c, c) + (L @ L.T) / (n + 2)
    return BodyMoments(volume=vol, mean=c.copy(), second=0.5 * (second + second.T))


def pball_volume(p: float, n: int) -> float:
    return float(np.exp(n * (np.log(2.0) + special.gammaln(1.0 + 1.0 / p)) - special.gammaln(1.0 + n / p)))


def pball_moments(p: float, n: int) -> BodyMoments:
    # E[x_1^2] through the Dirichlet integral of |x_i|^p
    log_e = (
        special.gammaln(3.0 / p)
        + special.gammaln(1.0 + n / p)
        - special.gammaln(1.0 / p)
        - special.gammaln(1.0 + (n + 2.0) / p)
    )
    return BodyMoments(
        volume=pball_volume(p, n),
        mean=np.zeros(n),
        second=float(np.exp(log_e)) * np.eye(n),
    )


def translate_moments(m: BodyMoments, offset: np.ndarray) -> BodyMoments:
    o = np.asarray(offset, dtype=float)
    second = m.second + np.outer(o, m.mean) + np.outer(m.mean, o) + np.outer(o, o)
    return BodyMoments(volume=m.volume, mean=m.mean + o, second=0.5 * (second + second.T))


def linear_moments(m: BodyMoments, linear_map: np.ndarray) -> BodyMoments:
    A = np.asarray(linear_map, dtype=float)
    second = A @ m.second @ A.T
    return BodyMoments(
        volume=m.volume * abs(float(np.linalg.det(A))),
        mean=A @ m.mean,
        second=0.5 * (second + second.T),
    )
