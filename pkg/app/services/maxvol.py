"""Largest inscribed ellipsoid of an H-polytope by a log-barrier Newton method.

The ellipsoid is written {d + B u : |u| <= 1} with B symmetric positive
definite; containment in {a_i^T x <= b_i} is |B a_i| + a_i^T d <= b_i.
B is parameterized over the symmetric basis E_k so that B a_i = M_i beta.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from app.core.config import settings
from app.core.errors import InvalidBody, NotConverged
from app.services.convex_body import chebyshev_center

logger = logging.getLogger(__name__)

_BARRIER_GROWTH = 10.0
_NEWTON_EPS = 1e-10
_ARMIJO = 0.01
_MIN_STEP = 1e-14


@dataclass(frozen=True)
class MaxVolumeSolution:
    center: np.ndarray
    shape: np.ndarray
    log_det: float
    duality_gap: float
    newton_steps: int
    barrier_stages: int

    def factor(self) -> np.ndarray:
        return np.linalg.cholesky(self.shape @ self.shape)


def symmetric_basis(n: int) -> np.ndarray:
    mats = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            e[i, j] = 1.0
            e[j, i] = 1.0
            mats.append(e)
    return np.array(mats)


class _Barrier:

    def __init__(self, A: np.ndarray, b: np.ndarray) -> None:
        norms = np.linalg.norm(A, axis=1)
        self.A = A / norms[:, None]
        self.b = b / norms
        self.m, self.n = self.A.shape
        self.basis = symmetric_basis(self.n)
        self.K = self.basis.shape[0]
        self.Mt = np.einsum("kij,mj->mik", self.basis, self.A)
        self.MtM = np.einsum("mik,mil->mkl", self.Mt, self.Mt)

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.einsum("k,kij->ij", x[: self.K], self.basis), x[self.K :]

    def pack(self, B: np.ndarray, d: np.ndarray) -> np.ndarray:
        iu = np.triu_indices(self.n)
        return np.concatenate([B[iu], d])

    def slacks(self, B: np.ndarray, d: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        V = self.A @ B
        r = np.linalg.norm(V, axis=1)
        return self.b - self.A @ d - r, V, r

    def feasible(self, x: np.ndarray) -> bool:
        B, d = self.split(x)
        try:
            np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            return False
        s, _, _ = self.slacks(B, d)
        return bool(np.all(s > 0.0))

    def log_det(self, x: np.ndarray) -> float:
        B, _ = self.split(x)
        return float(np.linalg.slogdet(B)[1])

    def derivatives(self, x: np.ndarray, t: float) -> Tuple[np.ndarray, np.ndarray]:
        B, d = self.split(x)
        s, V, r = self.slacks(B, d)
        vhat = V / r[:, None]
        Jr = np.einsum("mi,mik->mk", vhat, self.Mt)
        G = np.hstack([Jr, self.A])
        Gs = G / s[:, None]

        grad = Gs.sum(axis=0)
        hess = Gs.T @ Gs
        w = 1.0 / (r * s)
        K = self.K
        hess[:K, :K] += np.einsum("m,mkl->kl", w, self.MtM) - (Jr * w[:, None]).T @ Jr

        Binv = np.linalg.inv(B)
        Y = np.einsum("ij,kjl->kil", Binv, self.basis)
        grad[:K] -= t * np.einsum("kii->k", Y)
        hess[:K, :K] += t * np.einsum("kij,lji->kl", Y, Y)
        return grad, hess

    def delta(self, x: np.ndarray, dx: np.ndarray, alpha: float, t: float) -> float:
        """F(x + alpha dx) - F(x) computed from differences, inf when infeasible."""
        B, d = self.split(x)
        dB, dd = self.split(dx)
        Bn = B + alpha * dB
        try:
            np.linalg.cholesky(Bn)
        except np.linalg.LinAlgError:
            return np.inf

        s, V, r = self.slacks(B, d)
        dV = self.A @ dB
        Vn = V + alpha * dV
        rn = np.linalg.norm(Vn, axis=1)
        dr = (2.0 * alpha * np.sum(V * dV, axis=1) + alpha * alpha * np.sum(dV * dV, axis=1)) / (rn + r)
        ds = -alpha * (self.A @ dd) - dr
        if np.any(s + ds <= 0.0):
            return np.inf

        sign, dlog = np.linalg.slogdet(np.eye(self.n) + alpha * np.linalg.solve(B, dB))
        if sign <= 0:
            return np.inf
        return float(-t * dlog - np.sum(np.log1p(ds / s)))


def _initial_point(bar: _Barrier, warm_start: Optional[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    if warm_start is not None:
        d0, B0 = warm_start
        B0 = 0.5 * (B0 + B0.T)
        if np.all(bar.A @ d0 < bar.b):
            scale = 0.95
            for _ in range(60):
                x = bar.pack(scale * B0, d0)
                if bar.feasible(x):
                    return x
                scale *= 0.5
    center, radius = chebyshev_center(bar.A, bar.b)
    return bar.pack(0.5 * radius * np.eye(bar.n), center)


def _center(bar: _Barrier, x: np.ndarray, t: float, max_iter: int) -> Tuple[np.ndarray, int, float]:
    """Newton centering of -log det B - (1/t) sum log s; the decrement is relative to that scale."""
    decrement = np.inf
    for it in range(max_iter):
        g, H = bar.derivatives(x, t)
        g /= t
        H /= t
        try:
            dx = -linalg.cho_solve(linalg.cho_factor(H), g)
        except linalg.LinAlgError:
            dx = -np.linalg.lstsq(H, g, rcond=None)[0]
        slope = float(g @ dx)
        decrement = -slope / 2.0
        if decrement <= _NEWTON_EPS:
            return x, it, decrement
        alpha = 1.0
        while alpha >= _MIN_STEP:
            if bar.delta(x, dx, alpha, t) / t <= _ARMIJO * alpha * slope:
                break
            alpha *= 0.5
        else:
            # no representable decrease left at this barrier weight
            return x, it, decrement
        x = x + alpha * dx
    raise NotConverged(f"centering exceeded {max_iter} Newton steps at t={t:.3g}")


def solve_max_volume(
    A: np.ndarray,
    b: np.ndarray,
    tol: Optional[float] = None,
    warm_start: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    max_newton: Optional[int] = None,
) -> MaxVolumeSolution:
    """Maximize log det B subject to |B a_i| + a_i^T d <= b_i, stopping at gap m/t + 2 decrement <= tol*max(1, |log det B|)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    tol = float(settings.polytope_tol if tol is None else tol)
    max_newton = int(settings.newton_max_iter if max_newton is None else max_newton)
    if A.ndim != 2 or A.shape[0] <= A.shape[1]:
        raise InvalidBody("need at least n+1 facets for a bounded polytope")

    bar = _Barrier(A, b)
    x = _initial_point(bar, warm_start)

    t = 1.0
    steps = 0
    stages = 0
    while True:
        x, k, decrement = _center(bar, x, t, max_newton)
        steps += k
        stages += 1
        log_det = bar.log_det(x)
        gap = bar.m / t + 2.0 * max(decrement, 0.0)
        logger.debug("barrier stage %d: t=%.3g log_det=%.12g gap=%.3g newton=%d", stages, t, log_det, gap, k)
        if gap <= tol * max(1.0, abs(log_det)):
            break
        if stages > 200:
            raise NotConverged("barrier path did not reach the requested duality gap")
        t *= _BARRIER_GROWTH

    B, d = bar.split(x)
    return MaxVolumeSolution(
        center=d.copy(),
        shape=0.5 * (B + B.T),
        log_det=log_det,
        duality_gap=gap,
        newton_steps=steps,
        barrier_stages=stages,
    )
