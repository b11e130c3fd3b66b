"""Bounds harness.

Every suite returns a ``SuiteResult`` whose rows carry the measured value,
the closed-form bound it is compared with, and a tag naming where that
bound comes from. Bodies are processed in parallel and merged by corpus
index, so the rows do not depend on the worker count.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg, optimize

from app.core.config import settings
from app.core.errors import SpecParseError
from app.services.binet_legendre import (
    GAMMA_NOTE,
    bl_metric,
    busemann_densities,
    normalization,
    pull_to_normalized,
    zermelo_bl_closed_form,
)
from app.services.body_spec import SymmetrizeSpec, TranslateSpec
from app.services.convex_body import (
    ConvexBody,
    EllipsoidBody,
    SymmetrizedBody,
    TranslatedBody,
    as_body,
    gauge,
    quasireversibility_constant,
)
from app.services.corpus import (
    CorpusBody,
    ball,
    bl_corpus,
    cube,
    density_corpus,
    john_corpus,
    pball,
    random_polytope,
)
from app.services.domain_geometry import counterexample_drift, counterexample_field, path_length, shell_radius
from app.services.john import appendix_radius, check_inclusion, max_inscribed_ellipsoid
from app.services.metric import MetricTensor
from app.services.sampling import DirectionSet, default_directions, sample_uniform
from app.state.worker_pool import parallel_map

logger = logging.getLogger(__name__)

_STDERR_SIGMAS = 4.0
_CLOSED_FORM_TOL = 1e-8
_RADIUS_TOL = 1e-3
_SLOPE_TOL = 0.02
_SHELL_TOL = 0.05

PBALL_RADIUS_EXPONENTS = (1.0, 1.2, 1.5, 2.0, 3.0, 6.0)
NONSMOOTH_P_GRID = (1.96, 1.98, 2.0, 2.02, 2.04)
KINK_NOTE = (
    "the radius kink sits on the p=2 locus; with p = 1 + exp(x1) that is x1 = 0, "
    "not x1 = log 2"
)

# check label -> tag of the inequality that supplies the bound
BOUND_SOURCES: Dict[str, str] = {
    "john-inclusion": "johnequality1",
    "john-symmetric-center": "th.john",
    "john-inclusion-sym": "johnequality1",
    "john-inclusion-general": "johnequality2",
    "john-inclusion-2n": "johnequality3",
    "john-inclusion-improved": "johnequality3improved",
    "john-fixed-point": "th.john",
    "john-metric-lower": "ineq.john1",
    "john-metric-lower-improved": "ineq.john1+",
    "john-metric-sym": "ineq.john",
    "bl-ratio-c1-basic": "eq.pfst2a",
    "bl-ratio-c1-improved": "eq.pfst2abis",
    "bl-ratio-symmetric": "eq.pfst5",
    "bl-ratio-quasireversible": "eq:mainAB",
    "bl-fixed-point": "eq.defgF3",
    "symmetrize-gauge": "eq.pfst6",
    "symmetrize-bl-norm": "eq.pfst6",
    "symmetrize-bl-sandwich": "th.BLproperties1",
    "density-john-busemann": "ineq.mm",
    "density-john-busemann-general": "johnequality2",
    "density-john-busemann-sym": "johnequality1",
    "density-bl-busemann": "eq.compvol",
    "density-bl-equality": "eq.compvol",
    "density-bl-comparability": "eq.compvol",
    "pball-john-radius": "rp",
    "pball-radius-kink": "rp",
    "zermelo-bl-closed-form": "moment.metric",
    "funk-normalized-universality": "moment.Funkmetric",
    "counterexample-shell-cost": "sec.counterexample",
    "counterexample-bl-bounded": "sec.counterexample",
}


@dataclass(frozen=True)
class CheckRow:
    suite: str
    check_id: str
    body_id: str
    n: int
    measured: float
    bound: float
    bound_source: str
    passed: bool

    def to_payload(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "check_id": self.check_id,
            "body_id": self.body_id,
            "n": int(self.n),
            "measured": float(self.measured),
            "bound": float(self.bound),
            "bound_source": self.bound_source,
            "pass": bool(self.passed),
        }


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    n: int
    seed: int
    rows: List[CheckRow]
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> List[CheckRow]:
        return [r for r in self.rows if not r.passed]

    def to_payload(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "n": int(self.n),
            "seed": int(self.seed),
            "pass": self.passed,
            "rows": [r.to_payload() for r in self.rows],
            "tables": self.tables,
            "notes": list(self.notes),
        }


def _le(measured: float, bound: float, rel: float = 0.0) -> bool:
    return measured <= bound * (1.0 + rel) + settings.bound_slack


def _ge(measured: float, bound: float, rel: float = 0.0) -> bool:
    return measured >= bound * (1.0 - rel) - settings.bound_slack


def _row(suite: str, check_id: str, body_id: str, n: int, measured: float, bound: float, source: str, passed: bool) -> CheckRow:
    return CheckRow(suite, check_id, body_id, int(n), float(measured), float(bound), BOUND_SOURCES[source], bool(passed))


def _stat_allowance(*metrics: MetricTensor) -> float:
    rel = 0.0
    for g in metrics:
        if g.stderr is not None:
            rel += _STDERR_SIGMAS * float(np.max(g.stderr) / np.min(g.eigenvalues()))
    return rel


def _translated(body: ConvexBody, offset: np.ndarray) -> ConvexBody:
    if body.spec is not None:
        return as_body(TranslateSpec(inner=body.spec, offset=[float(v) for v in offset]))
    return TranslatedBody(body, offset)


def _symmetrized(body: ConvexBody) -> ConvexBody:
    if body.spec is not None:
        return as_body(SymmetrizeSpec(inner=body.spec))
    return SymmetrizedBody(body)


def _body_id(obj: Any, index: int) -> str:
    return obj.body_id if isinstance(obj, CorpusBody) else f"body-{index:03d}"


def theoretical_constants(n: int, c: float = 1.0) -> Dict[str, float]:
    half = n / 2.0
    lift = (1.0 + c) / 2.0
    return {
        "C1_basic": 2.0 * n ** (1.0 + half),
        "C1_improved": math.sqrt(2.0 * n * (n + 1.0)) * n**half,
        "C2": n ** (-half),
        "C3": n ** ((n + 1.0) / 2.0),
        "C2_c": n ** (-half) * lift ** (-(1.0 + half)),
        "C3_c": n ** ((n + 1.0) / 2.0) * lift ** (1.0 + half),
    }


@dataclass(frozen=True)
class BoundsReport:
    body_id: str
    n: int
    min_ratio: float
    max_ratio: float
    c: float
    constants: Dict[str, float]
    provenance: str
    allowance: float = 0.0

    @property
    def symmetric(self) -> bool:
        return self.c <= 1.0 + settings.exact_tol

    def flags(self) -> Dict[str, bool]:
        k = self.constants
        a = self.allowance
        out = {
            "max_le_C1_improved": _le(self.max_ratio, k["C1_improved"], a),
            "max_le_C1_basic": _le(self.max_ratio, k["C1_basic"], a),
            "quasireversible_interval": _ge(self.min_ratio, k["C2_c"], a) and _le(self.max_ratio, k["C3_c"], a),
        }
        if self.symmetric:
            out["symmetric_interval"] = _ge(self.min_ratio, k["C2"], a) and _le(self.max_ratio, k["C3"], a)
        return out

    @property
    def passed(self) -> bool:
        return all(self.flags().values())

    def to_payload(self) -> Dict[str, Any]:
        return {
            "body_id": self.body_id,
            "n": int(self.n),
            "min_ratio": float(self.min_ratio),
            "max_ratio": float(self.max_ratio),
            "c": float(self.c),
            "constants": {k: float(v) for k, v in self.constants.items()},
            "provenance": self.provenance,
            "flags": self.flags(),
            "pass": self.passed,
        }


def _ratio(body: ConvexBody, g: MetricTensor, W: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(g.quadratic(W), 0.0)) / np.asarray(gauge(body, W))


def _polish_ratio(body: ConvexBody, g: MetricTensor, w0: np.ndarray, sign: float) -> float:
    def objective(w: np.ndarray) -> float:
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return np.inf
        return -sign * float(_ratio(body, g, (w / nrm)[None, :])[0])

    res = optimize.minimize(
        objective,
        w0,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 400 * body.dim},
    )
    return -sign * float(res.fun)


def ratio_scan(
    body: Any,
    dirs: Optional[DirectionSet] = None,
    method: str = "auto",
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    body_id: str = "body",
    metric: Optional[MetricTensor] = None,
) -> BoundsReport:
    """Extremes of sqrt(g_BL(xi, xi)) / F(xi) over sampled directions, each polished by local search."""
    b = as_body(body)
    n = b.dim
    d = dirs or default_directions(n)
    g = metric or bl_metric(b, method, samples, seed)
    r = _ratio(b, g, d.points)
    lo = min(float(r.min()), _polish_ratio(b, g, d.points[int(np.argmin(r))], -1.0))
    hi = max(float(r.max()), _polish_ratio(b, g, d.points[int(np.argmax(r))], 1.0))
    c = quasireversibility_constant(b, d)
    return BoundsReport(
        body_id=body_id,
        n=n,
        min_ratio=lo,
        max_ratio=hi,
        c=c,
        constants=theoretical_constants(n, c),
        provenance=g.provenance,
        allowance=0.5 * _stat_allowance(g),
    )


@dataclass(frozen=True)
class SandwichReport:
    lam: float
    exponent: int
    min_eig: float
    max_eig: float
    allowance: float = 0.0

    @property
    def measured(self) -> float:
        return max(self.max_eig, 1.0 / self.min_eig)

    @property
    def bound(self) -> float:
        return self.lam**self.exponent

    @property
    def passed(self) -> bool:
        return _le(self.measured, self.bound, self.allowance)

    def to_payload(self) -> Dict[str, Any]:
        return {
            "lambda": float(self.lam),
            "exponent": int(self.exponent),
            "min_eig": float(self.min_eig),
            "max_eig": float(self.max_eig),
            "measured": float(self.measured),
            "bound": float(self.bound),
            "pass": self.passed,
        }


def _generalized_eigs(g2: MetricTensor, g1: MetricTensor) -> np.ndarray:
    return linalg.eigh(g2.matrix, g1.matrix, eigvals_only=True)


def bl_sandwich_check(
    body1: Any,
    body2: Any,
    dirs: Optional[DirectionSet] = None,
    method: str = "auto",
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> SandwichReport:
    """Bodies with (1/lam) F1 <= F2 <= lam F1 must have lam^-2n g1 <= g2 <= lam^2n g1."""
    b1 = as_body(body1)
    b2 = as_body(body2)
    if b1.dim != b2.dim:
        raise SpecParseError("sandwich bodies must share one dimension")
    n = b1.dim
    pts = (dirs or default_directions(n)).points
    F1 = np.asarray(gauge(b1, pts))
    F2 = np.asarray(gauge(b2, pts))
    lam = float(max((F2 / F1).max(), (F1 / F2).max()))
    g1 = bl_metric(b1, method, samples, seed)
    g2 = bl_metric(b2, method, samples, seed)
    w = _generalized_eigs(g2, g1)
    return SandwichReport(lam=lam, exponent=2 * n, min_eig=float(w.min()), max_eig=float(w.max()),
                          allowance=_stat_allowance(g1, g2))


@dataclass(frozen=True)
class SymmetrizeReport:
    n: int
    c: float
    min_ratio: float
    max_ratio: float
    min_eig: float
    max_eig: float
    allowance: float = 0.0

    @property
    def lift(self) -> float:
        return (1.0 + self.c) / 2.0

    @property
    def metric_spread(self) -> float:
        return max(self.max_eig, 1.0 / self.min_eig)

    def flags(self) -> Dict[str, bool]:
        a = self.allowance
        return {
            "directional_lower": _ge(self.min_ratio, 1.0 / self.lift, settings.exact_tol),
            "directional_upper": _le(self.max_ratio, self.lift, settings.exact_tol),
            "metric_norm_exponent_n": _le(math.sqrt(self.metric_spread), self.lift**self.n, a),
            "metric_quadratic_exponent_2n": _le(self.metric_spread, self.lift ** (2 * self.n), a),
        }

    @property
    def passed(self) -> bool:
        return all(self.flags().values())

    def to_payload(self) -> Dict[str, Any]:
        return {
            "n": int(self.n),
            "c": float(self.c),
            "min_ratio": float(self.min_ratio),
            "max_ratio": float(self.max_ratio),
            "min_eig": float(self.min_eig),
            "max_eig": float(self.max_eig),
            "flags": self.flags(),
            "pass": self.passed,
        }


def symmetrize_and_bound(
    body: Any,
    dirs: Optional[DirectionSet] = None,
    method: str = "auto",
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> SymmetrizeReport:
    """Compare F with F' = (F(xi) + F(-xi)) / 2 directionally and through their BL metrics."""
    b = as_body(body)
    n = b.dim
    d = dirs or default_directions(n)
    sym = _symmetrized(b)
    c = quasireversibility_constant(b, d)
    F = np.asarray(gauge(b, d.points))
    Fs = np.asarray(gauge(sym, d.points))
    ratio = F / Fs
    g = bl_metric(b, method, samples, seed)
    gs = bl_metric(sym, method, samples, seed)
    w = _generalized_eigs(g, gs)
    return SymmetrizeReport(
        n=n,
        c=c,
        min_ratio=float(ratio.min()),
        max_ratio=float(ratio.max()),
        min_eig=float(w.min()),
        max_eig=float(w.max()),
        allowance=_stat_allowance(g, gs),
    )


def _inclusion_tol(body: ConvexBody) -> float:
    if isinstance(body, EllipsoidBody):
        return settings.inclusion_tol
    if body.is_polytope:
        return settings.inclusion_tol + settings.polytope_tol
    return settings.inclusion_tol + 10.0 * settings.cutting_plane_tol


def _john_rows(suite: str, cb: Any, index: int, dirs: Optional[DirectionSet], tol: Optional[float]) -> List[CheckRow]:
    b = as_body(cb)
    n = b.dim
    body_id = _body_id(cb, index)
    symmetric = cb.symmetric if isinstance(cb, CorpusBody) else quasireversibility_constant(b, dirs or default_directions(n)) <= 1.0 + settings.exact_tol
    d = dirs or default_directions(n)
    itol = _inclusion_tol(b)

    E = max_inscribed_ellipsoid(b, tol)
    J0 = E.centered()
    Q = E.center
    rows: List[CheckRow] = []

    def inclusion(check_id: str, inner: Any, outer: Any, s: float, source: str) -> None:
        cert = check_inclusion(inner, outer, s, d, itol)
        rows.append(_row(suite, check_id, body_id, n, s * (1.0 + cert.max_violation), s, source, cert.passed))

    if b.is_polytope or symmetric or isinstance(b, EllipsoidBody):
        inclusion("john-inside", E, b, 1.0, "john-inclusion")
    offset = float(np.linalg.norm(Q)) / float(np.linalg.svd(J0.factor, compute_uv=False).min())
    if symmetric:
        bound = math.sqrt(itol)
        rows.append(_row(suite, "john-point-origin", body_id, n, offset, bound, "john-symmetric-center", offset <= bound))
        inclusion("john-sqrt-n", b, E, math.sqrt(n), "john-inclusion-sym")
    inclusion("john-n-centered", _translated(b, -Q), J0, float(n), "john-inclusion-general")
    inclusion("john-2n", b, J0, 2.0 * n, "john-inclusion-2n")
    inclusion("john-improved", b, J0, math.sqrt(2.0 * n * (n + 1.0)), "john-inclusion-improved")
    if isinstance(b, EllipsoidBody):
        inclusion("john-ellipsoid-tight", b, E, 1.0, "john-fixed-point")

    # sqrt(g_John(xi, xi)) is the gauge of the centered John ellipsoid
    q = np.linalg.norm(linalg.solve_triangular(J0.factor, d.points.T, lower=True), axis=0)
    r = q / np.asarray(gauge(b, d.points))
    sandwich = [
        ("john-metric-2n", float(r.max()), 2.0 * n, "john-metric-lower", _le(float(r.max()), 2.0 * n, itol)),
        ("john-metric-improved", float(r.max()), math.sqrt(2.0 * n * (n + 1.0)), "john-metric-lower-improved",
         _le(float(r.max()), math.sqrt(2.0 * n * (n + 1.0)), itol)),
    ]
    if symmetric:
        # J0 and J differ by the residual John point offset
        sym_rel = itol + offset
        sandwich += [
            ("john-metric-sym-upper", float(r.min()), 1.0, "john-metric-sym", _ge(float(r.min()), 1.0, sym_rel)),
            ("john-metric-sym-sqrt-n", float(r.max()), math.sqrt(n), "john-metric-sym",
             _le(float(r.max()), math.sqrt(n), sym_rel)),
        ]
    rows += [_row(suite, cid, body_id, n, m, bd, src, ok) for cid, m, bd, src, ok in sandwich]
    return rows


def _collect(fn: Callable[[Any, int], List[CheckRow]], bodies: Sequence[Any]) -> List[CheckRow]:
    chunks = parallel_map(lambda item: fn(item[1], item[0]), list(enumerate(bodies)))
    return [row for chunk in chunks for row in chunk]


def john_bounds_suite(bodies: Sequence[Any], dirs: Optional[DirectionSet] = None, tol: Optional[float] = None,
                      n: Optional[int] = None, seed: int = 0) -> SuiteResult:
    rows = _collect(lambda cb, i: _john_rows("john-bounds", cb, i, dirs, tol), bodies)
    dim = n if n is not None else (as_body(bodies[0]).dim if bodies else 0)
    return SuiteResult("john-bounds", dim, seed, rows)


def _bl_rows(suite: str, cb: Any, index: int, dirs: Optional[DirectionSet], samples: Optional[int], seed: Optional[int]) -> List[CheckRow]:
    b = as_body(cb)
    n = b.dim
    body_id = _body_id(cb, index)
    rep = ratio_scan(b, dirs, "auto", samples, seed, body_id=body_id)
    k = rep.constants
    a = rep.allowance
    rows = [
        _row(suite, "bl-max-C1-improved", body_id, n, rep.max_ratio, k["C1_improved"], "bl-ratio-c1-improved",
             _le(rep.max_ratio, k["C1_improved"], a)),
        _row(suite, "bl-max-C1-basic", body_id, n, rep.max_ratio, k["C1_basic"], "bl-ratio-c1-basic",
             _le(rep.max_ratio, k["C1_basic"], a)),
        _row(suite, "bl-min-C2-c", body_id, n, rep.min_ratio, k["C2_c"], "bl-ratio-quasireversible",
             _ge(rep.min_ratio, k["C2_c"], a)),
        _row(suite, "bl-max-C3-c", body_id, n, rep.max_ratio, k["C3_c"], "bl-ratio-quasireversible",
             _le(rep.max_ratio, k["C3_c"], a)),
    ]
    if rep.symmetric:
        rows += [
            _row(suite, "bl-min-C2", body_id, n, rep.min_ratio, k["C2"], "bl-ratio-symmetric", _ge(rep.min_ratio, k["C2"], a)),
            _row(suite, "bl-max-C3", body_id, n, rep.max_ratio, k["C3"], "bl-ratio-symmetric", _le(rep.max_ratio, k["C3"], a)),
        ]
    if isinstance(b, EllipsoidBody) and np.all(np.abs(b.center) <= settings.exact_tol):
        spread = max(abs(rep.max_ratio - 1.0), abs(rep.min_ratio - 1.0))
        rows.append(_row(suite, "bl-ellipsoid-unit-ratio", body_id, n, spread, settings.exact_tol, "bl-fixed-point",
                         spread <= settings.exact_tol))
    if not rep.symmetric and isinstance(cb, CorpusBody) and not cb.body_id.startswith("gen-"):
        sym = symmetrize_and_bound(b, dirs, "auto", samples, seed)
        flags = sym.flags()
        rows += [
            _row(suite, "sym-directional-lower", body_id, n, sym.min_ratio, 1.0 / sym.lift, "symmetrize-gauge",
                 flags["directional_lower"]),
            _row(suite, "sym-directional-upper", body_id, n, sym.max_ratio, sym.lift, "symmetrize-gauge",
                 flags["directional_upper"]),
            _row(suite, "sym-metric-exponent-n", body_id, n, math.sqrt(sym.metric_spread), sym.lift**n,
                 "symmetrize-bl-norm", flags["metric_norm_exponent_n"]),
            _row(suite, "sym-metric-exponent-2n", body_id, n, sym.metric_spread, sym.lift ** (2 * n),
                 "symmetrize-bl-sandwich", flags["metric_quadratic_exponent_2n"]),
        ]
    return rows


def bl_bounds_suite(bodies: Sequence[Any], dirs: Optional[DirectionSet] = None, samples: Optional[int] = None,
                    seed: int = 0, n: Optional[int] = None) -> SuiteResult:
    rows = _collect(lambda cb, i: _bl_rows("bl-bounds", cb, i, dirs, samples, seed), bodies)
    dim = n if n is not None else (as_body(bodies[0]).dim if bodies else 0)
    return SuiteResult("bl-bounds", dim, seed, rows)


def _density_rows(suite: str, cb: Any, index: int, dirs: Optional[DirectionSet], samples: Optional[int], seed: Optional[int]) -> List[CheckRow]:
    b = as_body(cb)
    n = b.dim
    body_id = _body_id(cb, index)
    d = dirs or default_directions(n)
    rep = busemann_densities(b, "auto", samples, seed, d)
    rel = rep.volume_stderr * _STDERR_SIGMAS
    itol = _inclusion_tol(b)
    rows = [
        _row(suite, "density-john-lower", body_id, n, rep.john_ratio, 1.0, "density-john-busemann", _ge(rep.john_ratio, 1.0, rel)),
        _row(suite, "density-john-upper", body_id, n, rep.john_ratio, rep.john_upper_bound,
             "density-john-busemann-sym" if rep.symmetric else "density-john-busemann-general",
             _le(rep.john_ratio, rep.john_upper_bound, rel + itol)),
        _row(suite, "density-bl-le-busemann", body_id, n, rep.bl_ratio, 1.0, "density-bl-busemann", _le(rep.bl_ratio, 1.0, rel)),
    ]
    if rep.is_ellipsoid:
        gap = abs(rep.bl_ratio - 1.0)
        rows.append(_row(suite, "density-ellipsoid-equality", body_id, n, gap, settings.exact_tol, "density-bl-equality",
                         gap <= settings.exact_tol))

    scan = ratio_scan(b, d, "auto", samples, seed, body_id=body_id)
    k = max(scan.max_ratio, 1.0 / scan.min_ratio)
    busemann_over_bl = 1.0 / rep.bl_ratio
    rows += [
        _row(suite, "density-bl-comparable-upper", body_id, n, busemann_over_bl, k**n, "density-bl-comparability",
             _le(busemann_over_bl, k**n, rel)),
        _row(suite, "density-bl-comparable-lower", body_id, n, busemann_over_bl, k ** (-n), "density-bl-comparability",
             _ge(busemann_over_bl, k ** (-n), rel)),
    ]
    return rows


def density_suite(bodies: Sequence[Any], dirs: Optional[DirectionSet] = None, samples: Optional[int] = None,
                  seed: int = 0, n: Optional[int] = None) -> SuiteResult:
    rows = _collect(lambda cb, i: _density_rows("density", cb, i, dirs, samples, seed), bodies)
    dim = n if n is not None else (as_body(bodies[0]).dim if bodies else 0)
    return SuiteResult("density", dim, seed, rows)


@dataclass(frozen=True)
class NonsmoothScan:
    n: int
    table: List[Dict[str, float]]
    left_slope: float
    right_slope: float
    radius_at_kink: float

    @property
    def expected_left_slope(self) -> float:
        return math.log(self.n) / 4.0

    def to_payload(self) -> Dict[str, Any]:
        return {
            "n": int(self.n),
            "table": self.table,
            "left_slope": float(self.left_slope),
            "right_slope": float(self.right_slope),
            "expected_left_slope": float(self.expected_left_slope),
            "radius_at_kink": float(self.radius_at_kink),
            "note": KINK_NOTE,
        }


def _john_radius(p: float, n: int, tol: Optional[float]) -> float:
    return max_inscribed_ellipsoid(pball(p, n).spec, tol).mean_radius()


def nonsmooth_scan(n: int, x1_grid: Optional[Sequence[float]] = None, tol: Optional[float] = None) -> NonsmoothScan:
    """John radius of the p-ball along p = 1 + exp(x1), with one-sided slopes dr/dp at p = 2."""
    if x1_grid is None:
        ps = np.array(NONSMOOTH_P_GRID)
    else:
        ps = 1.0 + np.exp(np.asarray(x1_grid, dtype=float))
    ps = np.unique(np.append(ps[np.abs(ps - 2.0) > 1e-12], 2.0))
    if not (ps.min() < 2.0 < ps.max()):
        raise SpecParseError("the x1 grid must straddle the p = 2 locus")
    tol = settings.cutting_plane_tol if tol is None else tol

    radii = parallel_map(lambda p: _john_radius(float(p), n, tol), list(ps))
    r = dict(zip(ps.tolist(), radii))
    k = int(np.searchsorted(ps, 2.0))
    p_left, p_right = float(ps[k - 1]), float(ps[k + 1])
    left = (r[2.0] - r[p_left]) / (2.0 - p_left)
    right = (r[p_right] - r[2.0]) / (p_right - 2.0)

    table = []
    for i, p in enumerate(ps.tolist()):
        entry = {"x1": math.log(p - 1.0), "p": p, "r_solved": r[p], "r_formula": appendix_radius(p, n)}
        if 0 < i < len(ps) - 1:
            entry["slope_left"] = (r[p] - r[ps[i - 1]]) / (p - ps[i - 1])
            entry["slope_right"] = (r[ps[i + 1]] - r[p]) / (ps[i + 1] - p)
        table.append(entry)
    logger.warning(KINK_NOTE)
    return NonsmoothScan(n=n, table=table, left_slope=left, right_slope=right, radius_at_kink=r[2.0])


def pball_radius_suite(n: int, tol: Optional[float] = None, seed: int = 0) -> SuiteResult:
    radii = parallel_map(lambda p: _john_radius(p, n, tol), list(PBALL_RADIUS_EXPONENTS))
    rows = []
    table = []
    for p, r in zip(PBALL_RADIUS_EXPONENTS, radii):
        ref = appendix_radius(p, n)
        err = abs(r - ref)
        rows.append(_row("pball-radius", f"radius-p{p:g}", f"pball-p{p:g}-n{n}", n, err, _RADIUS_TOL, "pball-john-radius", err <= _RADIUS_TOL))
        table.append({"p": p, "r_solved": r, "r_formula": ref})
    return SuiteResult("pball-radius", n, seed, rows, tables={"radii": table})


def nonsmooth_suite(n: int, tol: Optional[float] = None, seed: int = 0) -> SuiteResult:
    scan = nonsmooth_scan(n, tol=tol)
    body_id = f"pball-kink-n{n}"
    left_err = abs(scan.left_slope - scan.expected_left_slope)
    rows = [
        _row("nonsmooth-scan", "slope-left", body_id, n, left_err, _SLOPE_TOL, "pball-radius-kink", left_err <= _SLOPE_TOL),
        _row("nonsmooth-scan", "slope-right", body_id, n, abs(scan.right_slope), _SLOPE_TOL, "pball-radius-kink",
             abs(scan.right_slope) <= _SLOPE_TOL),
        _row("nonsmooth-scan", "radius-at-kink", body_id, n, abs(scan.radius_at_kink - 1.0), _RADIUS_TOL, "pball-john-radius",
             abs(scan.radius_at_kink - 1.0) <= _RADIUS_TOL),
    ]
    return SuiteResult("nonsmooth-scan", n, seed, rows, tables={"radius_scan": scan.table}, notes=[KINK_NOTE])


def _closed_form_gap(b: ConvexBody, u: np.ndarray) -> tuple[float, float]:
    closed = zermelo_bl_closed_form(b, u)
    direct = bl_metric(_translated(b, -u))
    g_norm = pull_to_normalized(direct.matrix, closed.T)
    gap = float(np.max(np.abs(g_norm - closed.metric)))
    bound = _CLOSED_FORM_TOL
    if direct.stderr is not None:
        Tinv = np.abs(np.linalg.inv(closed.T))
        bound = max(bound, _STDERR_SIGMAS * float(np.max(Tinv @ direct.stderr @ Tinv)))
    return gap, bound


def zermelo_closed_form_suite(n: int, seed: int = 0, count: int = 20) -> SuiteResult:
    suite = "zermelo-closed-form"
    omegas = [ball(n), cube(n), random_polytope(n, seed, 0, symmetric=False)]

    def per_omega(cb: CorpusBody, _: int) -> List[CheckRow]:
        b = cb.to_body()
        rows = []
        for i, u in enumerate(sample_uniform(b, count, seed)):
            gap, bound = _closed_form_gap(b, u)
            rows.append(_row(suite, f"closed-form-u{i:02d}", cb.body_id, n, gap, bound, "zermelo-bl-closed-form", gap <= bound))
        return rows

    rows = _collect(per_omega, omegas)

    if n == 2:
        g = zermelo_bl_closed_form(ball(2).spec, [0.5, 0.0]).metric
        gap = float(np.max(np.abs(g - np.diag([0.5, 1.0]))))
        rows.append(_row(suite, "closed-form-disk-half", "disk", n, gap, _CLOSED_FORM_TOL, "zermelo-bl-closed-form", gap <= _CLOSED_FORM_TOL))

    # u(x) = x read in normalized coordinates must not depend on the domain
    targets = 0.3 * sample_uniform(ball(n).spec, 10, seed + 1)
    fields = []
    for cb in omegas[:2]:
        b = cb.to_body()
        T, beta, _ = normalization(b)
        Tinv = np.linalg.inv(T)
        fields.append([pull_to_normalized(bl_metric(_translated(b, -(beta + Tinv @ y))).matrix, T) for y in targets])
    spread = max(float(np.max(np.abs(a - c))) for a, c in zip(*fields))
    rows.append(_row(suite, "funk-universality", f"{omegas[0].body_id}~{omegas[1].body_id}", n, spread, _CLOSED_FORM_TOL,
                     "funk-normalized-universality", spread <= _CLOSED_FORM_TOL))
    return SuiteResult(suite, n, seed, rows, notes=[GAMMA_NOTE])


def counterexample_suite(n: int = 2, seed: int = 0, k_max: Optional[int] = None, points: int = 512) -> SuiteResult:
    suite = "counterexample"
    k_max = settings.counterexample_k_max if k_max is None else k_max
    field_ = counterexample_field(n, k_max)
    e = np.zeros(n)
    e[0] = 1.0
    rows: List[CheckRow] = []
    table = []
    body_id = f"counterexample-n{n}"

    for k in range(min(2, k_max + 1)):
        outward = path_length(field_, np.array([shell_radius(4 * k) * e, shell_radius(4 * k + 1) * e]))
        inward = path_length(field_, np.array([shell_radius(4 * k + 3) * e, shell_radius(4 * k + 2) * e]))
        for tag, cost in (("outward", outward), ("inward", inward)):
            err = abs(cost - 1.0)
            rows.append(_row(suite, f"shell-{tag}-k{k}", body_id, n, cost, 1.0, "counterexample-shell-cost", err <= _SHELL_TOL))
            table.append({"k": k, "direction": tag, "cost": cost})

    gamma = n + 2.0
    X = sample_uniform(ball(n).spec, points, seed)
    radial = shell_radius(np.linspace(0.0, 4 * k_max + 4, 64))[:, None] * e
    X = np.vstack([X, radial[radial[:, 0] < 1.0 - 10.0 * settings.boundary_margin]])
    unit_ball = ball(n).spec
    eigs = np.array([zermelo_bl_closed_form(unit_ball, counterexample_drift(x, k_max)).metric for x in X])
    w = np.linalg.eigvalsh(eigs)
    floor = 1.0 / (1.0 + gamma)
    lo = float(w.min())
    hi = float(w.max())
    rows += [
        _row(suite, "bl-eigen-floor", body_id, n, lo, floor, "counterexample-bl-bounded", lo >= floor - settings.exact_tol),
        _row(suite, "bl-eigen-ceiling", body_id, n, hi, 1.0, "counterexample-bl-bounded", hi <= 1.0 + settings.exact_tol),
    ]
    return SuiteResult(suite, n, seed, rows, tables={"shell_costs": table}, notes=[GAMMA_NOTE])


SUITES = (
    "john-bounds",
    "bl-bounds",
    "density",
    "zermelo-closed-form",
    "pball-radius",
    "nonsmooth-scan",
    "counterexample",
)


def run_suite(
    suite: str,
    n: int = 2,
    seed: int = 0,
    count: Optional[int] = None,
    samples: Optional[int] = None,
    tol: Optional[float] = None,
) -> SuiteResult:
    if suite not in SUITES:
        raise SpecParseError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
    if n < 2:
        raise SpecParseError("dimension must be >= 2")
    logger.info("running suite %s (n=%d, seed=%d)", suite, n, seed)

    if suite == "john-bounds":
        return john_bounds_suite(john_corpus(n, seed, count), tol=tol, n=n, seed=seed)
    if suite == "bl-bounds":
        return bl_bounds_suite(bl_corpus(n, seed, count), samples=samples, seed=seed, n=n)
    if suite == "density":
        return density_suite(density_corpus(n, seed, count), samples=samples, seed=seed, n=n)
    if suite == "zermelo-closed-form":
        return zermelo_closed_form_suite(n, seed, 20 if count is None else count)
    if suite == "pball-radius":
        return pball_radius_suite(n, tol, seed)
    if suite == "nonsmooth-scan":
        return nonsmooth_suite(n, tol, seed)
    return counterexample_suite(n, seed)
