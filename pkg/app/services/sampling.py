import logging
import math
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import InvalidBody, MethodUnsupported, RejectionStall, SampleBudgetTooSmall, SpecParseError
from app.services.convex_body import Box, ConvexBody, LinearImageBody, TranslatedBody, as_body, boundary_hit
from app.state.worker_pool import parallel_map

logger = logging.getLogger(__name__)

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class DirectionSet:
    count: int
    seed: int
    dim: int
    points: np.ndarray

    def __len__(self) -> int:
        return self.count


def direction_set(count: int, seed: int, dim: int) -> DirectionSet:
    """Unit directions, deterministic in (count, seed, dim).

    The circle gets an equispaced grid rotated by a seeded phase, higher
    dimensions get normalized Gaussian draws.
    """
    if count < 1:
        raise SpecParseError("direction count must be >= 1")
    if dim < 2:
        raise SpecParseError("dimension must be >= 2")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & _SEED_MASK, int(dim), int(count)]))
    if dim == 2:
        phase = rng.random()
        theta = (np.arange(count) + phase) * (2.0 * np.pi / count)
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        pts = rng.standard_normal((count, dim))
        norms = np.linalg.norm(pts, axis=1)
        while np.any(norms < 1e-8):
            bad = norms < 1e-8
            pts[bad] = rng.standard_normal((int(bad.sum()), dim))
            norms = np.linalg.norm(pts, axis=1)
        pts = pts / norms[:, None]
    return DirectionSet(count=int(count), seed=int(seed), dim=int(dim), points=pts)


def default_directions(dim: int, seed: Optional[int] = None) -> DirectionSet:
    count = settings.ratio_dirs_2d if dim == 2 else settings.ratio_dirs_3d
    return direction_set(count, settings.seed if seed is None else seed, dim)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _SEED_MASK, int(block)]))


def _sweep_box(body: ConvexBody) -> Box:
    n = body.dim
    origin = np.zeros(n)
    axes = np.vstack([np.eye(n), -np.eye(n)])
    dirs = np.vstack([axes, direction_set(settings.box_directions_per_dim * n, 0, n).points])
    t = np.asarray(boundary_hit(body, origin, dirs))
    pts = t[:, None] * dirs
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = settings.box_inflation * (hi - lo)
    return lo - pad, hi + pad


def bounding_box(body: Any) -> Box:
    """Axis-aligned box enclosing the body: exact where known, else a padded boundary sweep."""
    b = as_body(body)
    box = b.exact_box()
    if box is not None:
        return box
    if b.origin_interior():
        return _sweep_box(b)
    if isinstance(b, TranslatedBody):
        lo, hi = bounding_box(b.inner)
        return lo + b.offset, hi + b.offset
    if isinstance(b, LinearImageBody):
        lo, hi = bounding_box(b.inner)
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        mc = b.M @ c
        mh = np.abs(b.M) @ h
        return mc - mh, mc + mh
    raise InvalidBody(f"{b.describe()}: cannot bound a body without an interior origin")


def _draw_block(body: ConvexBody, lo: np.ndarray, hi: np.ndarray, seed: int, block: int, size: int) -> np.ndarray:
    x = block_rng(seed, block).uniform(lo, hi, size=(size, body.dim))
    return x[body.interior(x)]


def rejection_sample(body: Any, count: int, seed: int) -> Tuple[np.ndarray, int, int]:
    """Uniform points from the body plus (accepted, trials) over every block drawn.

    Blocks are drawn in waves of settings.mc_wave_blocks and concatenated in
    index order, so neither the points nor the counts depend on the worker count.
    """
    if count < 1:
        raise SpecParseError("sample count must be >= 1")
    b = as_body(body)
    lo, hi = bounding_box(b)
    size = int(settings.mc_block_size)
    wave = int(settings.mc_wave_blocks)

    chunks: List[np.ndarray] = []
    accepted = 0
    trials = 0
    block = 0
    while accepted < count:
        blocks = list(range(block, block + wave))
        for pts in parallel_map(lambda i: _draw_block(b, lo, hi, seed, i, size), blocks):
            chunks.append(pts)
            accepted += len(pts)
            trials += size
        block += wave
        if trials >= settings.stall_trials and accepted < settings.stall_acceptance * trials:
            raise RejectionStall(
                f"{b.describe()}: acceptance {accepted}/{trials} below {settings.stall_acceptance:g}"
            )

    logger.debug("rejection sampling %s: %d accepted of %d trials", b.describe(), accepted, trials)
    return np.concatenate(chunks)[:count], accepted, trials


def sample_uniform(body: Any, count: int, seed: int) -> np.ndarray:
    pts, _, _ = rejection_sample(body, count, seed)
    return pts


@dataclass(frozen=True)
class VolumeEstimate:
    volume: float
    stderr: float
    method: str
    samples: Optional[int] = None
    seed: Optional[int] = None

    def to_payload(self) -> dict:
        out = {"volume": float(self.volume), "stderr": float(self.stderr), "method": self.method}
        if self.samples is not None:
            out["samples"] = int(self.samples)
            out["seed"] = int(self.seed or 0)
        return out


def volume(body: Any, method: str = "exact", samples: Optional[int] = None, seed: Optional[int] = None) -> VolumeEstimate:
    b = as_body(body)
    if method == "auto":
        method = "exact" if b.exact_moments() is not None else "montecarlo"

    if method == "exact":
        m = b.exact_moments()
        if m is None:
            raise MethodUnsupported(f"{b.describe()}: no exact volume in n={b.dim}")
        return VolumeEstimate(volume=float(m.volume), stderr=0.0, method="exact")

    if method != "montecarlo":
        raise MethodUnsupported(f"unknown volume method {method!r}")

    samples = int(settings.samples if samples is None else samples)
    seed = int(settings.seed if seed is None else seed)
    if samples < settings.min_mc_samples:
        raise SampleBudgetTooSmall(f"samples must be >= {settings.min_mc_samples}, got {samples}")

    lo, hi = bounding_box(b)
    box_volume = float(np.prod(hi - lo))
    size = int(settings.mc_block_size)
    n_blocks = math.ceil(samples / size)

    def hits(i: int) -> int:
        k = min(size, samples - i * size)
        x = block_rng(seed, i).uniform(lo, hi, size=(k, b.dim))
        return int(np.count_nonzero(b.interior(x)))

    total = sum(parallel_map(hits, range(n_blocks)))
    frac = total / samples
    return VolumeEstimate(
        volume=box_volume * frac,
        stderr=box_volume * math.sqrt(frac * (1.0 - frac) / samples),
        method="montecarlo",
        samples=samples,
        seed=seed,
    )
