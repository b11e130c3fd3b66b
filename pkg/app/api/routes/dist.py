from typing import List, Literal

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel

from app.api.errors import to_http
from app.core.errors import FinslerLabError
from app.services.body_spec import BodySpec
from app.services.domain_geometry import (
    funk_distance,
    funk_norm,
    hilbert_distance,
    hilbert_norm,
    rfunk_distance,
    rfunk_norm,
)

router = APIRouter(prefix="/api/dist", tags=["dist"])

Metric = Literal["funk", "rfunk", "hilbert"]

_DIST = {"funk": funk_distance, "rfunk": rfunk_distance, "hilbert": hilbert_distance}
_NORM = {"funk": funk_norm, "rfunk": rfunk_norm, "hilbert": hilbert_norm}


class DistRequest(BaseModel):
    domain: BodySpec
    metric: Metric = "funk"
    p: List[float]
    q: List[float]


class DistResponse(BaseModel):
    metric: Metric
    distance: float


class NormRequest(BaseModel):
    domain: BodySpec
    metric: Metric = "funk"
    x: List[float]
    xi: List[float]


class NormResponse(BaseModel):
    metric: Metric
    norm: float


def _check_dim(domain: BodySpec, *points: List[float]) -> None:
    if any(len(pt) != domain.dim for pt in points):
        raise HTTPException(status_code=400, detail=f"points must have dimension {domain.dim}")


@router.post("", response_model=DistResponse)
def distance(req: DistRequest) -> DistResponse:
    _check_dim(req.domain, req.p, req.q)
    try:
        d = _DIST[req.metric](req.domain, req.p, req.q)
    except FinslerLabError as e:
        raise to_http(e) from e
    return DistResponse(metric=req.metric, distance=d)


@router.post("/norm", response_model=NormResponse)
def finsler_norm(req: NormRequest) -> NormResponse:
    _check_dim(req.domain, req.x, req.xi)
    try:
        value = _NORM[req.metric](req.domain, req.x, req.xi)
    except FinslerLabError as e:
        raise to_http(e) from e
    return NormResponse(metric=req.metric, norm=float(value))
