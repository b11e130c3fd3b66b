from typing import List, Literal, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from app.api.errors import to_http
from app.core.config import settings
from app.core.errors import FinslerLabError
from app.services.binet_legendre import bl_dual_metric, invert_dual
from app.services.body_spec import BodySpec

router = APIRouter(prefix="/api/bl", tags=["bl"])


class BLRequest(BaseModel):
    body: BodySpec
    method: Literal["auto", "exact", "montecarlo"] = "auto"
    samples: int = Field(default_factory=lambda: settings.samples, ge=1)
    seed: int = Field(default_factory=lambda: settings.seed)


class BLResponse(BaseModel):
    metric: List[List[float]]
    dual_metric: List[List[float]]
    provenance: str
    eigenvalues: List[float]
    condition_number: float
    stderr: Optional[List[List[float]]] = None
    samples: Optional[int] = None
    seed: Optional[int] = None


@router.post("", response_model=BLResponse)
def binet_legendre_metric(req: BLRequest) -> BLResponse:
    try:
        dual = bl_dual_metric(req.body, req.method, req.samples, req.seed)
        g = invert_dual(dual)
    except FinslerLabError as e:
        raise to_http(e) from e

    out = g.to_payload()
    return BLResponse(
        metric=out["matrix"],
        dual_metric=dual.to_payload()["matrix"],
        provenance=g.provenance,
        eigenvalues=[float(v) for v in g.eigenvalues()],
        condition_number=g.condition_number,
        stderr=out.get("stderr"),
        samples=out.get("samples"),
        seed=out.get("seed"),
    )
