from typing import Any, Dict, List, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from app.api.errors import to_http
from app.core.errors import FinslerLabError
from app.services.body_spec import BodySpec
from app.services.john import john_report

router = APIRouter(prefix="/api/john", tags=["john"])


class JohnRequest(BaseModel):
    body: BodySpec
    tol: Optional[float] = Field(default=None, gt=0.0)


class JohnResponse(BaseModel):
    ellipsoid: Dict[str, Any]
    john_point: List[float]
    radius: float
    metric: List[List[float]]
    certificates: Dict[str, Dict[str, Any]]


@router.post("", response_model=JohnResponse)
def john_ellipsoid(req: JohnRequest) -> JohnResponse:
    try:
        return JohnResponse(**john_report(req.body, tol=req.tol))
    except FinslerLabError as e:
        raise to_http(e) from e
