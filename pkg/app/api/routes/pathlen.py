from typing import List, Literal, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel

from app.api.errors import to_http
from app.core.errors import FinslerLabError
from app.services.body_spec import BodySpec
from app.services.domain_geometry import (
    PolylineSpec,
    ZermeloField,
    ZermeloFieldSpec,
    funk_field,
    path_length,
    rfunk_field,
)

router = APIRouter(prefix="/api/pathlen", tags=["pathlen"])


class PathLengthRequest(BaseModel):
    path: PolylineSpec
    field: Optional[ZermeloFieldSpec] = None
    domain: Optional[BodySpec] = None
    metric: Literal["funk", "rfunk", "hilbert"] = "funk"


class PathLengthResponse(BaseModel):
    field: str
    length: float


@router.post("", response_model=PathLengthResponse)
def polyline_length(req: PathLengthRequest) -> PathLengthResponse:
    if (req.field is None) == (req.domain is None):
        raise HTTPException(status_code=400, detail="give exactly one of field or domain")

    try:
        if req.field is not None:
            fields: List[ZermeloField] = [ZermeloField.from_spec(req.field)]
            kind = fields[0].kind
        else:
            kind = req.metric
            if kind == "funk":
                fields = [funk_field(req.domain)]
            elif kind == "rfunk":
                fields = [rfunk_field(req.domain)]
            else:
                fields = [funk_field(req.domain), rfunk_field(req.domain)]
        lengths = [path_length(f, req.path) for f in fields]
    except FinslerLabError as e:
        raise to_http(e) from e

    return PathLengthResponse(field=kind, length=sum(lengths) / len(lengths))
