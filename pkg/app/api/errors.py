from fastapi import HTTPException

from app.core.errors import FinslerLabError, NumericalError


def to_http(e: FinslerLabError) -> HTTPException:
    status = 422 if isinstance(e, NumericalError) else 400
    return HTTPException(status_code=status, detail=f"{type(e).__name__}: {e}")
