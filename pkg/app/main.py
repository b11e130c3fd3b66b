from contextlib import asynccontextmanager

from fastapi import FastAPI

from app import __version__
from app.api.routes.bl import router as bl_router
from app.api.routes.dist import router as dist_router
from app.api.routes.john import router as john_router
from app.api.routes.pathlen import router as pathlen_router
from app.core.config import settings
from app.state.worker_pool import shutdown_worker_pool, worker_count


@asynccontextmanager
async def lifespan(app: FastAPI):
    yield

    shutdown_worker_pool()


app = FastAPI(
    title="finsler-lab",
    version=__version__,
    lifespan=lifespan,
)

app.include_router(john_router)
app.include_router(bl_router)
app.include_router(dist_router)
app.include_router(pathlen_router)


@app.get("/health")
def health():
    return {
        "status": "ok",
        "version": __version__,
        "threads": worker_count(),
        "seed": settings.seed,
        "samples": settings.samples,
    }
