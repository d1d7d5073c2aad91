from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.api.routes import router
from app.config import settings
from app.services.param_store import load_params
from app.utils.exceptions import ConfigurationError
from app.utils.logger import get_logger, setup_logger

setup_logger()
logger = get_logger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("🚀 Starting C-SPF Risk Toolkit API")
    Path(settings.OUTPUT_DIR).mkdir(parents=True, exist_ok=True)

    # a broken parameter file should fail the first request, not the startup
    try:
        params = load_params()
        logger.info(f"⚙️  Field parameters from {settings.PARAMS_FILE}: "
                    f"gamma_y={params.s_field.gamma_y}, t*={params.o_field.t_star}")
    except ConfigurationError as e:
        logger.error(f"❌ {e}")

    logger.info(f"Perception window {settings.PERCEPTION_WINDOW} m, lane span {settings.LANE_SPAN}")
    if not Path(settings.DATA_DIR).exists():
        logger.warning(f"Data directory {settings.DATA_DIR} does not exist, /assess will fail")

    yield

    logger.info("Shutting down C-SPF Risk Toolkit API")


app = FastAPI(
    title="C-SPF Risk Toolkit",
    description="Composite safety potential field: subjective and objective driving risk",
    version="1.0.0",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(router, prefix="/api/v1", tags=["Risk Operations"])


@app.get("/")
async def root():
    return {
        "message": "C-SPF Risk Toolkit",
        "version": "1.0.0",
        "docs": "/docs",
        "api_base": "/api/v1",
    }
