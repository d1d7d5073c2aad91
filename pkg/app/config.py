from pydantic_settings import BaseSettings, SettingsConfigDict
from pathlib import Path
import math

PROJECT_ROOT = Path(__file__).resolve().parent.parent
TEMPLATES_DIR = PROJECT_ROOT / "templates"

class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = "logs/cspf.log"

    # API Configuration
    API_HOST: str = "0.0.0.0"
    API_PORT: int = 8000
    API_RELOAD: bool = False
    DEBUG: bool = False

    # File Configuration
    DATA_DIR: str = "data"
    OUTPUT_DIR: str = "outputs"
    PARAMS_FILE: str = str(TEMPLATES_DIR / "default_params.json")
    FIXTURES_DIR: str = str(TEMPLATES_DIR / "fixtures")

    # Perception
    PERCEPTION_WINDOW: float = 100.0  # meters, center-to-center
    LANE_SPAN: int = 1

    # S-field lane/boundary weights
    KAPPA_L: float = 0.25
    KAPPA_B: float = 0.25

    # Calibration protocol
    MIN_BIN_SAMPLES: int = 500
    MIN_BIN_VEHICLES: int = 10
    BOOTSTRAP_ITERATIONS: int = 20
    BOOTSTRAP_FRACTION: float = 0.85
    RANDOM_SEED: int = 0

    # TTC baseline
    TTC_DT: float = 0.01  # seconds
    TTC_HORIZON: float = 30.0  # seconds

    # Analysis
    EVENT_THRESHOLD: float = math.exp(-1.0)
    RESPONSE_LAG: float = 1.0  # seconds

settings = Settings()
