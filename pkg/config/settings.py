"""
Configuration management for the AMSR sparse super-resolution engine
"""
import os
from typing import Any, Dict, Optional
import structlog
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logger = structlog.get_logger()

class ConfigManager:
    """Centralized configuration management"""

    OPTIONAL_VARS = [
        "AMSR_THREADS",
        "AMSR_LOG_LEVEL"
    ]

    LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

    @classmethod
    def default_threads(cls) -> int:
        """Implementation default for bench parallelism"""
        return max(1, min(4, os.cpu_count() or 1))

    @classmethod
    def get_threads(cls) -> int:
        """Read AMSR_THREADS, falling back to the default on absent or invalid values"""
        raw = os.getenv("AMSR_THREADS")
        if raw is None or raw.strip() == "":
            return cls.default_threads()

        try:
            threads = int(raw)
        except ValueError:
            logger.warning("Ignoring non-integer AMSR_THREADS", value=raw)
            return cls.default_threads()

        if threads < 1:
            logger.warning("Ignoring AMSR_THREADS below 1", value=raw)
            return cls.default_threads()
        return threads

    @classmethod
    def get_log_level(cls, default: str = "WARNING") -> str:
        """Read AMSR_LOG_LEVEL; unknown names fall back to the default"""
        raw = os.getenv("AMSR_LOG_LEVEL")
        if not raw:
            return default
        level = raw.strip().upper()
        if level not in cls.LOG_LEVELS:
            logger.warning("Unknown AMSR_LOG_LEVEL", value=raw)
            return default
        return level

    @classmethod
    def get_runtime_config(cls, default_log_level: str = "WARNING") -> Dict[str, Any]:
        """Get runtime configuration"""
        return {
            "threads": cls.get_threads(),
            "log_level": cls.get_log_level(default_log_level)
        }

    @classmethod
    def validate_environment(cls) -> bool:
        """Log the effective runtime configuration"""
        present = [var for var in cls.OPTIONAL_VARS if os.getenv(var)]
        config = cls.get_runtime_config()
        logger.info("Environment validation passed",
                    configured_vars=present,
                    threads=config["threads"],
                    log_level=config["log_level"])
        return True

class AppSettings:
    """Application settings"""

    # CLI Settings
    PROG = "amsr"
    DESCRIPTION = "Frequency-aware sparse inference for single-image super-resolution."
    VERSION = "1.0.0"

    # High-frequency mask generation
    BLUR_SIZE = 5
    BLUR_SIGMA = 1.0
    KMEANS_MAX_ITER = 10
    KMEANS_INITIAL_BOUNDARY = 0.5
    HF_MAX_EPSILON = 1e-8

    # Body defaults per body type
    DEFAULT_DILATION = {"cnn": 5, "stl": 11}
    DEFAULT_SIGMA = 0.5
    SIGMA_RANGE = (0.0, 1.5)
    LAYER_NORM_EPS = 1e-5

    # Sweeps
    DILATION_SWEEP = [1, 3, 5, 7, 9, 11]
    SIGMA_SWEEP = [1.0, 0.7, 0.5, 0.3, 0.0]
    SIGMA_SWEEP_DILATION = 5
    STRATEGY_SWEEP = ["kmeans", "fixed:0.5", "median"]
    STRATEGY_SWEEP_DILATION = 3

    # File formats
    WEIGHT_MAGIC = b"AMSRW1\n"
    REPORT_CSV_COLUMNS = ["layer", "dense_macs", "sparse_macs", "fraction"]
    BENCH_CSV_COLUMNS = ["image", "setting", "coverage", "fraction", "psnr_vs_dense", "ms"]

    # Exit codes
    EXIT_OK = 0
    EXIT_USAGE = 2
    EXIT_INPUT_FORMAT = 3
    EXIT_MODEL_BINDING = 4

    @classmethod
    def default_dilation(cls, body_type: str) -> int:
        return cls.DEFAULT_DILATION[body_type]

    @classmethod
    def bench_threads(cls, override: Optional[int] = None) -> int:
        """Bench worker count, CLI override first, then AMSR_THREADS"""
        if override is not None and override >= 1:
            return override
        return ConfigManager.get_threads()
