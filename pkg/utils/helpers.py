"""
Utility functions and helpers shared by the command modules
"""
import json
import math
from pathlib import Path
from typing import Union
import structlog
from pydantic import ValidationError

from core.exceptions import ModelBindingError
from core.weight_store import load_weights
from models.model_spec import ModelSpec
from services.model_binding import BoundModel, bind

logger = structlog.get_logger()

PathLike = Union[str, Path]

class Utils:
    """Consolidated helpers for spec loading, binding and number formatting"""

    @staticmethod
    def load_spec(path: PathLike) -> ModelSpec:
        """Parse a model spec file; any failure is a model-binding error"""
        try:
            return ModelSpec.from_file(path)
        except OSError as e:
            logger.error("Failed to read model spec", path=str(path), error=str(e))
            raise ModelBindingError(f"Cannot read model spec {path}: {e}") from e
        except (json.JSONDecodeError, ValidationError) as e:
            logger.error("Invalid model spec", path=str(path), error=str(e))
            raise ModelBindingError(f"Invalid model spec {path}: {e}") from e

    @staticmethod
    def load_model(spec_path: PathLike, weights_path: PathLike) -> BoundModel:
        """Spec file + AMSRW1 file -> bound model"""
        spec = Utils.load_spec(spec_path)
        return bind(spec, load_weights(weights_path))

    @staticmethod
    def format_number(value: float, decimal_places: int = 6) -> str:
        """Fixed-point text; infinities print as 'inf'"""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{decimal_places}f}"

    @staticmethod
    def format_percent(value: float) -> str:
        return f"{100.0 * value:.2f}%"
