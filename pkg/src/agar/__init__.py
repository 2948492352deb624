"""Attention-gated graph-RNN for point-cloud sequence prediction, on a numpy autodiff core."""

from .config import RunConfig, desk_config, full_config
from .errors import AgarError, NumericError, ValidationError
from .model import AgarModel

__all__ = ["AgarModel", "RunConfig", "desk_config", "full_config", "AgarError", "NumericError", "ValidationError"]
__version__ = "0.1.0"
