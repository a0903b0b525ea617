"""Spike MUSIC: subspace angle estimation corrected for large-dimension noise."""

from .rmt import MarchenkoPasturModel, SpikePrediction, predict_spike
from .signal_model import ArrayConfig, assemble_observation

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "MarchenkoPasturModel",
    "SpikePrediction",
    "assemble_observation",
    "predict_spike",
]
