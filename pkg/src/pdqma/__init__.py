"""Simulated PDQMA and DQMA verification of two-query PCPs."""
from .field import FieldSpec, choose_field_size
from .protocol import (Honest, MultiValued, Optimal, PlantedCorruption, ProtocolParams, RandomFunction,
                       Reason, SkewedAmplitude, Stats, run_trials)

__all__ = ["FieldSpec", "choose_field_size", "Honest", "Optimal", "RandomFunction", "MultiValued",
           "SkewedAmplitude", "PlantedCorruption", "ProtocolParams", "Reason", "Stats", "run_trials"]
__version__ = "0.1.0"
