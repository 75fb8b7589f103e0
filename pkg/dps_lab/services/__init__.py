#!/usr/bin/env python3
"""
dps_lab Services Package
Numerical operations: signals, sub-sampling, reconstruction, training, analysis
"""

from . import analysis_service, reconstruction_service, sampling_service, signal_service, training_service
from .random_streams import STREAM_NAMES, RandomStreams
from .training_service import AdamState, TrainingService, adam_step, anneal_tau, grad_check_all, total_loss, train

__all__ = [
    "analysis_service",
    "reconstruction_service",
    "sampling_service",
    "signal_service",
    "training_service",
    "STREAM_NAMES",
    "RandomStreams",
    "AdamState",
    "TrainingService",
    "adam_step",
    "anneal_tau",
    "grad_check_all",
    "total_loss",
    "train",
]
