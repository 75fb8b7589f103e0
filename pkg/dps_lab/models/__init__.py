#!/usr/bin/env python3
"""
dps_lab Models Package
Domain types: array containers (dataclasses) and reports (pydantic)
"""

from .signal_models import SignalBatch
from .sampling_models import (
    MASK_NEG,
    GumbelNoise,
    LogitsMatrix,
    MaskState,
    RowDistribution,
    SamplingPattern,
)
from .reconstruction_models import ListaParams, SensingMatrix
from .report_models import (
    BenchmarkReport,
    DistributionSummary,
    EvalReport,
    GradCheckBlock,
    GradCheckReport,
    GratingLobeQuery,
    RipReport,
    RunManifest,
    ordered_mean,
)
from .run_models import LossHistory, LossRecord, RunArtifacts

__all__ = [
    "SignalBatch",
    "MASK_NEG",
    "GumbelNoise",
    "LogitsMatrix",
    "MaskState",
    "RowDistribution",
    "SamplingPattern",
    "ListaParams",
    "SensingMatrix",
    "BenchmarkReport",
    "DistributionSummary",
    "EvalReport",
    "GradCheckBlock",
    "GradCheckReport",
    "GratingLobeQuery",
    "RipReport",
    "RunManifest",
    "ordered_mean",
    "LossHistory",
    "LossRecord",
    "RunArtifacts",
]
