#!/usr/bin/env python3
"""
dps_lab Repositories Package
File formats: hold-out set, run checkpoints, reports
"""

from .holdout_repository import HoldoutHeader, HoldoutSetRepository
from .checkpoint_repository import CheckpointRepositoryInterface, TextCheckpointRepository
from .report_repository import ReportRepository

__all__ = [
    "HoldoutHeader",
    "HoldoutSetRepository",
    "CheckpointRepositoryInterface",
    "TextCheckpointRepository",
    "ReportRepository",
]
