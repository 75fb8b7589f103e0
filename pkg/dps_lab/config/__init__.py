"""
dps_lab configuration package
Settings models, logging setup and config-file resolution
"""

from .settings import (
    DEFAULT_FACTOR_SWEEP,
    PROFILE_ITERATIONS,
    IstaConfig,
    LabSettings,
    PatternMode,
    Profile,
    ReconKind,
    SamplerKind,
    SparseSignalConfig,
    TemperatureSchedule,
    TrainConfig,
)
from .logging_setup import configure_logging
from .loader import read_config_file, resolve_train_config

__all__ = [
    "DEFAULT_FACTOR_SWEEP",
    "PROFILE_ITERATIONS",
    "IstaConfig",
    "LabSettings",
    "PatternMode",
    "Profile",
    "ReconKind",
    "SamplerKind",
    "SparseSignalConfig",
    "TemperatureSchedule",
    "TrainConfig",
    "configure_logging",
    "read_config_file",
    "resolve_train_config",
]
