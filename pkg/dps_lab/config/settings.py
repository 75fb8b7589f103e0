#!/usr/bin/env python3
"""
dps_lab Configuration Models
============================

Pydantic models for every tunable of a run. Defaults are the values of the
partial Fourier experiment (K=5 sparse signals of nominal length 128,
96,000 Adam iterations on mini-batches of 16).

Validation split:
- per-field constraints live on the models (pydantic ValidationError)
- cross-field preconditions are checked by the operations that need them
  (ConfigurationError), so a config can be built before the problem size is known
"""

from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator


class SamplerKind(str, Enum):
    """Sub-sampling strategy"""
    DPS = "dps"
    UNIFORM = "uniform"
    RANDOM = "random"


class ReconKind(str, Enum):
    """Sparse-recovery task model"""
    LISTA = "lista"
    ISTA = "ista"


class PatternMode(str, Enum):
    """How the evaluation pattern is obtained"""
    MAP = "map"
    SAMPLE = "sample"
    FIXED = "fixed"


class Profile(str, Enum):
    """Iteration-count preset"""
    FULL = "full"
    DESK = "desk"


PROFILE_ITERATIONS = {
    Profile.FULL: 96_000,
    Profile.DESK: 20_000,
}

DEFAULT_FACTOR_SWEEP = [2, 3, 4, 6, 8]


class SparseSignalConfig(BaseModel):
    """K-sparse signal generator settings"""
    n: int = Field(default=128, gt=0, description="Signal length")
    k: int = Field(default=5, gt=0, description="Number of nonzeros per signal")
    amplitude_std: float = Field(default=1.0, gt=0.0, description="Std of nonzero amplitudes")
    seed: int = Field(default=0, description="RNG seed")


class TemperatureSchedule(BaseModel):
    """Linear softmax temperature annealing"""
    tau_init: float = Field(default=5.0, gt=0.0, description="Temperature at the first iteration")
    tau_end: float = Field(default=0.5, gt=0.0, description="Temperature at the last iteration")
    n_iter: int = Field(default=96_000, ge=1, description="Number of iterations")


class IstaConfig(BaseModel):
    """Iterative shrinkage-thresholding baseline"""
    n_iter: int = Field(default=300, ge=1, description="Number of ISTA iterations")
    step: float = Field(default=1.0, gt=0.0, description="Gradient step size")
    threshold: float = Field(default=0.1, gt=0.0, description="l1 weight of the LASSO objective")


class TrainConfig(BaseModel):
    """Everything that defines one joint sampler/task-model training run"""

    model_config = ConfigDict(use_enum_values=False, validate_assignment=True)

    # Problem
    n: int = Field(default=128, gt=1, description="Nominal signal length (adjusted to a multiple of factor)")
    k: int = Field(default=5, gt=0, description="Sparsity level")
    amplitude_std: float = Field(default=1.0, gt=0.0, description="Std of nonzero amplitudes")
    factor: int = Field(default=4, ge=1, description="Sub-sampling factor N/M")
    factor_sweep: List[int] = Field(default_factory=lambda: list(DEFAULT_FACTOR_SWEEP), description="Allowed factors")

    # Optimization
    n_iter: int = Field(default=PROFILE_ITERATIONS[Profile.FULL], ge=1, description="Training iterations")
    batch: int = Field(default=16, ge=1, description="Mini-batch size")
    lr_theta: float = Field(default=1e-3, gt=0.0, description="Task-model learning rate")
    lr_phi: float = Field(default=5e-3, gt=0.0, description="Logits learning rate")
    l2_lambda: float = Field(default=0.0, ge=0.0, description="l2 penalty multiplier on task-model parameters")
    entropy_mu: float = Field(default=1e-8, ge=0.0, description="Entropy penalty multiplier")
    adam_beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-7, gt=0.0)
    tau_init: float = Field(default=5.0, gt=0.0)
    tau_end: float = Field(default=0.5, gt=0.0)

    # Models
    sampler_kind: SamplerKind = Field(default=SamplerKind.DPS)
    recon_kind: ReconKind = Field(default=ReconKind.LISTA)
    lista_folds: int = Field(default=3, ge=1, description="Unrolled LISTA folds")
    lista_slope: float = Field(default=20.0, gt=0.0, description="Fixed slope of the sigmoid shrinkage")
    lista_threshold_init: float = Field(default=0.1, ge=0.0, description="Initial shrinkage thresholds")
    lateral_noise_std: float = Field(default=0.01, ge=0.0, description="Noise added to lateral weight init")
    lista_init_step: float = Field(
        default=2.0, gt=0.0, le=2.0, description="ISTA step the LISTA folds are initialized with"
    )
    ista_iters: int = Field(default=300, ge=1)
    ista_threshold: float = Field(default=0.1, gt=0.0)

    # Run
    seed: int = Field(default=0, description="Run seed, parent of all named random streams")
    profile: Profile = Field(default=Profile.FULL)
    log_every: int = Field(default=1000, ge=1)

    @field_validator("factor_sweep", mode="before")
    @classmethod
    def parse_factor_sweep(cls, v):
        """Accept comma-separated factors from config files"""
        if isinstance(v, str):
            return [int(item.strip()) for item in v.split(",") if item.strip()]
        return v

    def signal_config(self) -> SparseSignalConfig:
        """Signal generator settings at nominal length"""
        return SparseSignalConfig(n=self.n, k=self.k, amplitude_std=self.amplitude_std, seed=self.seed)

    def schedule(self) -> TemperatureSchedule:
        return TemperatureSchedule(tau_init=self.tau_init, tau_end=self.tau_end, n_iter=self.n_iter)

    def ista_config(self) -> IstaConfig:
        return IstaConfig(n_iter=self.ista_iters, step=1.0, threshold=self.ista_threshold)

    @property
    def phi_step_multiplier(self) -> float:
        """Ratio applied to the Adam step of the logits"""
        return self.lr_phi / self.lr_theta


class LabSettings(BaseModel):
    """Process-wide settings"""
    log_level: str = Field(default="INFO", description="Logging level")
    log_json: bool = Field(default=False, description="Render log events as JSON lines")

    @field_validator("log_level")
    @classmethod
    def normalize_level(cls, v: str) -> str:
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level: {v}")
        return level


__all__ = [
    "SamplerKind",
    "ReconKind",
    "PatternMode",
    "Profile",
    "PROFILE_ITERATIONS",
    "DEFAULT_FACTOR_SWEEP",
    "SparseSignalConfig",
    "TemperatureSchedule",
    "IstaConfig",
    "TrainConfig",
    "LabSettings",
]
