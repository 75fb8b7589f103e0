#!/usr/bin/env python3
"""
Report Models for dps_lab
Pydantic models for evaluation, diagnostics and run bookkeeping
"""

from datetime import datetime
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel, Field, model_validator


def ordered_mean(values: Sequence[float]) -> float:
    """Arithmetic mean with a fixed left-to-right summation order"""
    total = 0.0
    for value in values:
        total += float(value)
    return total / len(values)


class EvalReport(BaseModel):
    """Test-set reconstruction quality of one sampler/task-model pair"""
    sampler: str = Field(description="Sampler kind of the evaluated run")
    recon: str = Field(description="Reconstruction model used")
    factor: int = Field(ge=1, description="Sub-sampling factor N/M")
    pattern_mode: str = Field(default="fixed", description="How the evaluation pattern was obtained")
    pattern: List[int] = Field(default_factory=list, description="Indices used for sub-sampling")

    mean_mse: float = Field(ge=0.0, description="Per-element MSE averaged over the test set")
    per_signal_mse: List[float] = Field(description="Per-element MSE of every test signal")
    baseline_mse: float = Field(ge=0.0, description="Closed-form zero-predictor MSE K/N * sigma^2")
    empirical_zero_mse: float = Field(ge=0.0, description="Measured MSE of predicting all zeros")
    support_recovery_rate: float = Field(ge=0.0, le=1.0, description="Fraction of signals whose top-K support is exact")
    seconds: float = Field(ge=0.0, description="Wall-clock reconstruction time")
    ista_threshold: Optional[float] = Field(default=None, description="ISTA threshold when recon is ista")

    @model_validator(mode="after")
    def mean_matches_vector(self):
        if self.per_signal_mse:
            if abs(ordered_mean(self.per_signal_mse) - self.mean_mse) > 1e-12:
                raise ValueError("mean_mse does not match per_signal_mse")
        return self

    def summary_row(self) -> Dict[str, object]:
        return {
            "sampler": self.sampler,
            "recon": self.recon,
            "factor": self.factor,
            "mean_mse": self.mean_mse,
            "baseline_mse": self.baseline_mse,
            "seconds": self.seconds,
        }


class RipReport(BaseModel):
    """Full-rank certification of M x K column submatrices of Psi"""
    tested_submatrices: int = Field(ge=0)
    min_singular_value: float = Field(ge=0.0)
    tolerance: float = Field(gt=0.0)
    passed: bool
    exhaustive: bool = Field(default=False, description="All C(N, K) subsets were tested")
    worst_subset: List[int] = Field(default_factory=list, description="Columns of the weakest submatrix")

    @model_validator(mode="after")
    def pass_flag_consistent(self):
        if self.passed != (self.min_singular_value > self.tolerance):
            raise ValueError("pass flag inconsistent with minimum singular value")
        return self


class BenchmarkReport(BaseModel):
    """Solver wall-clock comparison on one test set"""
    lista_seconds: float = Field(ge=0.0)
    ista_seconds: float = Field(ge=0.0)
    speedup: float = Field(ge=0.0, description="ista_seconds / lista_seconds")
    repeats: int = Field(ge=1)
    signals: int = Field(ge=1)
    ista_iters: int = Field(ge=1)
    lista_runs: List[float] = Field(default_factory=list)
    ista_runs: List[float] = Field(default_factory=list)


class GratingLobeQuery(BaseModel):
    """Inputs of the grating-lobe angle formula"""
    k: int = Field(ge=1, description="Lobe order")
    wavelength_mm: float = Field(gt=0.0, description="Signal wavelength")
    pitch_mm: float = Field(gt=0.0, description="Original element pitch")
    factor: float = Field(ge=1.0, description="Uniform sub-sampling factor N/M")

    @property
    def sine(self) -> float:
        return self.k * self.wavelength_mm / (self.pitch_mm * self.factor)


class GradCheckBlock(BaseModel):
    """Finite-difference agreement of one gradient path"""
    name: str
    max_relative_error: float = Field(ge=0.0)
    passed: bool


class GradCheckReport(BaseModel):
    """Result of checking every analytic gradient against central differences"""
    epsilon: float = Field(gt=0.0)
    tolerance: float = Field(gt=0.0)
    blocks: List[GradCheckBlock]

    @property
    def passed(self) -> bool:
        return all(block.passed for block in self.blocks)

    def lines(self) -> List[str]:
        return [
            f"{block.name:<24} max_rel_err={block.max_relative_error:.3e} {'ok' if block.passed else 'FAIL'}"
            for block in self.blocks
        ]


class DistributionSummary(BaseModel):
    """Sharpness diagnostics of the trained row distributions"""
    max_probability: List[float]
    row_entropy: List[float]
    total_entropy: float = Field(ge=0.0)
    mode_collisions: int = Field(ge=0, description="Rows whose mode equals an earlier row's mode")


class RunManifest(BaseModel):
    """Reproducibility record written before a command does its work"""
    command: List[str] = Field(description="Command line echo")
    config_hash: Optional[str] = Field(default=None, description="sha256 of the config file, if any")
    resolved_config_hash: Optional[str] = Field(default=None, description="sha256 of the resolved configuration")
    seed: Optional[int] = None
    tool_version: str
    started_at: datetime = Field(default_factory=datetime.now)

    model_config = {"frozen": True}
