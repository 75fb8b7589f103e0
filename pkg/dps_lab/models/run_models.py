"""
Run Models for dps_lab
Loss history and the artifacts a training run leaves behind
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..config.settings import SamplerKind, TrainConfig
from .reconstruction_models import ListaParams
from .sampling_models import LogitsMatrix, SamplingPattern


@dataclass
class LossRecord:
    """Loss components of one iteration"""
    iteration: int
    total: float
    mse: float
    entropy: float


@dataclass
class LossHistory:
    """Per-iteration loss components, appended by the training loop"""
    records: List[LossRecord] = field(default_factory=list)

    def append(self, record: LossRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(record, name) for record in self.records], dtype=np.float64)

    def window_mean(self, name: str, start: int, stop: int) -> float:
        return float(np.mean(self.column(name)[start:stop]))


@dataclass
class RunArtifacts:
    """
    Trained sampler and task model of one run

    `pattern` is the fixed pattern for uniform/random runs and the MAP pattern of
    the final logits for dps runs. `iteration` counts completed iterations; it is
    below config.n_iter only for a partial (diverged) run.
    """
    config: TrainConfig
    n: int
    m: int
    pattern: SamplingPattern
    params: ListaParams
    phi: Optional[LogitsMatrix] = None
    history: LossHistory = field(default_factory=LossHistory)
    seeds: Dict[str, int] = field(default_factory=dict)
    iteration: int = 0

    @property
    def sampler(self) -> SamplerKind:
        return self.config.sampler_kind

    @property
    def factor(self) -> int:
        return self.config.factor

    @property
    def complete(self) -> bool:
        return self.iteration == self.config.n_iter and len(self.history) == self.config.n_iter
