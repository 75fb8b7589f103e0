"""
Reconstruction Models for dps_lab
Sensing matrix and unrolled LISTA parameters
"""

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ..errors import InvariantViolation


@dataclass
class SensingMatrix:
    """Psi = A_Phi F (M x N complex) and its realified twin [Re Psi; Im Psi] (2M x N)"""
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=np.complex128)

    @property
    def realified(self) -> np.ndarray:
        return np.vstack([self.psi.real, self.psi.imag])

    @property
    def m_rows(self) -> int:
        return self.psi.shape[0]

    @property
    def n_cols(self) -> int:
        return self.psi.shape[1]


@dataclass
class ListaParams:
    """
    Untied weights of an L-fold LISTA network

    Fold l computes z_l = shrink(W_l y_r + S_l z_{l-1}; t_l, a) with y_r = [Re y, Im y];
    the first fold has no lateral term. Arrays are updated in place by the optimizer,
    so `tensors()` hands out references.
    """
    input_weights: List[np.ndarray]
    lateral_weights: List[np.ndarray]
    thresholds: np.ndarray
    slope: float = 20.0

    def __post_init__(self):
        self.input_weights = [np.asarray(w, dtype=np.float64) for w in self.input_weights]
        self.lateral_weights = [np.asarray(s, dtype=np.float64) for s in self.lateral_weights]
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64).reshape(-1)
        if len(self.lateral_weights) != self.folds - 1 or self.thresholds.size != self.folds:
            raise InvariantViolation(
                "Inconsistent LISTA fold count",
                details={
                    "input_weights": len(self.input_weights),
                    "lateral_weights": len(self.lateral_weights),
                    "thresholds": int(self.thresholds.size),
                },
            )
        if self.slope <= 0:
            raise InvariantViolation("Shrinkage slope must be positive", details={"slope": self.slope})

    @property
    def folds(self) -> int:
        return len(self.input_weights)

    @property
    def n(self) -> int:
        return self.input_weights[0].shape[0]

    @property
    def m(self) -> int:
        return self.input_weights[0].shape[1] // 2

    def tensors(self) -> Dict[str, np.ndarray]:
        """Trainable arrays by name: W1..WL, S2..SL, t"""
        named = {f"W{l + 1}": w for l, w in enumerate(self.input_weights)}
        named.update({f"S{l + 2}": s for l, s in enumerate(self.lateral_weights)})
        named["t"] = self.thresholds
        return named

    def clamp_thresholds(self) -> None:
        np.maximum(self.thresholds, 0.0, out=self.thresholds)

    def squared_norm(self) -> float:
        """||theta||_2^2 over all trainable arrays"""
        return float(sum(np.sum(arr * arr) for arr in self.tensors().values()))

    def copy(self) -> "ListaParams":
        return ListaParams(
            input_weights=[w.copy() for w in self.input_weights],
            lateral_weights=[s.copy() for s in self.lateral_weights],
            thresholds=self.thresholds.copy(),
            slope=self.slope,
        )
