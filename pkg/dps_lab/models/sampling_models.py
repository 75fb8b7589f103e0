"""
Sampling Models for dps_lab
=========================

Data types of the trainable sub-sampling layer:
- LogitsMatrix: M x N unnormalized log-probabilities, one categorical per measurement
- RowDistribution: normalized probabilities of one row
- GumbelNoise: one M x N Gumbel(0, 1) realization
- SamplingPattern: M distinct positions with a one-hot M x N view
- MaskState: the (M+1) x N additive masks that enforce sampling without replacement

Indices are 0-based.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, InvariantViolation

# finite stand-in for -inf, softmax underflows to exactly 0 without inf arithmetic
MASK_NEG = -1e9


@dataclass
class LogitsMatrix:
    """Trainable logits Phi, shape (M, N)"""
    phi: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.phi.ndim != 2:
            raise InvariantViolation("Logits must be a matrix", details={"ndim": self.phi.ndim})
        if self.m_rows > self.n_cols:
            raise ConfigurationError(
                "More measurements than positions",
                details={"m_rows": self.m_rows, "n_cols": self.n_cols},
            )
        if not np.all(np.isfinite(self.phi)):
            raise InvariantViolation("Logits contain non-finite entries")

    @property
    def m_rows(self) -> int:
        return self.phi.shape[0]

    @property
    def n_cols(self) -> int:
        return self.phi.shape[1]

    def copy(self) -> "LogitsMatrix":
        return LogitsMatrix(self.phi.copy())


@dataclass
class RowDistribution:
    """Class probabilities pi_m of one row"""
    pi: np.ndarray

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=np.float64)
        if np.any(self.pi < 0.0) or abs(float(self.pi.sum()) - 1.0) > 1e-9:
            raise InvariantViolation("Row is not a probability distribution", details={"sum": float(self.pi.sum())})


@dataclass
class GumbelNoise:
    """One Gumbel(0, 1) realization e, shape (M, N)"""
    e: np.ndarray

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=np.float64)
        if not np.all(np.isfinite(self.e)):
            raise InvariantViolation("Gumbel noise contains non-finite entries")

    @property
    def shape(self):
        return self.e.shape


@dataclass
class SamplingPattern:
    """M pairwise-distinct selected positions out of n_cols"""
    indices: np.ndarray
    n_cols: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        self.n_cols = int(self.n_cols)
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.n_cols):
            raise InvariantViolation(
                "Pattern index out of range",
                details={"n_cols": self.n_cols, "min": int(self.indices.min()), "max": int(self.indices.max())},
            )
        if np.unique(self.indices).size != self.indices.size:
            raise InvariantViolation("Pattern indices are not distinct", details={"indices": self.indices.tolist()})

    @property
    def m_rows(self) -> int:
        return self.indices.size

    @property
    def onehot(self) -> np.ndarray:
        """Binary selection matrix A_Phi, shape (M, N)"""
        a = np.zeros((self.m_rows, self.n_cols))
        a[np.arange(self.m_rows), self.indices] = 1.0
        return a

    def __eq__(self, other) -> bool:
        if not isinstance(other, SamplingPattern):
            return NotImplemented
        return self.n_cols == other.n_cols and np.array_equal(self.indices, other.indices)


@dataclass
class MaskState:
    """Additive masks w, shape (M+1, N); row m masks the m positions chosen before it"""
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if np.any(self.w[0] != 0.0):
            raise InvariantViolation("First mask row must be all zeros")
        masked_counts = np.count_nonzero(self.w == MASK_NEG, axis=1)
        if not np.array_equal(masked_counts, np.arange(self.w.shape[0])):
            raise InvariantViolation("Mask row m must hold exactly m masked entries", details={"counts": masked_counts.tolist()})

    @property
    def row_masks(self) -> np.ndarray:
        """Masks w_{m-1} seen by rows m = 1..M, shape (M, N)"""
        return self.w[:-1]

    @property
    def masked(self) -> np.ndarray:
        """Boolean (M, N): position already taken when row m is sampled"""
        return self.row_masks == MASK_NEG
