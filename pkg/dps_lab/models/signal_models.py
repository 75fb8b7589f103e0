"""
Signal Models for dps_lab
Containers for sparse targets and their Fourier coefficients
"""

from dataclasses import dataclass

import numpy as np

from ..errors import InvariantViolation


@dataclass
class SignalBatch:
    """Paired real K-sparse targets z (batch x n) and their unitary DFT x (batch x n)"""
    z: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        self.z = np.atleast_2d(np.asarray(self.z, dtype=np.float64))
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.complex128))
        if self.z.shape != self.x.shape:
            raise InvariantViolation(
                "Signal and transform shapes differ",
                details={"z_shape": self.z.shape, "x_shape": self.x.shape},
            )

    @property
    def size(self) -> int:
        return self.z.shape[0]

    @property
    def n(self) -> int:
        return self.z.shape[1]

    def support_sizes(self) -> np.ndarray:
        """Number of nonzeros per row of z"""
        return np.count_nonzero(self.z, axis=1)
