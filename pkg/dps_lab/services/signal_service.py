#!/usr/bin/env python3
"""
Signal Service for dps_lab
==========================

K-sparse target generation and the unitary DFT that maps targets to the
Fourier coefficients we sub-sample.

- training data is generated on-line per mini-batch
- only the hold-out test set is persisted (see repositories.holdout_repository)
- DFT scaling is 1/sqrt(n) both ways, so any row subset of F is orthonormal
"""

from pathlib import Path
from typing import Optional

import numpy as np
import structlog

from ..config.settings import SparseSignalConfig
from ..errors import require
from ..models.signal_models import SignalBatch

logger = structlog.get_logger(__name__)

IMAGINARY_RESIDUE_WARN = 1e-8


def validate_signal_config(cfg: SparseSignalConfig) -> None:
    require(0 < cfg.k < cfg.n, "Sparsity must satisfy 0 < k < n", "INVALID_SPARSITY", n=cfg.n, k=cfg.k)


def dft(z: np.ndarray) -> np.ndarray:
    """Unitary DFT along the last axis"""
    return np.fft.fft(np.asarray(z, dtype=np.float64), axis=-1, norm="ortho")


def imaginary_residue(x: np.ndarray) -> float:
    """Largest |Im| of the inverse unitary DFT of x"""
    inverse = np.fft.ifft(np.asarray(x, dtype=np.complex128), axis=-1, norm="ortho")
    return float(np.max(np.abs(inverse.imag))) if inverse.size else 0.0


def idft(x: np.ndarray) -> np.ndarray:
    """Inverse unitary DFT along the last axis, real part; warns on imaginary residue"""
    inverse = np.fft.ifft(np.asarray(x, dtype=np.complex128), axis=-1, norm="ortho")
    residue = float(np.max(np.abs(inverse.imag))) if inverse.size else 0.0
    if residue > IMAGINARY_RESIDUE_WARN:
        logger.warning("idft_imaginary_residue", residue=residue, limit=IMAGINARY_RESIDUE_WARN)
    return inverse.real.copy()


def gen_sparse_batch(cfg: SparseSignalConfig, batch_size: int, rng: np.random.Generator) -> SignalBatch:
    """
    Draw batch_size i.i.d. K-sparse signals and their transforms

    Supports are uniform k-subsets of {0..n-1}; nonzero amplitudes are
    N(0, amplitude_std^2).
    """
    validate_signal_config(cfg)
    require(batch_size >= 1, "Batch size must be at least 1", batch_size=batch_size)

    # k smallest of n i.i.d. uniforms per row is a uniform k-subset
    keys = rng.random((batch_size, cfg.n))
    support = np.argpartition(keys, cfg.k - 1, axis=1)[:, : cfg.k]
    amplitudes = rng.normal(0.0, cfg.amplitude_std, size=(batch_size, cfg.k))

    z = np.zeros((batch_size, cfg.n))
    np.put_along_axis(z, support, amplitudes, axis=1)
    return SignalBatch(z=z, x=dft(z))


def effective_length(nominal: int, factor: int) -> int:
    """Multiple of factor closest to nominal; ties go to the smaller multiple"""
    require(factor >= 1, "Factor must be at least 1", factor=factor)
    require(nominal >= factor, "Nominal length must be at least the factor", nominal=nominal, factor=factor)
    lower = (nominal // factor) * factor
    upper = lower + factor
    if nominal - lower <= upper - nominal:
        return lower
    return upper


def make_test_set(
    cfg: SparseSignalConfig,
    size: int,
    seed: int,
    path: Optional[Path] = None,
) -> SignalBatch:
    """
    Deterministic hold-out set; persisted when a path is given

    Reloading the file reproduces z bit for bit and recomputes x.
    """
    require(size >= 1, "Test set size must be at least 1", size=size)
    batch = gen_sparse_batch(cfg, size, np.random.default_rng(seed))
    if path is not None:
        # deferred: the repository imports dft from this module
        from ..repositories.holdout_repository import HoldoutSetRepository

        HoldoutSetRepository(path).save(batch, cfg=cfg, seed=seed)
        logger.info("test_set_written", path=str(path), size=size, n=cfg.n, k=cfg.k, seed=seed)
    return batch
