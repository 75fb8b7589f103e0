#!/usr/bin/env python3
"""
Sampling Service for dps_lab
============================

Deep probabilistic sub-sampling: M trainable categorical distributions over the
N sample positions.

Forward: hard Gumbel-max sampling without replacement (row m cannot pick what
rows 1..m-1 picked). Backward: straight-through, i.e. the Jacobian of a
temperature-tau softmax of the same perturbed, masked logits.

Rows are independent in the backward pass; the dependence of row m's mask on
earlier selections is not differentiated.
"""

from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.special import log_softmax, softmax

from ..errors import InvariantViolation, require
from ..models.sampling_models import (
    MASK_NEG,
    GumbelNoise,
    LogitsMatrix,
    MaskState,
    RowDistribution,
    SamplingPattern,
)

logger = structlog.get_logger(__name__)

# diagonal prior of the logits initialization
INIT_ALPHA = -2.73e-7
INIT_BETA = -2.73e-3
INIT_GAMMA_VARIANCE = 0.01


# ================================
# Initialization and noise
# ================================

def diagonal_prior(offset: np.ndarray) -> np.ndarray:
    """Deterministic part alpha d^4 + beta d^2 of the logits initialization"""
    d2 = np.asarray(offset, dtype=np.float64) ** 2
    return INIT_ALPHA * d2 * d2 + INIT_BETA * d2


def init_logits(
    m_rows: int,
    n_cols: int,
    rng: np.random.Generator,
    gamma_variance: float = INIT_GAMMA_VARIANCE,
) -> LogitsMatrix:
    """
    Logits with a prior towards a (stretched) diagonal selection

    phi[m, n] = alpha d^4 + beta d^2 + gamma, d = (n+1) - (N/M)(m+1), gamma ~ N(0, gamma_variance)
    """
    require(m_rows <= n_cols, "M must not exceed N", "M_EXCEEDS_N", m_rows=m_rows, n_cols=n_cols)
    require(m_rows >= 1, "M must be at least 1", m_rows=m_rows)
    rows = np.arange(1, m_rows + 1, dtype=np.float64)[:, None]
    cols = np.arange(1, n_cols + 1, dtype=np.float64)[None, :]
    offset = cols - (n_cols / m_rows) * rows
    gamma = rng.normal(0.0, np.sqrt(gamma_variance), size=(m_rows, n_cols)) if gamma_variance > 0 else 0.0
    return LogitsMatrix(diagonal_prior(offset) + gamma)


def gumbel_from_uniform(u: np.ndarray) -> np.ndarray:
    """Inverse-CDF transform of uniforms on the open interval (0, 1)"""
    return -np.log(-np.log(u))


def sample_gumbel(rng: np.random.Generator, rows: int, cols: int) -> GumbelNoise:
    """i.i.d. Gumbel(0, 1) noise, shape (rows, cols)"""
    return GumbelNoise(sample_gumbel_array(rng, (rows, cols)))


def sample_gumbel_array(rng: np.random.Generator, shape) -> np.ndarray:
    # random() is [0, 1); lift exact zeros into the open interval
    u = rng.random(shape)
    np.maximum(u, np.finfo(np.float64).tiny, out=u)
    return gumbel_from_uniform(u)


# ================================
# Hard sampling
# ================================

def draw_indices(phi: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """
    Batched sequential Gumbel-max without replacement

    Args:
        phi: logits (M, N)
        noise: Gumbel noise (T, M, N), one realization per leading index

    Returns:
        selected positions (T, M); ties go to the lowest index
    """
    phi = np.asarray(phi, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    require(noise.shape[1:] == phi.shape, "Noise shape must match logits", noise_shape=noise.shape, phi_shape=phi.shape)
    trials, m_rows, _ = noise.shape

    mask = np.zeros((trials, phi.shape[1]))
    picks = np.empty((trials, m_rows), dtype=np.int64)
    rows = np.arange(trials)
    for m in range(m_rows):
        picks[:, m] = np.argmax(mask + phi[m] + noise[:, m, :], axis=1)
        mask[rows, picks[:, m]] = MASK_NEG
    return picks


def draw_pattern(phi: LogitsMatrix, noise: GumbelNoise) -> Tuple[SamplingPattern, MaskState]:
    """One pattern realization plus the masks each row saw"""
    require(noise.shape == phi.phi.shape, "Noise shape must match logits", noise_shape=noise.shape, phi_shape=phi.phi.shape)
    indices = draw_indices(phi.phi, noise.e[None])[0]
    return SamplingPattern(indices, phi.n_cols), masks_for(indices, phi.n_cols)


def masks_for(indices: np.ndarray, n_cols: int) -> MaskState:
    """Masks w_0..w_M implied by a selection order"""
    w = np.zeros((len(indices) + 1, n_cols))
    for m, index in enumerate(indices):
        w[m + 1] = w[m]
        w[m + 1, index] = MASK_NEG
    return MaskState(w)


def map_pattern(phi: LogitsMatrix) -> SamplingPattern:
    """Deterministic pattern: greedy masked argmax of the logits, no noise"""
    pattern, _ = draw_pattern(phi, GumbelNoise(np.zeros_like(phi.phi)))
    return pattern


def apply_pattern(pattern: SamplingPattern, x: np.ndarray) -> np.ndarray:
    """y = A_Phi x along the last axis"""
    x = np.asarray(x)
    if x.shape[-1] != pattern.n_cols:
        raise InvariantViolation(
            "Signal length does not match pattern",
            details={"signal_length": x.shape[-1], "n_cols": pattern.n_cols},
        )
    return x[..., pattern.indices]


def pattern_adjoint(pattern: SamplingPattern, grad_y: np.ndarray) -> np.ndarray:
    """A_Phi^T grad_y: scatter measurement gradients back to positions"""
    grad_y = np.asarray(grad_y)
    out = np.zeros(grad_y.shape[:-1] + (pattern.n_cols,), dtype=grad_y.dtype)
    out[..., pattern.indices] = grad_y
    return out


# ================================
# Relaxation and straight-through gradients
# ================================

def soft_rows(phi: LogitsMatrix, noise: GumbelNoise, mask: MaskState, tau: float) -> np.ndarray:
    """Row-wise softmax_tau(w_{m-1} + phi_m + e_m), shape (M, N)"""
    require(tau > 0, "Temperature must be positive", "INVALID_TEMPERATURE", tau=tau)
    return softmax((mask.row_masks + phi.phi + noise.e) / tau, axis=1)


def softmax_jacobian(p: np.ndarray, tau: float) -> np.ndarray:
    """(1/tau)(diag(p) - p p^T) of one softmax row"""
    p = np.asarray(p, dtype=np.float64)
    return (np.diag(p) - np.outer(p, p)) / tau


def st_grad_logits(upstream: np.ndarray, soft: np.ndarray, tau: float, mask: MaskState) -> np.ndarray:
    """
    Straight-through gradient dL/dPhi

    Row m: J_m^T upstream_m with J_m the softmax_tau Jacobian at soft row m.
    J is symmetric, so the product reduces to (p * u - p (p . u)) / tau.
    Positions masked for row m get exactly zero.
    """
    require(tau > 0, "Temperature must be positive", "INVALID_TEMPERATURE", tau=tau)
    upstream = np.asarray(upstream, dtype=np.float64)
    require(upstream.shape == soft.shape, "Upstream gradient shape must match soft rows", upstream=upstream.shape, soft=soft.shape)
    grad = soft * (upstream - np.sum(soft * upstream, axis=1, keepdims=True)) / tau
    grad[mask.masked] = 0.0
    return grad


def onehot_upstream(grad_y_real: np.ndarray, grad_y_imag: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    dL/dA_Phi for y = A_Phi x with complex x as paired real channels

    dL/da[m, n] = sum_b Re(g[b, m]) Re(x[b, n]) + Im(g[b, m]) Im(x[b, n])
    """
    x = np.atleast_2d(x)
    return np.atleast_2d(grad_y_real).T @ x.real + np.atleast_2d(grad_y_imag).T @ x.imag


# ================================
# Distributions and entropy
# ================================

def probabilities(phi: LogitsMatrix) -> np.ndarray:
    """pi = row-wise softmax of the unmasked logits"""
    return softmax(phi.phi, axis=1)


def row_distribution(phi: LogitsMatrix, m: int) -> RowDistribution:
    return RowDistribution(softmax(phi.phi[m]))


def row_entropies(phi: LogitsMatrix) -> np.ndarray:
    log_pi = log_softmax(phi.phi, axis=1)
    return -np.sum(np.exp(log_pi) * log_pi, axis=1)


def entropy_penalty(phi: LogitsMatrix) -> Tuple[float, np.ndarray]:
    """
    Total row entropy L_S (natural log) and its gradient

    dH_m/dphi[m, j] = -pi[m, j] (log pi[m, j] + H_m)
    """
    log_pi = log_softmax(phi.phi, axis=1)
    pi = np.exp(log_pi)
    h = -np.sum(pi * log_pi, axis=1)
    grad = -pi * (log_pi + h[:, None])
    return float(np.sum(h)), grad


# ================================
# Fixed baselines
# ================================

def uniform_pattern(n_cols: int, m_rows: int) -> SamplingPattern:
    """Every (N/M)-th position starting at 0"""
    require(1 <= m_rows <= n_cols, "Need 1 <= M <= N", m_rows=m_rows, n_cols=n_cols)
    require(n_cols % m_rows == 0, "N must be divisible by M for a uniform pattern", "NOT_DIVISIBLE", n_cols=n_cols, m_rows=m_rows)
    return SamplingPattern(np.arange(0, n_cols, n_cols // m_rows), n_cols)


def random_pattern(n_cols: int, m_rows: int, rng: np.random.Generator) -> SamplingPattern:
    """M positions uniform without replacement, sorted ascending"""
    require(1 <= m_rows <= n_cols, "Need 1 <= M <= N", m_rows=m_rows, n_cols=n_cols)
    return SamplingPattern(np.sort(rng.choice(n_cols, size=m_rows, replace=False)), n_cols)


def mode_collisions(phi: LogitsMatrix, threshold: Optional[float] = None) -> int:
    """Rows whose most probable position equals an earlier row's (optionally only confident rows)"""
    pi = probabilities(phi)
    modes = np.argmax(pi, axis=1)
    if threshold is not None:
        modes = modes[pi.max(axis=1) > threshold]
    return int(modes.size - np.unique(modes).size)
