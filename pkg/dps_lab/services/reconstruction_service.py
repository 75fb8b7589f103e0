#!/usr/bin/env python3
"""
Reconstruction Service for dps_lab
==================================

Sparse-recovery task models on measurements y = Psi z:

- ISTA: proximal gradient on 1/2 ||y - Psi z||^2 + threshold ||z||_1 with the
  piecewise-linear soft threshold
- LISTA: ISTA unrolled into untied folds with a smooth sigmoid shrinkage,
  forward pass plus exact reverse-mode gradients

All solvers work on batches: y has shape (B, M), estimates (B, N).
"""

from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import structlog
from scipy.special import expit

from ..config.settings import IstaConfig
from ..errors import DivergenceError, require
from ..models.reconstruction_models import ListaParams, SensingMatrix
from ..models.sampling_models import SamplingPattern

logger = structlog.get_logger(__name__)


def build_sensing_matrix(pattern: SamplingPattern, n: int) -> SensingMatrix:
    """Psi = A_Phi F: the selected rows of the unitary n-point DFT"""
    require(pattern.n_cols == n, "Pattern length does not match n", n=n, n_cols=pattern.n_cols)
    f = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    return SensingMatrix(f[pattern.indices])


# ================================
# Shrinkage operators
# ================================

def sigmoid_shrink(v: np.ndarray, t, a: float) -> np.ndarray:
    """v * sigmoid(a (|v| - t)), odd in v"""
    v = np.asarray(v, dtype=np.float64)
    # one scratch array, updated in place
    gate = np.abs(v, out=np.empty_like(v))
    gate -= t
    gate *= a
    expit(gate, out=gate)
    gate *= v
    return gate


def sigmoid_shrink_grad(v: np.ndarray, t, a: float) -> Tuple[np.ndarray, np.ndarray]:
    """Elementwise partials (d/dv, d/dt) of sigmoid_shrink"""
    s = expit(a * (np.abs(v) - t))
    ds = s * (1.0 - s)
    return s + a * np.abs(v) * ds, -a * v * ds


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


# ================================
# ISTA
# ================================

def lasso_objective(y: np.ndarray, psi: SensingMatrix, z: np.ndarray, threshold: float) -> np.ndarray:
    """Per-signal 1/2 ||y - Psi z||^2 + threshold ||z||_1"""
    residual = np.atleast_2d(y) - np.atleast_2d(z) @ psi.psi.T
    return 0.5 * np.sum(np.abs(residual) ** 2, axis=1) + threshold * np.sum(np.abs(np.atleast_2d(z)), axis=1)


def ista_iterates(y: np.ndarray, psi: SensingMatrix, cfg: IstaConfig) -> Iterator[np.ndarray]:
    """
    Yield every ISTA iterate, starting after the first update from z = 0

    z <- soft_threshold(z + step Re(Psi^H (y - Psi z)), step * threshold)
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.complex128))
    require(y.shape[1] == psi.m_rows, "Measurement length does not match Psi", m=psi.m_rows, got=y.shape[1])

    z = np.zeros((y.shape[0], psi.n_cols))
    psi_t = psi.psi.T
    psi_conj = psi.psi.conj()
    shrink = cfg.step * cfg.threshold
    for iteration in range(cfg.n_iter):
        residual = y - z @ psi_t
        z = soft_threshold(z + cfg.step * np.real(residual @ psi_conj), shrink)
        if not np.all(np.isfinite(z)):
            raise DivergenceError(
                "ISTA iterate became non-finite", details={"iteration": iteration + 1, "step": cfg.step}
            )
        yield z


def ista(y: np.ndarray, psi: SensingMatrix, cfg: IstaConfig) -> np.ndarray:
    """Final ISTA estimate after cfg.n_iter iterations, shape (B, N)"""
    z = None
    for z in ista_iterates(y, psi, cfg):
        pass
    return z


# ================================
# LISTA
# ================================

def realify(y: np.ndarray) -> np.ndarray:
    """[Re y, Im y] along the last axis"""
    y = np.atleast_2d(np.asarray(y, dtype=np.complex128))
    return np.concatenate([y.real, y.imag], axis=-1)


def lista_forward(params: ListaParams, y: np.ndarray) -> Tuple[np.ndarray, Dict[str, object]]:
    """
    Unrolled forward pass

    Args:
        params: fold weights and thresholds
        y: complex measurements (B, M)

    Returns:
        (z_hat (B, N), cache for lista_backward)
    """
    y_r = realify(y)
    require(y_r.shape[1] == 2 * params.m, "Measurement length does not match LISTA input", m=params.m, got=y_r.shape[1] // 2)

    pre_activations: List[np.ndarray] = []
    outputs: List[np.ndarray] = []
    z = None
    for l in range(params.folds):
        v = y_r @ params.input_weights[l].T
        if l > 0:
            v += z @ params.lateral_weights[l - 1].T
        z = sigmoid_shrink(v, params.thresholds[l], params.slope)
        pre_activations.append(v)
        outputs.append(z)

    return z, {"y_r": y_r, "v": pre_activations, "z": outputs}


def lista_backward(
    params: ListaParams, cache: Dict[str, object], grad_out: np.ndarray
) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """
    Reverse-mode gradients of a scalar loss through lista_forward

    Args:
        params: the parameters used in the forward call
        cache: intermediates returned by lista_forward
        grad_out: dL/dz_hat (B, N)

    Returns:
        (gradients keyed like params.tensors(), dL/dy_r (B, 2M))
    """
    y_r = cache["y_r"]
    v_list = cache["v"]
    z_list = cache["z"]

    grads: Dict[str, np.ndarray] = {}
    grad_t = np.zeros(params.folds)
    grad_y_r = np.zeros_like(y_r)
    grad_z = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))

    for l in reversed(range(params.folds)):
        d_v, d_t = sigmoid_shrink_grad(v_list[l], params.thresholds[l], params.slope)
        grad_v = grad_z * d_v
        grad_t[l] = np.sum(grad_z * d_t)
        grads[f"W{l + 1}"] = grad_v.T @ y_r
        grad_y_r += grad_v @ params.input_weights[l]
        if l > 0:
            grads[f"S{l + 1}"] = grad_v.T @ z_list[l - 1]
            grad_z = grad_v @ params.lateral_weights[l - 1]

    grads["t"] = grad_t
    return grads, grad_y_r


def init_lista(
    psi: SensingMatrix,
    rng: np.random.Generator,
    folds: int = 3,
    threshold: float = 0.1,
    slope: float = 20.0,
    lateral_noise_std: float = 0.01,
    step: float = 1.0,
) -> ListaParams:
    """
    ISTA-shaped initialization

    W_l = step Psi_r^T (N x 2M), S_l = I - step Psi_r^T Psi_r + noise, t_l = threshold.
    With step 1 and a vanishing threshold, one fold then reproduces one ISTA
    gradient step, since Re(Psi^H y) = Psi_r^T [Re y, Im y].

    Psi_r^T Psi_r = Re(Psi^H Psi) has eigenvalues in [0, 1], so any step up to 2
    keeps the lateral map non-expansive. A larger step raises the gain of the
    first fold on the support, which is only M/N at step 1.
    """
    require(folds >= 1, "LISTA needs at least one fold", folds=folds)
    require(0.0 < step <= 2.0, "LISTA init step must lie in (0, 2]", "INVALID_STEP", step=step)
    psi_r = psi.realified
    weight = step * psi_r.T
    gram = np.eye(psi.n_cols) - step * (psi_r.T @ psi_r)

    input_weights = [weight.copy() for _ in range(folds)]
    lateral_weights = []
    for _ in range(folds - 1):
        noise = rng.normal(0.0, lateral_noise_std, size=gram.shape) if lateral_noise_std > 0 else 0.0
        lateral_weights.append(gram + noise)

    return ListaParams(
        input_weights=input_weights,
        lateral_weights=lateral_weights,
        thresholds=np.full(folds, float(threshold)),
        slope=slope,
    )


def reconstruct(
    params: Optional[ListaParams],
    psi: SensingMatrix,
    y: np.ndarray,
    ista_cfg: Optional[IstaConfig] = None,
) -> np.ndarray:
    """LISTA estimate when params are given, ISTA otherwise"""
    if params is not None:
        z_hat, _ = lista_forward(params, y)
        return z_hat
    require(ista_cfg is not None, "ISTA reconstruction needs an IstaConfig")
    return ista(y, psi, ista_cfg)
