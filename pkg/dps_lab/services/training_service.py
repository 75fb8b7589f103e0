#!/usr/bin/env python3
"""
Training Service for dps_lab
============================

Joint optimization of the sampling logits Phi and the LISTA parameters theta:

    for i = 1..n_iter:
        draw a batch of K-sparse signals and their spectra
        draw a pattern (fresh Gumbel noise for dps, fixed otherwise)
        sub-sample, reconstruct, score
        backpropagate through LISTA and, for dps, the straight-through softmax
        Adam step on theta and Phi (Phi step scaled by lr_phi / lr_theta)

Fixed-pattern samplers (uniform, random) never create or touch Phi.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import structlog

from ..config.settings import ReconKind, SamplerKind, TemperatureSchedule, TrainConfig
from ..errors import DivergenceError, require
from ..models.reconstruction_models import ListaParams
from ..models.report_models import GradCheckBlock, GradCheckReport
from ..models.run_models import LossHistory, LossRecord, RunArtifacts
from ..models.sampling_models import GumbelNoise, LogitsMatrix, SamplingPattern
from . import sampling_service
from .random_streams import RandomStreams
from .reconstruction_service import (
    build_sensing_matrix,
    init_lista,
    lista_backward,
    lista_forward,
    sigmoid_shrink,
    sigmoid_shrink_grad,
)
from .signal_service import effective_length, gen_sparse_batch

logger = structlog.get_logger(__name__)

PHI = "phi"


# ================================
# Temperature and loss
# ================================

def anneal_tau(schedule: TemperatureSchedule, i: int) -> float:
    """
    Linear temperature at 1-based iteration i

    Endpoints are returned exactly; a single-iteration schedule yields tau_end.
    """
    require(
        schedule.tau_init >= schedule.tau_end,
        "Temperature schedule must not increase",
        "INVALID_TEMPERATURE",
        tau_init=schedule.tau_init,
        tau_end=schedule.tau_end,
    )
    require(1 <= i <= schedule.n_iter, "Iteration outside schedule", "SCHEDULE_RANGE", i=i, n_iter=schedule.n_iter)
    if i == schedule.n_iter:
        return schedule.tau_end
    if i == 1:
        return schedule.tau_init
    delta = (schedule.tau_init - schedule.tau_end) / (schedule.n_iter - 1)
    return schedule.tau_init - (i - 1) * delta


@dataclass
class LossTerms:
    """Loss components of one mini-batch; penalties already carry their multipliers"""
    mse: float
    l2_penalty: float
    entropy_penalty: float
    row_entropy: float


def total_loss(
    z_hat: np.ndarray,
    z: np.ndarray,
    theta: ListaParams,
    phi: Optional[LogitsMatrix],
    cfg: TrainConfig,
) -> Tuple[float, LossTerms]:
    """
    mean_b ||z_hat_b - z_b||^2 + lambda ||theta||^2 + mu L_S(Phi)

    row_entropy is the unweighted L_S (0 without logits).
    """
    require(z_hat.shape == z.shape, "Estimate and target shapes differ", z_hat=z_hat.shape, z=z.shape)
    mse = float(np.mean(np.sum((z_hat - z) ** 2, axis=1)))
    l2 = cfg.l2_lambda * theta.squared_norm() if cfg.l2_lambda > 0 else 0.0
    row_entropy = sampling_service.entropy_penalty(phi)[0] if phi is not None else 0.0
    entropy = cfg.entropy_mu * row_entropy
    return mse + l2 + entropy, LossTerms(mse=mse, l2_penalty=l2, entropy_penalty=entropy, row_entropy=row_entropy)


def mse_grad(z_hat: np.ndarray, z: np.ndarray) -> np.ndarray:
    """d/dz_hat of the batch-mean squared error"""
    return 2.0 * (z_hat - z) / z_hat.shape[0]


# ================================
# Adam
# ================================

@dataclass
class AdamState:
    """First and second moments per named parameter plus the step counter"""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(
    state: AdamState,
    grads: Dict[str, np.ndarray],
    params: Dict[str, np.ndarray],
    lr: float,
    cfg: TrainConfig,
    multipliers: Optional[Dict[str, float]] = None,
) -> Dict[str, np.ndarray]:
    """
    One bias-corrected Adam update, in place

    Args:
        state: moments, created lazily per parameter name
        grads: gradient per parameter name
        params: arrays updated in place
        lr: base learning rate
        cfg: source of beta1, beta2 and eps
        multipliers: per-name factor on the update step (logits use lr_phi / lr_theta)
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(
                f"Non-finite gradient for {name}", details={"parameter": name, "step": state.step + 1}
            )

    state.step += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    multipliers = multipliers or {}

    for name, grad in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(grad)
            state.v[name] = np.zeros_like(grad)
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * grad
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * grad * grad
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        params[name] -= lr * multipliers.get(name, 1.0) * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return params


# ================================
# Training loop
# ================================

class TrainingService:
    """
    One joint training run

    Randomness comes from named streams of the run seed: `data` for batches,
    `gumbel` for pattern noise, `init` for Phi and LISTA, `pattern` for the
    random baseline. Identical config therefore means identical artifacts.
    """

    def __init__(self, cfg: TrainConfig):
        require(cfg.recon_kind == ReconKind.LISTA, "Only LISTA has trainable parameters", "RECON_NOT_TRAINABLE",
                recon=cfg.recon_kind.value)
        self.cfg = cfg
        self.streams = RandomStreams(cfg.seed)

        self.n = effective_length(cfg.n, cfg.factor)
        self.m = self.n // cfg.factor
        if self.n != cfg.n:
            logger.info("signal_length_adjusted", nominal=cfg.n, effective=self.n, factor=cfg.factor)
        require(cfg.k < self.n, "Sparsity must be below the signal length", "INVALID_SPARSITY", k=cfg.k, n=self.n)

        self.signal_cfg = cfg.signal_config().model_copy(update={"n": self.n})
        self.schedule = cfg.schedule()
        self.phi: Optional[LogitsMatrix] = None
        self.pattern = self._initial_pattern()
        self.params = init_lista(
            build_sensing_matrix(self.pattern, self.n),
            self.streams.get("init"),
            folds=cfg.lista_folds,
            threshold=cfg.lista_threshold_init,
            slope=cfg.lista_slope,
            lateral_noise_std=cfg.lateral_noise_std,
            step=cfg.lista_init_step,
        )
        self.adam = AdamState()
        self.history = LossHistory()
        self.metrics = {"iterations": 0, "seconds": 0.0}

    def _initial_pattern(self) -> SamplingPattern:
        kind = self.cfg.sampler_kind
        if kind == SamplerKind.UNIFORM:
            return sampling_service.uniform_pattern(self.n, self.m)
        if kind == SamplerKind.RANDOM:
            return sampling_service.random_pattern(self.n, self.m, self.streams.get("pattern"))
        self.phi = sampling_service.init_logits(self.m, self.n, self.streams.get("init"))
        return sampling_service.map_pattern(self.phi)

    @property
    def trainable(self) -> Dict[str, np.ndarray]:
        named = dict(self.params.tensors())
        if self.phi is not None:
            named[PHI] = self.phi.phi
        return named

    def artifacts(self, iteration: int) -> RunArtifacts:
        """Snapshot of the run after `iteration` completed iterations"""
        pattern = sampling_service.map_pattern(self.phi) if self.phi is not None else self.pattern
        return RunArtifacts(
            config=self.cfg,
            n=self.n,
            m=self.m,
            pattern=pattern,
            params=self.params.copy(),
            phi=self.phi.copy() if self.phi is not None else None,
            history=LossHistory(list(self.history.records)),
            seeds=self.streams.recorded_seeds(),
            iteration=iteration,
        )

    def step(self, i: int) -> LossRecord:
        """Iteration i (1-based) of the training loop"""
        cfg = self.cfg
        batch = gen_sparse_batch(self.signal_cfg, cfg.batch, self.streams.get("data"))

        if self.phi is not None:
            tau = anneal_tau(self.schedule, i)
            noise = sampling_service.sample_gumbel(self.streams.get("gumbel"), self.m, self.n)
            pattern, mask = sampling_service.draw_pattern(self.phi, noise)
        else:
            pattern = self.pattern

        y = sampling_service.apply_pattern(pattern, batch.x)
        z_hat, cache = lista_forward(self.params, y)
        total, terms = total_loss(z_hat, batch.z, self.params, self.phi, cfg)
        if not np.isfinite(total):
            raise DivergenceError(
                f"Loss became non-finite at iteration {i}",
                details={"iteration": i, "mse": terms.mse},
                partial=self.artifacts(i - 1),
            )

        grads, grad_y_r = lista_backward(self.params, cache, mse_grad(z_hat, batch.z))
        if cfg.l2_lambda > 0:
            for name, array in self.params.tensors().items():
                grads[name] = grads[name] + 2.0 * cfg.l2_lambda * array

        if self.phi is not None:
            soft = sampling_service.soft_rows(self.phi, noise, mask, tau)
            upstream = sampling_service.onehot_upstream(grad_y_r[:, : self.m], grad_y_r[:, self.m:], batch.x)
            grad_phi = sampling_service.st_grad_logits(upstream, soft, tau, mask)
            if cfg.entropy_mu > 0:
                grad_phi = grad_phi + cfg.entropy_mu * sampling_service.entropy_penalty(self.phi)[1]
            grads[PHI] = grad_phi

        try:
            adam_step(self.adam, grads, self.trainable, cfg.lr_theta, cfg, {PHI: cfg.phi_step_multiplier})
        except DivergenceError as e:
            e.partial = self.artifacts(i - 1)
            raise
        self.params.clamp_thresholds()

        record = LossRecord(iteration=i, total=total, mse=terms.mse, entropy=terms.row_entropy)
        self.history.append(record)
        return record

    def run(self, progress: Optional[Callable[[LossRecord], None]] = None) -> RunArtifacts:
        cfg = self.cfg
        logger.info(
            "training_started",
            sampler=cfg.sampler_kind.value,
            n=self.n,
            m=self.m,
            k=cfg.k,
            n_iter=cfg.n_iter,
            seed=cfg.seed,
        )
        start = time.perf_counter()
        for i in range(1, cfg.n_iter + 1):
            record = self.step(i)
            if progress is not None:
                progress(record)
            if i % cfg.log_every == 0 or i == cfg.n_iter:
                logger.info(
                    "training_progress",
                    iteration=i,
                    loss=record.total,
                    mse=record.mse,
                    entropy=record.entropy,
                    tau=anneal_tau(self.schedule, i) if self.phi is not None else None,
                )

        self.metrics["iterations"] = cfg.n_iter
        self.metrics["seconds"] = time.perf_counter() - start
        artifacts = self.artifacts(cfg.n_iter)
        logger.info("training_finished", seconds=round(self.metrics["seconds"], 3), pattern=artifacts.pattern.indices.tolist())
        return artifacts


def train(cfg: TrainConfig) -> RunArtifacts:
    return TrainingService(cfg).run()


# ================================
# Gradient checks
# ================================

def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-12)
    return float(np.max(np.abs(analytic - numeric))) / scale


def _central_differences(loss: Callable[[], float], array: np.ndarray, epsilon: float) -> np.ndarray:
    """d loss / d array by perturbing array in place"""
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + epsilon
        plus = loss()
        array[index] = original - epsilon
        minus = loss()
        array[index] = original
        grad[index] = (plus - minus) / (2.0 * epsilon)
    return grad


def _check_softmax_st(rng: np.random.Generator, tau: float, epsilon: float) -> float:
    phi = LogitsMatrix(0.3 * rng.normal(size=(3, 8)))
    noise = GumbelNoise(0.3 * sampling_service.sample_gumbel(rng, 3, 8).e)
    _, mask = sampling_service.draw_pattern(phi, noise)
    weights = rng.normal(size=(3, 8))

    def loss() -> float:
        return float(np.sum(weights * sampling_service.soft_rows(phi, noise, mask, tau)))

    soft = sampling_service.soft_rows(phi, noise, mask, tau)
    analytic = sampling_service.st_grad_logits(weights, soft, tau, mask)
    return _relative_error(analytic, _central_differences(loss, phi.phi, epsilon))


def _check_entropy(rng: np.random.Generator, epsilon: float) -> float:
    phi = LogitsMatrix(rng.normal(size=(3, 8)))
    analytic = sampling_service.entropy_penalty(phi)[1].copy()
    numeric = _central_differences(lambda: sampling_service.entropy_penalty(phi)[0], phi.phi, epsilon)
    return _relative_error(analytic, numeric)


def _check_sigmoid_shrink(rng: np.random.Generator, epsilon: float) -> float:
    v = rng.normal(size=8)
    t = np.array([0.3])
    slope = 20.0
    weights = rng.normal(size=8)

    def loss() -> float:
        return float(np.sum(weights * sigmoid_shrink(v, t[0], slope)))

    d_v, d_t = sigmoid_shrink_grad(v, t[0], slope)
    analytic = np.concatenate([weights * d_v, [np.sum(weights * d_t)]])
    numeric = np.concatenate([_central_differences(loss, v, epsilon), _central_differences(loss, t, epsilon)])
    return _relative_error(analytic, numeric)


def _check_lista(rng: np.random.Generator, epsilon: float) -> float:
    n, m = 8, 3
    pattern = sampling_service.random_pattern(n, m, rng)
    params = init_lista(build_sensing_matrix(pattern, n), rng, folds=3, threshold=0.1, slope=20.0, lateral_noise_std=0.1)
    params.thresholds[:] = rng.uniform(0.05, 0.3, size=3)
    y_r = rng.normal(size=(2, 2 * m))
    weights = rng.normal(size=(2, n))

    def loss() -> float:
        z_hat, _ = lista_forward(params, y_r[:, :m] + 1j * y_r[:, m:])
        return float(np.sum(weights * z_hat))

    _, cache = lista_forward(params, y_r[:, :m] + 1j * y_r[:, m:])
    grads, grad_y_r = lista_backward(params, cache, weights)

    analytic: List[np.ndarray] = []
    numeric: List[np.ndarray] = []
    for name, array in params.tensors().items():
        analytic.append(grads[name].ravel())
        numeric.append(_central_differences(loss, array, epsilon).ravel())
    analytic.append(grad_y_r.ravel())
    numeric.append(_central_differences(loss, y_r, epsilon).ravel())
    return _relative_error(np.concatenate(analytic), np.concatenate(numeric))


def grad_check_all(epsilon: float = 1e-5, tolerance: float = 1e-4, seed: int = 0) -> GradCheckReport:
    """
    Compare every analytic gradient path with central finite differences

    Blocks: straight-through softmax at tau 5, 1 and 0.5, entropy penalty,
    sigmoid shrinkage, full LISTA (parameters and input).
    Error per block is ||a - n||_inf / max(||a||_inf, ||n||_inf, 1e-12).
    """
    rng = np.random.default_rng(seed)
    errors = [(f"softmax_st[tau={tau:g}]", _check_softmax_st(rng, tau, epsilon)) for tau in (5.0, 1.0, 0.5)]
    errors.append(("entropy_penalty", _check_entropy(rng, epsilon)))
    errors.append(("sigmoid_shrink", _check_sigmoid_shrink(rng, epsilon)))
    errors.append(("lista", _check_lista(rng, epsilon)))

    blocks = [GradCheckBlock(name=name, max_relative_error=error, passed=error < tolerance) for name, error in errors]
    report = GradCheckReport(epsilon=epsilon, tolerance=tolerance, blocks=blocks)
    for block in blocks:
        logger.debug("gradcheck_block", name=block.name, error=block.max_relative_error, passed=block.passed)
    return report
