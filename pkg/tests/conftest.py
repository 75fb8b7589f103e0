"""
Shared fixtures for the dps_lab test suite
"""

import numpy as np
import pytest

from dps_lab.config.settings import SamplerKind, TrainConfig
from dps_lab.models.reconstruction_models import ListaParams
from dps_lab.models.run_models import RunArtifacts
from dps_lab.services import sampling_service
from dps_lab.services.reconstruction_service import build_sensing_matrix, init_lista


def relative_error(analytic, numeric) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def central_differences(loss, array: np.ndarray, epsilon: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + epsilon
        plus = loss()
        array[index] = original - epsilon
        minus = loss()
        array[index] = original
        grad[index] = (plus - minus) / (2 * epsilon)
    return grad


def small_config(**overrides) -> TrainConfig:
    """Tiny problem that trains in well under a second per few dozen iterations"""
    values = dict(n=32, k=2, factor=2, n_iter=20, batch=8, log_every=10_000, seed=3)
    values.update(overrides)
    return TrainConfig(**values)


def make_artifacts(
    n: int = 128,
    factor: int = 4,
    sampler: SamplerKind = SamplerKind.UNIFORM,
    phi=None,
    params: ListaParams = None,
    seed: int = 0,
) -> RunArtifacts:
    """RunArtifacts without training: a fixed or given-logits pattern and ISTA-shaped LISTA"""
    m = n // factor
    cfg = TrainConfig(n=n, k=5, factor=factor, sampler_kind=sampler, seed=seed, factor_sweep=[factor])
    if phi is not None:
        pattern = sampling_service.map_pattern(phi)
    elif sampler == SamplerKind.RANDOM:
        pattern = sampling_service.random_pattern(n, m, np.random.default_rng(seed))
    else:
        pattern = sampling_service.uniform_pattern(n, m)
    if params is None:
        params = init_lista(build_sensing_matrix(pattern, n), np.random.default_rng(seed))
    return RunArtifacts(config=cfg, n=n, m=m, pattern=pattern, params=params, phi=phi, iteration=0)


def zero_lista(n: int, m: int, folds: int = 3) -> ListaParams:
    return ListaParams(
        input_weights=[np.zeros((n, 2 * m)) for _ in range(folds)],
        lateral_weights=[np.zeros((n, n)) for _ in range(folds - 1)],
        thresholds=np.zeros(folds),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
