#!/usr/bin/env python3
"""
Analysis Service for dps_lab
============================

Evaluation and diagnostics of trained runs:
- test-set MSE, zero-predictor baselines and support recovery
- full-rank certification of K-column submatrices of Psi
- LISTA vs ISTA wall-clock comparison
- grating-lobe angle of uniformly thinned arrays
- export of the learned row distributions
"""

import itertools
import time
from pathlib import Path
from statistics import median
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.special import comb
from threadpoolctl import threadpool_limits

from ..config.settings import IstaConfig, PatternMode, ReconKind
from ..errors import ConfigurationError, require
from ..models.reconstruction_models import ListaParams
from ..models.report_models import (
    BenchmarkReport,
    DistributionSummary,
    EvalReport,
    GratingLobeQuery,
    RipReport,
    ordered_mean,
)
from ..models.run_models import RunArtifacts
from ..models.sampling_models import LogitsMatrix, SamplingPattern
from ..models.signal_models import SignalBatch
from ..repositories.report_repository import ReportRepository
from . import plotting, sampling_service
from .random_streams import RandomStreams
from .reconstruction_service import build_sensing_matrix, ista, lista_forward

logger = structlog.get_logger(__name__)

RIP_TOLERANCE = 1e-6
RIP_CHUNK = 4096


# ================================
# Evaluation
# ================================

def score_reconstructions(z_hat: np.ndarray, z: np.ndarray) -> List[float]:
    """Per-element MSE of every signal"""
    return [float(value) for value in np.mean((np.atleast_2d(z_hat) - np.atleast_2d(z)) ** 2, axis=1)]


def support_recovery_rate(z_hat: np.ndarray, z: np.ndarray) -> float:
    """Fraction of signals whose |z_hat| top-k positions equal the true support"""
    z_hat = np.atleast_2d(z_hat)
    z = np.atleast_2d(z)
    hits = 0
    for estimate, target in zip(z_hat, z):
        support = np.flatnonzero(target)
        if support.size == 0:
            continue
        top = np.argpartition(-np.abs(estimate), support.size - 1)[: support.size]
        hits += int(np.array_equal(np.sort(top), support))
    return hits / z.shape[0]


def resolve_pattern(
    artifacts: RunArtifacts, pattern_mode: PatternMode, pattern_seed: Optional[int] = None
) -> SamplingPattern:
    """
    Evaluation pattern of a run

    Runs without logits always use their fixed pattern. For dps runs, `map`
    and `fixed` use the greedy argmax of Phi and `sample` draws one Gumbel
    realization (from pattern_seed, or the run's `eval` stream).
    """
    if artifacts.phi is None:
        if pattern_mode != PatternMode.FIXED:
            logger.info("pattern_mode_ignored", requested=pattern_mode.value, sampler=artifacts.sampler.value)
        return artifacts.pattern
    if pattern_mode != PatternMode.SAMPLE:
        return sampling_service.map_pattern(artifacts.phi)

    rng = np.random.default_rng(pattern_seed) if pattern_seed is not None else RandomStreams(artifacts.config.seed).fresh("eval")
    noise = sampling_service.sample_gumbel(rng, artifacts.m, artifacts.n)
    pattern, _ = sampling_service.draw_pattern(artifacts.phi, noise)
    return pattern


def evaluate(
    artifacts: RunArtifacts,
    testset: SignalBatch,
    pattern_mode: PatternMode = PatternMode.MAP,
    recon: Optional[ReconKind] = None,
    ista_cfg: Optional[IstaConfig] = None,
    pattern_seed: Optional[int] = None,
    params: Optional[ListaParams] = None,
) -> Tuple[EvalReport, np.ndarray]:
    """
    Reconstruct the whole test set and score it

    Args:
        artifacts: trained run
        testset: hold-out signals of length artifacts.n
        pattern_mode: map, sample or fixed (see resolve_pattern)
        recon: lista (default, trained parameters) or ista on the same pattern
        ista_cfg: ISTA settings, defaults from the run config
        pattern_seed: seed of the Gumbel draw in sample mode
        params: LISTA parameters overriding the trained ones

    Returns:
        (report, estimates of shape (size, n))
    """
    if testset.n != artifacts.n:
        raise ConfigurationError(
            "Test set length does not match the run",
            "SHAPE_MISMATCH",
            {"testset_n": testset.n, "run_n": artifacts.n},
        )
    recon = recon or ReconKind.LISTA
    pattern = resolve_pattern(artifacts, pattern_mode, pattern_seed)
    y = sampling_service.apply_pattern(pattern, testset.x)

    threshold = None
    start = time.perf_counter()
    if recon == ReconKind.LISTA:
        z_hat, _ = lista_forward(params or artifacts.params, y)
    else:
        ista_cfg = ista_cfg or artifacts.config.ista_config()
        threshold = ista_cfg.threshold
        z_hat = ista(y, build_sensing_matrix(pattern, artifacts.n), ista_cfg)
    seconds = time.perf_counter() - start

    per_signal = score_reconstructions(z_hat, testset.z)
    cfg = artifacts.config
    report = EvalReport(
        sampler=artifacts.sampler.value,
        recon=recon.value,
        factor=artifacts.factor,
        pattern_mode=pattern_mode.value,
        pattern=pattern.indices.tolist(),
        mean_mse=ordered_mean(per_signal),
        per_signal_mse=per_signal,
        baseline_mse=cfg.k / artifacts.n * cfg.amplitude_std ** 2,
        empirical_zero_mse=float(np.mean(testset.z ** 2)),
        support_recovery_rate=support_recovery_rate(z_hat, testset.z),
        seconds=seconds,
        ista_threshold=threshold,
    )
    logger.info(
        "evaluation_finished",
        sampler=report.sampler,
        recon=report.recon,
        mode=report.pattern_mode,
        mean_mse=report.mean_mse,
        baseline_mse=report.baseline_mse,
        pattern=report.pattern,
    )
    return report, z_hat


def tune_ista(
    artifacts: RunArtifacts,
    testset: SignalBatch,
    thresholds: Sequence[float],
    n_iter: int,
    pattern_mode: PatternMode = PatternMode.MAP,
    pattern_seed: Optional[int] = None,
) -> Tuple[EvalReport, List[EvalReport]]:
    """ISTA evaluation for each threshold; returns the lowest-MSE report and all of them"""
    require(len(thresholds) >= 1, "Need at least one ISTA threshold")
    reports = [
        evaluate(
            artifacts,
            testset,
            pattern_mode,
            ReconKind.ISTA,
            IstaConfig(n_iter=n_iter, step=1.0, threshold=threshold),
            pattern_seed,
        )[0]
        for threshold in thresholds
    ]
    best = min(reports, key=lambda report: report.mean_mse)
    logger.info("ista_threshold_selected", threshold=best.ista_threshold, mean_mse=best.mean_mse)
    return best, reports


# ================================
# RIP rank certification
# ================================

def submatrix_min_singular_values(psi: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """Smallest singular value of psi[:, subset] for every row of subsets"""
    blocks = np.transpose(psi[:, subsets], (1, 0, 2))
    return np.linalg.svd(blocks, compute_uv=False)[:, -1]


def rip_rank_check(
    pattern: SamplingPattern,
    n: int,
    k: int,
    trials: int = 10_000,
    tol: float = RIP_TOLERANCE,
    rng: Optional[np.random.Generator] = None,
) -> RipReport:
    """
    Full-rank test of M x K column submatrices of Psi

    All C(n, k) subsets are tested when there are at most `trials` of them,
    otherwise `trials` uniformly drawn subsets.
    """
    require(1 <= k < pattern.m_rows, "Need 1 <= K < M", "INVALID_SPARSITY", k=k, m=pattern.m_rows)
    require(trials >= 1, "Need at least one trial", trials=trials)
    psi = build_sensing_matrix(pattern, n).psi

    exhaustive = comb(n, k, exact=True) <= trials
    if exhaustive:
        subsets = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        subsets = np.sort(np.argpartition(rng.random((trials, n)), k - 1, axis=1)[:, :k], axis=1)

    smallest = np.concatenate(
        [submatrix_min_singular_values(psi, subsets[start:start + RIP_CHUNK]) for start in range(0, len(subsets), RIP_CHUNK)]
    )
    worst = int(np.argmin(smallest))
    min_sv = float(smallest[worst])
    report = RipReport(
        tested_submatrices=len(subsets),
        min_singular_value=min_sv,
        tolerance=tol,
        passed=min_sv > tol,
        exhaustive=exhaustive,
        worst_subset=subsets[worst].tolist(),
    )
    logger.info("rip_check", tested=report.tested_submatrices, min_sv=min_sv, passed=report.passed, exhaustive=exhaustive)
    return report


# ================================
# Timing
# ================================

def _median_seconds(run: Callable[[], object], repeats: int) -> Tuple[float, List[float]]:
    runs = []
    for _ in range(repeats):
        start = time.perf_counter()
        run()
        runs.append(time.perf_counter() - start)
    return median(runs), runs


def timing_benchmark(
    params: ListaParams,
    pattern: SamplingPattern,
    ista_cfg: IstaConfig,
    testset: SignalBatch,
    repeats: int = 5,
) -> BenchmarkReport:
    """
    Median wall-clock of LISTA and ISTA over the whole test set

    Solver arithmetic only: sub-sampling and Psi are prepared beforehand,
    BLAS is pinned to one thread.
    """
    require(repeats >= 1, "Need at least one repetition", repeats=repeats)
    require(params.m == pattern.m_rows, "LISTA and pattern disagree on M", lista_m=params.m, pattern_m=pattern.m_rows)
    y = sampling_service.apply_pattern(pattern, testset.x)
    psi = build_sensing_matrix(pattern, pattern.n_cols)

    with threadpool_limits(limits=1):
        lista_seconds, lista_runs = _median_seconds(lambda: lista_forward(params, y), repeats)
        ista_seconds, ista_runs = _median_seconds(lambda: ista(y, psi, ista_cfg), repeats)

    report = BenchmarkReport(
        lista_seconds=lista_seconds,
        ista_seconds=ista_seconds,
        speedup=ista_seconds / max(lista_seconds, 1e-12),
        repeats=repeats,
        signals=testset.size,
        ista_iters=ista_cfg.n_iter,
        lista_runs=lista_runs,
        ista_runs=ista_runs,
    )
    logger.info("timing_benchmark", lista_s=lista_seconds, ista_s=ista_seconds, speedup=report.speedup)
    return report


# ================================
# Grating lobes
# ================================

def grating_lobe_angle(q: GratingLobeQuery) -> Optional[float]:
    """
    Positive k-th grating-lobe angle in degrees, arcsin(k lambda / (pitch N/M))

    None when the lobe falls outside the visible region (argument > 1).
    """
    if q.sine > 1.0:
        return None
    return float(np.degrees(np.arcsin(q.sine)))


# ================================
# Distributions
# ================================

def distribution_summary(phi: LogitsMatrix, confident: Optional[float] = None) -> DistributionSummary:
    pi = sampling_service.probabilities(phi)
    entropies = sampling_service.row_entropies(phi)
    return DistributionSummary(
        max_probability=pi.max(axis=1).tolist(),
        row_entropy=entropies.tolist(),
        total_entropy=float(max(np.sum(entropies), 0.0)),
        mode_collisions=sampling_service.mode_collisions(phi, confident),
    )


def export_distributions(phi: LogitsMatrix, directory: Path, name: str = "distributions") -> Tuple[Path, Path]:
    """Write pi as `<name>.csv` (rows m, columns n) and an SVG heatmap"""
    pi = sampling_service.probabilities(phi)
    csv_path = ReportRepository(directory).write_distributions(pi, f"{name}.csv")
    svg_path = plotting.plot_distributions(pi, Path(directory) / f"{name}.svg")
    logger.info("distributions_exported", csv=str(csv_path), svg=str(svg_path), rows=phi.m_rows, cols=phi.n_cols)
    return csv_path, svg_path
