#!/usr/bin/env python3
"""
Unit Tests for Analysis Service
Evaluation, rank certification, timing, grating lobes and distribution export
"""

import numpy as np
import pytest

from dps_lab.config.settings import IstaConfig, PatternMode, ReconKind, SamplerKind, SparseSignalConfig
from dps_lab.errors import ConfigurationError
from dps_lab.models.report_models import GratingLobeQuery
from dps_lab.models.sampling_models import LogitsMatrix
from dps_lab.repositories.report_repository import ReportRepository
from dps_lab.services import sampling_service
from dps_lab.services.analysis_service import (
    distribution_summary,
    evaluate,
    export_distributions,
    grating_lobe_angle,
    resolve_pattern,
    rip_rank_check,
    score_reconstructions,
    support_recovery_rate,
    timing_benchmark,
    tune_ista,
)
from dps_lab.services.signal_service import gen_sparse_batch
from tests.conftest import make_artifacts, zero_lista


def holdout(n: int, k: int, size: int, seed: int = 21):
    return gen_sparse_batch(SparseSignalConfig(n=n, k=k), size, np.random.default_rng(seed))


class TestScoring:
    """Test suite for per-signal scores"""

    def test_per_element_mse(self):
        """Test MSE is averaged over the n elements of each signal"""
        z = np.zeros((2, 4))
        z_hat = np.array([[2.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]])
        assert score_reconstructions(z_hat, z) == [1.0, 1.0]

    def test_support_recovery(self):
        """Test top-k magnitudes must hit the true support exactly"""
        z = np.array([[0.0, 1.0, 0.0, -2.0], [3.0, 0.0, 0.0, 1.0]])
        z_hat = np.array([[0.1, 0.9, 0.0, -1.5], [2.0, 1.5, 0.0, 0.0]])
        assert support_recovery_rate(z_hat, z) == 0.5


class TestEvaluate:
    """Test suite for test-set evaluation"""

    def test_zero_lista_matches_baseline(self):
        """Test predicting zeros reproduces K/N sigma^2 within 2%"""
        artifacts = make_artifacts(n=128, factor=4)
        report, z_hat = evaluate(artifacts, holdout(128, 5, 20_000), params=zero_lista(128, 32))

        assert np.all(z_hat == 0.0)
        assert report.baseline_mse == pytest.approx(5 / 128)
        assert report.mean_mse == pytest.approx(report.empirical_zero_mse, rel=1e-12)
        assert abs(report.mean_mse / report.baseline_mse - 1.0) < 0.02

    def test_report_fields(self):
        """Test sizes, pattern echo and recon label"""
        artifacts = make_artifacts(n=32, factor=2)
        report, z_hat = evaluate(artifacts, holdout(32, 5, 50))

        assert z_hat.shape == (50, 32)
        assert len(report.per_signal_mse) == 50
        assert report.pattern == list(range(0, 32, 2))
        assert report.recon == "lista" and report.sampler == "uniform"
        assert report.ista_threshold is None

    def test_ista_one_sparse_support(self):
        """Test ISTA finds 1-sparse supports from a random half of the spectrum"""
        artifacts = make_artifacts(n=16, factor=2, sampler=SamplerKind.RANDOM)
        report, _ = evaluate(
            artifacts, holdout(16, 1, 200), recon=ReconKind.ISTA, ista_cfg=IstaConfig(n_iter=100, threshold=0.01)
        )
        assert report.support_recovery_rate > 0.95
        assert report.ista_threshold == 0.01

    def test_length_mismatch(self):
        """Test a test set of the wrong length is rejected"""
        with pytest.raises(ConfigurationError) as exc_info:
            evaluate(make_artifacts(n=32, factor=2), holdout(64, 5, 10))

        assert exc_info.value.error_code == "SHAPE_MISMATCH"

    def test_tune_ista_picks_lowest(self):
        """Test the best report has the minimum MSE"""
        artifacts = make_artifacts(n=32, factor=2, sampler=SamplerKind.RANDOM)
        best, reports = tune_ista(artifacts, holdout(32, 2, 100), [0.001, 0.05, 0.5], n_iter=50)

        assert len(reports) == 3
        assert best.mean_mse == min(report.mean_mse for report in reports)
        assert best.ista_threshold in (0.001, 0.05, 0.5)


class TestResolvePattern:
    """Test suite for evaluation pattern selection"""

    def test_fixed_sampler_ignores_mode(self):
        """Test uniform runs always use their pattern"""
        artifacts = make_artifacts(n=32, factor=4)
        assert resolve_pattern(artifacts, PatternMode.SAMPLE) == artifacts.pattern

    def test_dps_map(self, rng):
        """Test map mode is the greedy argmax of the logits"""
        phi = sampling_service.init_logits(8, 32, rng)
        artifacts = make_artifacts(n=32, factor=4, sampler=SamplerKind.DPS, phi=phi)
        assert resolve_pattern(artifacts, PatternMode.MAP) == sampling_service.map_pattern(phi)

    def test_dps_sample_seeded(self, rng):
        """Test sample mode is reproducible from its seed"""
        phi = LogitsMatrix(np.zeros((8, 32)))
        artifacts = make_artifacts(n=32, factor=4, sampler=SamplerKind.DPS, phi=phi)

        first = resolve_pattern(artifacts, PatternMode.SAMPLE, pattern_seed=5)
        assert first == resolve_pattern(artifacts, PatternMode.SAMPLE, pattern_seed=5)
        assert first.m_rows == 8


class TestRipRankCheck:
    """Test suite for full-rank certification"""

    def test_uniform_pattern_fails(self):
        """Test stride-4 sampling aliases columns n and n+32"""
        report = rip_rank_check(sampling_service.uniform_pattern(128, 32), 128, 5, trials=2000)

        assert not report.passed
        assert not report.exhaustive
        assert report.min_singular_value < 1e-6

    def test_random_pattern_exhaustive_pass(self):
        """Test all C(32, 3) submatrices of a random half are full rank"""
        pattern = sampling_service.random_pattern(32, 16, np.random.default_rng(0))
        report = rip_rank_check(pattern, 32, 3)

        assert report.exhaustive
        assert report.tested_submatrices == 4960
        assert report.passed

    def test_single_column_always_passes(self):
        """Test K = 1 holds for any pattern"""
        report = rip_rank_check(sampling_service.uniform_pattern(128, 32), 128, 1)
        assert report.passed and report.exhaustive
        assert report.min_singular_value == pytest.approx(np.sqrt(32 / 128))

    def test_sparsity_must_be_below_m(self):
        """Test K >= M is rejected"""
        with pytest.raises(ConfigurationError) as exc_info:
            rip_rank_check(sampling_service.uniform_pattern(16, 4), 16, 4)

        assert exc_info.value.error_code == "INVALID_SPARSITY"

    def test_worst_subset_reported(self):
        """Test the weakest subset holds an aliased pair"""
        report = rip_rank_check(sampling_service.uniform_pattern(16, 8), 16, 2)
        first, second = report.worst_subset
        assert (second - first) % 8 == 0


class TestTimingBenchmark:
    """Test suite for the LISTA vs ISTA wall-clock comparison"""

    def test_report_structure(self):
        """Test repeats, run lists and the speedup ratio"""
        artifacts = make_artifacts(n=32, factor=2)
        report = timing_benchmark(artifacts.params, artifacts.pattern, IstaConfig(n_iter=20), holdout(32, 2, 50), 3)

        assert report.repeats == 3
        assert len(report.lista_runs) == 3 and len(report.ista_runs) == 3
        assert report.signals == 50 and report.ista_iters == 20
        assert report.speedup == pytest.approx(report.ista_seconds / report.lista_seconds)

    @pytest.mark.slow
    def test_lista_much_faster(self):
        """Test 3 folds beat 300 ISTA iterations a hundredfold on 1000 signals"""
        artifacts = make_artifacts(n=128, factor=4)
        report = timing_benchmark(artifacts.params, artifacts.pattern, IstaConfig(n_iter=300), holdout(128, 5, 1000))
        assert report.signals == 1000
        assert report.speedup >= 100

    def test_mismatched_lista_rejected(self):
        """Test LISTA input size must match the pattern"""
        artifacts = make_artifacts(n=32, factor=2)
        with pytest.raises(ConfigurationError):
            timing_benchmark(zero_lista(32, 8), artifacts.pattern, IstaConfig(n_iter=5), holdout(32, 2, 5))


class TestGratingLobe:
    """Test suite for the grating-lobe angle"""

    def test_known_angle(self):
        """Test sine 1/2 gives 30 degrees"""
        angle = grating_lobe_angle(GratingLobeQuery(k=1, wavelength_mm=1.0, pitch_mm=1.0, factor=2))
        assert angle == pytest.approx(30.0)

    def test_thinned_array_geometry(self):
        """Test 0.3 mm wavelength, 0.151 mm pitch and fourfold thinning give about 29.8 degrees"""
        angle = grating_lobe_angle(GratingLobeQuery(k=1, wavelength_mm=0.3, pitch_mm=0.151, factor=4))
        assert angle == pytest.approx(29.8, abs=0.05)

    def test_unit_sine_is_ninety_degrees(self):
        """Test an argument of exactly 1 is still visible, at 90 degrees"""
        angle = grating_lobe_angle(GratingLobeQuery(k=1, wavelength_mm=2.0, pitch_mm=1.0, factor=2))
        assert angle == pytest.approx(90.0)

    def test_invisible_lobe(self):
        """Test arguments above 1 give no angle"""
        assert grating_lobe_angle(GratingLobeQuery(k=2, wavelength_mm=1.0, pitch_mm=1.0, factor=1)) is None

    def test_monotone_in_order_and_factor(self):
        """Test the angle grows with k and shrinks as the array is thinned further"""
        def angle(k, factor):
            return grating_lobe_angle(GratingLobeQuery(k=k, wavelength_mm=0.3, pitch_mm=1.0, factor=factor))

        assert angle(1, 4) < angle(2, 4) < angle(3, 4)
        assert angle(1, 2) > angle(1, 4) > angle(1, 8)


class TestDistributions:
    """Test suite for learned distribution diagnostics"""

    def test_uniform_rows_summary(self):
        """Test entropy, sharpness and collisions of flat logits"""
        summary = distribution_summary(LogitsMatrix(np.zeros((4, 16))))

        assert summary.total_entropy == pytest.approx(4 * np.log(16))
        assert summary.max_probability == pytest.approx([1 / 16] * 4)
        assert summary.mode_collisions == 3

    def test_confident_rows_only(self):
        """Test unconfident rows are not counted as collisions"""
        assert distribution_summary(LogitsMatrix(np.zeros((4, 16))), confident=0.5).mode_collisions == 0

    def test_export_round_trip(self, tmp_path, rng):
        """Test the CSV holds pi and the SVG is written"""
        phi = sampling_service.init_logits(4, 16, rng)
        csv_path, svg_path = export_distributions(phi, tmp_path)

        assert csv_path.name == "distributions.csv"
        assert svg_path.exists() and svg_path.read_text().lstrip().startswith("<?xml")
        loaded = ReportRepository(tmp_path).read_distributions()
        assert np.array_equal(loaded, sampling_service.probabilities(phi))
