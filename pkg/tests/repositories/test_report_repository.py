#!/usr/bin/env python3
"""
Unit Tests for the Report Repository
"""

import json

import numpy as np
import pytest

from dps_lab.errors import StorageError
from dps_lab.models.report_models import BenchmarkReport, EvalReport, RipReport
from dps_lab.models.run_models import LossHistory, LossRecord
from dps_lab.models.sampling_models import SamplingPattern
from dps_lab.repositories.report_repository import ReportRepository


def eval_report(factor: int = 4, mse=(0.1, 0.30000000000000004)) -> EvalReport:
    return EvalReport(
        sampler="dps",
        recon="lista",
        factor=factor,
        pattern=[3, 0],
        mean_mse=(mse[0] + mse[1]) / 2,
        per_signal_mse=list(mse),
        baseline_mse=5 / 128,
        empirical_zero_mse=0.04,
        support_recovery_rate=0.5,
        seconds=0.01,
    )


class TestReportRepository:
    """Test suite for ReportRepository"""

    def test_eval_report_csv_and_json(self, tmp_path):
        """Test per-signal table and JSON twin"""
        repo = ReportRepository(tmp_path)
        path = repo.write_eval_report(eval_report(), "eval_lista_map.csv")

        assert path.read_text().splitlines()[0] == "signal_id,mse"
        assert repo.read_json(EvalReport, "eval_lista_map.json") == eval_report()

    def test_per_signal_values_exact(self, tmp_path):
        """Test `%.17g` keeps every float64 digit"""
        repo = ReportRepository(tmp_path)
        repo.write_eval_report(eval_report())
        row = repo._read_frame("eval_report.csv")["mse"].tolist()
        assert row == [0.1, 0.30000000000000004]

    def test_distributions_reload_bit_exact(self, tmp_path):
        """Test arbitrary float64 tables come back identical"""
        rng = np.random.default_rng(3)
        pi = rng.dirichlet(np.ones(16), size=4)
        repo = ReportRepository(tmp_path)
        repo.write_distributions(pi)

        assert np.array_equal(repo.read_distributions(), pi)

    def test_summary_appends(self, tmp_path):
        """Test rows accumulate in order"""
        repo = ReportRepository(tmp_path)
        repo.append_summary(eval_report(factor=2))
        summary = repo.append_summary(eval_report(factor=4))

        assert summary["factor"].tolist() == [2, 4]
        assert repo.read_summary()["sampler"].tolist() == ["dps", "dps"]

    def test_summary_missing_columns(self, tmp_path):
        """Test foreign tables are refused"""
        (tmp_path / "summary.csv").write_text("a,b\n1,2\n")
        with pytest.raises(StorageError):
            ReportRepository(tmp_path).read_summary()

    def test_pattern_keeps_row_order(self, tmp_path):
        """Test selection order survives the CSV"""
        repo = ReportRepository(tmp_path)
        repo.write_pattern(SamplingPattern(np.array([7, 2, 5]), 8))
        assert repo.read_pattern(8).indices.tolist() == [7, 2, 5]

    def test_history_table(self, tmp_path):
        """Test iteration index and loss columns"""
        history = LossHistory([LossRecord(1, 2.0, 1.5, 10.0), LossRecord(2, 1.0, 0.75, 9.5)])
        path = ReportRepository(tmp_path).write_history(history)
        assert path.read_text().splitlines() == ["iteration,total,mse,entropy", "1,2,1.5,10", "2,1,0.75,9.5"]

    def test_benchmark_runs(self, tmp_path):
        """Test one line per solver repetition"""
        report = BenchmarkReport(
            lista_seconds=0.1, ista_seconds=2.0, speedup=20.0, repeats=2, signals=10, ista_iters=300,
            lista_runs=[0.1, 0.1], ista_runs=[2.0, 2.0],
        )
        repo = ReportRepository(tmp_path)
        path = repo.write_benchmark(report)

        assert len(path.read_text().splitlines()) == 5
        assert json.loads((tmp_path / "timing.json").read_text())["speedup"] == 20.0

    def test_json_validation(self, tmp_path):
        """Test invalid JSON reports are storage errors"""
        (tmp_path / "rip.json").write_text(json.dumps({"tested_submatrices": 1}))
        with pytest.raises(StorageError):
            ReportRepository(tmp_path).read_json(RipReport, "rip.json")

    def test_missing_table(self, tmp_path):
        """Test reading an absent table is a storage error"""
        with pytest.raises(StorageError):
            ReportRepository(tmp_path).read_distributions()

    def test_unwritable_directory(self, tmp_path):
        """Test a file in place of the directory is a storage error"""
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        with pytest.raises(StorageError):
            ReportRepository(blocker / "reports").write_pattern(SamplingPattern(np.array([0]), 2))
