#!/usr/bin/env python3
"""
Report Repository for dps_lab
CSV and JSON outputs of evaluation, benchmarking and export commands

- tables go through pandas with `%.17g` floats
- pydantic reports are stored as indented JSON
"""

from pathlib import Path
from typing import List, Type, TypeVar

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ValidationError

from ..errors import StorageError
from ..models.report_models import BenchmarkReport, EvalReport
from ..models.run_models import LossHistory
from ..models.sampling_models import SamplingPattern

logger = structlog.get_logger(__name__)

FLOAT_FORMAT = "%.17g"
SUMMARY_COLUMNS = ["sampler", "recon", "factor", "mean_mse", "baseline_mse", "seconds"]

ReportT = TypeVar("ReportT", bound=BaseModel)


class ReportRepository:
    """Report files under one output directory"""

    def __init__(self, directory: Path):
        self.directory = Path(directory)

    def _target(self, name: str) -> Path:
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create {self.directory}: {e}", details={"path": str(self.directory)})
        return self.directory / name

    def _write_frame(self, frame: pd.DataFrame, name: str, **kwargs) -> Path:
        path = self._target(name)
        try:
            frame.to_csv(path, float_format=FLOAT_FORMAT, **kwargs)
        except OSError as e:
            raise StorageError(f"Cannot write {path}: {e}", details={"path": str(path)})
        logger.debug("report_written", path=str(path), rows=len(frame))
        return path

    def _read_frame(self, name: str, **kwargs) -> pd.DataFrame:
        path = self.directory / name
        try:
            return pd.read_csv(path, float_precision="round_trip", **kwargs)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise StorageError(f"Cannot read {path}: {e}", details={"path": str(path)})

    # ================================
    # Evaluation
    # ================================

    def write_eval_report(self, report: EvalReport, name: str = "eval_report.csv") -> Path:
        """Per-signal MSE table plus the full report as JSON next to it"""
        frame = pd.DataFrame({"signal_id": np.arange(len(report.per_signal_mse)), "mse": report.per_signal_mse})
        path = self._write_frame(frame, name, index=False)
        self.write_json(report, Path(name).with_suffix(".json").name)
        return path

    def append_summary(self, report: EvalReport, name: str = "summary.csv") -> pd.DataFrame:
        """Add one row to the summary table, creating it if needed"""
        row = pd.DataFrame([report.summary_row()], columns=SUMMARY_COLUMNS)
        if (self.directory / name).exists():
            summary = pd.concat([self.read_summary(name), row], ignore_index=True)
        else:
            summary = row
        self._write_frame(summary, name, index=False)
        return summary

    def read_summary(self, name: str = "summary.csv") -> pd.DataFrame:
        summary = self._read_frame(name)
        missing = [column for column in SUMMARY_COLUMNS if column not in summary.columns]
        if missing:
            raise StorageError("Summary table lacks columns", details={"missing": missing})
        return summary

    # ================================
    # Patterns and distributions
    # ================================

    def write_pattern(self, pattern: SamplingPattern, name: str = "pattern.csv") -> Path:
        frame = pd.DataFrame({"row": np.arange(pattern.m_rows), "index": pattern.indices})
        return self._write_frame(frame, name, index=False)

    def read_pattern(self, n_cols: int, name: str = "pattern.csv") -> SamplingPattern:
        frame = self._read_frame(name)
        return SamplingPattern(frame.sort_values("row")["index"].to_numpy(), n_cols)

    def write_distributions(self, pi: np.ndarray, name: str = "distributions.csv") -> Path:
        """pi as a matrix: one line per row m, one column per position n"""
        frame = pd.DataFrame(pi, columns=[str(n) for n in range(pi.shape[1])])
        return self._write_frame(frame, name, index_label="m")

    def read_distributions(self, name: str = "distributions.csv") -> np.ndarray:
        return self._read_frame(name, index_col="m").to_numpy(dtype=np.float64)

    def write_history(self, history: LossHistory, name: str = "loss_history.csv") -> Path:
        frame = pd.DataFrame(
            {column: history.column(column) for column in ("total", "mse", "entropy")},
            index=pd.Index(history.column("iteration").astype(np.int64), name="iteration"),
        )
        return self._write_frame(frame, name)

    # ================================
    # Timing
    # ================================

    def write_benchmark(self, report: BenchmarkReport, name: str = "timing.csv") -> Path:
        runs: List[dict] = [{"solver": "lista", "repeat": i, "seconds": s} for i, s in enumerate(report.lista_runs)]
        runs += [{"solver": "ista", "repeat": i, "seconds": s} for i, s in enumerate(report.ista_runs)]
        path = self._write_frame(pd.DataFrame(runs, columns=["solver", "repeat", "seconds"]), name, index=False)
        self.write_json(report, Path(name).with_suffix(".json").name)
        return path

    # ================================
    # JSON
    # ================================

    def write_json(self, report: BaseModel, name: str) -> Path:
        path = self._target(name)
        try:
            path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        except OSError as e:
            raise StorageError(f"Cannot write {path}: {e}", details={"path": str(path)})
        return path

    def read_json(self, model: Type[ReportT], name: str) -> ReportT:
        path = self.directory / name
        try:
            return model.model_validate_json(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise StorageError(f"Cannot read {path}: {e}", details={"path": str(path)})
        except ValidationError as e:
            raise StorageError(f"Invalid report {path}", details={"errors": [err["msg"] for err in e.errors()]})
