#!/usr/bin/env python3
"""
Checkpoint Repository for dps_lab
Persistence of RunArtifacts in a versioned, bit-exact text format

    # dps-lab checkpoint
    [meta]
    format_version = 1
    seed = 17
    iteration = 20000
    n = 128
    m = 32
    config = {...json...}
    seeds = {...json...}
    @array pattern 1 M
    [phi]                      (dps runs only)
    @array phi M N
    [theta]
    slope = 20
    @array W1 N 2M
    @array S2 N N
    ...
    @array t 1 L
    [history]
    @array history ITER 4      (iteration, total, mse, entropy)

Arrays are written row-major with `%.17g`, which round-trips every float64.
"""

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import structlog
from pydantic import ValidationError

from ..config.settings import TrainConfig
from ..errors import StorageError
from ..models.reconstruction_models import ListaParams
from ..models.run_models import LossHistory, LossRecord, RunArtifacts
from ..models.sampling_models import LogitsMatrix, SamplingPattern

logger = structlog.get_logger(__name__)

CHECKPOINT_MAGIC = "# dps-lab checkpoint"
CHECKPOINT_VERSION = 1
HISTORY_COLUMNS = ("iteration", "total", "mse", "entropy")


class CheckpointRepositoryInterface(ABC):
    """Abstract interface for run checkpoint storage"""

    @abstractmethod
    def save(self, artifacts: RunArtifacts) -> Path:
        """Persist a run"""
        pass

    @abstractmethod
    def load(self) -> RunArtifacts:
        """Restore a run"""
        pass


def _format_array(name: str, array: np.ndarray) -> List[str]:
    array = np.atleast_2d(np.asarray(array, dtype=np.float64))
    lines = [f"@array {name} {array.shape[0]} {array.shape[1]}"]
    lines += [" ".join("%.17g" % value for value in row) for row in array]
    return lines


class TextCheckpointRepository(CheckpointRepositoryInterface):
    """Checkpoint as one plain-text file"""

    def __init__(self, path: Path):
        self.path = Path(path)

    # ================================
    # Writing
    # ================================

    def save(self, artifacts: RunArtifacts) -> Path:
        lines = [CHECKPOINT_MAGIC, "[meta]"]
        lines.append(f"format_version = {CHECKPOINT_VERSION}")
        lines.append(f"seed = {artifacts.config.seed}")
        lines.append(f"iteration = {artifacts.iteration}")
        lines.append(f"n = {artifacts.n}")
        lines.append(f"m = {artifacts.m}")
        lines.append(f"config = {artifacts.config.model_dump_json()}")
        lines.append(f"seeds = {json.dumps(artifacts.seeds, sort_keys=True)}")
        lines += _format_array("pattern", artifacts.pattern.indices[None, :])

        if artifacts.phi is not None:
            lines.append("[phi]")
            lines += _format_array("phi", artifacts.phi.phi)

        lines.append("[theta]")
        lines.append("slope = %.17g" % artifacts.params.slope)
        for name, array in artifacts.params.tensors().items():
            lines += _format_array(name, array if name != "t" else array[None, :])

        lines.append("[history]")
        history = np.array(
            [[getattr(record, column) for column in HISTORY_COLUMNS] for record in artifacts.history.records],
            dtype=np.float64,
        ).reshape(-1, len(HISTORY_COLUMNS))
        lines += _format_array("history", history)

        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as e:
            raise StorageError(f"Cannot write checkpoint {self.path}: {e}", details={"path": str(self.path)})

        logger.info("checkpoint_written", path=str(self.path), iteration=artifacts.iteration)
        return self.path

    # ================================
    # Reading
    # ================================

    def load(self) -> RunArtifacts:
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise StorageError(f"Cannot read checkpoint {self.path}: {e}", details={"path": str(self.path)})
        if not lines or lines[0].strip() != CHECKPOINT_MAGIC:
            raise StorageError("Not a checkpoint file", "BAD_MAGIC", {"path": str(self.path)})

        values, arrays = self._parse_sections(lines[1:])
        try:
            version = int(values["meta"]["format_version"])
        except (KeyError, ValueError):
            raise StorageError("Checkpoint has no format version", details={"path": str(self.path)})
        if version != CHECKPOINT_VERSION:
            raise StorageError(
                f"Unsupported checkpoint version {version}", "UNSUPPORTED_VERSION", {"path": str(self.path)}
            )

        try:
            return self._assemble(values, arrays)
        except KeyError as e:
            raise StorageError(f"Checkpoint is missing {e}", details={"path": str(self.path)})
        except (ValueError, ValidationError) as e:
            raise StorageError(f"Checkpoint content is invalid: {e}", details={"path": str(self.path)})

    def _parse_sections(self, lines: List[str]) -> Tuple[Dict[str, Dict[str, str]], Dict[str, Dict[str, np.ndarray]]]:
        values: Dict[str, Dict[str, str]] = {}
        arrays: Dict[str, Dict[str, np.ndarray]] = {}
        section = None
        i = 0
        while i < len(lines):
            line = lines[i].strip()
            i += 1
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1]
                values.setdefault(section, {})
                arrays.setdefault(section, {})
                continue
            if section is None:
                raise StorageError("Checkpoint content before the first section", details={"path": str(self.path)})
            if line.startswith("@array"):
                parts = line.split()
                if len(parts) != 4:
                    raise StorageError(f"Malformed array header: {line!r}", details={"path": str(self.path)})
                name, rows, cols = parts[1], int(parts[2]), int(parts[3])
                body = lines[i:i + rows]
                i += rows
                arrays[section][name] = self._parse_array(name, body, rows, cols)
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise StorageError(f"Malformed line: {line!r}", details={"path": str(self.path)})
            values[section][key.strip()] = value.strip()
        return values, arrays

    def _parse_array(self, name: str, body: List[str], rows: int, cols: int) -> np.ndarray:
        parsed = [line.split() for line in body]
        if len(parsed) != rows or any(len(row) != cols for row in parsed):
            raise StorageError(
                f"Array {name} is truncated", "TRUNCATED_ARRAY", {"path": str(self.path), "array": name}
            )
        if rows == 0:
            return np.zeros((0, cols))
        return np.array([[float(value) for value in row] for row in parsed], dtype=np.float64)

    def _assemble(self, values, arrays) -> RunArtifacts:
        meta = values["meta"]
        config = TrainConfig.model_validate_json(meta["config"])
        n = int(meta["n"])

        theta = arrays["theta"]
        folds = config.lista_folds
        params = ListaParams(
            input_weights=[theta[f"W{l}"] for l in range(1, folds + 1)],
            lateral_weights=[theta[f"S{l}"] for l in range(2, folds + 1)],
            thresholds=theta["t"][0],
            slope=float(values["theta"]["slope"]),
        )

        phi = None
        if "phi" in arrays and "phi" in arrays["phi"]:
            phi = LogitsMatrix(arrays["phi"]["phi"])

        history = LossHistory()
        for row in arrays["history"]["history"]:
            history.append(LossRecord(iteration=int(row[0]), total=float(row[1]), mse=float(row[2]), entropy=float(row[3])))

        artifacts = RunArtifacts(
            config=config,
            n=n,
            m=int(meta["m"]),
            pattern=SamplingPattern(arrays["meta"]["pattern"][0].astype(np.int64), n),
            params=params,
            phi=phi,
            history=history,
            seeds={key: int(value) for key, value in json.loads(meta["seeds"]).items()},
            iteration=int(meta["iteration"]),
        )
        logger.debug("checkpoint_loaded", path=str(self.path), iteration=artifacts.iteration)
        return artifacts
