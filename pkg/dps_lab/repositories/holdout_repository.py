#!/usr/bin/env python3
"""
Hold-out Set Repository for dps_lab
File access for the fixed test set of K-sparse signals

Format (text, one value per column, rows in `%.17g` so reloads are bit-exact):

    # dps-lab holdout set
    version = 1
    n = 128
    k = 5
    size = 1000
    seed = 7
    amplitude_std = 1
    [z]
    <size rows of n values>

Only z is stored; x is recomputed with the unitary DFT on load.
"""

from pathlib import Path
from typing import List, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, Field, ValidationError

from ..config.settings import SparseSignalConfig
from ..errors import StorageError
from ..models.signal_models import SignalBatch
from ..services.signal_service import dft

logger = structlog.get_logger(__name__)

HOLDOUT_MAGIC = "# dps-lab holdout set"
HOLDOUT_VERSION = 1
VALUE_FORMAT = "%.17g"


class HoldoutHeader(BaseModel):
    """Header fields of a hold-out set file"""
    version: int = Field(description="File format version")
    n: int = Field(gt=0, description="Signal length")
    k: int = Field(gt=0, description="Nonzeros per signal")
    size: int = Field(ge=1, description="Number of signals")
    seed: int = Field(description="Seed the set was generated from")
    amplitude_std: float = Field(default=1.0, gt=0.0, description="Std of nonzero amplitudes")

    def signal_config(self) -> SparseSignalConfig:
        return SparseSignalConfig(n=self.n, k=self.k, amplitude_std=self.amplitude_std, seed=self.seed)


class HoldoutSetRepository:
    """Reads and writes one hold-out set file"""

    def __init__(self, path: Path):
        self.path = Path(path)

    def save(self, batch: SignalBatch, cfg: SparseSignalConfig, seed: int) -> Path:
        header = HoldoutHeader(
            version=HOLDOUT_VERSION, n=batch.n, k=cfg.k, size=batch.size, seed=seed, amplitude_std=cfg.amplitude_std
        )
        lines = [HOLDOUT_MAGIC]
        lines += [f"{key} = {value:.17g}" if isinstance(value, float) else f"{key} = {value}"
                  for key, value in header.model_dump().items()]
        lines.append("[z]")
        lines += [" ".join(VALUE_FORMAT % value for value in row) for row in batch.z]

        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as e:
            raise StorageError(f"Cannot write hold-out set {self.path}: {e}", details={"path": str(self.path)})
        return self.path

    def load(self) -> Tuple[SignalBatch, HoldoutHeader]:
        """Returns the batch (x recomputed from z) and the header"""
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise StorageError(f"Cannot read hold-out set {self.path}: {e}", details={"path": str(self.path)})

        if not lines or lines[0].strip() != HOLDOUT_MAGIC:
            raise StorageError("Not a hold-out set file", "BAD_MAGIC", {"path": str(self.path)})
        try:
            body_start = lines.index("[z]")
        except ValueError:
            raise StorageError("Hold-out set has no [z] section", details={"path": str(self.path)})

        header = self._parse_header(lines[1:body_start])
        z = self._parse_rows(lines[body_start + 1:], header)
        logger.debug("test_set_loaded", path=str(self.path), size=header.size, n=header.n)
        return SignalBatch(z=z, x=dft(z)), header

    def _parse_header(self, lines: List[str]) -> HoldoutHeader:
        fields = {}
        for line in lines:
            if not line.strip() or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise StorageError(f"Malformed header line: {line!r}", details={"path": str(self.path)})
            fields[key.strip()] = value.strip()
        try:
            header = HoldoutHeader(**fields)
        except ValidationError as e:
            raise StorageError(
                "Invalid hold-out set header",
                details={"path": str(self.path), "errors": [err["msg"] for err in e.errors()]},
            )
        if header.version != HOLDOUT_VERSION:
            raise StorageError(
                f"Unsupported hold-out set version {header.version}",
                "UNSUPPORTED_VERSION",
                {"path": str(self.path), "version": header.version},
            )
        return header

    def _parse_rows(self, lines: List[str], header: HoldoutHeader) -> np.ndarray:
        rows = [line.split() for line in lines if line.strip()]
        if len(rows) != header.size or any(len(row) != header.n for row in rows):
            raise StorageError(
                "Hold-out set body does not match its header",
                "TRUNCATED_ARRAY",
                {"path": str(self.path), "rows": len(rows), "size": header.size, "n": header.n},
            )
        try:
            return np.array([[float(value) for value in row] for row in rows], dtype=np.float64)
        except ValueError as e:
            raise StorageError(f"Non-numeric value in hold-out set: {e}", details={"path": str(self.path)})
