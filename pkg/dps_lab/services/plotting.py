"""
SVG figures for dps_lab reports
Headless (Agg) matplotlib; every function writes one file and closes its figure
"""

from pathlib import Path
from typing import Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from ..errors import StorageError  # noqa: E402
from ..models.sampling_models import SamplingPattern  # noqa: E402


def _save(fig, path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", bbox_inches="tight")
    except OSError as e:
        raise StorageError(f"Cannot write figure {path}: {e}", details={"path": str(path)})
    finally:
        plt.close(fig)
    return path


def plot_distributions(pi: np.ndarray, path: Path) -> Path:
    """Heatmap of the row distributions, rows m down, positions n across"""
    fig, ax = plt.subplots(figsize=(8, max(2.0, pi.shape[0] * 0.12)))
    image = ax.imshow(pi, aspect="auto", cmap="viridis", interpolation="nearest", vmin=0.0)
    ax.set_xlabel("position n")
    ax.set_ylabel("row m")
    fig.colorbar(image, ax=ax, label="probability")
    return _save(fig, path)


def plot_patterns(strips: Sequence[Tuple[str, SamplingPattern]], path: Path) -> Path:
    """One strip per labelled pattern, selected positions marked"""
    fig, ax = plt.subplots(figsize=(8, 0.5 + 0.4 * len(strips)))
    for row, (label, pattern) in enumerate(strips):
        ax.scatter(pattern.indices, np.full(pattern.m_rows, row), marker="|", s=120, color="black")
    ax.set_yticks(range(len(strips)))
    ax.set_yticklabels([label for label, _ in strips])
    ax.set_ylim(-0.5, len(strips) - 0.5)
    ax.invert_yaxis()
    ax.set_xlim(-0.5, max(pattern.n_cols for _, pattern in strips) - 0.5)
    ax.set_xlabel("position n")
    return _save(fig, path)


def plot_mse_vs_factor(summary: pd.DataFrame, path: Path) -> Path:
    """Mean test MSE per sampler/recon pair against the sub-sampling factor"""
    fig, ax = plt.subplots(figsize=(6, 4))
    latest = summary.drop_duplicates(subset=["sampler", "recon", "factor"], keep="last")
    for (sampler, recon), group in latest.groupby(["sampler", "recon"], sort=True):
        group = group.sort_values("factor")
        ax.plot(group["factor"], group["mean_mse"], marker="o", label=f"{sampler}+{recon}")
    baseline = latest.groupby("factor")["baseline_mse"].mean().sort_index()
    ax.plot(baseline.index, baseline.values, linestyle="--", color="gray", label="zeros")
    ax.set_xlabel("sub-sampling factor N/M")
    ax.set_ylabel("MSE")
    ax.legend()
    return _save(fig, path)


def plot_recoveries(z: np.ndarray, z_hat: np.ndarray, path: Path) -> Path:
    """Target and estimate stems, one panel per signal"""
    count = z.shape[0]
    fig, axes = plt.subplots(count, 1, figsize=(8, 1.8 * count), squeeze=False)
    positions = np.arange(z.shape[1])
    for ax, target, estimate in zip(axes[:, 0], z, z_hat):
        ax.stem(positions, target, linefmt="C0-", markerfmt="C0o", basefmt=" ", label="target")
        ax.plot(positions, estimate, "C1x", label="estimate")
    axes[0, 0].legend(loc="upper right")
    axes[-1, 0].set_xlabel("position n")
    return _save(fig, path)
