#!/usr/bin/env python3
"""
dps_lab command line
====================

    python -m dps_lab gen-test --n 128 --k 5 --size 1000 --seed 7 --out test.dat
    python -m dps_lab train --sampler dps --factor 4 --seed 17 --out run1/
    python -m dps_lab eval --run run1/ --test test.dat
    python -m dps_lab bench --run run1/ --test test.dat
    python -m dps_lab pattern --run run1/ run2/ --out patterns/ --rip-k 5
    python -m dps_lab export --run run1/ --out dist/
    python -m dps_lab gradcheck
    python -m dps_lab sweep --samplers dps uniform random --factors 2 4 8 --iters 2000 --out sweep/
    python -m dps_lab grating-lobe --k 1 --wavelength 0.3 --pitch 0.151 --factor 4

Exit codes: 0 success, 1 failed check, 2 usage/configuration/storage error,
3 divergence during training (partial checkpoint written).
"""

import argparse
import hashlib
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import structlog
from pydantic import ValidationError

from . import __version__
from .config import (
    IstaConfig,
    LabSettings,
    PatternMode,
    Profile,
    ReconKind,
    SamplerKind,
    SparseSignalConfig,
    TrainConfig,
    configure_logging,
    resolve_train_config,
)
from .errors import ConfigurationError, DivergenceError, DPSLabError, StorageError
from .models.report_models import GratingLobeQuery, RunManifest
from .models.run_models import RunArtifacts
from .models.signal_models import SignalBatch
from .repositories import HoldoutSetRepository, ReportRepository, TextCheckpointRepository
from .services import analysis_service, plotting, sampling_service
from .services.random_streams import RandomStreams
from .services.signal_service import effective_length, make_test_set
from .services.training_service import TrainingService, grad_check_all

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

CHECKPOINT_NAME = "checkpoint.txt"
MANIFEST_NAME = "manifest.json"


# ================================
# Helpers
# ================================

def _checkpoint_path(path: Path) -> Path:
    path = Path(path)
    return path / CHECKPOINT_NAME if path.is_dir() else path


def _load_run(path: Path) -> RunArtifacts:
    return TextCheckpointRepository(_checkpoint_path(path)).load()


def _load_test(path: Path) -> SignalBatch:
    batch, _ = HoldoutSetRepository(path).load()
    return batch


def _run_dir(path: Path) -> Path:
    path = Path(path)
    return path if path.is_dir() else path.parent


def _write_manifest(out: Path, argv: Sequence[str], cfg: Optional[TrainConfig], config_hash: Optional[str]) -> None:
    manifest = RunManifest(
        command=["dps_lab", *argv],
        config_hash=config_hash,
        resolved_config_hash=hashlib.sha256(cfg.model_dump_json().encode("utf-8")).hexdigest() if cfg else None,
        seed=cfg.seed if cfg else None,
        tool_version=__version__,
    )
    ReportRepository(out).write_json(manifest, MANIFEST_NAME)


def _train_into(out: Path, cfg: TrainConfig) -> RunArtifacts:
    """Train and persist; a diverged run leaves its partial checkpoint behind"""
    checkpoints = TextCheckpointRepository(Path(out) / CHECKPOINT_NAME)
    try:
        artifacts = TrainingService(cfg).run()
    except DivergenceError as e:
        if e.partial is not None:
            checkpoints.save(e.partial)
            ReportRepository(out).write_history(e.partial.history)
        raise
    checkpoints.save(artifacts)
    ReportRepository(out).write_history(artifacts.history)
    return artifacts


def _refresh_factor_plot(reports: ReportRepository) -> None:
    summary = reports.read_summary()
    plotting.plot_mse_vs_factor(summary, reports.directory / "mse_vs_factor.svg")


# ================================
# Commands
# ================================

def cmd_gen_test(args: argparse.Namespace) -> int:
    n = effective_length(args.n, args.factor) if args.factor else args.n
    seed = args.seed if args.seed is not None else 0
    cfg = SparseSignalConfig(n=n, k=args.k, amplitude_std=args.amplitude_std, seed=seed)
    make_test_set(cfg, args.size, seed, path=Path(args.out))
    print(f"wrote {args.size} signals (n={n}, k={args.k}) to {args.out}")
    return EXIT_OK


TRAIN_FLAGS = {
    "sampler": "sampler_kind",
    "recon": "recon_kind",
    "factor": "factor",
    "iters": "n_iter",
    "batch": "batch",
    "lr_theta": "lr_theta",
    "lr_phi": "lr_phi",
    "l2_lambda": "l2_lambda",
    "entropy_mu": "entropy_mu",
    "tau_init": "tau_init",
    "tau_end": "tau_end",
    "n": "n",
    "k": "k",
    "seed": "seed",
    "log_every": "log_every",
    "lista_init_step": "lista_init_step",
    "profile": "profile",
}


def _train_overrides(args: argparse.Namespace) -> Dict[str, object]:
    return {field: getattr(args, flag, None) for flag, field in TRAIN_FLAGS.items()}


def cmd_train(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg, config_hash = resolve_train_config(_train_overrides(args), args.config)
    out = Path(args.out)
    _write_manifest(out, argv, cfg, config_hash)
    artifacts = _train_into(out, cfg)
    print(f"trained {cfg.sampler_kind.value}+{cfg.recon_kind.value} (N={artifacts.n}, M={artifacts.m}) into {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    artifacts = _load_run(args.run)
    testset = _load_test(args.test)
    reports = ReportRepository(Path(args.out) if args.out else _run_dir(args.run))
    mode = PatternMode(args.pattern_mode)
    recon = ReconKind(args.recon)

    if recon == ReconKind.ISTA:
        thresholds = args.ista_threshold or [artifacts.config.ista_threshold]
        report, candidates = analysis_service.tune_ista(
            artifacts, testset, thresholds, args.ista_iters, mode, args.pattern_seed
        )
        for candidate in candidates:
            print(f"ista threshold={candidate.ista_threshold:g} mean_mse={candidate.mean_mse:.6e}")
        z_hat = None
    else:
        report, z_hat = analysis_service.evaluate(artifacts, testset, mode, pattern_seed=args.pattern_seed)

    stem = f"eval_{report.recon}_{report.pattern_mode}"
    reports.write_eval_report(report, f"{stem}.csv")
    reports.append_summary(report)
    _refresh_factor_plot(reports)

    if args.plot_examples:
        if z_hat is None:
            _, z_hat = analysis_service.evaluate(
                artifacts, testset, mode, ReconKind.ISTA,
                IstaConfig(n_iter=args.ista_iters, threshold=report.ista_threshold), args.pattern_seed,
            )
        count = min(args.plot_examples, testset.size)
        plotting.plot_recoveries(testset.z[:count], z_hat[:count], reports.directory / f"{stem}_examples.svg")

    print(
        f"{report.sampler}+{report.recon} factor={report.factor} mean_mse={report.mean_mse:.6e} "
        f"baseline={report.baseline_mse:.6e} support_recovery={report.support_recovery_rate:.3f}"
    )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    artifacts = _load_run(args.run)
    testset = _load_test(args.test)
    if testset.n != artifacts.n:
        raise ConfigurationError("Test set length does not match the run", "SHAPE_MISMATCH",
                                 {"testset_n": testset.n, "run_n": artifacts.n})
    ista_cfg = IstaConfig(n_iter=args.ista_iters, threshold=artifacts.config.ista_threshold)
    report = analysis_service.timing_benchmark(artifacts.params, artifacts.pattern, ista_cfg, testset, args.repeats)
    ReportRepository(Path(args.out) if args.out else _run_dir(args.run)).write_benchmark(report)
    print(f"lista={report.lista_seconds:.6f}s ista={report.ista_seconds:.6f}s speedup={report.speedup:.1f}")
    return EXIT_OK


def cmd_pattern(args: argparse.Namespace) -> int:
    reports = ReportRepository(Path(args.out))
    mode = PatternMode(args.pattern_mode)
    strips = []
    rip_failed = False
    for position, run in enumerate(args.run):
        artifacts = _load_run(run)
        pattern = analysis_service.resolve_pattern(artifacts, mode, args.pattern_seed)
        label = f"{artifacts.sampler.value} N/M={artifacts.factor}"
        suffix = "" if len(args.run) == 1 else f"_{position}"
        strips.append((label, pattern))
        reports.write_pattern(pattern, f"pattern{suffix}.csv")

        if args.rip_k:
            rng = RandomStreams(artifacts.config.seed).fresh("rip")
            rip = analysis_service.rip_rank_check(pattern, artifacts.n, args.rip_k, args.rip_trials, args.rip_tol, rng)
            reports.write_json(rip, f"rip_report{suffix}.json")
            rip_failed = rip_failed or not rip.passed
            print(f"{label}: rip {'pass' if rip.passed else 'FAIL'} min_sv={rip.min_singular_value:.3e}")

    plotting.plot_patterns(strips, reports.directory / "patterns.svg")
    if args.require_rip and rip_failed:
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    if args.init_only:
        factor = args.factor or TrainConfig().factor
        n = effective_length(args.n, factor)
        seed = args.seed if args.seed is not None else 0
        phi = sampling_service.init_logits(n // factor, n, RandomStreams(seed).get("init"))
    else:
        if not args.run:
            raise ConfigurationError("export needs --run or --init-only", "MISSING_RUN")
        artifacts = _load_run(args.run)
        if artifacts.phi is None:
            raise ConfigurationError(
                f"A {artifacts.sampler.value} run has no learned distributions", "NO_LOGITS"
            )
        phi = artifacts.phi

    out = Path(args.out)
    analysis_service.export_distributions(phi, out)
    summary = analysis_service.distribution_summary(phi)
    ReportRepository(out).write_json(summary, "distribution_summary.json")
    print(f"exported {phi.m_rows}x{phi.n_cols} distributions to {out} (mode collisions: {summary.mode_collisions})")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    report = grad_check_all(epsilon=args.epsilon, tolerance=args.tolerance, seed=args.seed or 0)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_sweep(args: argparse.Namespace, argv: Sequence[str]) -> int:
    out = Path(args.out)
    reports = ReportRepository(out)
    _write_manifest(out, argv, None, None)
    base_seed = args.seed if args.seed is not None else 0

    for factor in args.factors:
        for sampler in args.samplers:
            overrides = _train_overrides(args)
            overrides.update(sampler_kind=sampler, factor=factor, seed=base_seed)
            cfg, _ = resolve_train_config(overrides, args.config)
            run_dir = out / f"{sampler}_f{factor}"
            artifacts = _train_into(run_dir, cfg)

            test_path = out / "testsets" / f"test_n{artifacts.n}.dat"
            if test_path.exists():
                testset = _load_test(test_path)
            else:
                signal_cfg = cfg.signal_config().model_copy(update={"n": artifacts.n})
                testset = make_test_set(signal_cfg, args.test_size, base_seed, path=test_path)

            report, _ = analysis_service.evaluate(artifacts, testset, PatternMode.MAP)
            reports.append_summary(report)
            if args.ista_threshold and sampler != SamplerKind.UNIFORM.value:
                best, _ = analysis_service.tune_ista(artifacts, testset, args.ista_threshold, args.ista_iters)
                reports.append_summary(best)
            print(f"{sampler} factor={factor} mean_mse={report.mean_mse:.6e}")

    _refresh_factor_plot(reports)
    return EXIT_OK


def cmd_grating_lobe(args: argparse.Namespace) -> int:
    query = GratingLobeQuery(k=args.k, wavelength_mm=args.wavelength, pitch_mm=args.pitch, factor=args.factor)
    angle = analysis_service.grating_lobe_angle(query)
    print("no visible lobe" if angle is None else f"{angle:.2f}")
    return EXIT_OK


# ================================
# Parser
# ================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Run seed")
    common.add_argument("--config", type=Path, default=None, help="key = value configuration file")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--log-json", action="store_true", help="Emit JSON log lines")

    parser = argparse.ArgumentParser(prog="dps_lab", description="Learned sub-sampling and LISTA experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-test", parents=[common], help="Write a hold-out test set")
    gen.add_argument("--n", type=int, default=128)
    gen.add_argument("--k", type=int, default=5)
    gen.add_argument("--size", type=int, default=1000)
    gen.add_argument("--amplitude-std", type=float, default=1.0)
    gen.add_argument("--factor", type=int, default=None, help="Round n to the closest multiple of this factor")
    gen.add_argument("--out", required=True)

    train = commands.add_parser("train", parents=[common], help="Train sampler and LISTA jointly")
    _add_train_flags(train, single=True)
    train.add_argument("--out", required=True)

    evaluate = commands.add_parser("eval", parents=[common], help="Evaluate a run on a test set")
    evaluate.add_argument("--run", type=Path, required=True, help="Run directory or checkpoint file")
    evaluate.add_argument("--test", type=Path, required=True)
    evaluate.add_argument("--recon", choices=[kind.value for kind in ReconKind], default="lista")
    evaluate.add_argument("--ista-iters", type=int, default=300)
    evaluate.add_argument("--ista-threshold", type=float, nargs="+", default=None)
    evaluate.add_argument("--pattern-mode", choices=[mode.value for mode in PatternMode], default="map")
    evaluate.add_argument("--pattern-seed", type=int, default=None)
    evaluate.add_argument("--plot-examples", type=int, default=0, help="Plot this many recoveries")
    evaluate.add_argument("--out", default=None, help="Report directory (default: run directory)")

    bench = commands.add_parser("bench", parents=[common], help="Time LISTA against ISTA")
    bench.add_argument("--run", type=Path, required=True)
    bench.add_argument("--test", type=Path, required=True)
    bench.add_argument("--ista-iters", type=int, default=300)
    bench.add_argument("--repeats", type=int, default=5)
    bench.add_argument("--out", default=None)

    pattern = commands.add_parser("pattern", parents=[common], help="Export patterns and check rank")
    pattern.add_argument("--run", type=Path, nargs="+", required=True)
    pattern.add_argument("--pattern-mode", choices=[mode.value for mode in PatternMode], default="map")
    pattern.add_argument("--pattern-seed", type=int, default=None)
    pattern.add_argument("--rip-k", type=int, default=None)
    pattern.add_argument("--rip-trials", type=int, default=10_000)
    pattern.add_argument("--rip-tol", type=float, default=analysis_service.RIP_TOLERANCE)
    pattern.add_argument("--require-rip", action="store_true", help="Exit 1 when a rank check fails")
    pattern.add_argument("--out", required=True)

    export = commands.add_parser("export", parents=[common], help="Export learned distributions")
    export.add_argument("--run", type=Path, default=None)
    export.add_argument("--init-only", action="store_true", help="Export the untrained initialization")
    export.add_argument("--factor", type=int, default=None)
    export.add_argument("--n", type=int, default=128)
    export.add_argument("--out", required=True)

    gradcheck = commands.add_parser("gradcheck", parents=[common], help="Finite-difference gradient checks")
    gradcheck.add_argument("--epsilon", type=float, default=1e-5)
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)

    sweep = commands.add_parser("sweep", parents=[common], help="Train and evaluate samplers over factors")
    _add_train_flags(sweep, single=False)
    sweep.add_argument("--samplers", nargs="+", choices=[kind.value for kind in SamplerKind],
                       default=[kind.value for kind in SamplerKind])
    sweep.add_argument("--factors", type=int, nargs="+", required=True)
    sweep.add_argument("--test-size", type=int, default=1000)
    sweep.add_argument("--ista-iters", type=int, default=300)
    sweep.add_argument("--ista-threshold", type=float, nargs="+", default=None)
    sweep.add_argument("--out", required=True)

    lobe = commands.add_parser("grating-lobe", parents=[common], help="Grating-lobe angle of a thinned array")
    lobe.add_argument("--k", type=int, default=1)
    lobe.add_argument("--wavelength", type=float, required=True, help="mm")
    lobe.add_argument("--pitch", type=float, required=True, help="mm")
    lobe.add_argument("--factor", type=float, required=True)

    return parser


def _add_train_flags(parser: argparse.ArgumentParser, single: bool) -> None:
    if single:
        parser.add_argument("--sampler", choices=[kind.value for kind in SamplerKind], default=None)
        parser.add_argument("--recon", choices=[kind.value for kind in ReconKind], default=None)
        parser.add_argument("--factor", type=int, default=None)
    parser.add_argument("--iters", type=int, default=None)
    parser.add_argument("--batch", type=int, default=None)
    parser.add_argument("--lr-theta", type=float, default=None)
    parser.add_argument("--lr-phi", type=float, default=None)
    parser.add_argument("--l2-lambda", type=float, default=None)
    parser.add_argument("--entropy-mu", type=float, default=None)
    parser.add_argument("--tau-init", type=float, default=None)
    parser.add_argument("--tau-end", type=float, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--k", type=int, default=None)
    parser.add_argument("--log-every", type=int, default=None)
    parser.add_argument("--lista-init-step", type=float, default=None, help="ISTA step of the LISTA initialization")
    parser.add_argument("--profile", choices=[profile.value for profile in Profile], default=None)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(LabSettings(log_level=args.log_level, log_json=args.log_json))
    handlers = {
        "gen-test": lambda: cmd_gen_test(args),
        "train": lambda: cmd_train(args, argv),
        "eval": lambda: cmd_eval(args),
        "bench": lambda: cmd_bench(args),
        "pattern": lambda: cmd_pattern(args),
        "export": lambda: cmd_export(args),
        "gradcheck": lambda: cmd_gradcheck(args),
        "sweep": lambda: cmd_sweep(args, argv),
        "grating-lobe": lambda: cmd_grating_lobe(args),
    }

    try:
        return handlers[args.command]()
    except DivergenceError as e:
        logger.error("training_diverged", error=e.message, code=e.error_code, details=e.details)
        return EXIT_DIVERGED
    except (ConfigurationError, StorageError) as e:
        logger.error("command_failed", error=e.message, code=e.error_code, details=e.details)
        return EXIT_USAGE
    except ValidationError as e:
        errors = [f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()]
        logger.error("invalid_arguments", errors=errors)
        return EXIT_USAGE
    except DPSLabError as e:
        logger.error("check_failed", error=e.message, code=e.error_code, details=e.details)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
