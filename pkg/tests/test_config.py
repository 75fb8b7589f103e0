#!/usr/bin/env python3
"""
Tests for configuration models and run-config resolution
"""

import pytest
from pydantic import ValidationError

from dps_lab.config import (
    LabSettings,
    Profile,
    SamplerKind,
    TrainConfig,
    read_config_file,
    resolve_train_config,
)
from dps_lab.errors import ConfigurationError, StorageError


class TestTrainConfig:
    """Test suite for TrainConfig defaults and validation"""

    def test_defaults(self):
        """Test the partial Fourier defaults"""
        cfg = TrainConfig()

        assert (cfg.n, cfg.k, cfg.factor, cfg.batch) == (128, 5, 4, 16)
        assert cfg.n_iter == 96_000
        assert (cfg.tau_init, cfg.tau_end) == (5.0, 0.5)
        assert cfg.entropy_mu == 1e-8 and cfg.l2_lambda == 0.0
        assert cfg.factor_sweep == [2, 3, 4, 6, 8]
        assert cfg.lista_init_step == 2.0

    def test_phi_step_multiplier(self):
        """Test lr_phi / lr_theta"""
        assert TrainConfig(lr_theta=1e-3, lr_phi=5e-3).phi_step_multiplier == pytest.approx(5.0)

    def test_derived_models(self):
        """Test signal, schedule and ISTA views"""
        cfg = TrainConfig(n=64, k=3, n_iter=10, ista_iters=50, ista_threshold=0.2)

        assert cfg.signal_config().n == 64
        assert cfg.schedule().n_iter == 10
        assert (cfg.ista_config().n_iter, cfg.ista_config().threshold) == (50, 0.2)

    def test_factor_sweep_from_string(self):
        """Test comma-separated factor lists"""
        assert TrainConfig(factor_sweep="2, 4,8").factor_sweep == [2, 4, 8]

    @pytest.mark.parametrize(
        "field,value",
        [("batch", 0), ("tau_init", 0.0), ("lr_phi", -1.0), ("adam_beta1", 1.0), ("lista_init_step", 2.5)],
    )
    def test_invalid_values(self, field, value):
        """Test per-field constraints"""
        with pytest.raises(ValidationError):
            TrainConfig(**{field: value})


class TestLabSettings:
    """Test suite for process settings"""

    def test_level_normalized(self):
        """Test lower-case levels are accepted"""
        assert LabSettings(log_level="debug").log_level == "DEBUG"

    def test_unknown_level(self):
        """Test unknown levels are rejected"""
        with pytest.raises(ValidationError):
            LabSettings(log_level="loud")


class TestResolveTrainConfig:
    """Test suite for layered config resolution"""

    def test_defaults_without_inputs(self):
        """Test no file, no flags gives defaults and no hash"""
        cfg, config_hash = resolve_train_config()
        assert cfg == TrainConfig()
        assert config_hash is None

    def test_profile_sets_iterations(self):
        """Test the desk profile shortens training"""
        cfg, _ = resolve_train_config(profile=Profile.DESK)
        assert cfg.n_iter == 20_000 and cfg.profile == Profile.DESK

    def test_precedence(self, tmp_path):
        """Test flags beat the file, which beats the profile"""
        path = tmp_path / "run.conf"
        path.write_text("# small run\nn_iter = 500\nbatch = 8\nsampler_kind = uniform\n")

        cfg, config_hash = resolve_train_config({"batch": 4, "seed": None}, path, Profile.DESK)

        assert cfg.n_iter == 500
        assert cfg.batch == 4
        assert cfg.seed == 0
        assert cfg.sampler_kind == SamplerKind.UNIFORM
        assert len(config_hash) == 64

    def test_hash_tracks_content(self, tmp_path):
        """Test the file hash changes with its content"""
        path = tmp_path / "run.conf"
        path.write_text("batch = 8\n")
        _, first = read_config_file(path)
        path.write_text("batch = 9\n")
        _, second = read_config_file(path)
        assert first != second

    def test_unknown_key(self, tmp_path):
        """Test typos in config files are reported"""
        path = tmp_path / "run.conf"
        path.write_text("bach = 8\n")
        with pytest.raises(ConfigurationError) as exc_info:
            resolve_train_config(config_path=path)

        assert exc_info.value.error_code == "UNKNOWN_CONFIG_KEY"
        assert exc_info.value.details["keys"] == ["bach"]

    def test_missing_file(self, tmp_path):
        """Test an absent config file is a storage error"""
        with pytest.raises(StorageError):
            resolve_train_config(config_path=tmp_path / "absent.conf")

    def test_invalid_value(self):
        """Test validation errors become configuration errors"""
        with pytest.raises(ConfigurationError):
            resolve_train_config({"batch": 0})

    def test_factor_outside_sweep(self):
        """Test factors must come from the sweep set"""
        with pytest.raises(ConfigurationError) as exc_info:
            resolve_train_config({"factor": 5})

        assert exc_info.value.error_code == "FACTOR_NOT_ALLOWED"

    def test_custom_sweep_allows_factor(self):
        """Test widening the sweep admits the factor"""
        cfg, _ = resolve_train_config({"factor": 5, "factor_sweep": [5]})
        assert cfg.factor == 5
