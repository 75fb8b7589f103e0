#!/usr/bin/env python3
"""
Unit Tests for Signal Service
Sparse signal generation, unitary DFT and the hold-out set
"""

import numpy as np
import pytest
from structlog.testing import capture_logs

from dps_lab.config.settings import SparseSignalConfig
from dps_lab.errors import ConfigurationError
from dps_lab.repositories.holdout_repository import HoldoutSetRepository
from dps_lab.services.signal_service import (
    dft,
    effective_length,
    gen_sparse_batch,
    idft,
    imaginary_residue,
    make_test_set,
)


class TestGenSparseBatch:
    """Test suite for K-sparse batch generation"""

    def test_exact_sparsity(self, rng):
        """Test every signal has exactly k nonzeros"""
        batch = gen_sparse_batch(SparseSignalConfig(n=128, k=5), 16, rng)

        assert batch.z.shape == (16, 128)
        assert batch.x.shape == (16, 128)
        assert np.all(batch.support_sizes() == 5)

    def test_sparsity_over_many_signals(self, rng):
        """Test sparsity holds over 10^4 signals"""
        batch = gen_sparse_batch(SparseSignalConfig(n=64, k=3), 10_000, rng)
        assert np.all(batch.support_sizes() == 3)

    def test_transform_matches_dft(self, rng):
        """Test x is the unitary DFT of z"""
        batch = gen_sparse_batch(SparseSignalConfig(n=32, k=4), 8, rng)
        assert np.max(np.abs(batch.x - dft(batch.z))) < 1e-10

    def test_k_not_below_n_rejected(self, rng):
        """Test k = n is a configuration error"""
        with pytest.raises(ConfigurationError) as exc_info:
            gen_sparse_batch(SparseSignalConfig(n=8, k=8), 4, rng)

        assert exc_info.value.error_code == "INVALID_SPARSITY"

    def test_batch_size_must_be_positive(self, rng):
        """Test empty batches are rejected"""
        with pytest.raises(ConfigurationError):
            gen_sparse_batch(SparseSignalConfig(n=16, k=2), 0, rng)

    def test_same_stream_same_batch(self):
        """Test generation is deterministic given the generator state"""
        cfg = SparseSignalConfig(n=32, k=3)
        first = gen_sparse_batch(cfg, 5, np.random.default_rng(9))
        second = gen_sparse_batch(cfg, 5, np.random.default_rng(9))
        assert np.array_equal(first.z, second.z)

    @pytest.mark.slow
    def test_mean_square_matches_closed_form(self):
        """Test per-element mean square approaches k sigma^2 / n"""
        rng = np.random.default_rng(5)
        cfg = SparseSignalConfig(n=128, k=5, amplitude_std=1.0)
        totals = [float(np.mean(gen_sparse_batch(cfg, 5000, rng).z ** 2)) for _ in range(20)]
        assert abs(np.mean(totals) - 5 / 128) < 1e-3


class TestFourierTransforms:
    """Test suite for dft / idft"""

    def test_round_trip(self, rng):
        """Test idft(dft(z)) reproduces z"""
        z = rng.normal(size=(4, 32))
        assert np.max(np.abs(idft(dft(z)) - z)) < 1e-10

    def test_impulse_has_flat_spectrum(self):
        """Test impulse at 0 maps to 1/sqrt(n) everywhere"""
        x = dft(np.array([1.0, 0.0, 0.0, 0.0]))
        assert np.allclose(x, 0.5 + 0j, atol=1e-15)

    def test_parseval(self, rng):
        """Test the transform preserves the l2 norm"""
        z = rng.normal(size=64)
        assert abs(np.linalg.norm(dft(z)) - np.linalg.norm(z)) < 1e-10

    def test_inverse_of_ones(self):
        """Test all-ones spectrum maps to an impulse of height 2 (n=4)"""
        assert np.allclose(idft(np.ones(4, dtype=complex)), [2.0, 0.0, 0.0, 0.0], atol=1e-15)

    def test_dft_of_idft(self, rng):
        """Test dft(idft(x)) = x for conjugate-symmetric x"""
        x = dft(rng.normal(size=16))
        assert np.max(np.abs(dft(idft(x)) - x)) < 1e-10

    def test_conjugate_symmetric_has_no_residue(self, rng):
        """Test spectra of real signals invert to real signals"""
        assert imaginary_residue(dft(rng.normal(size=(3, 32)))) < 1e-10

    def test_imaginary_residue_is_logged(self):
        """Test a non-symmetric spectrum triggers a warning event"""
        with capture_logs() as logs:
            idft(np.array([1j, 0, 0, 0]))

        assert any(entry["event"] == "idft_imaginary_residue" and entry["log_level"] == "warning" for entry in logs)


class TestEffectiveLength:
    """Test suite for rounding n to a multiple of the factor"""

    @pytest.mark.parametrize(
        "nominal,factor,expected",
        [(128, 6, 126), (128, 4, 128), (128, 5, 130), (128, 3, 129), (130, 4, 128)],
    )
    def test_closest_multiple(self, nominal, factor, expected):
        """Test closest multiple with ties going down"""
        assert effective_length(nominal, factor) == expected

    def test_multiples_unchanged(self):
        """Test exact multiples are returned as is"""
        for factor in range(1, 33):
            for v in range(1, 33):
                assert effective_length(v * factor, factor) == v * factor

    def test_factor_above_nominal_rejected(self):
        """Test nominal below the factor is a configuration error"""
        with pytest.raises(ConfigurationError):
            effective_length(3, 4)


class TestMakeTestSet:
    """Test suite for the persisted hold-out set"""

    def test_size_and_determinism(self, tmp_path):
        """Test same seed gives identical files"""
        cfg = SparseSignalConfig(n=128, k=5)
        first = make_test_set(cfg, 1000, seed=7, path=tmp_path / "a.dat")
        make_test_set(cfg, 1000, seed=7, path=tmp_path / "b.dat")

        assert first.size == 1000
        assert (tmp_path / "a.dat").read_bytes() == (tmp_path / "b.dat").read_bytes()

    def test_reload_is_bit_exact(self, tmp_path):
        """Test reloaded z is bit-identical and x is recomputed"""
        cfg = SparseSignalConfig(n=64, k=5)
        batch = make_test_set(cfg, 200, seed=11, path=tmp_path / "test.dat")
        loaded, header = HoldoutSetRepository(tmp_path / "test.dat").load()

        assert np.array_equal(loaded.z, batch.z)
        assert np.max(np.abs(loaded.x - batch.x)) < 1e-10
        assert header.seed == 11 and header.size == 200 and header.k == 5

    def test_without_path_nothing_written(self, tmp_path):
        """Test in-memory generation leaves no files"""
        make_test_set(SparseSignalConfig(n=16, k=2), 10, seed=1)
        assert list(tmp_path.iterdir()) == []
