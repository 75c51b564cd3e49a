import math

import numpy as np
import pytest

from kolgauss import (BankFormatError, GridSpec, lift_path, lift_paths, load_bank, save_bank,
                      simulate_bank)
from kolgauss.bank import heat_flow, read_header
from kolgauss.errors import ConfigError, DomainError

from conftest import make_model


class TestSimulation:
    @pytest.mark.parametrize("mode", ["euler", "exact"])
    def test_same_seed_bit_identical(self, small_model, small_grid, mode):
        b1 = simulate_bank(small_model, small_grid, 30, seed=5, mode=mode)
        b2 = simulate_bank(small_model, small_grid, 30, seed=5, mode=mode)
        assert b1.paths.tobytes() == b2.paths.tobytes()
        assert b1.checksum() == b2.checksum()

    def test_different_seed_differs(self, small_model, small_grid):
        b1 = simulate_bank(small_model, small_grid, 10, seed=5)
        b2 = simulate_bank(small_model, small_grid, 10, seed=6)
        assert not np.array_equal(b1.paths, b2.paths)

    def test_samples_independent_of_batch_size(self, small_model, small_grid):
        big = simulate_bank(small_model, small_grid, 40, seed=2)
        small = simulate_bank(small_model, small_grid, 7, seed=2)
        np.testing.assert_array_equal(big.paths[:7], small.paths)

    def test_starts_at_zero_and_read_only(self, small_bank):
        np.testing.assert_array_equal(small_bank.paths[:, 0, :], 0.0)
        with pytest.raises(ValueError):
            small_bank.paths[0, 1, 0] = 1.0

    def test_unstable_euler_names_rate(self):
        model = make_model(d=3, T=0.1, spectrum=[1.0, 4.0, 300.0])
        grid = GridSpec(fine_dt=1e-2, coarse_dt=1e-2, n_coarse=10)
        with pytest.raises(ConfigError, match="a_3=300"):
            simulate_bank(model, grid, 5, seed=0, mode="euler")
        simulate_bank(model, grid, 5, seed=0, mode="exact")

    @pytest.mark.parametrize("n", [0, -3])
    def test_empty_bank_rejected(self, small_model, small_grid, n):
        with pytest.raises(ConfigError):
            simulate_bank(small_model, small_grid, n, seed=0)

    def test_variance_matches_exact_ou(self):
        model = make_model(d=1, T=1.0)
        grid = GridSpec.from_horizon(1.0, fine_dt=1e-2, coarse_dt=1e-2)
        bank = simulate_bank(model, grid, 100_000, seed=1, mode="exact")
        var = bank.paths[:, -1, 0].var(ddof=1)
        exact = (1 - math.exp(-2)) / 2
        assert abs(var - exact) <= 3 * math.sqrt(2 / 100_000) * exact

    def test_covariance_across_times(self):
        model = make_model(d=2, T=1.0)
        grid = GridSpec.from_horizon(1.0, fine_dt=1e-2, coarse_dt=1e-2)
        n = 50_000
        bank = simulate_bank(model, grid, n, seed=4, mode="exact")
        for k, a in enumerate(bank.spectrum):
            for i, j in [(20, 50), (30, 100), (10, 11)]:
                s, t = i * 0.01, j * 0.01
                prod = bank.paths[:, i, k] * bank.paths[:, j, k]
                exact = math.exp(-a * (t - s)) * (1 - math.exp(-2 * a * s)) / (2 * a)
                assert abs(prod.mean() - exact) <= 4 * prod.std(ddof=1) / math.sqrt(n)

    def test_euler_close_to_exact(self):
        model = make_model(d=3, T=0.5)
        grid = GridSpec.from_horizon(0.5, fine_dt=1e-4, coarse_dt=1e-2)
        n = 4000
        euler = simulate_bank(model, grid, n, seed=9, mode="euler")
        exact = simulate_bank(model, grid, n, seed=9, mode="exact")
        v_e = euler.paths.var(axis=0, ddof=1)
        v_x = exact.paths.var(axis=0, ddof=1)
        # the two variances agree up to sampling noise; Euler bias is O(fine_dt)
        noise = 4 * np.sqrt(2 / n) * v_x[1:] + 1e-3
        assert np.all(np.abs(v_e[1:] - v_x[1:]) <= noise)


class TestFileFormat:
    def test_round_trip(self, small_bank, tmp_path):
        path = tmp_path / "b.kgb"
        save_bank(small_bank, path)
        loaded = load_bank(path)
        assert loaded.paths.tobytes() == small_bank.paths.tobytes()
        for f in ("d", "n_samples", "horizon_T", "fine_dt", "coarse_dt", "seed", "mode"):
            assert getattr(loaded, f) == getattr(small_bank, f)
        np.testing.assert_array_equal(loaded.spectrum, small_bank.spectrum)

    def test_mmap_round_trip(self, small_bank, tmp_path):
        path = tmp_path / "b.kgb"
        save_bank(small_bank, path)
        np.testing.assert_array_equal(load_bank(path, mmap=True).paths, small_bank.paths)

    def test_header_layout(self, small_bank, tmp_path):
        path = tmp_path / "b.kgb"
        save_bank(small_bank, path)
        raw = path.read_bytes()
        assert raw[:8] == b"KGBANK01"
        hdr = read_header(path)
        assert hdr["d"] == small_bank.d and hdr["n_coarse"] == small_bank.n_coarse
        assert len(raw) == hdr["offset"] + small_bank.paths.nbytes
        first = np.frombuffer(raw[hdr["offset"]:], dtype="<f8")[:small_bank.d * 2]
        np.testing.assert_array_equal(first, small_bank.paths[0, :2].ravel())

    def test_corrupted_magic(self, small_bank, tmp_path):
        path = tmp_path / "b.kgb"
        save_bank(small_bank, path)
        raw = bytearray(path.read_bytes())
        raw[0:2] = b"XX"
        path.write_bytes(bytes(raw))
        with pytest.raises(BankFormatError, match="magic"):
            load_bank(path)

    def test_header_d_mismatch(self, small_bank, tmp_path):
        path = tmp_path / "b.kgb"
        save_bank(small_bank, path)
        raw = bytearray(path.read_bytes())
        raw[12:16] = (small_bank.d + 1).to_bytes(4, "little")
        path.write_bytes(bytes(raw))
        with pytest.raises(BankFormatError):
            load_bank(path)

    def test_truncated_payload(self, small_bank, tmp_path):
        path = tmp_path / "b.kgb"
        save_bank(small_bank, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(BankFormatError, match="size"):
            load_bank(path)

    def test_flipped_payload_byte(self, small_bank, tmp_path):
        path = tmp_path / "b.kgb"
        save_bank(small_bank, path)
        raw = bytearray(path.read_bytes())
        raw[-3] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(BankFormatError, match="checksum"):
            load_bank(path)


class TestCompatibility:
    def test_sigma_may_differ(self, small_bank, small_model):
        small_bank.check_compatible(small_model.replace(sigma=0.3))

    def test_dimension_mismatch_named(self, small_bank):
        with pytest.raises(ConfigError, match="d"):
            small_bank.check_compatible(make_model(d=4))

    def test_spectrum_mismatch_named(self, small_bank):
        with pytest.raises(ConfigError, match="spectrum"):
            small_bank.check_compatible(make_model(d=3, spectrum=[1.0, 2.0, 3.0]))


class TestLift:
    def test_node_zero_is_x(self, small_bank):
        x = np.array([0.5, -1.0, 2.0])
        np.testing.assert_array_equal(lift_path(small_bank, 4, x, 0.7, 0), x)

    def test_zero_sigma_is_heat_flow(self, small_bank):
        x = np.array([0.5, -1.0, 2.0])
        j = 7
        np.testing.assert_allclose(lift_path(small_bank, 0, x, 0.0, j),
                                   np.exp(-j * 0.01 * small_bank.spectrum) * x, rtol=1e-15)

    def test_zero_x_is_bank(self, small_bank):
        np.testing.assert_array_equal(lift_path(small_bank, 2, np.zeros(3), 1.0, 5),
                                      small_bank.paths[2, 5])

    def test_vectorised_matches(self, small_bank):
        x = np.array([1.0, 2.0, 3.0])
        all_paths = lift_paths(small_bank, x, 0.4)
        np.testing.assert_array_equal(all_paths[3, 6], lift_path(small_bank, 3, x, 0.4, 6))
        np.testing.assert_array_equal(heat_flow(small_bank, x)[0], x)

    @pytest.mark.parametrize("sample,node", [(-1, 0), (200, 0), (0, 11), (0, -1)])
    def test_out_of_range(self, small_bank, sample, node):
        with pytest.raises(DomainError):
            lift_path(small_bank, sample, np.ones(3), 1.0, node)
