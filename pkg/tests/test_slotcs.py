import numpy as np
import pytest

from ccskit.seeds import make_rng
from ccskit.slotcs import ChannelParams, SensingMatrix, recover_support, transmit_slot


def small_matrix(width=512, rows=48, seed=7, slot=2):
    return SensingMatrix(slot=slot, rows=rows, width=width, seed=seed)


class TestSensingMatrix:
    def test_unit_norm(self):
        X = small_matrix()
        cols = X.columns(range(0, 512, 37))
        assert np.abs(np.linalg.norm(cols, axis=0) - 1.0).max() < 1e-9

    def test_referential_transparency(self):
        X = small_matrix()
        a = X.columns([5, 400])
        b = X.columns([400, 5])[:, ::-1]
        assert np.array_equal(a, b)
        Xp = X.prune([5, 9, 400])
        assert np.array_equal(Xp.columns([5, 400]), a)
        # querying after building the dense cache changes nothing
        X.dense_active()
        assert np.array_equal(X.columns([5, 400]), a)

    def test_dense_matches_columns(self):
        X = small_matrix(width=200)
        D = X.dense_active()
        assert D.shape == (200, 48)
        c = X.columns([3, 77, 199])
        assert np.allclose(D[[3, 77, 199]].T, c, atol=1e-6)

    def test_prune_keeps_generator(self):
        X = small_matrix()
        Xp = X.prune(np.arange(0, 512, 2))
        assert Xp.width == X.width and Xp.seed == X.seed
        assert len(Xp.active) == 256
        with pytest.raises(ValueError):
            Xp.prune([1])  # odd index was already pruned away

    def test_prune_all_is_identity(self):
        X = small_matrix()
        Xp = X.prune(X.active)
        assert np.array_equal(Xp.active, X.active)

    def test_distinct_slots_differ(self):
        a = SensingMatrix(slot=0, rows=16, width=8, seed=1).columns([0])
        b = SensingMatrix(slot=1, rows=16, width=8, seed=1).columns([0])
        assert not np.allclose(a, b)


class TestChannel:
    def test_ebn0_roundtrip(self):
        ch = ChannelParams.from_ebn0_db(4.0, total_bits=60, n_slots=6)
        assert ch.ebn0_db(60, 6) == pytest.approx(4.0)

    def test_empty_transmission_noiseless(self):
        X = small_matrix()
        obs = transmit_slot([], X, ChannelParams(noise_variance=0.0), make_rng(1))
        assert np.allclose(obs.y, 0.0)

    def test_single_column_correlates(self):
        X = small_matrix()
        obs = transmit_slot([123], X, ChannelParams(noise_variance=0.0), make_rng(2))
        col = X.columns([123])[:, 0]
        assert float(col @ obs.y) == pytest.approx(1.0)

    def test_duplicate_indices_superpose(self):
        X = small_matrix()
        ch = ChannelParams(noise_variance=0.0, amplitude=1.0)
        obs = transmit_slot([9, 9], X, ch, make_rng(3))
        col = X.columns([9])[:, 0]
        assert np.allclose(obs.y, 2.0 * col)

    def test_energy_accounting(self):
        # E||y||^2 = K A^2 + rows sigma^2 (cross terms vanish on average)
        X = small_matrix(width=4096, rows=64)
        ch = ChannelParams(noise_variance=0.5, amplitude=1.2)
        rng = make_rng(4)
        reps = 600
        idx = rng.integers(0, 4096, size=(reps, 3))
        energies = np.array([
            (transmit_slot(list(row), X, ch, make_rng(5, int(t))).y ** 2).sum()
            for t, row in enumerate(idx)
        ])
        expect = 3 * ch.amplitude**2 + 64 * ch.noise_variance
        stderr = energies.std(ddof=1) / np.sqrt(reps)
        assert abs(energies.mean() - expect) <= 3 * stderr


class TestRecoverSupport:
    def test_noiseless_single(self):
        X = small_matrix()
        obs = transmit_slot([77], X, ChannelParams(0.0), make_rng(6))
        assert recover_support(obs, X, 1) == [77]

    def test_noiseless_multi(self):
        X = small_matrix(width=1024, rows=96)
        true = [3, 500, 999, 256, 77]
        obs = transmit_slot(true, X, ChannelParams(0.0), make_rng(7))
        assert sorted(recover_support(obs, X, 5)) == sorted(true)

    def test_respects_pruned_set(self):
        X = small_matrix(width=1024, rows=96)
        true = [3, 500, 999]
        obs = transmit_slot(true, X, ChannelParams(0.04), make_rng(8))
        pruned = set(true) | set(range(64))
        out = recover_support(obs, X, 3, pruned=pruned)
        assert set(out) <= pruned

    def test_pruned_must_be_subset(self):
        X = small_matrix().prune(range(100))
        with pytest.raises(ValueError):
            recover_support(np.zeros(48), X, 2, pruned=[200])

    def test_more_K_than_candidates(self):
        X = small_matrix()
        out = recover_support(np.zeros(48), X, 10, pruned=range(4))
        assert sorted(out) == [0, 1, 2, 3]

    def test_deterministic(self):
        X = small_matrix(width=2048, rows=64)
        obs = transmit_slot([5, 1000, 2000], X, ChannelParams(0.02), make_rng(9))
        a = recover_support(obs, X, 3)
        b = recover_support(obs, X, 3)
        assert a == b

    def test_recovery_after_pruning_still_finds_kept_column(self):
        X = small_matrix(width=1024, rows=96)
        keep = list(range(0, 1024, 3))
        Xp = X.prune(keep)
        obs = transmit_slot([9], Xp, ChannelParams(0.0), make_rng(10))
        assert recover_support(obs, Xp, 1) == [9]

    def test_pairing_pruning_never_hurts(self):
        # Paired trials: success with the true-support-preserving pruned set
        # is at least as frequent as without pruning (3 sigma margin).
        X = small_matrix(width=2048, rows=40)
        ch = ChannelParams(noise_variance=0.05)
        rng = make_rng(11)
        wins_p = wins_s = 0
        reps = 1000
        for t in range(reps):
            true = sorted(int(v) for v in rng.choice(2048, size=3, replace=False))
            obs = transmit_slot(true, X, ch, make_rng(12, t))
            pruned = set(true) | {int(v) for v in rng.choice(2048, size=61)}
            got_s = sorted(recover_support(obs, X, 3))
            got_p = sorted(recover_support(obs, X, 3, pruned=pruned))
            wins_s += got_s == true
            wins_p += got_p == true
        diff = (wins_p - wins_s) / reps
        sigma = np.sqrt(2 * 0.25 / reps)  # crude bound on paired diff spread
        assert diff >= -3 * sigma

    def test_noiseless_end_to_end_high_probability(self):
        # K columns, noise -> 0: exact recovery in almost every trial.
        X = small_matrix(width=512, rows=64)
        rng = make_rng(13)
        fails = 0
        reps = 300
        for t in range(reps):
            true = sorted(int(v) for v in rng.choice(512, size=8, replace=False))
            obs = transmit_slot(true, X, ChannelParams(1e-12), make_rng(14, t))
            fails += sorted(recover_support(obs, X, 8)) != true
        assert fails / reps < 0.01
