import numpy as np
import pytest

from chaossync.channel import ChannelConfig, awgn
from chaossync.dip import GeneratorConfig
from chaossync.dynamics import lorenz_trajectory
from chaossync.ga import GaConfig
from chaossync.pipeline import (
    avg_amplitude_error,
    avg_sync_error,
    conventional_receive,
    dcs_receive,
    ga_only_receive,
    random_x0_guess,
    rnn_receive,
    segment_experiment,
)
from chaossync.rnn import GruSeq2Seq, RnnConfig
from chaossync.signals import Signal

FAST_GA = GaConfig(population_size=400, n_generations=4, seed=0)


@pytest.fixture(scope="module")
def traj():
    return lorenz_trajectory((0.1, 0.1, 0.1), 0.1, 1024)


@pytest.fixture(scope="module")
def mu(traj):
    return awgn(traj.x, ChannelConfig(sigma2=0.5, seed=0))


class TestMetrics:
    def test_amplitude_hand_value(self):
        assert avg_amplitude_error(Signal(np.array([0.0, 0.0])), Signal(np.array([1.0, -1.0]))) == 1.0

    def test_sync_hand_value(self):
        z = Signal(np.array([1.0, 1.0]))
        zr = Signal(np.array([0.0, 2.0]))
        assert avg_sync_error(z, zr, span=2) == 1.0

    def test_identical_signals_zero(self):
        s = Signal(np.arange(10.0))
        assert avg_amplitude_error(s, s) == 0.0
        assert avg_sync_error(s, s, span=10) == 0.0

    def test_rmse_metric(self):
        z = Signal(np.array([0.0, 0.0]))
        zr = Signal(np.array([3.0, 4.0]))
        assert avg_sync_error(z, zr, span=2, metric="rmse") == pytest.approx(np.sqrt(12.5))

    def test_errors(self):
        s = Signal(np.zeros(4))
        with pytest.raises(ValueError):
            avg_amplitude_error(s, Signal(np.zeros(5)))
        with pytest.raises(ValueError):
            avg_sync_error(s, s, span=9)
        with pytest.raises(ValueError):
            avg_amplitude_error(s, s, metric="mape")


class TestConventional:
    def test_noise_free_exact_ic_syncs(self, traj):
        out = conventional_receive(traj.x, x0_guess=0.1)
        assert np.max(np.abs(traj.z.values - out.zr.values)) < 1e-6
        assert np.max(np.abs(traj.y.values - out.yr.values)) < 1e-6

    def test_output_shapes(self, traj, mu):
        out = conventional_receive(mu, x0_guess=0.05)
        for sig in (out.xr, out.yr, out.zr):
            assert len(sig) == len(mu) and sig.dt == mu.dt
        assert out.chi is None
        assert out.wall_clock > 0.0

    def test_noise_degrades_sync(self, traj, mu):
        clean = conventional_receive(traj.x, 0.1)
        noisy = conventional_receive(mu, 0.1)
        e_clean = avg_sync_error(traj.z, clean.zr)
        e_noisy = avg_sync_error(traj.z, noisy.zr)
        assert e_clean < 1e-6 < e_noisy


class TestGaOnly:
    def test_recovers_x0_and_shapes(self, traj, mu):
        out = ga_only_receive(mu, ga_cfg=FAST_GA)
        assert 0.0 <= out.x0_hat <= 0.1
        assert abs(out.x0_hat - 0.1) < 5e-2
        assert len(out.zr) == len(mu)
        assert np.array_equal(out.chi.values, mu.values)


class TestDcs:
    def test_end_to_end_small(self, traj, mu):
        gen = GeneratorConfig()
        out = dcs_receive(mu, gen_cfg=gen, ga_cfg=FAST_GA)
        assert len(out.chi) == len(mu)
        assert 0.0 <= out.x0_hat <= 0.1
        assert len(out.xr) == len(out.yr) == len(out.zr) == len(mu)

    def test_regenerated_drive_self_consistent(self, traj, mu):
        out = dcs_receive(mu, ga_cfg=FAST_GA)
        ref = lorenz_trajectory((out.x0_hat, 0.1, 0.1), 0.1, len(mu))
        assert np.array_equal(out.xr.values, ref.x.values)
        assert np.max(np.abs(out.zr.values - ref.z.values)) < 1e-6


class TestRnnReceive:
    def test_shapes(self, mu):
        net = GruSeq2Seq(RnnConfig(hidden=6, depth=1))
        out = rnn_receive(net, mu, ga_cfg=FAST_GA)
        assert len(out.chi) == len(mu)
        assert len(out.zr) == len(mu)
        assert 0.0 <= out.x0_hat <= 0.1


class TestRandomGuess:
    def test_deterministic_and_bounded(self):
        a = random_x0_guess(3)
        assert a == random_x0_guess(3)
        assert 0.0 <= a <= 0.1
        assert a != random_x0_guess(4)


class TestSegmentExperiment:
    def test_runs_and_keys(self, traj):
        def conv(mu, ctx):
            return conventional_receive(mu, 0.05, y0=ctx.known_y0, z0=ctx.known_z0)

        res = segment_experiment(traj, [300, 400], trials=2, receivers={"conv": conv}, sigma2=0.5)
        assert set(res) == {("conv", 300), ("conv", 400)}
        assert all(v >= 0.0 for v in res.values())

    def test_bad_arguments(self, traj):
        with pytest.raises(ValueError):
            segment_experiment(traj, [300], trials=0, receivers={}, sigma2=0.5)
        with pytest.raises(ValueError):
            segment_experiment(traj, [4000], trials=1, receivers={}, sigma2=0.5)
