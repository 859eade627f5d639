"""End-to-end acceptance suite.

These tests exercise the system at full experiment scale; the slowest take
tens of minutes.  Run the unit modules alone for quick feedback.  Trained
GRU weights are cached under out/cache so reruns skip the training cost.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import solve_ivp

import chaossync.autodiff as ad
from chaossync.channel import ChannelConfig, RngStream, awgn, gaussian_stream
from chaossync.cli import load_config, main, parse_csv, _trained_rnn
from chaossync.dip import GeneratorConfig, GeneratorNet, dip_optimize
from chaossync.dynamics import (
    HENON_PRESET_INIT,
    HenonParams,
    LorenzParams,
    RosslerParams,
    henon_trajectory,
    lorenz_derivative,
    lorenz_trajectory,
    rossler_trajectory,
)
from chaossync.ga import FitnessContext, GaConfig, ga_run
from chaossync.pipeline import (
    avg_amplitude_error,
    avg_sync_error,
    conventional_receive,
    dcs_receive,
)
from chaossync.rnn import GruLayer, GruSeq2Seq, RnnConfig, gru_cell, project_sequence
from conftest import check_op_grads, fd_grad, rel_err

OUT = Path(__file__).resolve().parent.parent / "out" / "acceptance"


@pytest.fixture(autouse=True)
def acceptance_out(monkeypatch):
    monkeypatch.setenv("CHAOS_SYNC_OUT", str(OUT))


@pytest.fixture(scope="session")
def master():
    return lorenz_trajectory((0.1, 0.1, 0.1), 0.1, 1024)


def test_gradient_correctness():
    start = time.time()
    rng = np.random.default_rng(0)

    def off_kink(*shape):
        v = rng.standard_normal(shape)
        v[np.abs(v) < 0.05] = 0.5
        return v

    for i in range(50):
        a, b = rng.standard_normal(6), rng.standard_normal(6)
        check_op_grads(lambda x, y: ((x + y) * (x - y) + (-x)).sum(), [a, b])
        check_op_grads(lambda x: (x * 2.0).mean(), [rng.standard_normal(5)])
        check_op_grads(lambda x, y: ad.matmul(x, y).sum(), [rng.standard_normal((3, 4)), rng.standard_normal((4, 2))])
        g = rng.standard_normal(8)
        for kind in ("relu", "leaky_relu", "tanh", "sigmoid"):
            check_op_grads(lambda x, k=kind, g=g: (ad.activation(x, k) * ad.Tensor(g)).sum(), [off_kink(8)])
        gt = rng.standard_normal((2, 10))
        check_op_grads(
            lambda x, w, g=gt: (ad.conv_transpose_1d(x, w, 2, 1) * ad.Tensor(g)).sum(),
            [rng.standard_normal((3, 5)), rng.standard_normal((3, 2, 4))],
        )
        gc = rng.standard_normal((2, 5))
        check_op_grads(
            lambda x, w, g=gc: (ad.conv1d(x, w, 2, 1) * ad.Tensor(g)).sum(),
            [rng.standard_normal((3, 10)), rng.standard_normal((2, 3, 4))],
        )
        gb = rng.standard_normal((3, 8))
        check_op_grads(
            lambda x, gm, bt, g=gb: (ad.batch_norm_1d(x, gm, bt) * ad.Tensor(g)).sum(),
            [rng.standard_normal((3, 8)), 1.0 + 0.1 * rng.standard_normal(3), 0.1 * rng.standard_normal(3)],
            tol=1e-4,
        )
        check_op_grads(
            lambda p, t: ad.mse_loss(p, t), [rng.standard_normal((1, 6)), rng.standard_normal((1, 6))]
        )
        check_op_grads(lambda x: ad.truncate(x, 4).sum(), [rng.standard_normal((1, 7))])

    # full generator pass: analytic grads vs FD on 50 random weight coordinates
    cfg = GeneratorConfig(latent_channels=4, latent_length=4, n_gf=4, n_layers=3, output_length=32, seed=1)
    net = GeneratorNet(cfg)
    target = rng.standard_normal((1, 32))

    def gen_loss():
        return ad.mse_loss(net.forward(), ad.Tensor(target))

    loss = gen_loss()
    ad.backward(loss)
    params = net.parameters()
    eps = 1e-6
    for _ in range(50):
        p = params[rng.integers(len(params))]
        idx = rng.integers(p.data.size)
        keep = p.data.flat[idx]
        p.data.flat[idx] = keep + eps
        hi = float(gen_loss().data)
        p.data.flat[idx] = keep - eps
        lo = float(gen_loss().data)
        p.data.flat[idx] = keep
        fd = (hi - lo) / (2 * eps)
        an = p.grad.flat[idx]
        assert abs(an - fd) / max(abs(an), abs(fd), 1.0) <= 1e-5

    # full GRU pass, same scheme
    rnet = GruSeq2Seq(RnnConfig(hidden=5, depth=2, seed=1))
    seq = rng.standard_normal(8)
    rtarget = rng.standard_normal((1, 8))

    def rnn_loss():
        return ad.mse_loss(rnet.forward(seq), ad.Tensor(rtarget))

    loss = rnn_loss()
    ad.backward(loss)
    params = rnet.parameters()
    for _ in range(50):
        p = params[rng.integers(len(params))]
        idx = rng.integers(p.data.size)
        keep = p.data.flat[idx]
        p.data.flat[idx] = keep + eps
        hi = float(rnn_loss().data)
        p.data.flat[idx] = keep - eps
        lo = float(rnn_loss().data)
        p.data.flat[idx] = keep
        fd = (hi - lo) / (2 * eps)
        an = p.grad.flat[idx]
        assert abs(an - fd) / max(abs(an), abs(fd), 1.0) <= 1e-5

    assert time.time() - start < 60.0


def test_integrator_matches_adaptive_oracle():
    start = time.time()
    p = LorenzParams()
    n = 100
    ours = lorenz_trajectory((0.1, 0.1, 0.1), 0.1, n)
    sol = solve_ivp(
        lambda t, s: lorenz_derivative(s, p),
        (0.0, 0.1 * (n - 1)),
        [0.1, 0.1, 0.1],
        method="DOP853",
        rtol=1e-12,
        atol=1e-12,
        t_eval=np.arange(n) * 0.1,
    )
    assert np.max(np.abs(ours.states - sol.y.T)) < 1e-3
    assert time.time() - start < 5.0


def test_channel_statistics():
    start = time.time()
    noise = np.sqrt(0.5) * gaussian_stream(RngStream(0, 1), 1_000_000)
    assert abs(np.mean(noise)) < 0.01
    assert abs(np.var(noise) - 0.5) < 0.05 * 0.5
    centered = noise - np.mean(noise)
    rho1 = np.dot(centered[:-1], centered[1:]) / np.dot(centered, centered)
    assert abs(rho1) < 0.01
    assert time.time() - start < 5.0


def test_ga_recovery(master):
    start = time.time()
    ctx = FitnessContext(master.x, known_y0=0.1, known_z0=0.1)
    hits = sum(abs(ga_run(ctx, GaConfig(seed=seed)).x0_hat - 0.1) <= 1e-3 for seed in range(10))
    assert hits >= 9
    assert time.time() - start < 180.0


def test_dip_convergence(master):
    start = time.time()
    mu = awgn(master.x, ChannelConfig(sigma2=0.5, seed=0))
    res_800 = dip_optimize(GeneratorNet(GeneratorConfig()), mu, iters=800, gd_iters=0)
    assert res_800.loss_history[-1] <= 0.10 * res_800.loss_history[0]
    res_2000 = dip_optimize(GeneratorNet(GeneratorConfig()), mu, iters=2000, gd_iters=0)
    err_800 = avg_amplitude_error(master.x, res_800.chi)
    err_2000 = avg_amplitude_error(master.x, res_2000.chi)
    assert abs(err_800 - err_2000) <= 0.10 * err_2000
    assert time.time() - start < 600.0


@pytest.mark.slow
def test_sync_error_table(master):
    start = time.time()
    assert main(["table3"]) == 0
    table = parse_csv(OUT / "table3.csv")
    assert table.columns == ["sigma2", "dcs", "rnn", "conventional"]
    assert len(table.rows) == 7
    for sigma2, dcs, rnn, conventional in table.rows:
        assert dcs < rnn < conventional, f"ordering broken at sigma2={sigma2}"
    dcs_col = np.array([row[1] for row in table.rows])
    mean = float(np.mean(dcs_col))
    assert mean <= 3.0 * 0.0285
    assert float(np.std(dcs_col)) <= 0.25 * mean
    assert time.time() - start < 3600.0


@pytest.mark.slow
def test_segment_crossover():
    start = time.time()
    assert main(["fig10", "--sigma2", "0.5"]) == 0
    table = parse_csv(OUT / "fig10.csv")
    assert table.columns == ["length", "dcs", "rnn", "ga_only"]
    lengths = [row[0] for row in table.rows]
    assert lengths == [400.0, 600.0, 800.0, 1024.0]
    dcs = np.array([row[1] for row in table.rows])
    rnn = np.array([row[2] for row in table.rows])
    ga_only = np.array([row[3] for row in table.rows])
    assert float(np.mean(dcs)) <= 1.1 * float(np.mean(rnn))
    assert float(np.mean(dcs)) < float(np.mean(ga_only))
    assert float(np.mean(rnn)) < float(np.mean(ga_only))
    assert time.time() - start < 3600.0


def test_conventional_exactness(master):
    start = time.time()
    out = conventional_receive(master.x, x0_guess=0.1)
    assert np.max(np.abs(master.z.values - out.zr.values)) < 1e-6
    assert time.time() - start < 1.0


@pytest.mark.slow
def test_map_comparison(master):
    start = time.time()
    rossler_params = RosslerParams(standard_form=True)
    sources = {
        "lorenz": (master, (0.1, 0.1), None),
        "rossler": (rossler_trajectory((0.1, 0.1, 0.1), 0.1, 1024, rossler_params), (0.1, 0.1), rossler_params),
        "henon": (henon_trajectory(n=1024), HENON_PRESET_INIT[1:], None),
    }
    wall = {name: [] for name in sources}
    err = {name: [] for name in sources}
    for seed in range(5):
        for name, (traj, yz0, params) in sources.items():
            x = traj.x
            mu = awgn(x, ChannelConfig(sigma2=0.5, seed=seed))
            x0 = float(traj.states[0, 0])
            ga_cfg = GaConfig(lower=x0 - 0.05, upper=x0 + 0.05, seed=seed)
            out = dcs_receive(mu, ga_cfg=ga_cfg, params=params, y0=yz0[0], z0=yz0[1], system=name)
            wall[name].append(out.wall_clock)
            scale = float(np.max(np.abs(x.values)))
            err[name].append(avg_amplitude_error(x, out.chi) / scale)
    assert np.mean(wall["henon"]) < np.mean(wall["lorenz"])
    assert np.mean(err["lorenz"]) <= np.mean(err["rossler"])
    assert np.mean(err["lorenz"]) <= np.mean(err["henon"])
    assert time.time() - start < 1800.0


def test_table3_deterministic(tmp_path):
    reduced = [
        "--set", "experiment.T=512",
        "--set", "experiment.seeds=2",
        "--set", "experiment.sigma2=0.1 0.5",
        "--set", "ga.population_size=300",
        "--set", "ga.n_generations=3",
        "--set", "network.Iter=40",
    ]
    assert main(["table3", *reduced]) == 0
    first = (OUT / "table3.csv").read_bytes()
    (tmp_path / "first.csv").write_bytes(first)
    assert main(["table3", *reduced]) == 0
    assert (OUT / "table3.csv").read_bytes() == first
