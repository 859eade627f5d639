import numpy as np
import pytest

import chaossync.autodiff as ad
from chaossync.rnn import (
    GruLayer,
    GruSeq2Seq,
    RnnConfig,
    gru_cell,
    load_weights,
    make_training_signal,
    rnn_denoise,
    save_weights,
    train_rnn,
)
from chaossync.signals import Signal
from conftest import fd_grad, rel_err


def zeroed_layer(in_dim=1, hidden=1):
    layer = GruLayer(in_dim, hidden, np.random.default_rng(0))
    for p in layer.parameters():
        p.data = np.zeros_like(p.data)
    return layer


def small_cfg(**kw):
    defaults = dict(hidden=6, depth=2, seed=0, train_length=32, iters=3)
    defaults.update(kw)
    return RnnConfig(**defaults)


class TestGruCell:
    def test_zero_everything(self):
        layer = zeroed_layer()
        out = gru_cell(np.zeros(1), ad.Tensor(np.zeros(1)), layer)
        assert np.array_equal(out.data, [0.0])

    def test_zero_params_half_gate(self):
        layer = zeroed_layer()
        out = gru_cell(np.zeros(1), ad.Tensor(np.ones(1)), layer)
        assert out.data[0] == pytest.approx(0.5, abs=1e-15)

    def test_closed_update_gate_keeps_state(self):
        layer = zeroed_layer()
        layer.bz.data = np.full(1, -60.0)  # z ~ 0
        h = ad.Tensor(np.array([0.7]))
        out = gru_cell(np.array([0.3]), h, layer)
        assert out.data[0] == pytest.approx(0.7, abs=1e-12)

    def test_hidden_state_bounded(self):
        rng = np.random.default_rng(1)
        layer = GruLayer(1, 8, rng)
        h = ad.Tensor(rng.uniform(-1.0, 1.0, 8))
        for _ in range(50):
            h = gru_cell(rng.standard_normal(1) * 5.0, h, layer)
            assert np.all(np.abs(h.data) <= 1.0)

    def test_unrolled_gradients_match_fd(self):
        rng = np.random.default_rng(2)
        layer = GruLayer(1, 4, rng)
        xs = rng.standard_normal(3)
        params = layer.parameters()
        datas = [p.data for p in params]

        def run():
            h = ad.Tensor(np.zeros(4))
            for t in range(3):
                h = gru_cell(xs[t : t + 1], h, layer)
            return h

        loss = (run() * run()).sum()
        ad.backward(loss)
        analytic = [p.grad for p in params]

        def scalar(*arrs):
            for p, a in zip(params, arrs):
                p.data = a
            h = run()
            out = float(np.sum(h.data * h.data))
            for p, d in zip(params, datas):
                p.data = d
            return out

        numeric = fd_grad(scalar, [d.copy() for d in datas])
        worst = max(rel_err(a, n) for a, n in zip(analytic, numeric))
        assert worst <= 1e-5


class TestSeq2Seq:
    def test_zero_weights_zero_output(self):
        net = GruSeq2Seq(small_cfg())
        for p in net.parameters():
            p.data = np.zeros_like(p.data)
        out = net.forward(np.ones(16))
        assert np.array_equal(out.data, np.zeros((1, 16)))

    @pytest.mark.parametrize("T", [1, 25, 64])
    def test_output_length(self, T):
        net = GruSeq2Seq(small_cfg())
        assert net.forward(np.zeros(T)).data.shape == (1, T)

    def test_deterministic(self):
        x = np.random.default_rng(3).standard_normal(20)
        a = GruSeq2Seq(small_cfg()).forward(x).data
        b = GruSeq2Seq(small_cfg()).forward(x).data
        assert np.array_equal(a, b)

    def test_order_sensitivity(self):
        net = GruSeq2Seq(small_cfg())
        x = np.random.default_rng(4).standard_normal(20)
        assert not np.array_equal(net.forward(x).data, net.forward(x[::-1].copy()).data)

    def test_bad_config(self):
        with pytest.raises(ad.UsageError):
            RnnConfig(hidden=0).validate()
        with pytest.raises(ad.UsageError):
            RnnConfig(pairing="random").validate()


class TestTraining:
    def test_loss_history_and_determinism(self):
        cfg = small_cfg(iters=5)
        mu = make_training_signal(cfg)
        net_a, net_b = GruSeq2Seq(cfg), GruSeq2Seq(cfg)
        hist_a = train_rnn(net_a, mu)
        hist_b = train_rnn(net_b, mu)
        assert len(hist_a) == 5
        assert np.array_equal(hist_a, hist_b)
        assert np.isfinite(hist_a).all()

    def test_loss_decreases(self):
        cfg = small_cfg(iters=40, lr=1e-2)
        net = GruSeq2Seq(cfg)
        hist = train_rnn(net, make_training_signal(cfg))
        assert hist[-1] < hist[0]

    def test_denoise_shape_and_metadata(self):
        cfg = small_cfg()
        net = GruSeq2Seq(cfg)
        mu = Signal(np.random.default_rng(5).standard_normal(40), dt=0.1, t0=1.0)
        chi = rnn_denoise(net, mu)
        assert len(chi) == 40 and chi.dt == 0.1 and chi.t0 == 1.0

    def test_shifted_pairing_aligns_output(self):
        cfg = small_cfg(pairing="shifted")
        net = GruSeq2Seq(cfg)
        mu = Signal(np.random.default_rng(6).standard_normal(40))
        assert len(rnn_denoise(net, mu)) == 40


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        cfg = small_cfg()
        net = GruSeq2Seq(cfg)
        path = tmp_path / "w.bin"
        save_weights(net, path)
        other = GruSeq2Seq(small_cfg(seed=9))
        load_weights(other, path)
        x = np.random.default_rng(7).standard_normal(16)
        assert np.array_equal(net.forward(x).data, other.forward(x).data)

    def test_shape_mismatch_rejected(self, tmp_path):
        path = tmp_path / "w.bin"
        save_weights(GruSeq2Seq(small_cfg()), path)
        with pytest.raises(ad.UsageError):
            load_weights(GruSeq2Seq(small_cfg(hidden=8)), path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes(b"JUNK" + bytes(20))
        with pytest.raises(ad.UsageError):
            load_weights(GruSeq2Seq(small_cfg()), path)
