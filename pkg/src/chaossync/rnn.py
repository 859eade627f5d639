"""Trainable GRU sequence-to-sequence denoiser.

A two-layer GRU encoder compresses the noisy observation into a context
vector; a two-layer GRU decoder, fed that context at every step, emits the
denoised sequence through a linear projection.  Each cell update is a single
fused autodiff node with a hand-derived backward, which keeps the graph for a
1024-step sequence small enough to train in numpy.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from . import autodiff as ad
from .channel import ChannelConfig, RngStream, awgn
from .dip import denormalize, normalize
from .dynamics import lorenz_trajectory
from .signals import Signal

_MAGIC = b"GRUW"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RnnConfig:
    hidden: int = 64
    depth: int = 2
    seed: int = 0
    train_sigma2: float = 0.3
    train_length: int = 1024
    iters: int = 800
    lr: float = 1e-2
    pairing: str = "aligned"  # "aligned" or "shifted" input/target indexing

    def validate(self):
        if self.hidden < 1 or self.depth < 1:
            raise ad.UsageError("hidden and depth must be >= 1")
        if self.pairing not in ("aligned", "shifted"):
            raise ad.UsageError(f"unknown pairing {self.pairing!r}")


class GruLayer:
    """One GRU layer: update/reset gates and candidate state.

    Recurrent matrices start orthogonal and the update-gate bias starts
    negative so early training carries state across many steps.
    """

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        k = 1.0 / np.sqrt(hidden)

        def mk(*shape):
            return ad.Tensor(rng.uniform(-k, k, size=shape), requires_grad=True)

        def mk_orth():
            a = rng.standard_normal((hidden, hidden))
            q, r = np.linalg.qr(a)
            return ad.Tensor(q * np.sign(np.diag(r)), requires_grad=True)

        self.Wz, self.Uz = mk(hidden, in_dim), mk_orth()
        self.bz = ad.Tensor(np.full(hidden, -1.0), requires_grad=True)
        self.Wr, self.Ur, self.br = mk(hidden, in_dim), mk_orth(), mk(hidden)
        self.Wc, self.Uc, self.bc = mk(hidden, in_dim), mk_orth(), mk(hidden)

    def parameters(self) -> List[ad.Tensor]:
        return [self.Wz, self.Uz, self.bz, self.Wr, self.Ur, self.br, self.Wc, self.Uc, self.bc]


def gru_cell(x, h: ad.Tensor, layer: GruLayer) -> ad.Tensor:
    """Fused GRU update; `x` may be a Tensor or a constant 1-D array.

    z = sigmoid(Wz x + Uz h + bz), r = sigmoid(Wr x + Ur h + br),
    c = tanh(Wc x + Uc (r*h) + bc), h' = (1-z)*h + z*c.
    """
    xt = isinstance(x, ad.Tensor)
    xd = x.data if xt else np.asarray(x, dtype=np.float64)
    hd = h.data
    Wz, Uz, bz = layer.Wz, layer.Uz, layer.bz
    Wr, Ur, br = layer.Wr, layer.Ur, layer.br
    Wc, Uc, bc = layer.Wc, layer.Uc, layer.bc
    z = 1.0 / (1.0 + np.exp(-(Wz.data @ xd + Uz.data @ hd + bz.data)))
    r = 1.0 / (1.0 + np.exp(-(Wr.data @ xd + Ur.data @ hd + br.data)))
    rh = r * hd
    c = np.tanh(Wc.data @ xd + Uc.data @ rh + bc.data)
    out = (1.0 - z) * hd + z * c

    def bwd(g, x=x, h=h, xd=xd, hd=hd, z=z, r=r, rh=rh, c=c):
        dz = g * (c - hd)
        dc = g * z
        dh = g * (1.0 - z)
        dac = dc * (1.0 - c * c)
        drh = Uc.data.T @ dac
        dr = drh * hd
        dh += drh * r
        dar = dr * r * (1.0 - r)
        daz = dz * z * (1.0 - z)
        dh += Ur.data.T @ dar + Uz.data.T @ daz
        Wc._accumulate(np.outer(dac, xd))
        Uc._accumulate(np.outer(dac, rh))
        bc._accumulate(dac)
        Wr._accumulate(np.outer(dar, xd))
        Ur._accumulate(np.outer(dar, hd))
        br._accumulate(dar)
        Wz._accumulate(np.outer(daz, xd))
        Uz._accumulate(np.outer(daz, hd))
        bz._accumulate(daz)
        h._accumulate(dh)
        if isinstance(x, ad.Tensor):
            x._accumulate(Wz.data.T @ daz + Wr.data.T @ dar + Wc.data.T @ dac)

    parents = (x, h, Wz, Uz, bz, Wr, Ur, br, Wc, Uc, bc) if xt else (h, Wz, Uz, bz, Wr, Ur, br, Wc, Uc, bc)
    return ad.Tensor(out, parents=parents, backward=bwd)


def project_sequence(hs: Sequence[ad.Tensor], w: ad.Tensor, b: ad.Tensor) -> ad.Tensor:
    """Linear read-out w . h_t + b over a list of hidden states, as (1, T)."""
    H = np.stack([h.data for h in hs], axis=1)
    out = (w.data @ H + b.data)[None, :]

    def bwd(g, hs=tuple(hs), w=w, b=b, H=H):
        gv = g[0]
        for t, h in enumerate(hs):
            h._accumulate(gv[t] * w.data)
        w._accumulate(H @ gv)
        b._accumulate(gv.sum())

    return ad.Tensor(out, parents=(*hs, w, b), backward=bwd)


class GruSeq2Seq:
    def __init__(self, cfg: RnnConfig):
        cfg.validate()
        self.cfg = cfg
        rng = RngStream(cfg.seed, stream_id=201).generator()
        n = cfg.hidden
        self.encoder = [GruLayer(1 if i == 0 else n, n, rng) for i in range(cfg.depth)]
        self.decoder = [GruLayer(n, n, rng) for _ in range(cfg.depth)]
        k = 1.0 / np.sqrt(n)
        self.w_out = ad.Tensor(rng.uniform(-k, k, size=n), requires_grad=True)
        self.b_out = ad.Tensor(rng.uniform(-k, k, size=()), requires_grad=True)

    def parameters(self) -> List[ad.Tensor]:
        params = []
        for layer in (*self.encoder, *self.decoder):
            params.extend(layer.parameters())
        params.extend([self.w_out, self.b_out])
        return params

    def forward(self, sequence: np.ndarray) -> ad.Tensor:
        """Map a 1-D observation (already normalized) to a (1, T) estimate."""
        n = self.cfg.hidden
        # scan the encoder back to front so the context is freshest for the
        # earliest decoder steps, which the sync window weights most
        steps = [v.reshape(1) for v in sequence[::-1]]
        for layer in self.encoder:
            h = ad.Tensor(np.zeros(n))
            outs = []
            for x in steps:
                h = gru_cell(x, h, layer)
                outs.append(h)
            steps = outs
        context = steps[-1]
        steps = [context] * len(sequence)
        for layer in self.decoder:
            h = ad.Tensor(np.zeros(n))
            outs = []
            for x in steps:
                h = gru_cell(x, h, layer)
                outs.append(h)
            steps = outs
        return project_sequence(steps, self.w_out, self.b_out)


def half_sse_loss(pred: ad.Tensor, target: np.ndarray) -> ad.Tensor:
    d = pred - ad.Tensor(target)
    return ad.Tensor(0.5) * (d * d).sum()


def train_rnn(net: GruSeq2Seq, mu: Signal, iters: int | None = None, lr: float | None = None) -> np.ndarray:
    """Fit the network to reproduce one noisy observation; returns the loss history.

    The observation is both input and target (the clean drive is never
    available at the receiver); it is max-abs normalized so the trained map
    is reusable on observations of similar amplitude.
    """
    cfg = net.cfg
    iters = cfg.iters if iters is None else iters
    lr = cfg.lr if lr is None else lr
    norm_mu, scale = normalize(mu)
    inp = norm_mu.values
    tgt = inp
    if cfg.pairing == "shifted":
        inp, tgt = inp[:-1], tgt[1:]
    opt = ad.Adam(net.parameters(), lr=lr)
    history = np.empty(iters)
    for i in range(iters):
        # cosine decay to lr/10; the high initial rate escapes the early
        # plateau and the low final rate settles the fit
        opt.lr = 0.1 * lr + 0.45 * lr * (1.0 + np.cos(np.pi * i / max(iters - 1, 1)))
        ad.zero_grads(net.parameters())
        loss = half_sse_loss(net.forward(inp), tgt[None, :])
        history[i] = float(loss.data)
        ad.backward(loss)
        opt.step()
    return history


def rnn_denoise(net: GruSeq2Seq, mu: Signal) -> Signal:
    norm_mu, scale = normalize(mu)
    out = net.forward(norm_mu.values).data[0]
    if net.cfg.pairing == "shifted":
        # estimates address samples 1..T-1; repeat the first for alignment
        out = np.concatenate([out[:1], out[:-1]])
    return denormalize(Signal(out, dt=mu.dt, t0=mu.t0), scale)


def make_training_signal(cfg: RnnConfig) -> Signal:
    """Default training data: one Lorenz drive segment plus channel noise."""
    traj = lorenz_trajectory((0.1, 0.1, 0.1), 0.1, cfg.train_length)
    return awgn(traj.x, ChannelConfig(cfg.train_sigma2, seed=cfg.seed, stream_id=202))


def train_default(cfg: RnnConfig) -> GruSeq2Seq:
    net = GruSeq2Seq(cfg)
    train_rnn(net, make_training_signal(cfg))
    return net


def save_weights(net: GruSeq2Seq, path) -> None:
    params = net.parameters()
    flat = np.concatenate([p.data.ravel() for p in params]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIIIQ", _MAGIC, _FORMAT_VERSION, net.cfg.hidden, net.cfg.depth, flat.size))
        fh.write(flat.tobytes())


def load_weights(net: GruSeq2Seq, path) -> None:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<4sIIIQ"))
        magic, version, hidden, depth, count = struct.unpack("<4sIIIQ", header)
        if magic != _MAGIC or version != _FORMAT_VERSION:
            raise ad.UsageError(f"not a recognized weight file: {path}")
        if hidden != net.cfg.hidden or depth != net.cfg.depth:
            raise ad.UsageError(
                f"weight file is for hidden={hidden} depth={depth}, "
                f"network has hidden={net.cfg.hidden} depth={net.cfg.depth}"
            )
        flat = np.frombuffer(fh.read(count * 8), dtype="<f8")
    params = net.parameters()
    total = sum(p.data.size for p in params)
    if flat.size != total:
        raise ad.UsageError(f"weight file holds {flat.size} values, network needs {total}")
    pos = 0
    for p in params:
        p.data = flat[pos : pos + p.data.size].reshape(p.data.shape).copy()
        pos += p.data.size
