"""Untrained convolutional generator and its two-stage self-supervised fit.

The generator is a DCGAN-style stack of transposed convolutions; fitting its
weights to a single noisy observation denoises the observation because the
convolutional architecture resists fitting white noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from . import autodiff as ad
from .channel import RngStream
from .signals import Signal


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    latent_channels: int = 64
    latent_length: int = 32
    n_gf: int = 64
    n_layers: int = 5
    kernel: int = 4
    stride: int = 2
    padding: int = 1
    output_length: int = 1024
    seed: int = 0

    def layer_lengths(self) -> List[int]:
        lengths = [self.latent_length]
        for _ in range(self.n_layers):
            lengths.append((lengths[-1] - 1) * self.stride - 2 * self.padding + self.kernel)
        return lengths

    def validate(self):
        lengths = self.layer_lengths()
        if lengths[-1] != self.output_length:
            raise ConfigError(
                f"generator geometry produces lengths {lengths}, not output_length={self.output_length}"
            )
        if min(lengths) < 1:
            raise ConfigError(f"generator geometry collapses: lengths {lengths}")


class GeneratorNet:
    """conv_transpose -> BN -> ReLU stack with a tanh-bounded final layer.

    The latent input is drawn once at construction and frozen; only the
    weights are optimized.
    """

    def __init__(self, cfg: GeneratorConfig):
        cfg.validate()
        self.cfg = cfg
        rng = RngStream(cfg.seed, stream_id=101).generator()
        self.latent = ad.Tensor(rng.standard_normal((cfg.latent_channels, cfg.latent_length)))
        self.weights: List[ad.Tensor] = []
        self.bn_gamma: List[ad.Tensor] = []
        self.bn_beta: List[ad.Tensor] = []
        cin = cfg.latent_channels
        for layer in range(cfg.n_layers):
            cout = 1 if layer == cfg.n_layers - 1 else cfg.n_gf
            w = rng.normal(0.0, 0.02, size=(cin, cout, cfg.kernel))
            self.weights.append(ad.Tensor(w, requires_grad=True))
            if layer < cfg.n_layers - 1:
                self.bn_gamma.append(ad.Tensor(np.ones(cout), requires_grad=True))
                self.bn_beta.append(ad.Tensor(np.zeros(cout), requires_grad=True))
            cin = cout

    def parameters(self) -> List[ad.Tensor]:
        return [*self.weights, *self.bn_gamma, *self.bn_beta]

    def forward(self) -> ad.Tensor:
        cfg = self.cfg
        h = self.latent
        for layer in range(cfg.n_layers):
            h = ad.conv_transpose_1d(h, self.weights[layer], cfg.stride, cfg.padding)
            if layer < cfg.n_layers - 1:
                h = ad.batch_norm_1d(h, self.bn_gamma[layer], self.bn_beta[layer])
                h = ad.relu(h)
        return ad.tanh(h)


class DiscriminatorNet:
    """Strided-conv mirror of the generator (BN + LeakyReLU).

    Not part of the optimization path; the reconstruction objective uses only
    the generator.  Kept so the full DCGAN block diagram is representable.
    """

    def __init__(self, cfg: GeneratorConfig):
        self.cfg = cfg
        rng = RngStream(cfg.seed, stream_id=102).generator()
        self.weights = []
        self.bn_gamma = []
        self.bn_beta = []
        cin = 1
        for layer in range(cfg.n_layers):
            cout = cfg.n_gf
            self.weights.append(
                ad.Tensor(rng.normal(0.0, 0.02, size=(cout, cin, cfg.kernel)), requires_grad=True)
            )
            self.bn_gamma.append(ad.Tensor(np.ones(cout), requires_grad=True))
            self.bn_beta.append(ad.Tensor(np.zeros(cout), requires_grad=True))
            cin = cout

    def forward(self, signal: ad.Tensor) -> ad.Tensor:
        h = signal
        for w, g, b in zip(self.weights, self.bn_gamma, self.bn_beta):
            h = ad.conv1d(h, w, self.cfg.stride, self.cfg.padding)
            h = ad.batch_norm_1d(h, g, b)
            h = ad.leaky_relu(h, 0.2)
        return h


@dataclass
class DipResult:
    chi: Signal
    loss_history: np.ndarray
    iterations_run: int


def build_generator(cfg: GeneratorConfig) -> GeneratorNet:
    return GeneratorNet(cfg)


def generator_forward(net: GeneratorNet) -> Signal:
    return Signal(net.forward().data[0].copy())


def normalize(signal: Signal) -> Tuple[Signal, float]:
    """Scale into [-1, 1] by the max absolute value; all-zero input keeps scale 1."""
    scale = float(np.max(np.abs(signal.values)))
    if scale == 0.0:
        return signal, 1.0
    return signal.with_values(signal.values / scale), scale


def denormalize(signal: Signal, scale: float) -> Signal:
    return signal.with_values(signal.values * scale)


class DivergenceError(ArithmeticError):
    def __init__(self, iteration: int):
        super().__init__(f"non-finite loss at iteration {iteration}")
        self.iteration = iteration


def dip_optimize(
    net: GeneratorNet,
    mu: Signal,
    iters: int = 800,
    lr: float = 1e-4,
    mom: float = 0.9,
    gd_iters: int = 200,
    gd_lr: float = 1e-5,
) -> DipResult:
    """Two-stage fit of the generator to a noisy observation.

    Stage 1: `iters` RMSProp steps on mean-squared reconstruction error.
    Stage 2: `gd_iters` plain gradient-descent polish steps.
    The observation is max-abs normalized before fitting (tanh output range)
    and the scale restored on the returned signal.
    """
    if iters < 1:
        raise ConfigError("iters must be >= 1")
    T = len(mu)
    if T > net.cfg.output_length:
        raise ConfigError(f"observation length {T} exceeds generator output {net.cfg.output_length}")
    norm_mu, scale = normalize(mu)
    # Fit with a little headroom below the tanh bounds so the peaks of the
    # observation stay reachable at finite pre-activation.
    headroom = 0.9
    target = ad.Tensor(headroom * norm_mu.values[None, :])
    scale = scale / headroom
    params = net.parameters()

    def loss_fn():
        out = net.forward()
        if T < net.cfg.output_length:
            out = ad.truncate(out, T)
        return ad.mse_loss(out, target)

    history = np.empty(iters + gd_iters)
    opt = ad.RMSProp(params, lr=lr, decay=0.99, momentum=mom)
    for i in range(iters):
        ad.zero_grads(params)
        loss = loss_fn()
        if not np.isfinite(loss.data):
            raise DivergenceError(i)
        history[i] = float(loss.data)
        ad.backward(loss)
        opt.step()
    gd = ad.GradientDescent(params, gd_lr) if gd_iters > 0 else None
    for i in range(gd_iters):
        ad.zero_grads(params)
        loss = loss_fn()
        if not np.isfinite(loss.data):
            raise DivergenceError(iters + i)
        history[iters + i] = float(loss.data)
        ad.backward(loss)
        gd.step()

    out = net.forward().data[0, :T].copy()
    chi = denormalize(Signal(out, dt=mu.dt, t0=mu.t0), scale)
    return DipResult(chi=chi, loss_history=history, iterations_run=iters + gd_iters)
