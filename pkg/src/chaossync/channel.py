"""AWGN corruption of the drive signal and all randomness management."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import Signal


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Backed by the Philox counter-based generator so distinct stream ids give
    statistically independent sequences and results are stable across
    platforms.  Normal variates come from numpy's ziggurat sampler.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (int(self.seed) & (2**64 - 1)) | ((int(self.stream_id) & (2**64 - 1)) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def derive(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True)
class ChannelConfig:
    sigma2: float
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 < 0:
            raise ChannelError("sigma2 must be finite and >= 0")


def gaussian_stream(rng: RngStream, n: int) -> np.ndarray:
    """n standard-normal draws, deterministic per (seed, stream_id)."""
    if n < 0:
        raise ChannelError("n must be >= 0")
    return rng.generator().standard_normal(n)


def awgn(clean: Signal, cfg: ChannelConfig) -> Signal:
    """mu(t) = x(t) + zeta(t), zeta i.i.d. N(0, sigma2).

    sigma2 = 0 returns the input values bit-exactly.
    """
    if cfg.sigma2 == 0.0:
        return clean.with_values(clean.values.copy())
    noise = gaussian_stream(RngStream(cfg.seed, cfg.stream_id), len(clean))
    return clean.with_values(clean.values + np.sqrt(cfg.sigma2) * noise)
