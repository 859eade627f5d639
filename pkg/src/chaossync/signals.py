"""Core value types shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled scalar time series."""

    values: np.ndarray
    dt: float = 0.1
    t0: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("Signal requires a nonempty 1-D value array")

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def with_values(self, values: np.ndarray) -> "Signal":
        return Signal(values, dt=self.dt, t0=self.t0)


@dataclass(frozen=True)
class Trajectory3:
    """Time-indexed sequence of 3-component states, row per sample."""

    states: np.ndarray  # shape (n, 3)
    dt: float = 0.1
    t0: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.float64)
        object.__setattr__(self, "states", s)
        if s.ndim != 2 or s.shape[1] != 3 or s.shape[0] == 0:
            raise ValueError("Trajectory3 requires a nonempty (n, 3) array")

    def __len__(self) -> int:
        return self.states.shape[0]

    def component(self, i: int) -> Signal:
        return Signal(self.states[:, i].copy(), dt=self.dt, t0=self.t0)

    @property
    def x(self) -> Signal:
        return self.component(0)

    @property
    def y(self) -> Signal:
        return self.component(1)

    @property
    def z(self) -> Signal:
        return self.component(2)
