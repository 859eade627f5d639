"""Genetic-algorithm estimation of the unknown initial condition x0.

Genes are fixed-point decimals with 6 fractional digits so one-point
crossover on the digit string is well defined; selection is tournament of
size 2 with single-individual elitism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import dynamics as dyn
from .channel import RngStream
from .signals import Signal

DIGITS = 6
_GRID = 10**DIGITS


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 10000
    n_generations: int = 10
    crossover_fraction: float = 0.1
    mutation_fraction: float = 0.1
    lower: float = 0.0
    upper: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("lower must be < upper")
        for f in (self.crossover_fraction, self.mutation_fraction):
            if not 0.0 <= f <= 1.0:
                raise ValueError("fractions must lie in [0, 1]")


@dataclass(frozen=True)
class FitnessContext:
    chi: Signal
    known_y0: float
    known_z0: float
    params: object = field(default_factory=dyn.LorenzParams)
    T_s: int = 250
    system: str = "lorenz"  # lorenz | rossler | henon
    substeps: int = dyn.DEFAULT_SUBSTEPS

    def __post_init__(self):
        if not (2 <= self.T_s <= len(self.chi)):
            raise ValueError("T_s must satisfy 2 <= T_s <= len(chi)")


try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _lorenz_x_batch_jit(x0s, y0, z0, rho, r, beta, T, dt, substeps):
        n = x0s.size
        out = np.empty((n, T))
        h = dt / substeps
        for j in prange(n):
            x = x0s[j]
            y = y0
            z = z0
            out[j, 0] = x
            ok = True
            for i in range(1, T):
                if ok:
                    for _ in range(substeps):
                        k1x = rho * (y - x)
                        k1y = r * x - y - x * z
                        k1z = x * y - beta * z
                        x2 = x + 0.5 * h * k1x
                        y2 = y + 0.5 * h * k1y
                        z2 = z + 0.5 * h * k1z
                        k2x = rho * (y2 - x2)
                        k2y = r * x2 - y2 - x2 * z2
                        k2z = x2 * y2 - beta * z2
                        x3 = x + 0.5 * h * k2x
                        y3 = y + 0.5 * h * k2y
                        z3 = z + 0.5 * h * k2z
                        k3x = rho * (y3 - x3)
                        k3y = r * x3 - y3 - x3 * z3
                        k3z = x3 * y3 - beta * z3
                        x4 = x + h * k3x
                        y4 = y + h * k3y
                        z4 = z + h * k3z
                        k4x = rho * (y4 - x4)
                        k4y = r * x4 - y4 - x4 * z4
                        k4z = x4 * y4 - beta * z4
                        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
                        z = z + (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
                    if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)) or abs(x) > 1e6:
                        ok = False
                if ok:
                    out[j, i] = x
                else:
                    out[j, i] = np.inf
        return out


def _batch_deriv(self_sys: str, params):
    if self_sys == "lorenz":
        p = params

        def deriv(x, y, z):
            return p.rho * (y - x), p.r * x - y - x * z, x * y - p.beta * z

        return deriv
    if self_sys == "rossler":
        p = params

        def deriv(x, y, z):
            xdot = -p.omega * y - z if p.standard_form else p.omega * y - z
            return xdot, p.omega * x + 0.15 * y, 0.4 + z * (x - 8.5)

        return deriv
    raise ValueError(f"no continuous derivative for system {self_sys!r}")


def _simulate_x_batch(x0s: np.ndarray, ctx: FitnessContext) -> np.ndarray:
    """x components of trajectories from each candidate x0, shape (n, T_s).

    Uses the same RK4 substep arithmetic as the trajectory generators, so a
    candidate equal to the true x0 reproduces the clean drive bit-exactly.
    """
    n = x0s.size
    T = ctx.T_s
    if ctx.system == "lorenz" and _HAVE_NUMBA:
        p = ctx.params
        return _lorenz_x_batch_jit(
            np.ascontiguousarray(x0s, dtype=np.float64),
            float(ctx.known_y0),
            float(ctx.known_z0),
            p.rho,
            p.r,
            p.beta,
            T,
            ctx.chi.dt,
            ctx.substeps,
        )
    x = x0s.astype(np.float64).copy()
    y = np.full(n, ctx.known_y0)
    z = np.full(n, ctx.known_z0)
    out = np.empty((n, T))
    out[:, 0] = x
    alive = np.ones(n, dtype=bool)

    if ctx.system == "henon":
        p = ctx.params
        for i in range(1, T):
            x, y, z = 1.0 + y - z * x * x, p.b * x, z - 0.5 + p.beta_h * x * x
            bad = ~(np.isfinite(x) & np.isfinite(y) & np.isfinite(z))
            if bad.any():
                alive &= ~bad
                x = np.where(bad, 0.0, x)
                y = np.where(bad, 0.0, y)
                z = np.where(bad, 0.0, z)
            out[:, i] = x
        out[~alive] = np.inf
        return out

    deriv = _batch_deriv(ctx.system, ctx.params)
    h = ctx.chi.dt / ctx.substeps
    for i in range(1, T):
        for _ in range(ctx.substeps):
            k1x, k1y, k1z = deriv(x, y, z)
            k2x, k2y, k2z = deriv(x + 0.5 * h * k1x, y + 0.5 * h * k1y, z + 0.5 * h * k1z)
            k3x, k3y, k3z = deriv(x + 0.5 * h * k2x, y + 0.5 * h * k2y, z + 0.5 * h * k2z)
            k4x, k4y, k4z = deriv(x + h * k3x, y + h * k3y, z + h * k3z)
            x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            z = z + (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        with np.errstate(invalid="ignore"):
            bad = ~(np.isfinite(x) & np.isfinite(y) & np.isfinite(z)) | (np.abs(x) > 1e6)
        if bad.any():
            alive &= ~bad
            x = np.where(bad, 0.0, x)
            y = np.where(bad, 0.0, y)
            z = np.where(bad, 0.0, z)
        out[:, i] = x
    out[~alive] = np.inf
    return out


def fitness_batch(x0s: np.ndarray, ctx: FitnessContext) -> np.ndarray:
    """Mean-squared error of each candidate trajectory against chi over T_s."""
    xs = _simulate_x_batch(np.asarray(x0s, dtype=np.float64), ctx)
    ref = ctx.chi.values[: ctx.T_s]
    with np.errstate(invalid="ignore", over="ignore"):
        d = xs - ref[None, :]
        f = np.mean(d * d, axis=1)
    return np.where(np.isfinite(f), f, np.inf)


def fitness(x0_candidate: float, ctx: FitnessContext) -> float:
    return float(fitness_batch(np.array([x0_candidate]), ctx)[0])


def _to_int(v: float, cfg: GaConfig) -> int:
    return int(round(v * _GRID))


def _clamp(v: float, cfg: GaConfig) -> float:
    return min(max(v, cfg.lower), cfg.upper)


def digit_crossover(a: float, b: float, cut: int, cfg: GaConfig = GaConfig()) -> Tuple[float, float]:
    """Swap the decimal-digit suffixes after `cut` digits of the 6-digit genes."""
    if not 0 <= cut <= DIGITS:
        raise ValueError(f"cut must be in [0, {DIGITS}]")
    ia, ib = _to_int(a, cfg), _to_int(b, cfg)
    mod = 10 ** (DIGITS - cut)
    c1 = (ia // mod) * mod + ib % mod
    c2 = (ib // mod) * mod + ia % mod
    return _clamp(c1 / _GRID, cfg), _clamp(c2 / _GRID, cfg)


def _quantize(v: np.ndarray) -> np.ndarray:
    return np.round(v * _GRID) / _GRID


@dataclass
class GaResult:
    x0_hat: float
    best_fitness_history: np.ndarray


def ga_run(ctx: FitnessContext, cfg: GaConfig = GaConfig()) -> GaResult:
    """Estimate x0 by evolving a quantized real-coded population.

    Per generation: single elite carried over, tournament-of-2 selection,
    one-point digit crossover on a crossover_fraction share of the offspring,
    uniform-in-bounds mutation on a mutation_fraction share of genes.
    """
    rng = RngStream(cfg.seed, stream_id=7).generator()
    n = cfg.population_size
    pop = _quantize(rng.uniform(cfg.lower, cfg.upper, n))
    fit = fitness_batch(pop, ctx)
    history = np.empty(cfg.n_generations)
    best_x = pop[0]
    best_f = np.inf

    for gen in range(cfg.n_generations):
        i_best = int(np.argmin(fit))
        if fit[i_best] < best_f:
            best_f = float(fit[i_best])
            best_x = float(pop[i_best])
        history[gen] = best_f
        if gen == cfg.n_generations - 1:
            break

        n_cross = int(round(cfg.crossover_fraction * (n - 1)))
        n_cross -= n_cross % 2

        def tournament(k):
            i = rng.integers(0, n, k)
            j = rng.integers(0, n, k)
            return np.where(fit[i] <= fit[j], i, j)

        children = np.empty(n)
        child_fit = np.full(n, np.nan)  # NaN marks individuals needing evaluation
        children[0] = best_x  # elitism
        child_fit[0] = best_f
        parents = tournament(n_cross)
        for m in range(0, n_cross, 2):
            cut = int(rng.integers(0, DIGITS + 1))
            c1, c2 = digit_crossover(pop[parents[m]], pop[parents[m + 1]], cut, cfg)
            children[1 + m] = c1
            children[2 + m] = c2
        n_rest = n - 1 - n_cross
        if n_rest > 0:
            idx = tournament(n_rest)
            children[1 + n_cross :] = pop[idx]
            child_fit[1 + n_cross :] = fit[idx]
        mutate = rng.random(n) < cfg.mutation_fraction
        mutate[0] = False
        children[mutate] = _quantize(rng.uniform(cfg.lower, cfg.upper, int(mutate.sum())))
        child_fit[mutate] = np.nan
        pop = children
        fit = child_fit
        todo = np.isnan(fit)
        if todo.any():
            fit[todo] = fitness_batch(pop[todo], ctx)

    return GaResult(x0_hat=best_x, best_fitness_history=history)
