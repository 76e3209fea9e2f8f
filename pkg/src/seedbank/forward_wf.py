"""Discrete-generation Wright-Fisher models with a strong seed bank.

A population of N active individuals sits next to a dormant pool of
M = floor(N/K) individuals of the same order of magnitude.  Each generation
the active pool reproduces by multinomial sampling, while an exchange of c
individuals (a fixed integer, or a Binomial(N, c/N) draw) moves types between
the pools.  Time rescaled by N turns the two type-0 frequencies into the
dormancy diffusion; rare coordinated events that replace a fraction z of one
pool with types from the other add the jump component.

Two-allele bookkeeping only: states count type-0 individuals per pool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .measures import SwitchingMeasure, sample_location, total_mass
from .streams import as_rng

__all__ = [
    "SimSwitching",
    "WFConfig",
    "WFState",
    "wf_step",
    "wf_sim_step",
    "run_trajectory",
    "WFTrajectory",
    "wf_ensemble",
    "WFEnsembleResult",
]


@dataclass(frozen=True)
class SimSwitching:
    """Rare coordinated replacement events.

    Per generation, with probability rate_f / N a fraction z ~ mu_f of the
    active pool is refilled from the seed bank; with probability rate_d / N a
    fraction z ~ mu_d of the seed bank is refilled from active offspring.
    Both measures must be normalized to probability distributions.
    """

    rate_f: float = 0.0
    rate_d: float = 0.0
    mu_f: SwitchingMeasure = SwitchingMeasure()
    mu_d: SwitchingMeasure = SwitchingMeasure()

    def __post_init__(self):
        if self.rate_f < 0.0 or self.rate_d < 0.0:
            raise ValueError("event rates must be nonnegative")
        if self.rate_f > 0.0 and not math.isclose(total_mass(self.mu_f), 1.0, rel_tol=1e-9):
            raise ValueError("mu_f must be normalized to a probability measure")
        if self.rate_d > 0.0 and not math.isclose(total_mass(self.mu_d), 1.0, rel_tol=1e-9):
            raise ValueError("mu_d must be normalized to a probability measure")


@dataclass(frozen=True)
class WFConfig:
    """Population sizes and exchange mechanism.

    N              active population size
    K              size ratio; the seed bank holds M = floor(N/K) individuals
    c              expected number of individuals exchanged per generation
    exchange_mode  "fixed" (c must be an integer <= min(N, M)) or "binomial"
                   (Binomial(N, c/N) individuals per generation, clamped to
                   min(N, M) in the vanishing-probability overflow case)
    sim_switching  optional rare-event component
    """

    N: int
    K: float = 1.0
    c: float = 1.0
    exchange_mode: str = "binomial"
    sim_switching: Optional[SimSwitching] = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.K <= 0.0:
            raise ValueError("K must be positive")
        if self.c < 0.0:
            raise ValueError("c must be nonnegative")
        if self.exchange_mode not in ("fixed", "binomial"):
            raise ValueError(f"unknown exchange mode {self.exchange_mode!r}")
        if self.M < 1:
            raise ValueError(f"seed bank is empty: floor({self.N}/{self.K}) < 1")
        if self.exchange_mode == "fixed":
            if self.c != int(self.c):
                raise ValueError("fixed exchange mode needs an integer c")
            if self.c > min(self.N, self.M):
                raise ValueError("fixed exchange count exceeds a pool size")
        if self.sim_switching is not None:
            total = self.sim_switching.rate_f + self.sim_switching.rate_d
            if total / self.N > 1.0:
                raise ValueError("(rate_f + rate_d)/N must not exceed 1")

    @property
    def M(self) -> int:
        return int(self.N / self.K)


class WFState(NamedTuple):
    i: int  # type-0 count among the N active
    j: int  # type-0 count among the M dormant
    generation: int


def _draw_exchange(cfg: WFConfig, rng, stats) -> int:
    if cfg.exchange_mode == "fixed":
        return int(cfg.c)
    c_star = int(rng.binomial(cfg.N, cfg.c / cfg.N))
    cap = min(cfg.N, cfg.M)
    if c_star > cap:
        if stats is not None:
            stats["clamped_exchanges"] = stats.get("clamped_exchanges", 0) + 1
        c_star = cap
    return c_star


def _hyper(rng, ngood: int, nbad: int, nsample: int) -> int:
    if nsample <= 0:
        return 0
    return int(rng.hypergeometric(ngood, nbad, nsample))


def wf_step(s: WFState, cfg: WFConfig, rng, stats: Optional[dict] = None) -> WFState:
    """One generation of the spontaneous-exchange model.

    The new active pool is N - c* multinomial offspring of the old active
    pool plus c* types drawn without replacement from the seed bank; the new
    seed bank keeps M - c* uniformly chosen survivors and adds c* active
    offspring.  The two uniform choices are independent.
    """
    N, M = cfg.N, cfg.M
    c_star = _draw_exchange(cfg, rng, stats)
    p0 = s.i / N
    new_i = int(rng.binomial(N - c_star, p0)) + _hyper(rng, s.j, M - s.j, c_star)
    new_j = _hyper(rng, s.j, M - s.j, M - c_star) + int(rng.binomial(c_star, p0))
    return WFState(i=new_i, j=new_j, generation=s.generation + 1)


def wf_sim_step(s: WFState, cfg: WFConfig, rng, stats: Optional[dict] = None) -> WFState:
    """One generation with the rare coordinated events enabled.

    With probability rate_f/N, a fraction z of the active slots is refilled
    from the seed bank (types drawn without replacement; the replacement
    count is capped at M, counted in ``stats["capped_floods"]``).  With
    probability rate_d/N, a fraction z of the seed bank is replaced by active
    offspring.  Otherwise an ordinary generation happens.
    """
    sw = cfg.sim_switching
    if sw is None:
        raise ValueError("sim_switching is not configured")
    N, M = cfg.N, cfg.M
    u = rng.random()
    p_f = sw.rate_f / N
    p_d = sw.rate_d / N
    if u < p_f:
        z = sample_location(sw.mu_f, rng)
        k = int(round(z * N))
        if k > M:
            if stats is not None:
                stats["capped_floods"] = stats.get("capped_floods", 0) + 1
            k = M
        if stats is not None:
            stats["f_events"] = stats.get("f_events", 0) + 1
        p0 = s.i / N
        new_i = int(rng.binomial(N - k, p0)) + _hyper(rng, s.j, M - s.j, k)
        return WFState(i=new_i, j=s.j, generation=s.generation + 1)
    if u < p_f + p_d:
        z = sample_location(sw.mu_d, rng)
        k = int(round(z * M))
        if stats is not None:
            stats["d_events"] = stats.get("d_events", 0) + 1
        p0 = s.i / N
        new_i = int(rng.binomial(N, p0))
        new_j = _hyper(rng, s.j, M - s.j, M - k) + int(rng.binomial(k, p0))
        return WFState(i=new_i, j=new_j, generation=s.generation + 1)
    return wf_step(s, cfg, rng, stats)


@dataclass
class WFTrajectory:
    """Recorded frequency path of one forward run."""

    cfg: WFConfig
    generations: np.ndarray  # recorded generation numbers
    i: np.ndarray
    j: np.ndarray
    fixation_generation: Optional[int]  # first generation with both pools monochrome
    stats: dict

    @property
    def x(self) -> np.ndarray:
        return self.i / self.cfg.N

    @property
    def y(self) -> np.ndarray:
        return self.j / self.cfg.M


def run_trajectory(
    cfg: WFConfig,
    x0: float,
    y0: float,
    generations: int,
    record_every: int = 1,
    seed=None,
) -> WFTrajectory:
    """Run one forward trajectory, recording every ``record_every`` generations.

    Initial counts are the nearest representable i/N and j/M.  After both
    pools become monochrome for the same type the remaining records are
    filled with the absorbed state.  Bit-identical rerun for a fixed seed.
    """
    if not (0.0 <= x0 <= 1.0 and 0.0 <= y0 <= 1.0):
        raise ValueError("initial frequencies must lie in [0, 1]")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    rng = as_rng(seed)
    N, M = cfg.N, cfg.M
    state = WFState(i=int(round(x0 * N)), j=int(round(y0 * M)), generation=0)
    stats: dict = {}
    step = wf_sim_step if cfg.sim_switching is not None else wf_step
    rec_g = [0]
    rec_i = [state.i]
    rec_j = [state.j]
    fixation: Optional[int] = None
    for g in range(1, generations + 1):
        if fixation is None:
            state = step(state, cfg, rng, stats)
            if (state.i, state.j) in ((0, 0), (N, M)):
                fixation = state.generation
        else:
            state = WFState(i=state.i, j=state.j, generation=g)
        if g % record_every == 0:
            rec_g.append(g)
            rec_i.append(state.i)
            rec_j.append(state.j)
    return WFTrajectory(
        cfg=cfg,
        generations=np.array(rec_g, dtype=np.int64),
        i=np.array(rec_i, dtype=np.int64),
        j=np.array(rec_j, dtype=np.int64),
        fixation_generation=fixation,
        stats=stats,
    )


@dataclass
class WFEnsembleResult:
    """Terminal states of a vectorized batch of spontaneous-model runs."""

    i: np.ndarray
    j: np.ndarray
    fixed_generation: np.ndarray  # -1 where the run did not fix
    clamped_exchanges: int

    def fixation_counts(self, cfg: WFConfig) -> tuple[int, int, int]:
        """(fixed at all type 0, fixed at all type 1, unfixed)."""
        fixed = self.fixed_generation >= 0
        ones = int(np.sum(fixed & (self.i == cfg.N)))
        zeros = int(np.sum(fixed & (self.i == 0)))
        return ones, zeros, int(np.sum(~fixed))


def wf_ensemble(
    cfg: WFConfig,
    x0: float,
    y0: float,
    reps: int,
    generations: int,
    seed=None,
    *,
    stop_at_fixation: bool = True,
) -> WFEnsembleResult:
    """Run many spontaneous-model replicates in lockstep (vectorized).

    Fixed runs freeze at their absorbing state; with stop_at_fixation=False
    every lane runs the full horizon (useful for marginal-law comparisons).
    Rare coordinated events are not supported here; use run_trajectory.
    """
    if cfg.sim_switching is not None and (
        cfg.sim_switching.rate_f > 0 or cfg.sim_switching.rate_d > 0
    ):
        raise ValueError("the vectorized ensemble only covers the spontaneous model")
    rng = as_rng(seed)
    N, M = cfg.N, cfg.M
    cap = min(N, M)
    i = np.full(reps, int(round(x0 * N)), dtype=np.int64)
    j = np.full(reps, int(round(y0 * M)), dtype=np.int64)
    fixed_gen = np.full(reps, -1, dtype=np.int64)
    clamped = 0
    alive = np.ones(reps, dtype=bool)
    _flag_fixed(i, j, N, M, fixed_gen, alive, 0, stop_at_fixation)
    for g in range(1, generations + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        if cfg.exchange_mode == "fixed":
            c_star = np.full(idx.size, int(cfg.c), dtype=np.int64)
        else:
            c_star = rng.binomial(N, cfg.c / N, size=idx.size).astype(np.int64)
            over = c_star > cap
            if over.any():
                clamped += int(over.sum())
                c_star[over] = cap
        p0 = i[idx] / N
        new_i = rng.binomial(N - c_star, p0)
        new_j = np.zeros(idx.size, dtype=np.int64)
        take = c_star > 0
        if take.any():
            new_i[take] += rng.hypergeometric(j[idx][take], M - j[idx][take], c_star[take])
        keep = (M - c_star) > 0
        if keep.any():
            new_j[keep] += rng.hypergeometric(j[idx][keep], M - j[idx][keep], (M - c_star)[keep])
        if take.any():
            new_j[take] += rng.binomial(c_star[take], p0[take])
        i[idx] = new_i
        j[idx] = new_j
        _flag_fixed(i, j, N, M, fixed_gen, alive, g, stop_at_fixation, idx)
    return WFEnsembleResult(i=i, j=j, fixed_generation=fixed_gen, clamped_exchanges=clamped)


def _flag_fixed(i, j, N, M, fixed_gen, alive, g, stop_at_fixation, idx=None):
    scope = idx if idx is not None else np.arange(i.size)
    mono = ((i[scope] == 0) & (j[scope] == 0)) | ((i[scope] == N) & (j[scope] == M))
    hit = scope[mono & (fixed_gen[scope] < 0)]
    fixed_gen[hit] = g
    if stop_at_fixation:
        alive[hit] = False
