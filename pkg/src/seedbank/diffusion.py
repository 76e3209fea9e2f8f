"""Euler-Maruyama integration of the dormancy frequency diffusion.

State is the pair (x, y) of type-0 frequencies in the active and dormant
pools.  Only x carries Wright-Fisher noise:

    dx = [-u1 x + u2 (1-x) + c (y - x)] dt + sqrt(x (1-x)) dB
    dy = [-u1' y + u2' (1-y) + c K (x - y)] dt

plus, when switching measures are present, jumps x -> x + z (y - x) (F type,
driven by the active->dormant measure) and y -> y + z (x - y) (D type) whose
sizes arrive as a Poisson point process with intensity (1/z) measure(dz).
Jumps below the cutoff are folded into the drift through their first moment
(the compensator (y - x) * mass below the cutoff), which is finite because
the measures are finite.  The state is clamped to [0, 1]^2 after every
update; boundary statistics are therefore always reported together with a
dt-refinement so that discretization-induced hits are visible.

A scalar integrator produces full :class:`Trajectory` records (used by the
delay-representation check); a vectorized batch engine drives the Monte
Carlo experiments (duality, martingale, fixation, boundary hitting).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate as _sciint

from .measures import (
    ModelParams,
    SwitchingMeasure,
    jump_activity_above,
    small_jump_mass,
)
from .streams import as_rng

__all__ = [
    "IntegratorSettings",
    "DiffusionState",
    "Trajectory",
    "integrate",
    "delay_residual",
    "duality_lhs",
    "duality_lhs_grid",
    "martingale_drift",
    "boundary_hitting_stats",
    "fixation_stats",
    "FixationStats",
    "batch_paths",
    "BatchResult",
]

F_TYPE = "F"  # active pool pulled toward the dormant frequency
D_TYPE = "D"  # dormant pool pulled toward the active frequency

_KNOT_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class DiffusionState:
    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"state must lie in the unit square, got {(self.x, self.y)}")


@dataclass(frozen=True)
class IntegratorSettings:
    """Step size, horizon, noise model and the two detection thresholds.

    jump_cutoff   jumps of size below this are drift-compensated instead of
                  simulated
    boundary_tol  sup-norm distance to a corner that counts as fixation;
                  0 means exact hits only
    noise_model   "binomial": the active frequency moves by a Binomial(1/dt,
                  p) resampling around the post-drift mean, i.e. one
                  generation of the prelimit population model per step.
                  Same drift and variance p(1-p)dt as the Gaussian step, but
                  with the correct sticky behaviour at the boundaries, where
                  a Gaussian step with clamping provably misses the law (the
                  bias does not vanish with dt; see the moment checks in the
                  test suite).
                  "gaussian": classical Euler-Maruyama increment
                  sqrt(max(x(1-x), 0)) sqrt(dt) xi with clamping.
    record_every  keep every k-th grid point in trajectory output
    """

    horizon: float
    dt: float = 1e-4
    jump_cutoff: float = 1e-3
    boundary_tol: float = 0.0
    noise_model: str = "binomial"
    record_every: int = 1

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if not 0.0 < self.dt <= self.horizon:
            raise ValueError("need 0 < dt <= horizon")
        if not 0.0 < self.jump_cutoff < 1.0:
            raise ValueError("jump cutoff must lie in (0, 1)")
        if self.boundary_tol < 0.0:
            raise ValueError("boundary tolerance must be nonnegative")
        if self.noise_model not in ("binomial", "gaussian"):
            raise ValueError(f"unknown noise model {self.noise_model!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


@dataclass
class Trajectory:
    """One recorded path with its jump log and terminal flags."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    jumps: list[tuple[float, str, float]]  # (time, "F" or "D", z)
    hit_00: bool
    hit_11: bool
    ran_to_horizon: bool


# ---------------------------------------------------------------------------
# jump machinery
# ---------------------------------------------------------------------------


class _BetaJumpSampler:
    """Jump sizes of one Beta component restricted to [eps, 1].

    The arrival rate is the quadrature integral of density/z over [eps, 1];
    sizes are drawn by inverting a tabulated CDF of that restricted measure
    (piecewise-linear between 512 nodes clustered at both endpoints).
    """

    _NODES = 512

    def __init__(self, alpha, beta, mass, eps):
        from .measures import _beta_pdf  # shared density helper

        self._pdf = lambda z: mass * _beta_pdf(z, alpha, beta) / z
        half = self._NODES // 2
        lo = np.geomspace(eps, 0.5, half)
        hi = 1.0 - np.geomspace(0.5, 1e-12, half)
        self.nodes = np.unique(np.concatenate([lo, hi, [1.0]]))
        seg = [
            _sciint.quad(self._pdf, a, b, epsrel=1e-10, epsabs=0.0, limit=200)[0]
            for a, b in zip(self.nodes[:-1], self.nodes[1:])
        ]
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.activity = float(self.cum[-1])

    def sample(self, count, rng):
        if count == 0:
            return np.empty(0)
        u = rng.random(count) * self.activity
        k = np.searchsorted(self.cum, u, side="right") - 1
        k = np.clip(k, 0, len(self.nodes) - 2)
        lo, hi = self.nodes[k], self.nodes[k + 1]
        span = self.cum[k + 1] - self.cum[k]
        frac = np.where(span > 0, (u - self.cum[k]) / np.where(span > 0, span, 1.0), 0.5)
        return lo + frac * (hi - lo)


class _JumpProcess:
    """The marked Poisson process of one measure's jumps above the cutoff."""

    def __init__(self, measure: SwitchingMeasure, eps: float):
        self.atom_rates = [(z, w / z) for z, w in measure.atoms if z >= eps]
        self.beta = [_BetaJumpSampler(a, b, m, eps) for a, b, m in measure.beta_components]
        self.total_rate = sum(r for _, r in self.atom_rates) + sum(s.activity for s in self.beta)

    def schedule_batch(self, horizon, reps, rng):
        """Event arrays (time, lane, z) over [0, horizon] for all lanes."""
        times, lanes, zs = [], [], []
        for z, rate in self.atom_rates:
            counts = rng.poisson(rate * horizon, size=reps)
            tot = int(counts.sum())
            times.append(rng.random(tot) * horizon)
            lanes.append(np.repeat(np.arange(reps), counts))
            zs.append(np.full(tot, z))
        for sampler in self.beta:
            counts = rng.poisson(sampler.activity * horizon, size=reps)
            tot = int(counts.sum())
            times.append(rng.random(tot) * horizon)
            lanes.append(np.repeat(np.arange(reps), counts))
            zs.append(sampler.sample(tot, rng))
        if not times:
            return np.empty(0), np.empty(0, dtype=np.int64), np.empty(0)
        return np.concatenate(times), np.concatenate(lanes), np.concatenate(zs)

    def schedule_single(self, horizon, rng):
        t, _, z = self.schedule_batch(horizon, 1, rng)
        order = np.argsort(t, kind="stable")
        return list(zip(t[order].tolist(), z[order].tolist()))


# ---------------------------------------------------------------------------
# shared stepping helpers
# ---------------------------------------------------------------------------


def _drift_coefficients(params: ModelParams, eps: float):
    sj_ad = small_jump_mass(params.lambda_ad, eps) if not params.lambda_ad.is_zero() else 0.0
    sj_da = small_jump_mass(params.lambda_da, eps) if not params.lambda_da.is_zero() else 0.0
    return sj_ad, sj_da


def _knots(horizon: float, dt: float, extra: Sequence[float]):
    """Grid times plus exact insertion of the requested snapshot times.

    Returns (times, is_grid, snap_map) where snap_map maps a knot index to
    the requested times that knot serves.
    """
    n_full = int(math.floor(horizon / dt + 1e-9))
    pts = [(k * dt, False) for k in range(1, n_full + 1)]
    pts = [(t, s) for t, s in pts if t < horizon - _KNOT_MERGE_TOL]
    pts.append((horizon, False))
    for s in extra:
        s = float(s)
        if not 0.0 < s <= horizon + _KNOT_MERGE_TOL:
            raise ValueError(f"snapshot time {s} outside (0, horizon]")
        pts.append((min(s, horizon), True))
    pts.sort()
    times: list[float] = []
    snap_map: dict[int, list[float]] = {}
    for t, is_snap in pts:
        if times and t - times[-1] < _KNOT_MERGE_TOL:
            if is_snap:
                snap_map.setdefault(len(times) - 1, []).append(t)
            continue
        times.append(t)
        if is_snap:
            snap_map.setdefault(len(times) - 1, []).append(t)
    return times, snap_map


def _corner_absorbing(params: ModelParams) -> tuple[bool, bool]:
    # at a monomorphic corner the migration, noise and jump terms all vanish,
    # so only mutation pressure can re-enter the interior
    abs00 = params.u2 == 0.0 and params.u2p == 0.0
    abs11 = params.u1 == 0.0 and params.u1p == 0.0
    return abs00, abs11


# ---------------------------------------------------------------------------
# scalar integrator
# ---------------------------------------------------------------------------


def integrate(
    params: ModelParams,
    s0: DiffusionState,
    settings: IntegratorSettings,
    seed=None,
    *,
    noise: bool = True,
    normals: Optional[np.ndarray] = None,
) -> Trajectory:
    """Integrate one path on [0, horizon] and record it.

    Jump times are interleaved exactly: the Euler step is shortened to land
    on each jump, the jump is applied, and stepping resumes.  The state is
    clamped to [0, 1]^2 after every update.  Deterministic given the seed.

    ``noise=False`` drops the Brownian term (diagnostic).  ``normals`` feeds
    an explicit standard-normal sequence instead of the generator's (only
    allowed without jump measures; used for coupled step-size comparisons).
    """
    s0 = DiffusionState(*_as_pair(s0))
    rng = as_rng(seed)
    eps = settings.jump_cutoff
    sj_ad, sj_da = _drift_coefficients(params, eps)
    has_jumps = not (params.lambda_ad.is_zero() and params.lambda_da.is_zero())
    if normals is not None and (has_jumps or settings.noise_model != "gaussian"):
        raise ValueError("explicit normals need the gaussian noise model and no jump measures")
    schedule: list[tuple[float, str, float]] = []
    if has_jumps:
        for t, z in _JumpProcess(params.lambda_ad, eps).schedule_single(settings.horizon, rng):
            schedule.append((t, F_TYPE, z))
        for t, z in _JumpProcess(params.lambda_da, eps).schedule_single(settings.horizon, rng):
            schedule.append((t, D_TYPE, z))
        schedule.sort()

    c, K = params.c, params.K
    u1, u2, u1p, u2p = params.u1, params.u2, params.u1p, params.u2p
    x, y = s0.x, s0.y
    abs00, abs11 = _corner_absorbing(params)

    times, _ = _knots(settings.horizon, settings.dt, ())
    rec_t = [0.0]
    rec_x = [x]
    rec_y = [y]
    jumps: list[tuple[float, str, float]] = []
    normal_pos = 0

    def pull_normal() -> float:
        nonlocal normal_pos
        if normals is not None:
            if normal_pos >= len(normals):
                raise ValueError("normals array exhausted before the horizon")
            v = float(normals[normal_pos])
            normal_pos += 1
            return v
        return float(rng.standard_normal())

    binomial = settings.noise_model == "binomial"

    def euler(xc, yc, h):
        dx = -u1 * xc + u2 * (1.0 - xc) + c * (yc - xc) + (yc - xc) * sj_ad
        dy = -u1p * yc + u2p * (1.0 - yc) + c * K * (xc - yc) + (xc - yc) * sj_da
        xn = xc + dx * h
        if noise:
            if binomial:
                n_eff = max(int(round(1.0 / h)), 1)
                xn = rng.binomial(n_eff, min(max(xn, 0.0), 1.0)) / n_eff
            else:
                xn += math.sqrt(max(xc * (1.0 - xc), 0.0)) * math.sqrt(h) * pull_normal()
        yn = yc + dy * h
        return min(max(xn, 0.0), 1.0), min(max(yn, 0.0), 1.0)

    sched_pos = 0
    t_prev = 0.0
    frozen = False
    for k, t_cur in enumerate(times, start=1):
        if not frozen:
            tt = t_prev
            while sched_pos < len(schedule) and schedule[sched_pos][0] <= t_cur:
                s_t, s_kind, s_z = schedule[sched_pos]
                sched_pos += 1
                if s_t > tt:
                    x, y = euler(x, y, s_t - tt)
                    tt = s_t
                if s_kind == F_TYPE:
                    x = min(max(x + s_z * (y - x), 0.0), 1.0)
                else:
                    y = min(max(y + s_z * (x - y), 0.0), 1.0)
                jumps.append((s_t, s_kind, s_z))
            if t_cur > tt:
                x, y = euler(x, y, t_cur - tt)
            if (x == 0.0 and y == 0.0 and abs00) or (x == 1.0 and y == 1.0 and abs11):
                frozen = True  # exact fixed point of every term; path is constant now
        if k % settings.record_every == 0 or t_cur == times[-1]:
            rec_t.append(t_cur)
            rec_x.append(x)
            rec_y.append(y)
        t_prev = t_cur

    tol = settings.boundary_tol
    hit_00 = max(x, y) <= tol
    hit_11 = min(x, y) >= 1.0 - tol
    return Trajectory(
        times=np.array(rec_t),
        x=np.array(rec_x),
        y=np.array(rec_y),
        jumps=jumps,
        hit_00=hit_00,
        hit_11=hit_11,
        ran_to_horizon=not (hit_00 or hit_11),
    )


def _as_pair(s0) -> tuple[float, float]:
    if isinstance(s0, DiffusionState):
        return s0.x, s0.y
    x, y = s0
    return float(x), float(y)


def delay_residual(traj: Trajectory, params: ModelParams) -> float:
    """Largest deviation of the recorded y path from its convolution form.

    Without jumps and mutation, y is a deterministic exponential-kernel
    average of the x history: y(t) = y0 e^{-cKt} + integral of
    cK e^{-cK(t-s)} x(s) ds.  The integral is accumulated by the trapezoid
    rule on the recorded grid, so the residual measures integrator error and
    shrinks linearly with dt.
    """
    if not params.is_spontaneous():
        raise ValueError("the delay identity holds only without jump measures")
    if any(r > 0.0 for r in (params.u1, params.u2, params.u1p, params.u2p)):
        raise ValueError("the delay identity holds only without mutation")
    if traj.jumps:
        raise ValueError("trajectory contains jumps")
    cK = params.c * params.K
    y0 = float(traj.y[0])
    conv = 0.0
    worst = 0.0
    for k in range(1, len(traj.times)):
        h = float(traj.times[k] - traj.times[k - 1])
        decay = math.exp(-cK * h)
        conv = decay * conv + 0.5 * h * cK * (decay * float(traj.x[k - 1]) + float(traj.x[k]))
        ref = y0 * math.exp(-cK * float(traj.times[k])) + conv
        worst = max(worst, abs(float(traj.y[k]) - ref))
    return worst


# ---------------------------------------------------------------------------
# vectorized batch engine
# ---------------------------------------------------------------------------


@dataclass
class BatchResult:
    """Snapshots and terminal data of a vectorized run."""

    snapshots: list[tuple[float, np.ndarray, np.ndarray]]  # (time, x copy, y copy)
    final_x: np.ndarray
    final_y: np.ndarray
    hits: Optional[dict[str, np.ndarray]]  # "x0", "x1", "y0", "y1" -> bool per lane
    frozen_at: np.ndarray  # time a lane froze at an absorbing corner; nan otherwise
    jump_counts: dict[str, int] = field(default_factory=dict)


def batch_paths(
    params: ModelParams,
    x0: float,
    y0: float,
    settings: IntegratorSettings,
    reps: int,
    seed=None,
    *,
    snapshot_times: Sequence[float] = (),
    track_hits: bool = False,
    freeze_corner_tol: Optional[float] = None,
    noise: bool = True,
) -> BatchResult:
    """Integrate ``reps`` independent paths in lockstep.

    The grid step is vectorized across lanes; lanes with a jump inside the
    current window are re-integrated individually with the window split at
    their exact jump times.  With ``freeze_corner_tol`` set, lanes within
    that sup-norm distance of an absorbing corner are snapped onto it and
    frozen (the corner is an exact fixed point, so only the snap distance is
    an approximation).  Deterministic given the seed.
    """
    rng = as_rng(seed)
    eps = settings.jump_cutoff
    sj_ad, sj_da = _drift_coefficients(params, eps)
    c, K = params.c, params.K
    u1, u2, u1p, u2p = params.u1, params.u2, params.u1p, params.u2p
    binomial = settings.noise_model == "binomial"
    abs00, abs11 = _corner_absorbing(params)

    proc_f = _JumpProcess(params.lambda_ad, eps)
    proc_d = _JumpProcess(params.lambda_da, eps)
    ev_parts = []
    for proc, is_f in ((proc_f, True), (proc_d, False)):
        t_e, lane_e, z_e = proc.schedule_batch(settings.horizon, reps, rng)
        ev_parts.append((t_e, lane_e, z_e, np.full(t_e.size, is_f)))
    ev_t = np.concatenate([p[0] for p in ev_parts])
    ev_lane = np.concatenate([p[1] for p in ev_parts])
    ev_z = np.concatenate([p[2] for p in ev_parts])
    ev_isf = np.concatenate([p[3] for p in ev_parts])
    order = np.lexsort((ev_lane, ev_t))
    ev_t, ev_lane, ev_z, ev_isf = ev_t[order], ev_lane[order], ev_z[order], ev_isf[order]

    x = np.full(reps, float(x0))
    y = np.full(reps, float(y0))
    frozen_at = np.full(reps, np.nan)
    active = np.ones(reps, dtype=bool)
    hits = (
        {name: np.zeros(reps, dtype=bool) for name in ("x0", "x1", "y0", "y1")}
        if track_hits
        else None
    )
    jump_counts = {"F": 0, "D": 0}

    def record_hits(idx):
        if hits is None:
            return
        hits["x0"][idx] |= x[idx] == 0.0
        hits["x1"][idx] |= x[idx] == 1.0
        hits["y0"][idx] |= y[idx] == 0.0
        hits["y1"][idx] |= y[idx] == 1.0

    def freeze(idx):
        if freeze_corner_tol is None or idx.size == 0:
            return
        tol = freeze_corner_tol
        if abs00:
            at00 = (x[idx] <= tol) & (y[idx] <= tol)
            sel = idx[at00]
            x[sel] = 0.0
            y[sel] = 0.0
            frozen_at[sel] = np.where(np.isnan(frozen_at[sel]), t_cur, frozen_at[sel])
            active[sel] = False
        if abs11:
            at11 = (x[idx] >= 1.0 - tol) & (y[idx] >= 1.0 - tol)
            sel = idx[at11]
            x[sel] = 1.0
            y[sel] = 1.0
            frozen_at[sel] = np.where(np.isnan(frozen_at[sel]), t_cur, frozen_at[sel])
            active[sel] = False

    record_hits(np.arange(reps))
    t_cur = 0.0
    freeze(np.flatnonzero(active))

    times, snap_map = _knots(settings.horizon, settings.dt, snapshot_times)
    snapshots: list[tuple[float, np.ndarray, np.ndarray]] = []
    ev_pos = 0
    t_prev = 0.0
    sqrt = math.sqrt
    for knot_i, t_cur in enumerate(times):
        h = t_cur - t_prev
        if h > 0.0 and active.any():
            ev_end = int(np.searchsorted(ev_t, t_cur, side="right"))
            window = slice(ev_pos, ev_end)
            ev_pos = ev_end
            w_lanes = ev_lane[window]
            if w_lanes.size:
                jump_set = np.unique(w_lanes)
                jump_set = jump_set[active[jump_set]]
            else:
                jump_set = np.empty(0, dtype=np.int64)
            idx = np.flatnonzero(active)
            if jump_set.size:
                clean = idx[~np.isin(idx, jump_set)]
            else:
                clean = idx
            if clean.size:
                xc, yc = x[clean], y[clean]
                dx = -u1 * xc + u2 * (1.0 - xc) + (c + sj_ad) * (yc - xc)
                dy = -u1p * yc + u2p * (1.0 - yc) + (c * K + sj_da) * (xc - yc)
                xn = xc + dx * h
                if noise:
                    if binomial:
                        n_eff = max(int(round(1.0 / h)), 1)
                        xn = rng.binomial(n_eff, np.clip(xn, 0.0, 1.0)) / n_eff
                    else:
                        xn = xn + np.sqrt(np.maximum(xc * (1.0 - xc), 0.0)) * sqrt(h) * rng.standard_normal(clean.size)
                x[clean] = np.clip(xn, 0.0, 1.0)
                y[clean] = np.clip(yc + dy * h, 0.0, 1.0)
                record_hits(clean)
            if jump_set.size:
                w_t, w_z, w_isf = ev_t[window], ev_z[window], ev_isf[window]
                for lane in jump_set:
                    sel = w_lanes == lane
                    xl, yl = float(x[lane]), float(y[lane])
                    tt = t_prev
                    for s_t, s_z, s_f in zip(w_t[sel], w_z[sel], w_isf[sel]):
                        hh = s_t - tt
                        if hh > 0.0:
                            xl, yl = _euler_scalar(
                                xl, yl, hh, params, sj_ad, sj_da, noise, binomial, rng
                            )
                            tt = s_t
                        if s_f:
                            xl = min(max(xl + s_z * (yl - xl), 0.0), 1.0)
                            jump_counts["F"] += 1
                        else:
                            yl = min(max(yl + s_z * (xl - yl), 0.0), 1.0)
                            jump_counts["D"] += 1
                    if t_cur > tt:
                        xl, yl = _euler_scalar(
                            xl, yl, t_cur - tt, params, sj_ad, sj_da, noise, binomial, rng
                        )
                    x[lane], y[lane] = xl, yl
                record_hits(jump_set)
            freeze(idx)
        if knot_i in snap_map:
            for s in snap_map[knot_i]:
                snapshots.append((s, x.copy(), y.copy()))
        t_prev = t_cur
        if not active.any():
            # everything frozen; remaining snapshots read the same state
            for i in sorted(snap_map):
                if i > knot_i:
                    for s in snap_map[i]:
                        snapshots.append((s, x.copy(), y.copy()))
            break

    return BatchResult(
        snapshots=snapshots,
        final_x=x,
        final_y=y,
        hits=hits,
        frozen_at=frozen_at,
        jump_counts=jump_counts,
    )


def _euler_scalar(x, y, h, params, sj_ad, sj_da, noise, binomial, rng):
    dx = -params.u1 * x + params.u2 * (1.0 - x) + (params.c + sj_ad) * (y - x)
    dy = -params.u1p * y + params.u2p * (1.0 - y) + (params.c * params.K + sj_da) * (x - y)
    xn = x + dx * h
    if noise:
        if binomial:
            n_eff = max(int(round(1.0 / h)), 1)
            xn = float(rng.binomial(n_eff, min(max(xn, 0.0), 1.0))) / n_eff
        else:
            xn += math.sqrt(max(x * (1.0 - x), 0.0)) * math.sqrt(h) * float(rng.standard_normal())
    return min(max(xn, 0.0), 1.0), min(max(y + dy * h, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Monte Carlo experiments on top of the batch engine
# ---------------------------------------------------------------------------


def duality_lhs(
    params: ModelParams,
    x: float,
    y: float,
    n: int,
    m: int,
    t: float,
    reps: int,
    seed=None,
    settings: Optional[IntegratorSettings] = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of E[X_t^n Y_t^m] with its standard error."""
    grid = duality_lhs_grid(params, x, y, [(n, m)], [t], reps, seed, settings)
    return grid[(n, m, t)]


def duality_lhs_grid(
    params: ModelParams,
    x: float,
    y: float,
    exponents: Sequence[tuple[int, int]],
    times: Sequence[float],
    reps: int,
    seed=None,
    settings: Optional[IntegratorSettings] = None,
) -> dict[tuple[int, int, float], tuple[float, float]]:
    """All moment estimates over a grid of exponents and times from one batch."""
    for n, m in exponents:
        if n < 0 or m < 0 or n + m < 1:
            raise ValueError(f"invalid moment exponents {(n, m)}")
    out = {}
    run_times = sorted(set(float(t) for t in times if float(t) > 0.0))
    for t in times:
        if float(t) == 0.0:
            for n, m in exponents:
                out[(n, m, t)] = (float(x) ** n * float(y) ** m, 0.0)
    if not run_times:
        return out
    if settings is None:
        settings = IntegratorSettings(horizon=max(run_times), dt=1e-3)
    res = batch_paths(params, x, y, settings, reps, seed, snapshot_times=run_times)
    for t_s, xs, ys in res.snapshots:
        for n, m in exponents:
            vals = xs**n * ys**m
            se = float(vals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
            key_t = next(t for t in times if abs(float(t) - t_s) < 1e-9)
            out[(n, m, key_t)] = (float(vals.mean()), se)
    return out


def martingale_drift(
    params: ModelParams,
    s0,
    T: float,
    checkpoints: Sequence[float],
    reps: int,
    seed=None,
    settings: Optional[IntegratorSettings] = None,
) -> list[tuple[float, float, float]]:
    """Mean of K*X_t + Y_t at each checkpoint, with standard errors.

    Without mutation and jumps this quantity is a bounded martingale, so
    every row should sit at K*x0 + y0 up to Monte Carlo noise.
    """
    if any(r > 0.0 for r in (params.u1, params.u2, params.u1p, params.u2p)):
        raise ValueError("the martingale check needs zero mutation rates")
    if not params.is_spontaneous():
        raise ValueError("the martingale check needs zero switching measures")
    x0, y0 = _as_pair(s0)
    if settings is None:
        settings = IntegratorSettings(horizon=T, dt=1e-3)
    res = batch_paths(params, x0, y0, settings, reps, seed, snapshot_times=checkpoints)
    rows = []
    for t_s, xs, ys in res.snapshots:
        vals = params.K * xs + ys
        se = float(vals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        rows.append((t_s, float(vals.mean()), se))
    return rows


def boundary_hitting_stats(
    params: ModelParams,
    s0,
    T: float,
    reps: int,
    seed=None,
    settings: Optional[IntegratorSettings] = None,
) -> dict[float, dict[str, float]]:
    """Frequencies of each coordinate touching each boundary, at dt and dt/2.

    A lane counts as a hit when the coordinate lands exactly on the clamp
    boundary at any step.  The half-step rerun makes discretization-induced
    hits visible: frequencies that collapse under refinement are Euler
    artifacts, not features of the process.
    """
    x0, y0 = _as_pair(s0)
    if not (0.0 < x0 < 1.0 and 0.0 < y0 < 1.0):
        raise ValueError("boundary statistics need an interior start")
    if settings is None:
        settings = IntegratorSettings(horizon=T, dt=1e-3)
    rng = as_rng(seed)
    out = {}
    for dt in (settings.dt, settings.dt / 2.0):
        run = IntegratorSettings(
            horizon=T,
            dt=dt,
            jump_cutoff=settings.jump_cutoff,
            boundary_tol=settings.boundary_tol,
            noise_model=settings.noise_model,
        )
        res = batch_paths(params, x0, y0, run, reps, rng, track_hits=True)
        out[dt] = {name: float(flags.mean()) for name, flags in res.hits.items()}
    return out


@dataclass
class FixationStats:
    reps: int
    fixed_11: int
    fixed_00: int
    unfixed: int

    @property
    def frac_11(self) -> float:
        return self.fixed_11 / self.reps

    @property
    def frac_00(self) -> float:
        return self.fixed_00 / self.reps

    def se_11(self) -> float:
        p = self.frac_11
        return math.sqrt(p * (1.0 - p) / self.reps)


def fixation_stats(
    params: ModelParams,
    s0,
    T: float,
    reps: int,
    seed=None,
    settings: Optional[IntegratorSettings] = None,
    corner_tol: float = 1e-4,
) -> FixationStats:
    """Corner-absorption frequencies over a batch of trajectories.

    Lanes within ``corner_tol`` of an absorbing corner are snapped onto it
    (the dormant coordinate only approaches the corner exponentially, so an
    exact-zero detection would never fire; the snap bias on the fixation
    probability is at most corner_tol).  Unfixed runs are reported in their
    own bucket, never counted as fixed.
    """
    x0, y0 = _as_pair(s0)
    if any(r > 0.0 for r in (params.u1, params.u2, params.u1p, params.u2p)):
        raise ValueError("fixation statistics need zero mutation rates")
    if settings is None:
        settings = IntegratorSettings(horizon=T, dt=1e-3)
    res = batch_paths(params, x0, y0, settings, reps, seed, freeze_corner_tol=corner_tol)
    at11 = (res.final_x >= 1.0 - corner_tol) & (res.final_y >= 1.0 - corner_tol)
    at00 = (res.final_x <= corner_tol) & (res.final_y <= corner_tol)
    fixed_11 = int(at11.sum())
    fixed_00 = int(at00.sum())
    return FixationStats(
        reps=reps, fixed_11=fixed_11, fixed_00=fixed_00, unfixed=reps - fixed_11 - fixed_00
    )
