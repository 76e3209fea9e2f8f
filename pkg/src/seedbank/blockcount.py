"""The block-counting chain (active lines, dormant lines) and its exact oracles.

The pair (N_t, M_t) of active and dormant line counts is a continuous-time
Markov chain on the lattice {(n, m): n + m >= 1}: active pairs merge at rate
C(n, 2), single lines switch state at rates c*n and c*K*m, and coordinated
switching events move k lines at once at the rates supplied by the switching
measures.  The total count never increases, so every computation lives on a
finite triangle of states.  Note that total count 1 is absorbing only for
the total: the last line keeps flipping between active and dormant.

Three independent routes through this chain back the verification story:

* a Gillespie simulator (scalar and vectorized-ensemble variants),
* first-step analysis: dense linear solves for expected absorption time and
  expected active/dormant branch lengths,
* uniformization: exact transient distributions, used as the right-hand side
  of the moment duality check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import linalg as _linalg

from .measures import ModelParams, group_switch_rate, total_mass
from .streams import as_rng

__all__ = [
    "BlockCountState",
    "bc_transition_rates",
    "simulate_blockcount",
    "blockcount_ensemble",
    "EnsembleResult",
    "expected_tmrca_first_step",
    "expected_branch_lengths_first_step",
    "duality_rhs",
    "tmrca_loglog_scan",
    "coming_down_scan",
    "ScanRow",
    "mrca_reachable",
]

_UNIFORMIZATION_TAIL = 1e-12


class BlockCountState(NamedTuple):
    n: int  # active lines
    m: int  # dormant lines


def bc_transition_rates(s: BlockCountState, params: ModelParams) -> list[tuple[BlockCountState, float]]:
    """All positive-rate transitions out of state s.

    (n-1, m)    at C(n, 2)
    (n-k, m+k)  at the aggregate k-deactivation rate, plus c*n when k = 1
    (n+l, m-l)  at the aggregate l-activation rate, plus c*K*m when l = 1
    """
    n, m = s
    if n < 0 or m < 0 or n + m < 1:
        raise ValueError(f"invalid block-count state {s}")
    out: list[tuple[BlockCountState, float]] = []
    if n >= 2:
        out.append((BlockCountState(n - 1, m), n * (n - 1) / 2.0))
    for k in range(1, n + 1):
        rate = group_switch_rate(params.lambda_ad, n, k) if not params.lambda_ad.is_zero() else 0.0
        if k == 1:
            rate += params.c * n
        if rate > 0.0:
            out.append((BlockCountState(n - k, m + k), rate))
    for l in range(1, m + 1):
        rate = group_switch_rate(params.lambda_da, m, l) if not params.lambda_da.is_zero() else 0.0
        if l == 1:
            rate += params.c * params.K * m
        if rate > 0.0:
            out.append((BlockCountState(n + l, m - l), rate))
    return out


def mrca_reachable(s0: BlockCountState, params: ModelParams) -> bool:
    """Whether every dormant line can eventually reactivate and merge."""
    if params.c > 0.0 or total_mass(params.lambda_da) > 0.0:
        return True
    # no way back from the seed bank: must never enter it
    return s0.m == 0 and total_mass(params.lambda_ad) == 0.0


def simulate_blockcount(
    s0: BlockCountState,
    params: ModelParams,
    *,
    horizon: Optional[float] = None,
    seed=None,
) -> list[tuple[float, BlockCountState]]:
    """Gillespie path of the block-counting chain, one replicate.

    With ``horizon=None`` the run stops when the total count reaches 1; with
    a horizon it runs to that time (mark flips of the last line included).
    Returns the jump path [(time, state), ...] starting at (0, s0); the state
    holds between consecutive entries.  Deterministic given the seed.
    """
    s0 = BlockCountState(*s0)
    if s0.n + s0.m < 1:
        raise ValueError("need at least one line")
    if horizon is None and not mrca_reachable(s0, params):
        raise ValueError(
            "the most recent common ancestor is unreachable: dormant lines can "
            "never reactivate with c = 0 and a zero dormant-to-active measure"
        )
    rng = as_rng(seed)
    t = 0.0
    state = s0
    path = [(t, state)]
    while True:
        if horizon is None and state.n + state.m <= 1:
            break
        transitions = bc_transition_rates(state, params)
        rates = [r for _, r in transitions]
        total = math.fsum(rates)
        if total <= 0.0:
            break  # nothing can happen anymore
        t_next = t + rng.exponential(1.0 / total)
        if horizon is not None and t_next > horizon:
            break
        u = rng.uniform(0.0, total)
        acc = 0.0
        target = transitions[-1][0]
        for st, r in transitions:
            acc += r
            if u <= acc:
                target = st
                break
        t = t_next
        state = target
        path.append((t, state))
    return path


@dataclass
class EnsembleResult:
    """Per-replicate terminal data from a vectorized batch of chain runs."""

    n: np.ndarray  # active counts at the stopping time
    m: np.ndarray  # dormant counts at the stopping time
    absorption_time: np.ndarray  # time the total first hit 1; nan where it did not

    @property
    def total(self) -> np.ndarray:
        return self.n + self.m


def blockcount_ensemble(
    s0: BlockCountState,
    params: ModelParams,
    reps: int,
    *,
    horizon: Optional[float] = None,
    stop_at_total_one: bool = True,
    seed=None,
) -> EnsembleResult:
    """Simulate many independent block-count paths in lockstep.

    Vectorizes the Gillespie loop across replicates.  Coordinated switching
    is supported for atom-only measures via constant-rate event clocks: an
    atom (z, w) fires at rate w/z and then flips a Binomial(count, z) set of
    lines, which reproduces the aggregate per-size rates exactly (a binomial
    draw of 0 is a silent no-op).  Measures with Beta components fall back to
    per-replicate scalar simulation.

    ``stop_at_total_one=False`` keeps lanes running to the horizon so that
    the active/dormant split of the last line stays distributed correctly.
    """
    s0 = BlockCountState(*s0)
    if s0.n + s0.m < 1:
        raise ValueError("need at least one line")
    if stop_at_total_one and horizon is None and not mrca_reachable(s0, params):
        raise ValueError(
            "the most recent common ancestor is unreachable: dormant lines can "
            "never reactivate with c = 0 and a zero dormant-to-active measure"
        )
    if not stop_at_total_one and horizon is None:
        raise ValueError("running past total 1 requires a horizon")
    if params.lambda_ad.beta_components or params.lambda_da.beta_components:
        return _ensemble_fallback(
            s0, params, reps, horizon=horizon, stop_at_total_one=stop_at_total_one, seed=seed
        )

    rng = as_rng(seed)
    n = np.full(reps, s0.n, dtype=np.int64)
    m = np.full(reps, s0.m, dtype=np.int64)
    t = np.zeros(reps)
    absorbed_at = np.full(reps, np.nan)
    if s0.n + s0.m == 1:
        absorbed_at[:] = 0.0
        if stop_at_total_one:
            return EnsembleResult(n=n, m=m, absorption_time=absorbed_at)
    alive = np.ones(reps, dtype=bool)
    if stop_at_total_one and s0.n + s0.m == 1:
        alive[:] = False

    ad_atoms = params.lambda_ad.atoms
    da_atoms = params.lambda_da.atoms
    # category order: merge, single deact, single act, ad atoms, da atoms
    ncat = 3 + len(ad_atoms) + len(da_atoms)
    c, K = params.c, params.K

    while alive.any():
        idx = np.flatnonzero(alive)
        na, ma = n[idx], m[idx]
        rates = np.empty((idx.size, ncat))
        rates[:, 0] = na * (na - 1) / 2.0
        rates[:, 1] = c * na
        rates[:, 2] = c * K * ma
        col = 3
        for z, w in ad_atoms:
            rates[:, col] = w / z
            col += 1
        for z, w in da_atoms:
            rates[:, col] = w / z
            col += 1
        total = rates.sum(axis=1)

        stuck = total <= 0.0
        if stuck.any():
            alive[idx[stuck]] = False
            keep = ~stuck
            idx, rates, total = idx[keep], rates[keep], total[keep]
            if idx.size == 0:
                continue

        t_next = t[idx] + rng.exponential(1.0 / total)
        if horizon is not None:
            crossed = t_next > horizon
            if crossed.any():
                alive[idx[crossed]] = False
                keep = ~crossed
                idx, rates, total, t_next = idx[keep], rates[keep], total[keep], t_next[keep]
                if idx.size == 0:
                    continue
        t[idx] = t_next

        u = rng.random(idx.size) * total
        cat = (u[:, None] >= np.cumsum(rates, axis=1)).sum(axis=1)
        cat = np.minimum(cat, ncat - 1)

        sel = cat == 0
        if sel.any():
            n[idx[sel]] -= 1
        sel = cat == 1
        if sel.any():
            n[idx[sel]] -= 1
            m[idx[sel]] += 1
        sel = cat == 2
        if sel.any():
            n[idx[sel]] += 1
            m[idx[sel]] -= 1
        col = 3
        for z, _ in ad_atoms:
            sel = cat == col
            if sel.any():
                k = rng.binomial(n[idx[sel]], z)
                n[idx[sel]] -= k
                m[idx[sel]] += k
            col += 1
        for z, _ in da_atoms:
            sel = cat == col
            if sel.any():
                l = rng.binomial(m[idx[sel]], z)
                n[idx[sel]] += l
                m[idx[sel]] -= l
            col += 1

        at_one = (n[idx] + m[idx]) == 1
        if at_one.any():
            hit = idx[at_one]
            fresh = np.isnan(absorbed_at[hit])
            absorbed_at[hit[fresh]] = t[hit[fresh]]
            if stop_at_total_one:
                alive[hit] = False

    return EnsembleResult(n=n, m=m, absorption_time=absorbed_at)


def _ensemble_fallback(s0, params, reps, *, horizon, stop_at_total_one, seed):
    rng = as_rng(seed)
    n = np.empty(reps, dtype=np.int64)
    m = np.empty(reps, dtype=np.int64)
    absorbed_at = np.full(reps, np.nan)
    run_horizon = horizon if not stop_at_total_one else (horizon if horizon is not None else None)
    for r in range(reps):
        if stop_at_total_one and horizon is None:
            path = simulate_blockcount(s0, params, seed=rng)
        else:
            path = simulate_blockcount(s0, params, horizon=run_horizon, seed=rng)
        t_last, last = path[-1]
        n[r], m[r] = last
        for t_i, st in path:
            if st.n + st.m == 1:
                absorbed_at[r] = t_i
                break
    return EnsembleResult(n=n, m=m, absorption_time=absorbed_at)


# ---------------------------------------------------------------------------
# exact finite-state oracles
# ---------------------------------------------------------------------------


def _reachable_states(s0: BlockCountState, params: ModelParams, *, absorb_at_total_one: bool):
    """Breadth-first enumeration of the reachable lattice."""
    seen = {s0}
    frontier = [s0]
    while frontier:
        nxt = []
        for s in frontier:
            if absorb_at_total_one and s.n + s.m <= 1:
                continue
            for target, _ in bc_transition_rates(s, params):
                if target not in seen:
                    seen.add(target)
                    nxt.append(target)
        frontier = nxt
    return sorted(seen)


def expected_tmrca_first_step(s0: BlockCountState, params: ModelParams) -> float:
    """Expected time for the total count to reach 1, by first-step analysis.

    Solves E[T | s] = 1/rate(s) + sum over targets of p(s -> s') E[T | s']
    with states of total 1 absorbing, as a dense linear system over the
    reachable lattice.
    """
    values = _first_step_solve(s0, params, rewards=("time",))
    return float(values["time"])


def expected_branch_lengths_first_step(
    s0: BlockCountState, params: ModelParams
) -> tuple[float, float]:
    """Expected total active and dormant line-time accumulated before the MRCA.

    Same linear system as the absorption time but with per-state rewards
    n/rate(s) and m/rate(s).
    """
    values = _first_step_solve(s0, params, rewards=("active", "dormant"))
    return float(values["active"]), float(values["dormant"])


def _first_step_solve(s0, params, rewards):
    s0 = BlockCountState(*s0)
    if s0.n + s0.m < 1:
        raise ValueError("need at least one line")
    if not mrca_reachable(s0, params):
        raise ValueError(
            "first-step analysis needs every state to reach total 1; with c = 0 "
            "and a zero dormant-to-active measure, dormant lines are stranded"
        )
    if s0.n + s0.m == 1:
        return {name: 0.0 for name in rewards}

    states = [s for s in _reachable_states(s0, params, absorb_at_total_one=True) if s.n + s.m > 1]
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)
    A = np.eye(dim)
    b = np.zeros((dim, len(rewards)))
    for s, i in index.items():
        transitions = bc_transition_rates(s, params)
        rate = math.fsum(r for _, r in transitions)
        if rate <= 0.0:
            raise ValueError(f"state {s} is stranded; the MRCA is unreachable")
        for j, name in enumerate(rewards):
            if name == "time":
                b[i, j] = 1.0 / rate
            elif name == "active":
                b[i, j] = s.n / rate
            elif name == "dormant":
                b[i, j] = s.m / rate
        for target, r in transitions:
            if target.n + target.m > 1:
                A[i, index[target]] -= r / rate
    sol = _linalg.solve(A, b)
    i0 = index[s0]
    return {name: sol[i0, j] for j, name in enumerate(rewards)}


def duality_rhs(
    n: int,
    m: int,
    x: float,
    y: float,
    params: ModelParams,
    t: float,
    *,
    method: str = "exact",
    reps: int = 100_000,
    seed=None,
) -> tuple[float, float]:
    """E[x^{N_t} y^{M_t}] for the chain started at (n, m), as (value, stderr).

    method="exact" evaluates the transient distribution by uniformization
    over the finite reachable lattice (no state is absorbing for this
    computation; the last line keeps flipping marks).  The Poisson series is
    truncated at tail mass 1e-12 and stderr is 0.

    method="mc" averages x^{N_t} y^{M_t} over ``reps`` simulated paths.
    """
    if n < 0 or m < 0 or n + m < 1:
        raise ValueError("need at least one line")
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    s0 = BlockCountState(n, m)
    if method == "exact":
        return _duality_uniformization(s0, x, y, params, t), 0.0
    if method == "mc":
        res = blockcount_ensemble(
            s0, params, reps, horizon=t, stop_at_total_one=False, seed=seed
        )
        vals = np.power(float(x), res.n) * np.power(float(y), res.m)
        se = float(vals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        return float(vals.mean()), se
    raise ValueError(f"unknown method {method!r}")


def _duality_uniformization(s0, x, y, params, t) -> float:
    states = _reachable_states(s0, params, absorb_at_total_one=False)
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)
    Q = np.zeros((dim, dim))
    for s, i in index.items():
        for target, r in bc_transition_rates(s, params):
            Q[i, index[target]] += r
            Q[i, i] -= r
    lam = float(np.max(-np.diag(Q)))
    f = np.array([float(x) ** s.n * float(y) ** s.m for s in states])
    i0 = index[s0]
    if lam <= 0.0 or t == 0.0:
        return float(f[i0])
    P = np.eye(dim) + Q / lam
    lt = lam * t
    acc = 0.0
    weight_sum = 0.0
    v = f.copy()
    k = 0
    while weight_sum < 1.0 - _UNIFORMIZATION_TAIL:
        w = math.exp(k * math.log(lt) - lt - math.lgamma(k + 1))
        acc += w * v[i0]
        weight_sum += w
        v = P @ v
        k += 1
    return float(acc)


# ---------------------------------------------------------------------------
# desk-scale scans for the asymptotic statements
# ---------------------------------------------------------------------------


@dataclass
class ScanRow:
    n: int
    mean: float
    stderr: float
    ratio: float  # mean / log log n for the absorption-time scan;
    # consecutive-mean ratio for the coming-down scan (nan on the first row)


def tmrca_loglog_scan(params: ModelParams, n_list, reps: int, seed=None) -> list[ScanRow]:
    """Monte Carlo mean time to the MRCA across sample sizes, over log log n.

    Qualitative finite-n probe of the slow (iterated-logarithm) growth of the
    expected coalescence time.  Starts all lines active.
    """
    rows = []
    rng = as_rng(seed)
    for n in n_list:
        if n < 16:
            raise ValueError(f"scan needs n >= 16 for a stable log log n, got {n}")
        res = blockcount_ensemble(BlockCountState(n, 0), params, reps, seed=rng)
        times = res.absorption_time
        mean = float(times.mean())
        se = float(times.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        rows.append(ScanRow(n=n, mean=mean, stderr=se, ratio=mean / math.log(math.log(n))))
    return rows


def coming_down_scan(
    params: ModelParams, n_list, t_probe: float, reps: int, seed=None
) -> list[ScanRow]:
    """Mean surviving block count at a small probe time, across sample sizes.

    Finite-n proxy for the trichotomy between coming down from infinity and
    staying infinite: stabilizing means indicate the former, means growing
    with n the latter.  Output is a qualitative diagnostic, not a limit claim.
    """
    if t_probe <= 0.0:
        raise ValueError("t_probe must be positive")
    rows = []
    rng = as_rng(seed)
    for n in n_list:
        res = blockcount_ensemble(
            BlockCountState(n, 0), params, reps, horizon=t_probe, seed=rng
        )
        totals = res.total.astype(float)
        mean = float(totals.mean())
        se = float(totals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        ratio = mean / rows[-1].mean if rows and rows[-1].mean > 0 else float("nan")
        rows.append(ScanRow(n=n, mean=mean, stderr=se, ratio=ratio))
    return rows
