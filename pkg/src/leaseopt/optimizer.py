"""Lease-duration optimizers.

* ``solve_homogeneous``: closed-form root solve for identical operators.
* ``solve_algorithm1``: two-level event sweep for arbitrary markets.  The
  outer sweep decomposes the duration axis into intervals on which the
  largest candidate entrant set is constant; the inner sweep refines each
  interval by every member's satisfaction window, leaving candidate
  durations only at interval endpoints.
* ``brute_force``: evaluates every integer duration up to the horizon;
  the differential-testing oracle for the sweep.
* ``solve_subop``: baseline that only considers durations satisfying every
  operator simultaneously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .game import (
    REGULATOR_VIEW,
    MarketGame,
    entry_threshold,
)
from .market import Market, OperatorParams, homogeneous_market, is_unbounded
from .revenue import (
    EMPTY_SET,
    BetaTable,
    EntrantSet,
    QuadratureConfig,
    revenue_homog,
)

#: Relative tolerance under which two objective values count as tied; ties
#: resolve to the smaller duration.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class EventPair:
    """A (duration, operator) event of the sweep: entry or exit at T."""

    T: int
    k: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"event duration must be >= 1, got {self.T}")


@dataclass(frozen=True)
class Interval:
    """Inclusive duration range on which an entrant set is constant."""

    lo: int
    hi: int
    entrants: EntrantSet

    def __post_init__(self):
        if not 1 <= self.lo <= self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one solve.

    ``u_perceived`` is the optimized objective under the regulator's
    estimates; ``u_true`` re-evaluates the chosen duration under the true
    parameters and the true equilibrium entrants.
    """

    t_star: int
    u_perceived: float
    u_true: float
    entrants_perceived: EntrantSet
    entrants_true: EntrantSet
    eval_count: int
    intervals_examined: int

    def __post_init__(self):
        if self.u_perceived < 0:
            raise ValueError("objective values are nonnegative")
        if self.u_perceived == 0 and not self.entrants_perceived.is_empty():
            raise ValueError("zero objective requires an empty entrant set")


def fibonacci_argmax(f, lo: int, hi: int) -> int:
    """A maximizer of a unimodal function on the integers [lo, hi].

    Equal probe values contract toward the lower end, which returns some
    maximizer on plateaus.  Probe values are memoized so the caller's f is
    invoked O(log(hi - lo)) times.
    """
    if lo > hi:
        raise ValueError(f"empty domain [{lo}, {hi}]")
    if hi - lo <= 3:
        return max(range(lo, hi + 1), key=lambda t: (f(t), -t))
    cache = {}

    def g(t):
        if t > hi:
            return -math.inf
        if t not in cache:
            cache[t] = f(t)
        return cache[t]

    fibs = [1, 1]
    while fibs[-1] < hi - lo + 1:
        fibs.append(fibs[-1] + fibs[-2])
    j = len(fibs) - 1
    l = lo
    # invariant: a maximizer lies in the window of size fibs[j] starting at l
    while j > 2:
        x1 = l + fibs[j - 2] - 1
        x2 = l + fibs[j - 1] - 1
        if g(x1) >= g(x2):
            pass  # maximizer in [l, x2 - 1], window shrinks to fibs[j - 1]
        else:
            l = x1 + 1
        j -= 1
    best = min(l, hi)
    for t in range(l + 1, min(l + fibs[2], hi + 1)):
        if g(t) > g(best):
            best = t
    return best


def _first_at_or_above(f, lam: float, lo: int, hi: int) -> int:
    """Smallest T in [lo, hi] with f(T) >= lam, given f nondecreasing there
    and f(hi) >= lam."""
    l, r = lo, hi
    while l < r:
        m = (l + r) // 2
        if f(m) >= lam:
            r = m
        else:
            l = m + 1
    return l


def _last_at_or_above(f, lam: float, lo: int, hi: int) -> int:
    """Largest T in [lo, hi] with f(T) >= lam, given f nonincreasing there
    and f(lo) >= lam."""
    l, r = lo, hi
    while l < r:
        m = (l + r + 1) // 2
        if f(m) >= lam:
            l = m
        else:
            r = m - 1
    return l


def solve_homogeneous(params: OperatorParams, N: int, M: int,
                      beta: BetaTable) -> SolveResult:
    """Optimal lease duration for N identical, fully informed operators.

    The objective decreases in T once all operators enter, and entry is
    all-or-nothing, so the optimum is the smallest integer T at which the
    per-operator revenue in the full market meets the entry requirement.
    The real-valued crossing is bracketed by doubling and refined by a
    bisection-style root solve, then rounded up to the integer lattice.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    evals = [0]

    def R(T):
        evals[0] += 1
        return revenue_homog(params.mu, params.sigma, params.a, params.rho,
                             N, M, T, beta)

    lam = params.mer
    if R(1.0) >= lam:
        theta = 1.0
    else:
        hi = 2.0
        while R(hi) < lam:
            hi *= 2.0
        lo = hi / 2.0
        # plain bisection; R is strictly increasing in T
        while (hi - lo) > 1e-9 * hi:
            mid = 0.5 * (lo + hi)
            if R(mid) >= lam:
                hi = mid
            else:
                lo = mid
        theta = hi
    t_star = max(1, math.ceil(theta))
    full = EntrantSet(tuple(range(1, N + 1)))
    if not is_unbounded(params.max_lease) and t_star > params.max_lease:
        return SolveResult(t_star=1, u_perceived=0.0, u_true=0.0,
                           entrants_perceived=EMPTY_SET, entrants_true=EMPTY_SET,
                           eval_count=evals[0], intervals_examined=0)
    u = (N / t_star) * R(float(t_star))
    return SolveResult(t_star=t_star, u_perceived=u, u_true=u,
                       entrants_perceived=full, entrants_true=full,
                       eval_count=evals[0], intervals_examined=1)


def _capped_max_lease(p: OperatorParams, horizon) -> int:
    if is_unbounded(p.max_lease):
        if horizon is None:
            raise ValueError(
                "operator has an unbounded maximum lease duration; supply a "
                "finite horizon cap")
        return int(horizon)
    if horizon is None:
        return p.max_lease
    return min(p.max_lease, int(horizon))


def _sweep_intervals(events: dict) -> list:
    """Batched ascending event sweep; yields (lo, hi, active-index-set).

    ``events`` maps duration -> list of (is_exit, k).  All events at one
    duration apply before any interval is emitted, so sets that exist only
    at a single instant between same-duration events never surface.
    """
    out = []
    times = sorted(events)
    active = set()
    for i, t in enumerate(times):
        for is_exit, k in sorted(events[t], key=lambda e: (not e[0], e[1])):
            if is_exit:
                active.discard(k)
            else:
                active.add(k)
        if active and i + 1 < len(times):
            out.append((t, times[i + 1] - 1, frozenset(active)))
    # every tracked operator carries an exit event, so the sweep always ends
    # with an empty active set
    assert not active
    return out


def _improves(u: float, best: float) -> bool:
    return u > best + TIE_RTOL * max(1.0, abs(best))


def largest_set_intervals(market: Market, horizon: int = None) -> list:
    """Decompose the duration axis by the largest candidate entrant set.

    Returns the Intervals on which the regulator-perceived candidate set is
    constant and non-empty, in ascending order.  Operators whose entry
    threshold exceeds their (capped) affordability bound never appear.
    """
    events = {}
    for k in range(1, market.n_operators + 1):
        p = market.est_params[k - 1]
        cap = _capped_max_lease(p, horizon)
        entry = entry_threshold(p)
        if entry > cap:
            continue  # never a candidate at any duration
        events.setdefault(entry, []).append((False, k))
        events.setdefault(cap + 1, []).append((True, k))
    return [Interval(lo, hi, EntrantSet(tuple(sorted(members))))
            for lo, hi, members in _sweep_intervals(events)]


def solve_algorithm1(market: Market, cfg: QuadratureConfig = QuadratureConfig(),
                     horizon: int = None, game: MarketGame = None) -> SolveResult:
    """Two-level event sweep maximizing the regulator-perceived objective.

    The outer sweep toggles operators in and out of the largest candidate
    set at their entry thresholds and affordability bounds.  Within each
    emitted interval, each member's revenue against that candidate set is
    unimodal in T, so its satisfaction window is found by a Fibonacci search
    for the peak followed by two boundary bisections.  The inner sweep over
    window endpoints yields intervals of constant satisfied set, and only
    interval endpoints can be optimal.

    Parameters
    ----------
    horizon : int, optional
        Finite cap substituted for unbounded affordability bounds; required
        when any estimated bound is unbounded.
    game : MarketGame, optional
        Evaluator to reuse (its counter is reset); a fresh one by default.
    """
    if game is None:
        game = MarketGame(market, cfg)
    game.reset_counter()
    est = market.est_params

    best_u = 0.0
    best_t = None
    best_set = EMPTY_SET
    intervals = 0
    for interval in largest_set_intervals(market, horizon):
        intervals += 1
        lo, hi, X = interval.lo, interval.hi, interval.entrants

        inner_events = {}
        for k in X:
            lam_hat = est[k - 1].mer

            def f(T, k=k):
                return game.revenue(REGULATOR_VIEW, X, k, T)

            t_peak = fibonacci_argmax(f, lo, hi)
            if f(t_peak) < lam_hat:
                continue  # unsatisfied across the whole interval
            gamma = _first_at_or_above(f, lam_hat, lo, t_peak)
            big_gamma = _last_at_or_above(f, lam_hat, t_peak, hi)
            inner_events.setdefault(gamma, []).append((False, k))
            inner_events.setdefault(big_gamma + 1, []).append((True, k))

        for j_lo, j_hi, sat in _sweep_intervals(inner_events):
            intervals += 1
            j_hi = min(j_hi, hi)
            Xj = EntrantSet(tuple(sorted(sat)))
            for t in (j_lo, j_hi) if j_hi > j_lo else (j_lo,):
                u = game.objective(REGULATOR_VIEW, Xj, t).value
                if _improves(u, best_u):
                    best_u, best_t, best_set = u, t, Xj

    if best_t is None:
        return SolveResult(t_star=1, u_perceived=0.0, u_true=0.0,
                           entrants_perceived=EMPTY_SET, entrants_true=EMPTY_SET,
                           eval_count=game.eval_count,
                           intervals_examined=intervals)
    true_obj = game.true_objective_at(best_t)
    return SolveResult(t_star=best_t, u_perceived=best_u,
                       u_true=true_obj.value,
                       entrants_perceived=best_set,
                       entrants_true=true_obj.entrants,
                       eval_count=game.eval_count,
                       intervals_examined=intervals)


def brute_force(market: Market,
                cfg: QuadratureConfig = QuadratureConfig()) -> SolveResult:
    """Exhaustive scan of every duration up to the largest affordability bound.

    Ties resolve to the smaller duration.  Rejects markets with unbounded
    estimated bounds; cap them explicitly first.
    """
    caps = []
    for p in market.est_params:
        if is_unbounded(p.max_lease):
            raise ValueError(
                "brute force requires finite estimated maximum lease durations")
        caps.append(p.max_lease)
    horizon = max(caps)
    game = MarketGame(market, cfg)
    best_u, best_t, best_set = 0.0, None, EMPTY_SET
    for t in range(1, horizon + 1):
        obj = game.perceived_objective_at(t)
        if _improves(obj.value, best_u):
            best_u, best_t, best_set = obj.value, t, obj.entrants
    if best_t is None:
        return SolveResult(t_star=1, u_perceived=0.0, u_true=0.0,
                           entrants_perceived=EMPTY_SET, entrants_true=EMPTY_SET,
                           eval_count=game.eval_count,
                           intervals_examined=horizon)
    true_obj = game.true_objective_at(best_t)
    return SolveResult(t_star=best_t, u_perceived=best_u,
                       u_true=true_obj.value,
                       entrants_perceived=best_set,
                       entrants_true=true_obj.entrants,
                       eval_count=game.eval_count,
                       intervals_examined=horizon)


def solve_subop(market: Market, cfg: QuadratureConfig = QuadratureConfig(),
                horizon: int = None) -> SolveResult:
    """Baseline restricted to durations that satisfy every operator at once.

    Every operator's satisfaction window against the full market is
    intersected; if the intersection is nonempty only its two endpoints can
    be optimal (the objective is unimodal-at-endpoints on a fixed set).
    Uses true parameters throughout.
    """
    from .game import TRUE_VIEW

    game = MarketGame(market, cfg)
    n = market.n_operators
    full = EntrantSet(tuple(range(1, n + 1)))
    lo_all = 1
    theta = 1
    big_theta = None
    for k in range(1, n + 1):
        p = market.true_params[k - 1]
        cap = _capped_max_lease(p, horizon)

        def f(T, k=k):
            return game.revenue(TRUE_VIEW, full, k, T)

        t_peak = fibonacci_argmax(f, lo_all, cap)
        if f(t_peak) < p.mer:
            big_theta = 0  # this operator can never be satisfied
            break
        gamma = _first_at_or_above(f, p.mer, lo_all, t_peak)
        big_gamma = min(_last_at_or_above(f, p.mer, t_peak, cap), cap)
        theta = max(theta, gamma)
        big_theta = big_gamma if big_theta is None else min(big_theta, big_gamma)

    if big_theta is None or big_theta < theta:
        return SolveResult(t_star=1, u_perceived=0.0, u_true=0.0,
                           entrants_perceived=EMPTY_SET, entrants_true=EMPTY_SET,
                           eval_count=game.eval_count, intervals_examined=0)
    best_t, best_u = theta, game.objective(TRUE_VIEW, full, theta).value
    u_hi = game.objective(TRUE_VIEW, full, big_theta).value
    if _improves(u_hi, best_u):
        best_t, best_u = big_theta, u_hi
    return SolveResult(t_star=best_t, u_perceived=best_u, u_true=best_u,
                       entrants_perceived=full, entrants_true=full,
                       eval_count=game.eval_count, intervals_examined=1)


def probe_instance(n: int, horizon: int, seed: int = 0) -> Market:
    """Synthetic near-homogeneous market with n distinct event durations.

    Parameters are slightly perturbed so every operator takes the general
    quadrature path and no two events coincide.
    """
    ops = []
    for k in range(n):
        ops.append(OperatorParams(
            mu=1.0 + 0.003 * k,
            sigma=0.5 + 0.002 * k,
            a=0.9,
            rho=0.8,
            mer=0.2 * horizon * (1.0 + 0.5 * k / max(1, n - 1) if n > 1 else 1.0),
            max_lease=horizon - k,
        ))
    return Market(channels=2, true_params=tuple(ops))


def eval_counter_probe(sizes, horizon: int,
                       cfg: QuadratureConfig = QuadratureConfig()) -> list:
    """Revenue-evaluation counts of the sweep solver across market sizes.

    Returns [(n, eval_count), ...] for empirical growth-rate fitting against
    the expected O(n^2 log(horizon) + n^3) budget.
    """
    out = []
    for n in sizes:
        market = probe_instance(n, horizon)
        res = solve_algorithm1(market, cfg)
        out.append((n, res.eval_count))
    return out
