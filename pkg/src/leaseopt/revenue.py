"""Expected per-epoch auction revenue.

Three routes to the same quantity, used to cross-check each other:

* ``revenue_hetero``: deterministic quadrature for arbitrary operator mixes,
  with the inner integral over realized revenue reduced analytically via the
  conditional mean of a bivariate normal, leaving a single Gauss-Hermite
  integral over the operator's own bid.
* ``revenue_homog``: closed form for identical operators,
  ``R(s, T) = (Mt/s) mean + rho * beta(1, s) * std`` with ``Mt = min(M, s)``.
* ``mc_revenue_oracle``: direct Monte-Carlo simulation of the auction,
  deliberately kept free of the analytic reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.special import erf

from .market import OperatorParams, epoch_stats, operator_rng

SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class EntrantSet:
    """An ordered set of 1-based operator indices.

    Parameters
    ----------
    indices : tuple of int
        Strictly increasing operator indices.
    """

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise ValueError(f"operator indices are 1-based, got {idx}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing, got {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, *indices) -> "EntrantSet":
        return cls(tuple(sorted(set(int(i) for i in indices))))

    @property
    def size(self) -> int:
        return len(self.indices)

    def __contains__(self, k) -> bool:
        return k in self.indices

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def without(self, k) -> "EntrantSet":
        return EntrantSet(tuple(i for i in self.indices if i != k))

    def union(self, k) -> "EntrantSet":
        return EntrantSet.of(*self.indices, k)

    def is_empty(self) -> bool:
        return not self.indices


EMPTY_SET = EntrantSet(())


@dataclass(frozen=True)
class QuadratureConfig:
    """Numerical-evaluation knobs shared by the deterministic routes.

    ``abs_tol`` governs both the node-doubling convergence check and the
    internal identity checks; ``term_budget`` caps the number of subset terms
    enumerated by the heterogeneous integrand.
    """

    nodes: int = 64
    mc_samples: int = 100_000
    abs_tol: float = 1e-6
    term_budget: int = 1_000_000

    def __post_init__(self):
        if self.nodes < 16:
            raise ValueError(f"nodes must be >= 16, got {self.nodes}")
        if self.mc_samples < 10_000:
            raise ValueError(f"mc_samples must be >= 10000, got {self.mc_samples}")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")


@lru_cache(maxsize=64)
def _gh_nodes(n: int):
    """Probabilists' Gauss-Hermite rule normalized against the N(0,1) pdf."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / SQRT_2PI


@lru_cache(maxsize=64)
def _leg_nodes(n: int):
    """Gauss-Legendre rule on [-1, 1] (cached; treat arrays as read-only)."""
    return np.polynomial.legendre.leggauss(n)


def std_normal_cdf(x):
    """Standard normal CDF via erf (accurate to ~1e-16)."""
    return 0.5 * (1.0 + erf(x / SQRT2))


def _homog_g(u: np.ndarray, s: int, M: int) -> np.ndarray:
    """Probability that a bid at standardized level u wins a channel when the
    s - 1 rival bids are i.i.d. standard normal."""
    m_tilde = min(M, s)
    if m_tilde == s:
        return np.ones_like(u)
    H = std_normal_cdf(u)
    g = np.zeros_like(u)
    for m in range(1, m_tilde + 1):
        g += math.comb(s - 1, m - 1) * (1.0 - H) ** (m - 1) * H ** (s - m)
    return g


@dataclass(frozen=True)
class BetaTable:
    """Cached order-statistic coefficients beta(1, s) for s = 1..n_max.

    ``beta(rho, s) = rho * beta(1, s)`` by the conditional-mean reduction, so
    only the rho = 1 values are stored.  Immutable and shareable.
    """

    channels: int
    values: tuple

    @property
    def n_max(self) -> int:
        return len(self.values)

    def beta1(self, s: int) -> float:
        if not 1 <= s <= self.n_max:
            raise ValueError(f"s must be in [1, {self.n_max}], got {s}")
        return self.values[s - 1]

    def beta(self, rho: float, s: int) -> float:
        return rho * self.beta1(s)


def compute_beta_table(n_max: int, M: int,
                       cfg: QuadratureConfig = QuadratureConfig()) -> BetaTable:
    """Tabulate beta(1, s) and verify the companion win-probability identity.

    beta(1, s) is the Gaussian-weighted first moment of the win-probability
    curve; the zeroth moment must equal min(M, s)/s (each of s symmetric
    entrants wins one of the min(M, s) awarded channels equally often).

    Raises
    ------
    ArithmeticError
        If doubling the node count moves any value by more than ``abs_tol``,
        or the zeroth-moment identity is violated.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    x1, w1 = _gh_nodes(cfg.nodes)
    x2, w2 = _gh_nodes(2 * cfg.nodes)
    values = []
    for s in range(1, n_max + 1):
        if s <= M:
            # G is identically 1 so the integrand is odd: exact zero
            values.append(0.0)
            continue
        b1 = float(np.dot(x1 * _homog_g(x1, s, M), w1))
        b2 = float(np.dot(x2 * _homog_g(x2, s, M), w2))
        if abs(b2 - b1) > cfg.abs_tol:
            raise ArithmeticError(
                f"beta quadrature failed to stabilize at s={s}: "
                f"{b1!r} vs {b2!r} with {cfg.nodes}->{2 * cfg.nodes} nodes")
        alpha = float(np.dot(_homog_g(x2, s, M), w2))
        if abs(alpha - min(M, s) / s) > cfg.abs_tol:
            raise ArithmeticError(
                f"win-probability identity violated at s={s}: "
                f"integral {alpha!r} != {min(M, s) / s!r}")
        values.append(b2)
    return BetaTable(channels=M, values=tuple(values))


def revenue_homog(mu, sigma, a, rho, s: int, M: int, T,
                  beta: BetaTable) -> float:
    """Closed-form expected per-epoch revenue of one of s identical entrants.

    Valid for real T >= 1, which the homogeneous root solver relies on.
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if M != beta.channels:
        raise ValueError(f"beta table was built for M={beta.channels}, got M={M}")
    st = epoch_stats(OperatorParams(mu=mu, sigma=sigma, a=a, rho=rho, mer=0.0), T)
    return (min(M, s) / s) * st.mean + rho * beta.beta1(s) * st.std


def _hetero_win_curve(y_hat: np.ndarray, rival_stats: list, M: int,
                      term_budget: int) -> np.ndarray:
    """P[a bid of y_hat wins a channel] against independent rival bids.

    rival_stats holds each rival's bid-marginal EpochStats.  The probability
    sums, over the number m - 1 of rivals that outbid y_hat (m = 1..min(M, s))
    and every choice of which rivals those are, the product of the matching
    outbid/underbid probabilities.
    """
    s = len(rival_stats) + 1
    m_tilde = min(M, s)
    if m_tilde == s:
        return np.ones_like(y_hat)
    n_terms = sum(math.comb(s - 1, m - 1) for m in range(1, m_tilde + 1))
    if n_terms > term_budget:
        raise ValueError(
            f"entrant set needs {n_terms} quadrature terms, over the "
            f"budget of {term_budget}; reduce M or the set size")
    # F[j] = P[rival j bids below y_hat], per quadrature node
    F = np.array([std_normal_cdf((y_hat - st.mean) / st.std)
                  for st in rival_stats])
    rivals = range(len(rival_stats))
    g = np.zeros_like(y_hat)
    for m in range(1, m_tilde + 1):
        for outbidders in combinations(rivals, m - 1):
            term = np.ones_like(y_hat)
            for j in rivals:
                term = term * ((1.0 - F[j]) if j in outbidders else F[j])
            g += term
    return g


def revenue_hetero(market_params: Sequence[OperatorParams], M: int,
                   S: EntrantSet, k: int, T,
                   cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """Expected per-epoch revenue of operator k within entrant set S.

    Parameters
    ----------
    market_params : sequence of OperatorParams
        Full parameter vector; operator i carries 1-based index i.
    M : int
        Number of channels auctioned per epoch.
    S : EntrantSet
        The entrant set; must contain k.
    k : int
        1-based index of the operator whose revenue is evaluated.
    T : int or float
        Lease duration, >= 1.
    cfg : QuadratureConfig
        Node count, tolerance, and combinatorics budget.

    Notes
    -----
    Conditioning on operator k's bid, its expected revenue contribution is
    the bivariate-normal conditional mean ``mean + rho (bid - mean)``; the
    remaining integral over the bid is evaluated with a Gauss-Hermite rule,
    accepted only if doubling the node count moves the result by less than
    ``abs_tol`` times the revenue scale.
    """
    if k not in S:
        raise ValueError(f"operator {k} not in entrant set {S.indices}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    p_k = market_params[k - 1]
    st_k = epoch_stats(p_k, T)
    rival_stats = [epoch_stats(market_params[j - 1], T) for j in S.without(k)]

    # Panel edges in the standardized bid variable u: the win curve changes
    # only where some rival's bid distribution transitions, i.e. within a few
    # of that rival's (rescaled) standard deviations of its (rescaled) mean.
    # Splitting there keeps every panel's integrand smooth at panel scale
    # even when rival spreads differ by orders of magnitude.
    edges = {-9.0, 9.0}
    for st in rival_stats:
        center = (st.mean - st_k.mean) / st_k.std
        width = st.std / st_k.std
        for e in (center - 6 * width, center, center + 6 * width):
            if -9.0 < e < 9.0:
                edges.add(e)
    edges = sorted(edges)

    def integral(points_per_panel: int) -> float:
        x, w = _leg_nodes(points_per_panel)
        us, ws = [], []
        for a_e, b_e in zip(edges, edges[1:]):
            half = 0.5 * (b_e - a_e)
            us.append(0.5 * (a_e + b_e) + half * x)
            ws.append(half * w)
        u = np.concatenate(us)
        wq = np.concatenate(ws)
        y_hat = st_k.mean + st_k.std * u
        g = _hetero_win_curve(y_hat, rival_stats, M, cfg.term_budget)
        cond_mean = st_k.mean + p_k.rho * (y_hat - st_k.mean)
        phi = np.exp(-0.5 * u * u) / SQRT_2PI
        return float(np.dot(cond_mean * g * phi, wq))

    scale = max(1.0, abs(st_k.mean))
    r1 = integral(cfg.nodes // 2)
    r2 = integral(cfg.nodes)
    if not (math.isfinite(r1) and math.isfinite(r2)):
        raise ArithmeticError("revenue quadrature produced non-finite values")
    if abs(r2 - r1) > cfg.abs_tol * scale:
        raise ArithmeticError(
            f"revenue quadrature failed to stabilize: {r1!r} vs {r2!r} with "
            f"{cfg.nodes // 2}->{cfg.nodes} points per panel")
    return r2


def mc_revenue_oracle(market_params: Sequence[OperatorParams], M: int,
                      S: EntrantSet, T: int, epochs: int, seed: int):
    """Monte-Carlo estimate of every entrant's expected per-epoch revenue.

    Simulates ``epochs`` independent epochs.  In each, every entrant draws a
    correlated (revenue, bid) pair, the min(M, s) highest bids win channels
    (ties go to the lower operator index), winners collect their realized
    revenue and losers collect zero.

    Parameters
    ----------
    seed : int
        Master seed; operator k's draws come from a stream derived from
        (seed, k), so they do not depend on the set composition.

    Returns
    -------
    dict
        ``means``, ``stderrs``, ``win_prob``: arrays aligned with S.indices.
    """
    if epochs < 1_000:
        raise ValueError(f"epochs must be >= 1000, got {epochs}")
    if S.is_empty():
        raise ValueError("entrant set is empty")
    s = S.size
    m_tilde = min(M, s)
    Y = np.empty((epochs, s))
    Y_hat = np.empty((epochs, s))
    for col, k in enumerate(S):
        p = market_params[k - 1]
        st = epoch_stats(p, T)
        z = operator_rng(seed, k).standard_normal((epochs, 2))
        Y[:, col] = st.mean + st.std * z[:, 0]
        if p.rho == 1.0:
            Y_hat[:, col] = Y[:, col]
        else:
            Y_hat[:, col] = st.mean + st.std * (
                p.rho * z[:, 0] + math.sqrt(1.0 - p.rho ** 2) * z[:, 1])
    # stable argsort of -bids: equal bids keep ascending column (index) order
    order = np.argsort(-Y_hat, axis=1, kind="stable")
    winners = order[:, :m_tilde]
    won = np.zeros((epochs, s), dtype=bool)
    np.put_along_axis(won, winners, True, axis=1)
    credited = np.where(won, Y, 0.0)
    means = credited.mean(axis=0)
    stderrs = credited.std(axis=0, ddof=1) / math.sqrt(epochs)
    return {
        "means": means,
        "stderrs": stderrs,
        "win_prob": won.mean(axis=0),
    }
