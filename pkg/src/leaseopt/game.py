"""Two-stage market game: entrant sets, Max-Min equilibrium, objectives.

The regulator announces a lease duration T; operators then decide whether to
enter.  Every revenue quantity exists in three flavors depending on whose
parameter estimates are used:

* TrueView: ground-truth parameters for everyone.
* SelfView(k): operator k knows its own true parameters but sees only the
  regulator's estimates of the others.
* RegulatorView: estimates for everyone.

All three run through one evaluator parameterized by a resolved parameter
vector, so there is no duplicated integral code to drift apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .market import Market, OperatorParams, is_unbounded
from .revenue import (
    EMPTY_SET,
    BetaTable,
    EntrantSet,
    QuadratureConfig,
    compute_beta_table,
    revenue_hetero,
    revenue_homog,
)


@dataclass(frozen=True)
class RevenueView:
    """Selects whose parameter estimates feed a revenue evaluation."""

    kind: str
    k: int = None

    def __post_init__(self):
        if self.kind not in ("true", "self", "regulator"):
            raise ValueError(f"unknown view kind {self.kind!r}")
        if (self.kind == "self") != (self.k is not None):
            raise ValueError("SelfView requires k; other views forbid it")
        if self.k is not None and self.k < 1:
            raise ValueError(f"operator index must be >= 1, got {self.k}")


TRUE_VIEW = RevenueView("true")
REGULATOR_VIEW = RevenueView("regulator")


def self_view(k: int) -> RevenueView:
    return RevenueView("self", k)


@dataclass(frozen=True)
class ObjectiveValue:
    """Spectrum utilization (expected revenue per slot) and the set behind it."""

    value: float
    entrants: EntrantSet


def resolve_params(market: Market, view: RevenueView) -> tuple:
    """The parameter vector a given view perceives."""
    if view.kind == "true":
        return market.true_params
    if view.kind == "regulator":
        return market.est_params
    if not 1 <= view.k <= market.n_operators:
        raise ValueError(f"operator {view.k} out of range 1..{market.n_operators}")
    return tuple(
        market.true_params[j] if j == view.k - 1 else market.est_params[j]
        for j in range(market.n_operators)
    )


def entry_threshold(params: OperatorParams) -> int:
    """Smallest integer T at which expected standalone revenue meets the MER.

    mu * T >= mer on the integer lattice.  Floats are exact rationals, so the
    ceiling of the quotient is computed without rounding error.
    """
    return max(1, math.ceil(Fraction(params.mer) / Fraction(params.mu)))


def _interested(params: OperatorParams, T: int) -> bool:
    if not is_unbounded(params.max_lease) and T > params.max_lease:
        return False
    return T >= entry_threshold(params)


def largest_entrants(market: Market, view: RevenueView, T: int) -> EntrantSet:
    """Largest candidate entrant set at duration T under a view.

    An operator belongs iff T does not exceed its (perceived) affordability
    bound and its (perceived) expected standalone revenue meets its MER.
    All boundary comparisons are inclusive.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    params = resolve_params(market, view)
    return EntrantSet(tuple(
        k for k in range(1, market.n_operators + 1) if _interested(params[k - 1], T)
    ))


class MarketGame:
    """Counted, memoized revenue evaluator bound to one market instance.

    The evaluation counter increments on every revenue request, including
    memo hits, so it measures algorithmic work rather than cache luck.
    """

    def __init__(self, market: Market, cfg: QuadratureConfig = QuadratureConfig()):
        self.market = market
        self.cfg = cfg
        self.eval_count = 0
        self._memo = {}
        self._beta = None
        self._complete_info = market.complete_information

    @property
    def beta(self) -> BetaTable:
        if self._beta is None:
            self._beta = compute_beta_table(
                self.market.n_operators, self.market.channels, self.cfg)
        return self._beta

    def reset_counter(self):
        self.eval_count = 0

    def revenue(self, view: RevenueView, S: EntrantSet, k: int, T) -> float:
        """Expected per-epoch revenue of k in S under a view (counted)."""
        self.eval_count += 1
        # under complete information all views resolve identically, so their
        # memo entries are shared
        if view.kind != "true" and self._complete_info:
            view = TRUE_VIEW
        key = (view.kind, view.k, S.indices, k, T)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        params = resolve_params(self.market, view)
        val = self._revenue_uncounted(params, S, k, T)
        self._memo[key] = val
        return val

    def _revenue_uncounted(self, params, S: EntrantSet, k: int, T) -> float:
        p_k = params[k - 1]
        # identical marginals across the set admit the closed form, with each
        # operator's own rho scaling the order-statistic term
        process = (p_k.mu, p_k.sigma, p_k.a)
        if all((params[j - 1].mu, params[j - 1].sigma, params[j - 1].a) == process
               for j in S):
            return revenue_homog(p_k.mu, p_k.sigma, p_k.a, p_k.rho,
                                 S.size, self.market.channels, T, self.beta)
        return revenue_hetero(params, self.market.channels, S, k, T, self.cfg)

    def largest_entrants(self, view: RevenueView, T: int) -> EntrantSet:
        return largest_entrants(self.market, view, T)

    def equilibrium_entrants(self, T: int) -> EntrantSet:
        """Unique Max-Min equilibrium entrant set at duration T.

        Operator k enters iff it can afford T, belongs to its own largest
        candidate set, and its self-perceived revenue against that worst-case
        set meets its TRUE minimum expected revenue.
        """
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        members = []
        for k in range(1, self.market.n_operators + 1):
            p_true = self.market.true_params[k - 1]
            if not is_unbounded(p_true.max_lease) and T > p_true.max_lease:
                continue
            view = self_view(k)
            s_worst = self.largest_entrants(view, T)
            if k not in s_worst:
                continue
            if self.revenue(view, s_worst, k, T) >= p_true.mer:
                members.append(k)
        return EntrantSet(tuple(members))

    def perceived_entrants(self, T: int) -> EntrantSet:
        """Equilibrium entrant set as the regulator predicts it (all estimates)."""
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        s_worst = self.largest_entrants(REGULATOR_VIEW, T)
        members = []
        for k in s_worst:
            p_est = self.market.est_params[k - 1]
            if self.revenue(REGULATOR_VIEW, s_worst, k, T) >= p_est.mer:
                members.append(k)
        return EntrantSet(tuple(members))

    def objective(self, view: RevenueView, S: EntrantSet, T) -> ObjectiveValue:
        """Spectrum utilization of set S at duration T: (1/T) sum of revenues."""
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        if S.is_empty():
            return ObjectiveValue(0.0, EMPTY_SET)
        total = sum(self.revenue(view, S, k, T) for k in S)
        return ObjectiveValue(total / T, S)

    def true_objective_at(self, T: int) -> ObjectiveValue:
        """U(T): true-parameter utilization of the equilibrium set at T."""
        return self.objective(TRUE_VIEW, self.equilibrium_entrants(T), T)

    def perceived_objective_at(self, T: int) -> ObjectiveValue:
        """The regulator's predicted utilization at T."""
        return self.objective(REGULATOR_VIEW, self.perceived_entrants(T), T)


def equilibrium_entrants(market: Market, T: int,
                         cfg: QuadratureConfig = QuadratureConfig()) -> EntrantSet:
    return MarketGame(market, cfg).equilibrium_entrants(T)


def perceived_entrants(market: Market, T: int,
                       cfg: QuadratureConfig = QuadratureConfig()) -> EntrantSet:
    return MarketGame(market, cfg).perceived_entrants(T)


def objective(market: Market, view: RevenueView, S: EntrantSet, T,
              cfg: QuadratureConfig = QuadratureConfig()) -> ObjectiveValue:
    return MarketGame(market, cfg).objective(view, S, T)


def true_objective_at(market: Market, T: int,
                      cfg: QuadratureConfig = QuadratureConfig()) -> ObjectiveValue:
    return MarketGame(market, cfg).true_objective_at(T)
