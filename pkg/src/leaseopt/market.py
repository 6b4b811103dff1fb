"""Operator/market parameters, AR(1) revenue simulation, and epoch statistics.

Operator indices are 1-based throughout the package (index ``k`` refers to
``params[k - 1]`` in a parameter vector), matching the convention used in
configuration files and result output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

#: Name of the pseudo-random generator backing every sampling API.  Recorded in
#: CSV metadata so that output files are re-derivable from (config, seed).
GENERATOR_NAME = "numpy-PCG64"


class Unbounded:
    """Explicit marker for an unlimited maximum affordable lease duration.

    A distinct type (rather than ``inf``) so that code paths that require a
    finite horizon, such as the brute-force solver, can detect and reject it
    loudly.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"


UNBOUNDED = Unbounded()

MaxLease = Union[int, Unbounded]


def is_unbounded(max_lease: MaxLease) -> bool:
    return isinstance(max_lease, Unbounded)


@dataclass(frozen=True)
class OperatorParams:
    """Per-operator market parameters.

    Parameters
    ----------
    mu : float
        Mean revenue per time slot (> 0).
    sigma : float
        Per-slot revenue standard deviation (> 0).
    a : float
        Autocorrelation coefficient of the per-slot revenue process,
        0 <= a < 1.  Use :meth:`from_tau` to construct from a time constant.
    rho : float
        Correlation between an operator's bid and its realized epoch revenue,
        0 <= rho <= 1 (rho = 1 is the degenerate perfectly-informed bidder).
    mer : float
        Minimum expected revenue per epoch required to enter the market (>= 0).
    max_lease : int or Unbounded
        Maximum affordable lease duration in slots.
    """

    mu: float
    sigma: float
    a: float
    rho: float
    mer: float
    max_lease: MaxLease = UNBOUNDED

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0.0 <= self.a < 1.0:
            raise ValueError(f"a must be in [0, 1), got {self.a}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if not self.mer >= 0:
            raise ValueError(f"mer must be >= 0, got {self.mer}")
        if not is_unbounded(self.max_lease):
            if int(self.max_lease) != self.max_lease or self.max_lease < 1:
                raise ValueError(
                    f"finite max_lease must be a positive integer, got {self.max_lease}"
                )
            object.__setattr__(self, "max_lease", int(self.max_lease))

    @classmethod
    def from_tau(cls, mu, sigma, tau, rho, mer, max_lease=UNBOUNDED):
        """Construct with autocorrelation given as a time constant.

        ``a = exp(-1 / tau)``; ``tau`` is accepted only here, ``a`` is the
        canonical stored field.
        """
        if not tau > 0:
            raise ValueError(f"tau must be > 0, got {tau}")
        return cls(mu=mu, sigma=sigma, a=math.exp(-1.0 / tau), rho=rho,
                   mer=mer, max_lease=max_lease)

    def with_max_lease(self, max_lease: MaxLease) -> "OperatorParams":
        return replace(self, max_lease=max_lease)


@dataclass(frozen=True)
class Market:
    """N operators' true and estimated parameters plus the channel count.

    ``est_params`` defaults to ``true_params`` (complete information).
    At most one channel is allocated per operator per epoch.
    """

    channels: int
    true_params: tuple
    est_params: tuple = None

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError(f"channels must be >= 1, got {self.channels}")
        object.__setattr__(self, "true_params", tuple(self.true_params))
        if self.est_params is None:
            object.__setattr__(self, "est_params", self.true_params)
        else:
            object.__setattr__(self, "est_params", tuple(self.est_params))
        if len(self.true_params) != len(self.est_params):
            raise ValueError("true_params and est_params must have equal length")
        if len(self.true_params) < 1:
            raise ValueError("market needs at least one operator")

    @property
    def n_operators(self) -> int:
        return len(self.true_params)

    @property
    def complete_information(self) -> bool:
        return self.true_params == self.est_params


@dataclass(frozen=True)
class EpochStats:
    """Mean and standard deviation of one operator's net epoch revenue."""

    mean: float
    std: float


def epoch_stats(params: OperatorParams, T) -> EpochStats:
    """Statistics of the net revenue accumulated over one epoch of T slots.

    Valid for real T >= 1 as well (used by the root solver for the
    homogeneous optimum); for a = 0 the std reduces to ``sigma * sqrt(T)``.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    return EpochStats(mean=params.mu * T, std=epoch_std(params.sigma, params.a, T))


def epoch_std(sigma: float, a: float, T) -> float:
    """Standard deviation of a T-slot sum of the stationary AR(1) process."""
    if a == 0.0:
        return sigma * math.sqrt(T)
    # a**T underflows harmlessly to 0 for very large T
    aT = math.exp(T * math.log(a)) if T * math.log(a) > -745 else 0.0
    return sigma * math.sqrt(T - a * (2.0 - 2.0 * aT + a * T)) / (1.0 - a)


@dataclass(frozen=True)
class RevenueTrace:
    """A simulated per-slot revenue path together with the seed that made it."""

    slots: np.ndarray
    seed: int


def _rng(seed, *stream) -> np.random.Generator:
    """Deterministic generator; extra integers derive independent streams."""
    return np.random.default_rng([int(seed), *map(int, stream)])


def operator_rng(seed, k: int) -> np.random.Generator:
    """Independent stream for operator k derived from a single master seed."""
    return _rng(seed, k)


def simulate_ar1(params: OperatorParams, n_slots: int, seed: int) -> RevenueTrace:
    """Simulate the stationary first-order autoregressive revenue process.

    ``x(1) ~ N(mu, sigma^2)`` and ``x(t+1) = a x(t) + eps(t)`` with
    ``eps ~ N(mu (1 - a), sigma^2 (1 - a^2))``.  The process is stationary,
    and not clamped at zero (negative excursions are part of the model).
    """
    if n_slots < 1:
        raise ValueError(f"n_slots must be >= 1, got {n_slots}")
    rng = _rng(seed)
    a, mu, sigma = params.a, params.mu, params.sigma
    x = np.empty(n_slots)
    x[0] = rng.normal(mu, sigma)
    if n_slots > 1:
        eps = rng.normal(mu * (1 - a), sigma * math.sqrt(1 - a * a), n_slots - 1)
        for t in range(1, n_slots):
            x[t] = a * x[t - 1] + eps[t - 1]
    return RevenueTrace(slots=x, seed=int(seed))


def simulate_epoch_sums(params: OperatorParams, T: int, n_epochs: int,
                        seed: int) -> np.ndarray:
    """n_epochs independent T-slot revenue sums (vectorized across epochs).

    Each epoch is an independent stationary path, so the sums are i.i.d.
    draws of the net epoch revenue.
    """
    rng = _rng(seed)
    a, mu, sigma = params.a, params.mu, params.sigma
    x = rng.normal(mu, sigma, n_epochs)
    total = x.copy()
    if T > 1:
        eps = rng.normal(mu * (1 - a), sigma * math.sqrt(1 - a * a), (T - 1, n_epochs))
        for t in range(T - 1):
            x = a * x + eps[t]
            total += x
    return total


def sample_bid_revenue(stats: EpochStats, rho: float, n: int,
                       seed: int) -> np.ndarray:
    """Draw n (revenue, bid) pairs from the joint epoch distribution.

    Returns an (n, 2) array; column 0 is the realized revenue Y, column 1
    the bid.  Both marginals are N(mean, std^2) and corr(Y, bid) = rho;
    rho = 1 yields bid == Y exactly.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    rng = _rng(seed)
    z = rng.standard_normal((n, 2))
    y = stats.mean + stats.std * z[:, 0]
    if rho == 1.0:
        y_hat = y
    else:
        y_hat = stats.mean + stats.std * (rho * z[:, 0]
                                          + math.sqrt(1 - rho * rho) * z[:, 1])
    return np.column_stack([y, y_hat])


def homogeneous_market(n: int, channels: int, params: OperatorParams) -> Market:
    """Complete-information market of n identical operators."""
    return Market(channels=channels, true_params=(params,) * n)


def params_vector_tau(entries: Sequence[dict]) -> tuple:
    """Build an OperatorParams tuple from dicts carrying either a or tau."""
    out = []
    for e in entries:
        e = dict(e)
        if "tau" in e and "a" in e:
            raise ValueError("specify either a or tau per operator, not both")
        if "tau" in e:
            out.append(OperatorParams.from_tau(**e))
        else:
            out.append(OperatorParams(**e))
    return tuple(out)
