import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leaseopt.market import OperatorParams, epoch_stats
from leaseopt.revenue import (
    EMPTY_SET,
    EntrantSet,
    QuadratureConfig,
    _gh_nodes,
    compute_beta_table,
    mc_revenue_oracle,
    revenue_hetero,
    revenue_homog,
    std_normal_cdf,
)

from conftest import random_operator


class TestEntrantSet:
    def test_of_sorts_and_dedupes(self):
        assert EntrantSet.of(3, 1, 3, 2).indices == (1, 2, 3)

    @pytest.mark.parametrize("bad", [(0,), (-1, 2), (2, 1), (1, 1)])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValueError):
            EntrantSet(bad)

    def test_membership_and_size(self):
        s = EntrantSet((1, 4, 7))
        assert 4 in s and 2 not in s
        assert s.size == len(s) == 3
        assert list(s) == [1, 4, 7]

    def test_without_and_union(self):
        s = EntrantSet((1, 4, 7))
        assert s.without(4).indices == (1, 7)
        assert s.union(3).indices == (1, 3, 4, 7)

    def test_empty(self):
        assert EMPTY_SET.is_empty()
        assert not EntrantSet((2,)).is_empty()


class TestQuadratureConfig:
    def test_rejects_weak_settings(self):
        with pytest.raises(ValueError):
            QuadratureConfig(nodes=8)
        with pytest.raises(ValueError):
            QuadratureConfig(mc_samples=100)


class TestBetaTable:
    def test_exact_zero_when_everyone_wins(self, beta_m2):
        assert beta_m2.beta1(1) == 0.0
        assert beta_m2.beta1(2) == 0.0

    def test_anchor_value(self, beta_m2):
        # (E[Z(8:8)] + E[Z(7:8)]) / 8 for standard normal order statistics
        assert beta_m2.beta1(8) == pytest.approx(0.28447814607294597, abs=1e-9)

    def test_rho_scaling(self, beta_m2):
        for s in (3, 8, 15):
            assert beta_m2.beta(0.8, s) == pytest.approx(
                0.8 * beta_m2.beta1(s), rel=1e-15)

    def test_competition_premium_grows_with_entrants(self, beta_m2):
        # s beta1(s) is the summed mean of the top min(M, s) order statistics,
        # which only grows as more entrants compete
        vals = [s * beta_m2.beta1(s) for s in range(2, 31)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_out_of_range_rejected(self, beta_m2):
        with pytest.raises(ValueError):
            beta_m2.beta1(0)
        with pytest.raises(ValueError):
            beta_m2.beta1(31)

    def test_against_order_statistic_mc(self, beta_m2):
        # s beta1(s) = E[Z(s:s)] + E[Z(s-1:s)] at M = 2
        rng = np.random.default_rng(42)
        z = rng.standard_normal((400_000, 8))
        z.sort(axis=1)
        top_two = z[:, -1] + z[:, -2]
        se = top_two.std(ddof=1) / math.sqrt(len(z))
        assert abs(top_two.mean() - 8 * beta_m2.beta1(8)) <= 4 * se

    def test_dual_route_two_dim_quadrature(self, beta_m2):
        # rho beta1(s) should equal the full 2-D expectation E[z1 g(u)] with
        # u = rho z1 + sqrt(1 - rho^2) z2, bypassing the conditional-mean
        # reduction entirely
        x, w = _gh_nodes(96)
        z1 = x[:, None]
        z2 = x[None, :]
        w2 = w[:, None] * w[None, :]
        for rho, s in [(0.3, 3), (0.8, 5), (0.8, 8), (0.95, 12), (1.0, 8)]:
            u = rho * z1 + math.sqrt(1.0 - rho ** 2) * z2
            H = std_normal_cdf(u)
            g = np.zeros_like(u)
            for m in (1, 2):
                g += math.comb(s - 1, m - 1) * (1 - H) ** (m - 1) * H ** (s - m)
            direct = float(np.sum(z1 * g * w2))
            assert direct == pytest.approx(rho * beta_m2.beta1(s), abs=1e-9)


def hetero_params(n, seed, max_lease=1000):
    rng = np.random.default_rng(seed)
    return tuple(random_operator(rng, max_lease) for _ in range(n))


class TestRevenueHetero:
    def test_matches_closed_form_when_identical(self, beta_m2):
        p = OperatorParams.from_tau(mu=1.0, sigma=0.5, tau=100.0, rho=0.8,
                                    mer=0.0)
        params = (p,) * 6
        S = EntrantSet(tuple(range(1, 7)))
        for T in (10, 100, 500):
            closed = revenue_homog(p.mu, p.sigma, p.a, p.rho, 6, 2, T, beta_m2)
            quad = revenue_hetero(params, 2, S, 1, T)
            assert quad == pytest.approx(closed, rel=1e-6)

    def test_requires_membership(self):
        params = hetero_params(3, seed=1)
        with pytest.raises(ValueError):
            revenue_hetero(params, 2, EntrantSet((1, 2)), 3, 50)

    def test_more_rivals_never_helps(self):
        params = hetero_params(6, seed=2)
        S = EntrantSet((1, 2))
        prev = revenue_hetero(params, 2, S, 1, 200)
        for j in (3, 4, 5, 6):
            S = S.union(j)
            cur = revenue_hetero(params, 2, S, 1, 200)
            assert cur <= prev + 1e-9
            prev = cur

    def test_strictly_increasing_in_duration(self):
        params = hetero_params(4, seed=3)
        S = EntrantSet((1, 2, 3, 4))
        vals = [revenue_hetero(params, 2, S, 2, T)
                for T in (1, 5, 20, 100, 400, 900)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_set_revenue_conserved(self):
        # summed win probabilities equal min(M, s): total expected credited
        # revenue is bounded by the channel supply regardless of composition
        params = hetero_params(5, seed=4)
        S = EntrantSet((1, 2, 3, 4, 5))
        mc = mc_revenue_oracle(params, 2, S, 300, epochs=50_000, seed=9)
        assert float(mc["win_prob"].sum()) == pytest.approx(2.0, abs=1e-12)

    def test_term_budget_enforced(self):
        params = hetero_params(12, seed=5)
        S = EntrantSet(tuple(range(1, 13)))
        cfg = QuadratureConfig(term_budget=5)
        with pytest.raises(ValueError, match="budget"):
            revenue_hetero(params, 3, S, 1, 100, cfg)

    def test_sharp_spread_ratio_still_converges(self):
        # rival epoch spreads differing by a large factor make the win curve
        # nearly a step; the panel decomposition must still stabilize
        mk = lambda a: OperatorParams(mu=1.0, sigma=0.5, a=a, rho=0.8, mer=0.0)
        params = (mk(0.5), mk(0.99), mk(0.5))
        S = EntrantSet((1, 2, 3))
        for k in (1, 2):
            val = revenue_hetero(params, 2, S, k, 600)
            assert math.isfinite(val) and val > 0

    @settings(max_examples=8, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10 ** 6))
    def test_agrees_with_mc_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        params = tuple(random_operator(rng, 1000) for _ in range(n))
        S = EntrantSet(tuple(range(1, n + 1)))
        T = int(rng.integers(10, 600))
        mc = mc_revenue_oracle(params, 2, S, T, epochs=100_000, seed=seed)
        for col, k in enumerate(S):
            quad = revenue_hetero(params, 2, S, k, T)
            z = (quad - mc["means"][col]) / mc["stderrs"][col]
            assert abs(z) <= 4.0


class TestMcOracle:
    def test_rejects_tiny_runs(self):
        params = hetero_params(2, seed=0)
        with pytest.raises(ValueError):
            mc_revenue_oracle(params, 2, EntrantSet((1, 2)), 10, 100, 0)
        with pytest.raises(ValueError):
            mc_revenue_oracle(params, 2, EMPTY_SET, 10, 5000, 0)

    def test_deterministic_and_set_independent_streams(self):
        params = hetero_params(4, seed=6)
        a = mc_revenue_oracle(params, 2, EntrantSet((1, 3)), 50, 5000, 7)
        b = mc_revenue_oracle(params, 2, EntrantSet((1, 3)), 50, 5000, 7)
        assert np.array_equal(a["means"], b["means"])
        # operator 1's draws do not depend on who else entered
        c = mc_revenue_oracle(params, 2, EntrantSet((1,)), 50, 5000, 7)
        st1 = epoch_stats(params[0], 50)
        assert c["means"][0] == pytest.approx(st1.mean, rel=0.05)
        assert c["win_prob"][0] == 1.0

    def test_everyone_wins_when_supply_covers_demand(self):
        params = hetero_params(2, seed=8)
        mc = mc_revenue_oracle(params, 3, EntrantSet((1, 2)), 100, 5000, 1)
        assert np.array_equal(mc["win_prob"], [1.0, 1.0])


class TestComputeBetaTableChecks:
    def test_doubling_failure_raises(self):
        with pytest.raises(ArithmeticError):
            compute_beta_table(40, 2, QuadratureConfig(nodes=16, abs_tol=1e-13))
