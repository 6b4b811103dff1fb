"""Reproducible experiment sweeps and CSV emission.

Each experiment kind maps to one figure family:

* ``trend-sweep``: optimal duration and utilization against one market
  parameter (homogeneous closed form, or sampled heterogeneous replicates).
* ``subop-comparison``: optimizer vs the satisfy-everyone baseline as the
  market grows more heterogeneous.
* ``mer-discontinuity``: regime changes as a subgroup's entry requirement
  sweeps.
* ``incomplete-info``: utilization loss from estimation error windows.
* ``validate``: analytic-vs-Monte-Carlo revenue checks.

Rows are deterministic functions of (spec, seed): replicate r of any grid
point draws from a stream derived from (seed, r), so the same instances
recur across grid points and files are byte-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import Config, ConfigError, ExperimentSpec
from .game import REGULATOR_VIEW, MarketGame
from .market import (
    GENERATOR_NAME,
    UNBOUNDED,
    Market,
    OperatorParams,
    is_unbounded,
)
from .optimizer import solve_algorithm1, solve_subop
from .revenue import QuadratureConfig

BASE_COLUMNS = ("swept_value", "replicate", "t_star", "u_true", "u_perceived",
                "s_star", "s_l_star", "eval_count", "seed")

EXTRA_COLUMNS = {
    "trend-sweep": (),
    "mer-discontinuity": (),
    "subop-comparison": ("u_subop", "delta_u_pct"),
    "incomplete-info": ("t_star_true", "u_at_true_t", "delta_u_pct"),
    "validate": (),
}

#: Default sweep horizon standing in for unbounded affordability bounds in
#: the homogeneous-family experiments (optima sit far below it).
DEFAULT_HORIZON = 5000


def format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_csv(path, meta: dict, header, rows):
    """CSV with ``#`` metadata lines, then a header, then data rows.

    Floats are written at 12 significant digits; metadata always includes
    the tool version and generator identity so files are re-derivable.
    """
    lines = [f"# tool_version: {__version__}",
             f"# generator: {GENERATOR_NAME}"]
    for key in sorted(meta):
        lines.append(f"# {key}: {meta[key]}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def read_csv(path):
    """Counterpart of write_csv: returns (meta, header, rows-of-strings)."""
    meta, header, rows = {}, None, []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, val = body.split(":", 1)
                    meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    return meta, header, rows


def truncated_gaussian(rng: np.random.Generator, mean, std, lo, hi,
                       max_tries: int = 10_000) -> float:
    """Rejection-sampled Gaussian restricted to [lo, hi]."""
    if std == 0:
        if not lo <= mean <= hi:
            raise ValueError("degenerate truncated Gaussian outside bounds")
        return float(mean)
    for _ in range(max_tries):
        x = rng.normal(mean, std)
        if lo <= x <= hi:
            return float(x)
    raise RuntimeError(
        f"truncated Gaussian rejection cap hit: N({mean}, {std}) on [{lo}, {hi}]")


def _replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), 0xE5, int(replicate)])


@dataclass
class ExperimentResult:
    header: tuple
    rows: list
    warnings: list


def _result_core(value, replicate, res, game: MarketGame, seed):
    s_l = game.largest_entrants(REGULATOR_VIEW, res.t_star).size
    return [value, replicate, res.t_star, res.u_true, res.u_perceived,
            res.entrants_perceived.size, s_l, res.eval_count, seed]


def _solve(market: Market, cfg: QuadratureConfig, horizon):
    game = MarketGame(market, cfg)
    res = solve_algorithm1(market, cfg, horizon=horizon, game=game)
    return res, game


# ---------------------------------------------------------------------------
# experiment kinds


def _homogeneous_defaults() -> dict:
    return {"mu": 1.0, "sigma": 0.5, "tau": 100.0, "rho": 0.8, "mer": 100.0,
            "n": 10, "channels": 2}


def _build_homogeneous(values: dict) -> Market:
    p = OperatorParams.from_tau(mu=values["mu"], sigma=values["sigma"],
                                tau=values["tau"], rho=values["rho"],
                                mer=values["mer"], max_lease=UNBOUNDED)
    return Market(channels=int(values["channels"]),
                  true_params=(p,) * int(values["n"]))


def run_trend_sweep(spec: ExperimentSpec, cfg: QuadratureConfig,
                    horizon) -> ExperimentResult:
    """Optimal duration/utilization against one homogeneous parameter."""
    base = _homogeneous_defaults()
    base.update(spec.options.get("defaults", {}))
    if spec.param not in ("mu", "sigma", "tau", "rho", "mer", "n"):
        raise ConfigError(f"trend-sweep cannot sweep {spec.param!r}")
    horizon = horizon or DEFAULT_HORIZON
    rows = []
    for value in spec.grid:
        values = dict(base)
        values[spec.param] = value
        market = _build_homogeneous(values)
        res, game = _solve(market, cfg, horizon)
        rows.append(_result_core(value, 0, res, game, spec.seed))
    return ExperimentResult(BASE_COLUMNS, rows, [])


def sample_subop_market(rng: np.random.Generator, cv: float,
                        options: dict) -> Market:
    """Heterogeneity sample for the baseline comparison.

    ``heterogeneous_in`` selects the varied parameter family: the operator
    means (truncated Gaussian around 1), or the entry requirement and
    affordability bound jointly.
    """
    n = int(options.get("n", 10))
    channels = int(options.get("channels", 2))
    target = options.get("heterogeneous_in", "mu")
    ops = []
    for _ in range(n):
        if target == "mu":
            mu = truncated_gaussian(rng, 1.0, cv, 0.5, 1.5)
            mer, max_lease = 100.0, UNBOUNDED
        elif target == "mer":
            mu = 1.0
            mer = truncated_gaussian(rng, 500.0, cv * 500.0, 100.0, 900.0)
            max_lease = int(round(
                truncated_gaussian(rng, 5000.0, cv * 5000.0, 900.0, 9100.0)))
        else:
            raise ConfigError(f"unknown heterogeneous_in {target!r}")
        ops.append(OperatorParams.from_tau(mu=mu, sigma=0.5, tau=100.0,
                                           rho=0.8, mer=mer,
                                           max_lease=max_lease))
    return Market(channels=channels, true_params=tuple(ops))


def run_subop_comparison(spec: ExperimentSpec, cfg: QuadratureConfig,
                         horizon) -> ExperimentResult:
    """Optimizer vs satisfy-everyone baseline across heterogeneity levels.

    delta_u_pct is the percentage gain of the optimizer over the baseline;
    rows where the baseline finds no feasible duration carry ``inf``.
    """
    horizon = horizon or DEFAULT_HORIZON
    rows = []
    for cv in spec.grid:
        for r in range(spec.replicates):
            rng = _replicate_rng(spec.seed, r)
            market = sample_subop_market(rng, float(cv), spec.options)
            res, game = _solve(market, cfg, horizon)
            sub = solve_subop(market, cfg, horizon=horizon)
            if sub.u_perceived > 0:
                delta = (res.u_perceived - sub.u_perceived) / sub.u_perceived * 100.0
            else:
                delta = math.inf
            rows.append(_result_core(cv, r, res, game, spec.seed)
                        + [sub.u_perceived, delta])
    return ExperimentResult(BASE_COLUMNS + EXTRA_COLUMNS["subop-comparison"],
                            rows, [])


def run_mer_discontinuity(spec: ExperimentSpec, cfg: QuadratureConfig,
                          horizon) -> ExperimentResult:
    """Regime changes as the last operators' entry requirement sweeps."""
    opts = spec.options
    n = int(opts.get("n", 10))
    n_base = int(opts.get("n_base", 8))
    base_mer = float(opts.get("base_mer", 100.0))
    horizon = horizon or DEFAULT_HORIZON
    proto = dict(mu=1.0, sigma=0.5, tau=100.0, rho=0.8, max_lease=UNBOUNDED)
    proto.update(opts.get("defaults", {}))
    rows = []
    for lam_bar in spec.grid:
        ops = tuple(
            OperatorParams.from_tau(mer=base_mer, **proto)
            for _ in range(n_base)
        ) + tuple(
            OperatorParams.from_tau(mer=float(lam_bar), **proto)
            for _ in range(n - n_base)
        )
        market = Market(channels=int(opts.get("channels", 2)),
                        true_params=ops)
        res, game = _solve(market, cfg, horizon)
        rows.append(_result_core(lam_bar, 0, res, game, spec.seed))
    return ExperimentResult(BASE_COLUMNS, rows, [])


_TRUE_RANGES = {
    "mu": (0.8, 1.2), "sigma": (0.4, 0.6), "tau": (150.0, 250.0),
    "rho": (0.5, 0.7), "mer": (50.0, 150.0), "max_lease": (500.0, 2000.0),
}
_VALID_RANGES = {
    "mu": (1e-9, math.inf), "sigma": (1e-9, math.inf),
    "tau": (1e-9, math.inf), "rho": (0.0, 1.0),
    "mer": (0.0, math.inf), "max_lease": (1.0, math.inf),
}


def sample_incomplete_info_market(rng_true: np.random.Generator,
                                  rng_est: np.random.Generator,
                                  windows: dict, options: dict,
                                  warnings: list) -> Market:
    """True parameters from fixed uniform ranges; estimates uniform within
    per-parameter +-percent windows of the truth, clamped into validity.

    Truth and estimation noise come from separate streams so the same true
    instances recur across window settings, and a wider window scales the
    same relative perturbations rather than redrawing them.
    """
    n = int(options.get("n", 10))
    channels = int(options.get("channels", 2))
    true_ops, est_ops = [], []
    for _ in range(n):
        tv = {key: float(rng_true.uniform(*_TRUE_RANGES[key]))
              for key in _TRUE_RANGES}
        offsets = {key: float(rng_est.uniform(-1.0, 1.0))
                   for key in _TRUE_RANGES}
        ev = {}
        for key, val in tv.items():
            w = float(windows.get(key, 0.0)) / 100.0
            if w == 0.0:
                ev[key] = val
            else:
                x = val * (1.0 + w * offsets[key])
                lo, hi = _VALID_RANGES[key]
                ev[key] = min(max(x, lo), hi)
                if ev[key] != x:
                    warnings.append(
                        f"{key} estimate {x:.6g} clamped into [{lo}, {hi}]")
        for d in (tv, ev):
            d["max_lease"] = int(round(d["max_lease"]))
        true_ops.append(OperatorParams.from_tau(**tv))
        est_ops.append(OperatorParams.from_tau(**ev))
    return Market(channels=channels, true_params=tuple(true_ops),
                  est_params=tuple(est_ops))


def run_incomplete_info(spec: ExperimentSpec, cfg: QuadratureConfig,
                        horizon) -> ExperimentResult:
    """Utilization loss when the regulator optimizes on estimates.

    The grid sweeps a common error-window percentage; ``options.windows``
    may restrict it to a subset of parameters (default: all six).
    delta_u_pct compares the true objective at the estimate-optimal duration
    with the true objective at the truth-optimal duration; negative rows are
    possible and preserved.
    """
    which = spec.options.get("windows",
                             ("mu", "sigma", "tau", "rho", "mer", "max_lease"))
    warnings = []
    rows = []
    true_solution = {}  # replicate -> truth-optimal result (window-invariant)
    for window in spec.grid:
        for r in range(spec.replicates):
            rng_true = _replicate_rng(spec.seed, r)
            rng_est = np.random.default_rng([int(spec.seed), 0xE6, r])
            windows = {key: float(window) for key in which}
            market = sample_incomplete_info_market(rng_true, rng_est, windows,
                                                   spec.options, warnings)
            res, game = _solve(market, cfg, horizon)
            if r not in true_solution:
                true_market = Market(channels=market.channels,
                                     true_params=market.true_params)
                true_solution[r], _ = _solve(true_market, cfg, horizon)
            true_res = true_solution[r]
            u_opt = true_res.u_true
            u_got = res.u_true
            delta = 0.0 if u_opt == 0 else (u_opt - u_got) / u_opt * 100.0
            rows.append(_result_core(window, r, res, game, spec.seed)
                        + [true_res.t_star, u_opt, delta])
    return ExperimentResult(BASE_COLUMNS + EXTRA_COLUMNS["incomplete-info"],
                            rows, warnings)


def run_experiment(config: Config, cfg: QuadratureConfig = QuadratureConfig(),
                   seed: int = None, horizon: int = None) -> ExperimentResult:
    """Dispatch a parsed experiment spec to its runner."""
    spec = config.experiment
    if spec is None:
        raise ConfigError("config has no experiment section")
    if seed is not None:
        spec = replace(spec, seed=int(seed))
    horizon = horizon if horizon is not None else config.horizon
    runners = {
        "trend-sweep": run_trend_sweep,
        "subop-comparison": run_subop_comparison,
        "mer-discontinuity": run_mer_discontinuity,
        "incomplete-info": run_incomplete_info,
    }
    if spec.kind not in runners:
        raise ConfigError(f"experiment kind {spec.kind!r} is not runnable here")
    return runners[spec.kind](spec, cfg, horizon)
