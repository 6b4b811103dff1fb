"""Command-line front end.

Subcommands:

* ``solve``: optimize one market from a config file.
* ``experiment``: run a sweep and write a CSV.
* ``validate``: cross-check analytic revenue against Monte Carlo.
* ``beta-table``: dump the order-statistic coefficient table.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import Config, ConfigError, load_config
from .experiments import run_experiment, write_csv
from .game import TRUE_VIEW, MarketGame
from .market import GENERATOR_NAME, is_unbounded
from .optimizer import solve_algorithm1, solve_homogeneous
from .revenue import (
    EntrantSet,
    QuadratureConfig,
    compute_beta_table,
    mc_revenue_oracle,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def _quad_config(args) -> QuadratureConfig:
    kwargs = {}
    if args.quad_nodes is not None:
        kwargs["nodes"] = args.quad_nodes
    if getattr(args, "mc_epochs", None) is not None:
        kwargs["mc_samples"] = args.mc_epochs
    return QuadratureConfig(**kwargs)


def _is_homogeneous_complete(config: Config) -> bool:
    if not config.market.complete_information:
        return False
    first = config.market.true_params[0]
    return all(p == first for p in config.market.true_params)


def cmd_solve(args) -> int:
    config = load_config(args.config)
    cfg = _quad_config(args)
    market = config.market
    horizon = args.horizon if args.horizon is not None else config.horizon
    if _is_homogeneous_complete(config):
        p = market.true_params[0]
        beta = compute_beta_table(market.n_operators, market.channels, cfg)
        res = solve_homogeneous(p, market.n_operators, market.channels, beta)
    else:
        res = solve_algorithm1(market, cfg, horizon=horizon)
    print(f"t_star: {res.t_star}")
    print(f"u_perceived: {res.u_perceived:.12g}")
    print(f"u_true: {res.u_true:.12g}")
    print(f"entrants_perceived: {list(res.entrants_perceived.indices)}")
    print(f"entrants_true: {list(res.entrants_true.indices)}")
    print(f"eval_count: {res.eval_count}")
    if args.out:
        header = ("t_star", "u_perceived", "u_true", "s_star", "eval_count",
                  "seed")
        row = (res.t_star, res.u_perceived, res.u_true,
               res.entrants_true.size, res.eval_count, args.seed)
        write_csv(args.out, {"config": str(args.config), "seed": args.seed},
                  header, [row])
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = load_config(args.config)
    cfg = _quad_config(args)
    result = run_experiment(config, cfg, seed=args.seed, horizon=args.horizon)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = args.out or "experiment.csv"
    seed = args.seed if args.seed is not None else (
        config.experiment.seed if config.experiment else 0)
    write_csv(out, {"config": str(args.config), "seed": seed,
                    "kind": config.experiment.kind},
              result.header, result.rows)
    print(f"wrote {len(result.rows)} rows to {out}")
    return EXIT_OK


def cmd_validate(args, corrupt_std_factor: float = 1.0) -> int:
    """Analytic-vs-Monte-Carlo revenue check over the configured market.

    ``corrupt_std_factor`` is a negative-control hook: scaling the analytic
    epoch spread must make the check fail.
    """
    config = load_config(args.config)
    cfg = _quad_config(args)
    market = config.market
    epochs = args.mc_epochs or 100_000
    if epochs < 1_000:
        raise ConfigError("--mc-epochs must be >= 1000")
    game = MarketGame(market, cfg)
    full = EntrantSet(tuple(range(1, market.n_operators + 1)))
    horizon = args.horizon if args.horizon is not None else config.horizon
    caps = [p.max_lease for p in market.true_params
            if not is_unbounded(p.max_lease)]
    t_probe = min([horizon or 100] + caps)
    mc = mc_revenue_oracle(market.true_params, market.channels, full,
                           t_probe, epochs, args.seed or 0)
    failures = 0
    for col, k in enumerate(full):
        analytic = game.revenue(TRUE_VIEW, full, k, t_probe)
        analytic *= corrupt_std_factor
        z = (analytic - mc["means"][col]) / max(mc["stderrs"][col], 1e-300)
        status = "ok" if abs(z) <= 4.0 else "FAIL"
        if status == "FAIL":
            failures += 1
        rho_note = " (bid equals revenue exactly)" \
            if market.true_params[k - 1].rho == 1.0 else ""
        print(f"operator {k} T={t_probe}: analytic={analytic:.6f} "
              f"mc={mc['means'][col]:.6f} z={z:+.2f} {status}{rho_note}")
    total_win = float(mc["win_prob"].sum())
    expect_win = min(market.channels, full.size)
    print(f"win-probability sum: {total_win:.6f} (expected {expect_win})")
    if abs(total_win - expect_win) > 1e-12:
        failures += 1
    if failures:
        print(f"validation FAILED: {failures} check(s) beyond 4 standard errors")
        return EXIT_VALIDATION
    print("validation passed")
    return EXIT_OK


def cmd_beta_table(args) -> int:
    config = load_config(args.config) if args.config else None
    cfg = _quad_config(args)
    if config is not None:
        n_max = config.market.n_operators
        channels = config.market.channels
    else:
        n_max, channels = 20, 2
    table = compute_beta_table(n_max, channels, cfg)
    rows = [(s, table.beta1(s)) for s in range(1, n_max + 1)]
    if args.out:
        write_csv(args.out, {"channels": channels, "seed": args.seed or 0},
                  ("s", "beta1"), rows)
    for s, b in rows:
        print(f"beta(1, {s:2d}) = {b:.12g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leaseopt",
        description="Optimal exclusive-use spectrum-lease durations")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="YAML config file")
        p.add_argument("--seed", type=int, default=None, help="master RNG seed")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--horizon", type=int, default=None,
                       help="finite cap replacing unbounded max lease durations")
        p.add_argument("--mc-epochs", type=int, default=None,
                       help="Monte-Carlo epoch count")
        p.add_argument("--quad-nodes", type=int, default=None,
                       help="quadrature points per panel")

    common(sub.add_parser("solve", help="optimize one market"))
    common(sub.add_parser("experiment", help="run a sweep, write CSV"))
    common(sub.add_parser("validate", help="analytic vs Monte-Carlo check"))
    common(sub.add_parser("beta-table", help="dump beta coefficients"),
           config_required=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "solve": cmd_solve,
        "experiment": cmd_experiment,
        "validate": cmd_validate,
        "beta-table": cmd_beta_table,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
