"""YAML configuration parsing and serialization.

A config file holds a ``market`` block and optionally an ``experiment``
block.  Markets are given either as an explicit ``operators`` list or as a
``homogeneous`` shorthand; each operator accepts ``a`` or ``tau`` (not
both) and ``max_lease: unbounded``.  An optional ``estimated`` list carries
the regulator's parameter estimates; without it the market is treated as
completely informed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .market import UNBOUNDED, Market, OperatorParams, is_unbounded

EXPERIMENT_KINDS = (
    "trend-sweep",
    "subop-comparison",
    "mer-discontinuity",
    "incomplete-info",
    "validate",
)


class ConfigError(ValueError):
    """Raised for malformed configuration files, with a field-level message."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A reproducible experiment: sweep definition plus sampling settings.

    Parameters
    ----------
    kind : str
        One of ``trend-sweep``, ``subop-comparison``, ``mer-discontinuity``,
        ``incomplete-info``, ``validate``.
    param : str
        The swept parameter name (kind-specific; empty for ``validate``).
    grid : tuple
        Sorted, non-empty sweep values.
    replicates : int
        Random instances per grid point (>= 1).
    seed : int
        Master seed; replicate r uses a stream derived from (seed, r).
    options : dict
        Kind-specific extras (sampling bounds, horizon, channel count...).
    """

    kind: str
    param: str
    grid: tuple
    replicates: int
    seed: int
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"experiment.kind must be one of "
                              f"{EXPERIMENT_KINDS}, got {self.kind!r}")
        if not self.grid:
            raise ConfigError("experiment.grid must be non-empty")
        if list(self.grid) != sorted(self.grid):
            raise ConfigError("experiment.grid must be sorted ascending")
        if self.replicates < 1:
            raise ConfigError("experiment.replicates must be >= 1")


@dataclass(frozen=True)
class Config:
    market: Market
    experiment: ExperimentSpec = None
    horizon: int = None


_OP_KEYS = {"mu", "sigma", "a", "tau", "rho", "mer", "max_lease"}


def _parse_operator(entry: dict, where: str) -> OperatorParams:
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: operator entry must be a mapping")
    unknown = set(entry) - _OP_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown operator fields {sorted(unknown)}")
    if "a" in entry and "tau" in entry:
        raise ConfigError(f"{where}: specify either a or tau, not both")
    if "a" not in entry and "tau" not in entry:
        raise ConfigError(f"{where}: one of a or tau is required")
    e = dict(entry)
    ml = e.get("max_lease", "unbounded")
    e["max_lease"] = UNBOUNDED if ml == "unbounded" else int(ml)
    try:
        if "tau" in e:
            return OperatorParams.from_tau(**e)
        return OperatorParams(**e)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_market(block: dict) -> Market:
    if not isinstance(block, dict):
        raise ConfigError("market: must be a mapping")
    if "channels" not in block:
        raise ConfigError("market.channels is required")
    channels = int(block["channels"])
    if ("operators" in block) == ("homogeneous" in block):
        raise ConfigError(
            "market: exactly one of operators or homogeneous is required")
    if "homogeneous" in block:
        h = dict(block["homogeneous"])
        n = h.pop("n", None)
        if n is None:
            raise ConfigError("market.homogeneous.n is required")
        ops = (_parse_operator(h, "market.homogeneous"),) * int(n)
    else:
        ops = tuple(_parse_operator(e, f"market.operators[{i}]")
                    for i, e in enumerate(block["operators"]))
    est = None
    if "estimated" in block:
        est = tuple(_parse_operator(e, f"market.estimated[{i}]")
                    for i, e in enumerate(block["estimated"]))
        if len(est) != len(ops):
            raise ConfigError("market.estimated length must match operators")
    try:
        return Market(channels=channels, true_params=ops, est_params=est)
    except ValueError as exc:
        raise ConfigError(f"market: {exc}") from exc


def _parse_experiment(block: dict) -> ExperimentSpec:
    if not isinstance(block, dict):
        raise ConfigError("experiment: must be a mapping")
    known = {"kind", "param", "grid", "replicates", "seed", "options"}
    unknown = set(block) - known
    if unknown:
        raise ConfigError(f"experiment: unknown fields {sorted(unknown)}")
    return ExperimentSpec(
        kind=block.get("kind"),
        param=str(block.get("param", "")),
        grid=tuple(block.get("grid", ())),
        replicates=int(block.get("replicates", 1)),
        seed=int(block.get("seed", 0)),
        options=dict(block.get("options", {})),
    )


def parse_config(text: str) -> Config:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping")
    unknown = set(doc) - {"market", "experiment", "horizon"}
    if unknown:
        raise ConfigError(f"unknown top-level sections {sorted(unknown)}")
    if "market" not in doc:
        raise ConfigError("market section is required")
    market = _parse_market(doc["market"])
    experiment = _parse_experiment(doc["experiment"]) if "experiment" in doc else None
    horizon = int(doc["horizon"]) if "horizon" in doc else None
    return Config(market=market, experiment=experiment, horizon=horizon)


def load_config(path) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _operator_to_dict(p: OperatorParams) -> dict:
    return {
        "mu": p.mu,
        "sigma": p.sigma,
        "a": p.a,
        "rho": p.rho,
        "mer": p.mer,
        "max_lease": "unbounded" if is_unbounded(p.max_lease) else p.max_lease,
    }


def serialize_config(cfg: Config) -> str:
    """Canonical YAML text; parse(serialize(parse(x))) == parse(x).

    Operators are always written as an explicit list with ``a`` canonical
    (the tau shorthand does not survive a round trip by design).
    """
    doc = {
        "market": {
            "channels": cfg.market.channels,
            "operators": [_operator_to_dict(p) for p in cfg.market.true_params],
        }
    }
    if not cfg.market.complete_information:
        doc["market"]["estimated"] = [
            _operator_to_dict(p) for p in cfg.market.est_params]
    if cfg.experiment is not None:
        e = cfg.experiment
        doc["experiment"] = {
            "kind": e.kind,
            "param": e.param,
            "grid": list(e.grid),
            "replicates": e.replicates,
            "seed": e.seed,
            "options": dict(e.options),
        }
    if cfg.horizon is not None:
        doc["horizon"] = cfg.horizon
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)
