import numpy as np
import pytest

from leaseopt.market import OperatorParams
from leaseopt.revenue import QuadratureConfig, compute_beta_table


@pytest.fixture(scope="session")
def beta_m2():
    return compute_beta_table(30, 2)


@pytest.fixture(scope="session")
def default_params():
    """Homogeneous market defaults used across the experiment families."""
    return OperatorParams.from_tau(mu=1.0, sigma=0.5, tau=100.0, rho=0.8,
                                   mer=100.0)


def random_operator(rng: np.random.Generator, max_lease) -> OperatorParams:
    """One operator drawn from the heterogeneous-market sampling windows."""
    return OperatorParams(
        mu=float(rng.uniform(0.8, 1.2)),
        sigma=float(rng.uniform(0.4, 0.6)),
        a=float(np.exp(-1.0 / rng.uniform(50.0, 150.0))),
        rho=float(rng.uniform(0.7, 0.9)),
        mer=float(rng.uniform(50.0, 150.0)),
        max_lease=max_lease,
    )
