"""
Shared fixtures for the dyadnet tests.

Monte Carlo acceptance runs are marked ``slow`` and only run with
``--runslow``.

"""
import numpy as np
import pytest

from dyadnet.data import NetworkData
from dyadnet.families import get_family
from dyadnet.families import ParameterSet
from dyadnet.utils import rng_stream


def pytest_addoption(parser):
    """
    Add the ``--runslow`` option.

    """
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the Monte Carlo acceptance tests')


def pytest_configure(config):
    """
    Register the ``slow`` marker.

    """
    config.addinivalue_line('markers', 'slow: a Monte Carlo acceptance test')


def pytest_collection_modifyitems(config, items):
    """
    Skip ``slow`` tests unless ``--runslow`` is given.

    """
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


def _informative(family, outcomes):
    # Every row and column varies (binary) or is nonzero (count).
    mask = 1.0 - np.eye(len(outcomes))
    for axis in (0, 1):
        total = (outcomes * mask).sum(axis=axis)
        if family.is_binary and np.any((total == 0) |
                                       (total == len(outcomes) - 1)):
            return False
        if family.is_count and np.any(total == 0):
            return False
    return True


def make_network(family='probit', n_nodes=12, seed=0, beta=(0.5,),
                 spread=0.5):
    """
    Draw a small network with standard normal covariates.

    Draws are repeated on fresh streams until every agent is informative,
    so the fixed effects are estimable.

    Returns:
        tuple: The `NetworkData` and the true `ParameterSet`.

    """
    family = get_family(family)
    beta = np.asarray(beta, dtype=float)
    for attempt in range(100):
        rng = rng_stream(seed, 'fixture', family.family_id, n_nodes, attempt)
        x = rng.standard_normal((n_nodes, n_nodes, len(beta)))
        alpha = rng.uniform(-spread, spread, n_nodes)
        gamma = rng.uniform(-spread, spread, n_nodes)
        eta = x @ beta + alpha[:, None] + gamma[None, :]
        outcomes = family.simulate(eta, rng)
        np.fill_diagonal(outcomes, 0.0)
        if _informative(family, outcomes):
            return NetworkData(outcomes, x), ParameterSet(beta, alpha, gamma)
    raise RuntimeError('no informative network drawn')


@pytest.fixture
def network():
    """
    Get a probit network of 12 agents with one covariate.

    """
    data, _ = make_network()
    return data


@pytest.fixture
def two_covariate_network():
    """
    Get a probit network of 14 agents with two covariates.

    """
    data, _ = make_network(n_nodes=14, beta=(0.5, -0.3))
    return data
