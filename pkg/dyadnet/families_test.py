"""
Tests for `dyadnet.families`.

"""
import numpy as np
import pytest

from dyadnet import constants
from dyadnet.errors import DomainError
from dyadnet.families import get_family
from dyadnet.families import link_derivatives
from dyadnet.families import link_value
from dyadnet.families import ParameterSet
from dyadnet.families import simulate_outcome
from dyadnet.utils import rng_stream


_OUTCOMES = {
    constants.PROBIT: [0.0, 1.0],
    constants.LOGIT: [0.0, 1.0],
    constants.GAUSSIAN_NLS: [-1.3, 0.4, 2.0],
    constants.POISSON_QMLE: [0.0, 1.0, 4.0]
}


def _cases():
    for family, outcomes in _OUTCOMES.items():
        for y in outcomes:
            for eta in (-2.5, -0.3, 0.0, 0.7, 3.0):
                yield family, y, eta


@pytest.mark.parametrize('family,y,eta', list(_cases()))
def test_derivatives_match_differences(family, y, eta):
    """
    Test if the analytic derivatives match central differences.

    """
    model = get_family(family)
    h = 1e-5
    first = (model.value(y, eta + h) - model.value(y, eta - h)) / (2 * h)
    second = (model.d_eta(y, eta + h) - model.d_eta(y, eta - h)) / (2 * h)
    assert model.d_eta(y, eta) == pytest.approx(first, rel=1e-6, abs=1e-8)
    assert model.d_eta_eta(y, eta) == pytest.approx(second, rel=1e-6,
                                                    abs=1e-8)


@pytest.mark.parametrize('family', constants.FAMILIES)
def test_mean_derivative(family):
    """
    Test if the mean slope matches a central difference of the mean.

    """
    model = get_family(family)
    eta = np.linspace(-2, 2, 9)
    h = 1e-6
    np.testing.assert_allclose(
        model.mean_derivative(eta),
        (model.mean(eta + h) - model.mean(eta - h)) / (2 * h), rtol=1e-6)


def test_link_derivatives_chain_rule():
    """
    Test if the parameter derivatives follow from the index derivatives.

    """
    x = np.array([0.5, -2.0])
    d_beta, d_pi, d_bb, d_bp, d_pp = link_derivatives(
        'logit', 1.0, x, [0.3, 0.1], 0.2)
    np.testing.assert_allclose(d_beta, d_pi * x)
    np.testing.assert_allclose(d_bb, d_pp * np.outer(x, x))
    np.testing.assert_allclose(d_bp, d_pp * x)


def test_probit_tail_is_finite():
    """
    Test if the probit objective stays finite far in the tails.

    """
    model = get_family('probit')
    for eta in (-30.0, 30.0):
        for y in (0.0, 1.0):
            assert np.isfinite(model.value(y, eta))
            assert np.isfinite(model.d_eta(y, eta))
            assert np.isfinite(model.d_eta_eta(y, eta))


def test_probit_clamp_counts():
    """
    Test if only indices beyond the guard band are clamped.

    """
    eta, count = get_family('probit').clamp(np.array([-50.0, 0.0, 40.0]))
    assert count == 2
    np.testing.assert_array_equal(
        eta, [-constants.ETA_GUARD, 0.0, constants.ETA_GUARD])
    _, count = get_family('logit').clamp(np.array([-50.0]))
    assert count == 0


def test_link_value():
    """
    Test the probit objective at a zero index.

    """
    assert link_value('probit', 0, [1.0], [0.0], 0.0) == pytest.approx(
        np.log(0.5))


@pytest.mark.parametrize('family,y', [
    ('probit', 2.0),
    ('logit', 0.5),
    ('poisson', -1.0),
    ('gaussian_nls', np.nan)
])
def test_domain_error(family, y):
    """
    Test if outcomes outside the domain are rejected.

    """
    with pytest.raises(DomainError):
        link_value(family, y, [1.0], [0.0], 0.0)


@pytest.mark.parametrize('name,expected', [
    ('probit', constants.PROBIT),
    ('gaussian-nls', constants.GAUSSIAN_NLS),
    ('poisson', constants.POISSON_QMLE),
    ('poisson-qmle', constants.POISSON_QMLE)
])
def test_get_family(name, expected):
    """
    Test if families are found by identifier and command line spelling.

    """
    assert get_family(name).family_id == expected
    assert get_family(get_family(name)) is get_family(name)


def test_get_family_unknown():
    """
    Test if an unknown family is rejected.

    """
    with pytest.raises(DomainError):
        get_family('tobit')


def test_simulate_outcome_binary():
    """
    Test if simulated binary outcomes are 0 or 1 and follow the index.

    """
    rng = rng_stream(0, 'simulate')
    draws = [simulate_outcome('probit', [1.0], [3.0], 0.0, rng)
             for _ in range(20)]
    assert set(draws) <= {0.0, 1.0}
    assert sum(draws) >= 18


def test_parameter_set_vector():
    """
    Test if a parameter vector is ordered as beta, alpha, gamma.

    """
    params = ParameterSet([1.0], [2.0, 3.0], [4.0, 5.0])
    np.testing.assert_array_equal(params.to_vector(), [1, 2, 3, 4, 5])
    again = ParameterSet.from_vector(params.to_vector(), 1)
    np.testing.assert_array_equal(again.gamma, [4.0, 5.0])
    assert params.normalization_gap == -4.0
    np.testing.assert_array_equal(params.pi, [[6, 7], [7, 8]])


def test_parameter_set_permute():
    """
    Test if permuting moves fixed effects with their nodes.

    """
    params = ParameterSet([1.0], [2.0, 3.0, 4.0], [5.0, 6.0, 7.0])
    moved = params.permute(np.array([2, 0, 1]))
    np.testing.assert_array_equal(moved.alpha, [4.0, 2.0, 3.0])
    np.testing.assert_array_equal(moved.gamma, [7.0, 5.0, 6.0])
    np.testing.assert_array_equal(moved.beta, [1.0])
