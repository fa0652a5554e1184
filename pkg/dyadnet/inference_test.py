"""
Tests for `dyadnet.inference`.

"""
import numpy as np
import pytest

from conftest import make_network
from dyadnet.errors import NotPositiveDefinite
from dyadnet.estimator import edge_terms
from dyadnet.estimator import fit
from dyadnet.inference import compute_partialled_score
from dyadnet.inference import concentrated_hessian
from dyadnet.inference import dyad_outer_product
from dyadnet.inference import format_summary
from dyadnet.inference import sandwich_variance
from dyadnet.inference import summary_table
from dyadnet.inference import t_statistics
from dyadnet.inference import VarianceEstimate
from dyadnet.inference import write_summary_csv
from dyadnet.inference import XI_DIRECT
from dyadnet.utils import rng_stream


@pytest.fixture
def fitted():
    """
    Get a two covariate probit network of 10 nodes and its fit.

    """
    data, _ = make_network('probit', 10, 21, beta=(0.5, -0.3))
    return data, fit(data, 'probit')


def test_xi_matches_quadruple_sum(fitted):
    """
    Test the block form of Xi against the explicit sum over all pairs.

    """
    data, result = fitted
    n, k = data.n_nodes, data.n_beta
    _, _, d2, _ = edge_terms(data, 'probit', result.params)
    cross = (result.obs_weights * d2)[:, :, None] * data.covariates
    inverse = np.linalg.inv(result.hessian.dense()[k:, k:])
    expected = np.zeros((n, n, k))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            weight = (inverse[i, :n][:, None] + inverse[i, n:][None, :] +
                      inverse[n + j, :n][:, None] +
                      inverse[n + j, n:][None, :])
            expected[i, j] = -np.einsum('st,stk->k', weight,
                                        cross) / result.normalizer
    partialled = compute_partialled_score(result, data)
    np.testing.assert_allclose(partialled.xi, expected, rtol=0, atol=1e-10)


@pytest.mark.parametrize('variant', ['block_inverse', 'direct'])
def test_partialled_scores_sum_to_zero(fitted, variant):
    """
    Test if the partialled scores sum to zero at the estimates.

    """
    data, result = fitted
    partialled = compute_partialled_score(result, data, xi_variant=variant)
    assert partialled.variant == variant
    assert np.isfinite(partialled.xi).all()
    np.testing.assert_allclose(partialled.d_beta_ell.sum(axis=(0, 1)), 0.0,
                               atol=1e-6 * data.n_nodes)
    np.testing.assert_array_equal(
        partialled.d_beta_ell[np.diag_indices(data.n_nodes)], 0.0)


def test_partialled_score_unknown_variant(fitted):
    """
    Test if an unknown Xi variant is rejected.

    """
    data, result = fitted
    with pytest.raises(ValueError):
        compute_partialled_score(result, data, xi_variant='textbook')


def test_concentrated_hessian(fitted):
    """
    Test if ``W`` matches the Schur complement of the factorization.

    """
    data, result = fitted
    np.testing.assert_allclose(
        concentrated_hessian(result),
        result.hessian.schur_complement() / data.n_nodes, atol=1e-12)


def test_dyad_outer_product():
    """
    Test the dyad clustered outer product against a direct sum.

    """
    n = 5
    scores = rng_stream(0, 'scores').standard_normal((n, n, 2))
    scores[np.diag_indices(n)] = 0.0
    expected = np.zeros((2, 2))
    for i in range(n):
        for j in range(i):
            pair = scores[i, j] + scores[j, i]
            expected += np.outer(pair, pair)
    np.testing.assert_allclose(dyad_outer_product(scores),
                               expected / (n * (n - 1)))


def test_sandwich_variance(fitted):
    """
    Test if the sandwich is symmetric and scales the errors by ``1 / N``.

    """
    data, result = fitted
    variance = sandwich_variance(
        result, compute_partialled_score(result, data), data)
    np.testing.assert_allclose(variance.v_hat, variance.v_hat.T)
    assert (np.linalg.eigvalsh(variance.v_hat) > 0).all()
    np.testing.assert_allclose(
        variance.se, np.sqrt(np.diag(variance.v_hat)) / data.n_nodes)
    assert set(variance.to_dict()) == {'W', 'Omega', 'V', 'se', 'clustering'}


def test_sandwich_not_positive_definite(mocker, fitted):
    """
    Test if an indefinite ``W`` is reported with its eigenvalues.

    """
    data, result = fitted
    mocker.patch('dyadnet.inference.concentrated_hessian',
                 return_value=np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(NotPositiveDefinite) as info:
        sandwich_variance(result, compute_partialled_score(result, data),
                          data)
    assert info.value.name == 'W'
    assert info.value.eigenvalues == [-1.0, 1.0]


def test_t_statistics():
    """
    Test if t statistics are centred at the null values.

    """
    variance = VarianceEstimate(None, None, None, np.array([0.5, 2.0]), 10)
    result = t_statistics([1.0, 1.0], [0.0, 1.0], variance)
    np.testing.assert_allclose(result.t, [2.0, 0.0])
    np.testing.assert_allclose(result.p[1], 1.0)
    assert result.p[0] == pytest.approx(0.0455, abs=1e-4)


def test_summary_table(tmpdir):
    """
    Test the summary columns and their CSV and text renderings.

    """
    variance = VarianceEstimate(None, None, None, np.array([0.1]), 10)
    table = summary_table(['x1'], [0.6], [0.5], variance)
    assert list(table.columns) == ['coefficient', 'estimate', 'jackknife',
                                   'se', 'bias_over_se']
    assert table['bias_over_se'][0] == pytest.approx(1.0)
    path = tmpdir.join('summary.csv')
    write_summary_csv(path, table)
    assert path.read().splitlines()[0] == (
        'coefficient,estimate,jackknife,se,bias_over_se')
    assert 'x1' in format_summary(table)


def test_xi_variants_differ(fitted):
    """
    Test if the two Xi variants give different but finite errors.

    """
    data, result = fitted
    default = sandwich_variance(
        result, compute_partialled_score(result, data), data)
    direct = sandwich_variance(
        result, compute_partialled_score(result, data,
                                         xi_variant=XI_DIRECT), data)
    assert np.isfinite(direct.se).all()
    assert not np.allclose(direct.omega_hat, default.omega_hat, rtol=0,
                           atol=1e-14)
