"""
Tests for `dyadnet.jackknife`.

"""
import numpy as np
import pytest

from conftest import make_network
from dyadnet import constants
from dyadnet.errors import InvalidPartition
from dyadnet.estimator import fit
from dyadnet.jackknife import combine
from dyadnet.jackknife import jackknife_beta
from dyadnet.jackknife import jackknife_double
from dyadnet.jackknife import jackknife_split_sample
from dyadnet.jackknife import jackknife_weighted
from dyadnet.jackknife import jackknife_with_relabeling
from dyadnet.jackknife import split_halves
from dyadnet.partition import build_partition
from dyadnet.partition import LeaveOutPartition


@pytest.fixture
def full(network):
    """
    Get the full sample probit fit of the shared network.

    """
    return fit(network, 'probit')


@pytest.mark.parametrize('full_value,leaveout,n,l,expected', [
    (1.0, [1.0, 1.0, 1.0], 4, 1, 1.0),
    (1.0, [0.0, 0.0, 0.0], 4, 1, 3.0),
    (2.0, [1.0, None, 1.0], 4, 1, 4.0),
    (1.0, [0.5, 0.5], 5, 2, 1.5)
])
def test_combine(full_value, leaveout, n, l, expected):  # noqa: E741
    """
    Test the leave-out combination on scalars.

    """
    assert float(combine(full_value, leaveout, n, l)) == pytest.approx(
        expected)


def test_combine_without_samples():
    """
    Test if a combination needs at least one subsample.

    """
    with pytest.raises(ValueError):
        combine(1.0, [None, None], 4)


def test_jackknife_beta(network, full):
    """
    Test if the plain jackknife combines one fit per diagonal slice.

    """
    result = jackknife_beta(network, 'probit', full_fit=full)
    n = network.n_nodes
    assert result.variant == constants.PLAIN
    assert result.l == 1
    assert len(result.subsamples) == n - 1
    assert result.full_fit is full
    np.testing.assert_allclose(
        result.beta_corrected,
        (n - 1) * full.params.beta - (n - 2) * np.mean(
            [b for b in result.beta_leaveout if b is not None], axis=0))
    assert result.phi_corrected.shape == (2 * n,)
    for sample in result.subsamples:
        if sample.converged:
            assert sample.result.normalizer == n - 2


def test_jackknife_beta_jobs_invariant(network, full):
    """
    Test if the thread count does not change the estimate.

    """
    serial = jackknife_beta(network, 'probit', full_fit=full)
    threaded = jackknife_beta(network, 'probit', full_fit=full, jobs=3)
    np.testing.assert_array_equal(serial.beta_corrected,
                                  threaded.beta_corrected)
    np.testing.assert_array_equal(serial.phi_corrected,
                                  threaded.phi_corrected)


def test_jackknife_leave_l():
    """
    Test if leave-l-out uses ``(N - 1) / l`` subsamples.

    """
    data, _ = make_network('logit', 13, 2)
    result = jackknife_beta(data, 'logit', partition=build_partition(13, 3))
    assert result.variant == constants.LEAVE_L
    assert len(result.subsamples) == 4
    for sample in result.subsamples:
        if sample.converged:
            assert sample.result.normalizer == 13 - 1 - 3


def test_jackknife_invalid_partition(network, full):
    """
    Test if a partition missing a set is refused.

    """
    good = build_partition(network.n_nodes)
    bad = LeaveOutPartition(network.n_nodes, 1, good.sets[:-1])
    with pytest.raises(InvalidPartition):
        jackknife_beta(network, 'probit', partition=bad, full_fit=full)


def test_jackknife_weighted(two_covariate_network):
    """
    Test if the weighted jackknife pools the leave-out estimates by their
    concentrated Hessians.

    """
    data = two_covariate_network
    result = jackknife_weighted(data, 'probit')
    n = data.n_nodes
    used = [(w, b) for w, b in zip(result.weights_used, result.beta_leaveout)
            if w is not None]
    for (w, _), sample in zip(used, [s for s in result.subsamples
                                     if s.converged]):
        np.testing.assert_allclose(
            w, sample.result.hessian.schur_complement() / n)
        assert np.linalg.eigvalsh(w).min() > 0
    mean_w = np.mean([w for w, _ in used], axis=0)
    pooled = np.linalg.solve(mean_w, np.mean([w @ b for w, b in used],
                                             axis=0))
    np.testing.assert_allclose(
        result.beta_corrected,
        (n - 1) * result.beta_full - (n - 2) * pooled)
    assert result.variant == constants.WEIGHTED


def test_split_halves():
    """
    Test if the halves partition the nodes and depend on the seed only.

    """
    a, b = split_halves(11, 4)
    assert len(a) == 5 and len(b) == 6
    assert sorted(np.concatenate([a, b])) == list(range(11))
    again, _ = split_halves(11, 4)
    np.testing.assert_array_equal(a, again)
    other, _ = split_halves(11, 5)
    assert not np.array_equal(a, other)


def test_jackknife_split_sample():
    """
    Test if the split-sample estimate combines four half-panel fits.

    """
    network, _ = make_network('gaussian_nls', 12, 6)
    full = fit(network, 'gaussian_nls')
    result = jackknife_split_sample(network, 'gaussian_nls', seed=3,
                                    full_fit=full)
    betas = result.beta_leaveout
    assert len(betas) == 4
    np.testing.assert_allclose(
        result.beta_corrected,
        3 * full.params.beta - 0.5 * (betas[0] + betas[1]) -
        0.5 * (betas[2] + betas[3]))
    halves = result.extra['halves']
    assert sorted(halves[0] + halves[1]) == list(
        range(1, network.n_nodes + 1))
    assert 'unequal_halves' not in result.extra


def test_jackknife_split_sample_odd():
    """
    Test if an odd number of nodes is flagged.

    """
    data, _ = make_network('gaussian_nls', 9, 1)
    result = jackknife_split_sample(data, 'gaussian_nls', seed=0)
    assert result.extra['unequal_halves']


def test_jackknife_double():
    """
    Test if the double jackknife refits without each agent.

    """
    data, _ = make_network('gaussian_nls', 10, 5)
    result = jackknife_double(data, 'gaussian_nls')
    n = data.n_nodes
    assert len(result.subsamples) == n
    assert result.extra['n_used'] == n
    np.testing.assert_allclose(
        result.beta_corrected,
        n * result.beta_full - (n - 1) * np.mean(result.beta_leaveout,
                                                 axis=0))


def test_relabeling_identity(network, full):
    """
    Test if the identity relabeling reproduces the plain jackknife.

    """
    plain = jackknife_beta(network, 'probit', full_fit=full)
    relabeled = jackknife_with_relabeling(network, 'probit', seed=-1,
                                          full_fit=full)
    np.testing.assert_allclose(relabeled.beta_corrected, plain.beta_corrected,
                               atol=1e-7)
    np.testing.assert_allclose(relabeled.phi_corrected, plain.phi_corrected,
                               atol=1e-6)


def test_relabeling_average(network, full):
    """
    Test if relabelings are averaged and their spread is reported.

    """
    result = jackknife_with_relabeling(network, 'probit', n_relabels=2,
                                       seed=7, full_fit=full)
    estimates = result.extra['relabel_estimates']
    assert result.extra['relabel_seeds'] == [7, 8]
    np.testing.assert_allclose(result.beta_corrected,
                               np.mean(estimates, axis=0))
    assert result.extra['relabel_sd'].shape == (1,)
    assert len(result.subsamples) == 2 * (network.n_nodes - 1)


def test_to_dict(network, full):
    """
    Test if a result lists its per subsample diagnostics.

    """
    data = jackknife_beta(network, 'probit', full_fit=full).to_dict()
    assert data['variant'] == constants.PLAIN
    assert len(data['per_k_diagnostics']) == network.n_nodes - 1
    assert data['per_k_diagnostics'][0]['label'] == 1
    assert 'beta_corrected' in data
