"""
Tests for `dyadnet.partition`.

"""
import numpy as np
import pytest

from dyadnet.errors import InvalidBlockSize
from dyadnet.errors import PartitionIndexError
from dyadnet.jackknife import combine
from dyadnet.partition import build_partition
from dyadnet.partition import dump_partition
from dyadnet.partition import edge_mask
from dyadnet.partition import LeaveOutPartition
from dyadnet.partition import slice_index
from dyadnet.partition import validate
from dyadnet.utils import rng_stream


def _valid_block_sizes():
    for n in range(4, 61):
        for l in range(1, n):  # noqa: E741
            if (n - 1) % l == 0:
                yield n, l


def test_every_partition_is_valid():
    """
    Test both leave-out conditions for every network size up to 60.

    """
    for n, l in _valid_block_sizes():  # noqa: E741
        partition = build_partition(n, l)
        assert partition.n_sets == (n - 1) // l
        report = validate(partition)
        assert report.valid, (n, l, report.first_violation)


@pytest.mark.parametrize('n,l', [(10, 2), (10, 4), (6, 0), (7, 7)])
def test_invalid_block_size(n, l):  # noqa: E741
    """
    Test if block sizes that do not divide ``N - 1`` are rejected.

    """
    with pytest.raises(InvalidBlockSize):
        build_partition(n, l)


def test_slice_index_matches_sets():
    """
    Test if the closed form set index agrees with the built sets.

    """
    partition = build_partition(13, 3)
    np.testing.assert_array_equal(partition.membership, slice_index(13, 3))


def test_validate_reports_overlap():
    """
    Test if a pair in two sets and unbalanced sets are reported.

    """
    good = build_partition(5)
    sets = [pairs.copy() for pairs in good.sets]
    sets[1] = np.vstack([sets[1], sets[0][:1]])
    report = validate(LeaveOutPartition(5, 1, sets))
    assert not report.valid
    assert any('is in 2 sets' in v for v in report.violations)
    assert any('sends 2 observations' in v for v in report.violations)


def test_validate_reports_self_pair():
    """
    Test if a self pair is reported.

    """
    sets = [pairs.copy() for pairs in build_partition(5).sets]
    sets[0][0] = [sets[0][0, 0], sets[0][0, 0]]
    report = validate(LeaveOutPartition(5, 1, sets))
    assert report.first_violation.startswith('set 1: self pair')


def test_edge_mask():
    """
    Test if a mask excludes its set and the diagonal only.

    """
    partition = build_partition(7, 2)
    mask = edge_mask(partition, 2)
    assert mask.sum() == 7 * 6 - 7 * 2
    np.testing.assert_array_equal(mask.sum(axis=1), 6 - 2)
    np.testing.assert_array_equal(mask.sum(axis=0), 6 - 2)
    np.testing.assert_array_equal(np.diag(mask), 0.0)


@pytest.mark.parametrize('k', [0, 4])
def test_edge_mask_out_of_range(k):
    """
    Test if set indices are 1-based and bounded.

    """
    with pytest.raises(PartitionIndexError):
        edge_mask(build_partition(4), k)


@pytest.mark.parametrize('n,l', [(5, 1), (9, 2), (13, 4), (31, 5)])
def test_jackknife_reproduces_linear_statistics(n, l):  # noqa: E741
    """
    Test if the jackknife returns a statistic linear in the observations.

    For ``A_i = mean_j f_ij`` every subsample drops ``l`` observations of
    every agent, so the corrected ``A_i`` equals the full sample ``A_i``.

    """
    f = rng_stream(n, 'linear').standard_normal((n, n))
    np.fill_diagonal(f, 0.0)
    partition = build_partition(n, l)
    full = f.sum(axis=1) / (n - 1)
    leaveout = [(f * edge_mask(partition, k)).sum(axis=1) / (n - 1 - l)
                for k in range(1, partition.n_sets + 1)]
    np.testing.assert_allclose(combine(full, leaveout, n, l), full,
                               rtol=0, atol=1e-12)


def test_dump_partition():
    """
    Test if the dump lists 1-based pairs per set.

    """
    dump = dump_partition(build_partition(4))
    assert dump['n_nodes'] == 4
    assert dump['l'] == 1
    assert dump['sets'][0] == [[1, 2], [2, 3], [3, 4], [4, 1]]
