"""
This module contains the diagonal-slice leave-out partition.

Set ``k`` holds the observations ``(i, j)`` with ``(j - i) mod N == k``:
one outgoing and one incoming observation for every node. The leave-``l``
coarsening merges ``l`` slices, ``k, k + N_l, ..., k + (l - 1) N_l`` with
``N_l = (N - 1) / l``.

Set indices are 1-based, node indices 0-based.

"""
import logging
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from dyadnet.errors import InvalidBlockSize
from dyadnet.errors import PartitionIndexError


log = logging.getLogger('dyadnet')


@dataclass
class LeaveOutPartition:
    """
    A partition of the ``N(N-1)`` observations into leave-out sets.

    Args:
        n_nodes (int): The number of nodes ``N``.
        l (int): The number of slices merged into each set.
        sets (list): One ``(M, 2)`` integer array of ``(i, j)`` pairs per
            set.

    """
    n_nodes: int
    l: int  # noqa: E741
    sets: list = field(default_factory=list)

    @property
    def n_sets(self):
        """
        `int`: The number of sets ``N_l``.

        """
        return len(self.sets)

    @property
    def membership(self):
        """
        `numpy.ndarray`: ``N x N`` matrix holding the set index of each
        observation, zero on the diagonal.

        """
        membership = np.zeros((self.n_nodes, self.n_nodes), dtype=int)
        for k, pairs in enumerate(self.sets, start=1):
            membership[pairs[:, 0], pairs[:, 1]] = k
        return membership


@dataclass
class ValidationReport:
    """
    The outcome of `validate`.

    Args:
        violations (list): Human readable descriptions, in the order they
            were found.

    """
    violations: list = field(default_factory=list)

    @property
    def valid(self):
        """
        `bool`: Whether no violation was found.

        """
        return not self.violations

    @property
    def first_violation(self):
        """
        `str`: The first violation, or `None`.

        """
        return self.violations[0] if self.violations else None


def slice_index(n_nodes, l=1):  # noqa: E741
    """
    Get the set index of every observation without building the sets.

    >>> slice_index(4)
    array([[0, 1, 2, 3],
           [3, 0, 1, 2],
           [2, 3, 0, 1],
           [1, 2, 3, 0]])

    Args:
        n_nodes (int): The number of nodes.
        l (int): The block size.

    Returns:
        numpy.ndarray: ``N x N`` set indices, zero on the diagonal.

    """
    n_sets = (n_nodes - 1) // l
    nodes = np.arange(n_nodes)
    offset = (nodes[None, :] - nodes[:, None]) % n_nodes
    index = (offset - 1) % n_sets + 1
    index[offset == 0] = 0
    return index


def build_partition(n_nodes, l=1):  # noqa: E741
    """
    Build the diagonal-slice partition.

    Args:
        n_nodes (int): The number of nodes ``N``.
        l (int): The number of slices per set; must divide ``N - 1``.

    Returns:
        LeaveOutPartition: The partition.

    Raises:
        dyadnet.errors.InvalidBlockSize: If ``l`` does not divide
            ``N - 1``.

    """
    if l < 1 or (n_nodes - 1) % l:
        raise InvalidBlockSize(n_nodes, l)
    index = slice_index(n_nodes, l)
    sets = [np.argwhere(index == k) for k in range(1, (n_nodes - 1) // l + 1)]
    return LeaveOutPartition(n_nodes, l, sets)


def validate(partition):
    """
    Check the two leave-out conditions exhaustively.

    Every observation must lie in exactly one set, and every set must hold
    exactly ``l`` outgoing and ``l`` incoming observations per node.

    Args:
        partition (LeaveOutPartition): The partition to check.

    Returns:
        ValidationReport: The violations found.

    """
    report = ValidationReport()
    n = partition.n_nodes
    counts = np.zeros((n, n), dtype=int)
    for k, pairs in enumerate(partition.sets, start=1):
        pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
        for i in np.flatnonzero(pairs[:, 0] == pairs[:, 1]):
            report.violations.append(
                'set {}: self pair ({}, {})'.format(k, *pairs[i]))
        np.add.at(counts, (pairs[:, 0], pairs[:, 1]), 1)
        rows = np.bincount(pairs[:, 0], minlength=n)
        columns = np.bincount(pairs[:, 1], minlength=n)
        for i in np.flatnonzero(rows != partition.l):
            report.violations.append(
                'set {}: node {} sends {} observations, expected {}'.format(
                    k, i, rows[i], partition.l))
        for j in np.flatnonzero(columns != partition.l):
            report.violations.append(
                'set {}: node {} receives {} observations, expected '
                '{}'.format(k, j, columns[j], partition.l))
    np.fill_diagonal(counts, 1)
    for i, j in np.argwhere(counts != 1):
        report.violations.append(
            'observation ({}, {}) is in {} sets'.format(i, j, counts[i, j]))
    if report.violations:
        log.warning('Partition violates the leave-out conditions: %s',
                    report.first_violation)
    return report


def edge_mask(partition, k):
    """
    Get the inclusion mask of the ``k``-th leave-out sample.

    Args:
        partition (LeaveOutPartition): The partition.
        k (int): The set index, ``1 <= k <= N_l``.

    Returns:
        numpy.ndarray: ``N x N`` weights: zero on set ``k`` and on the
        diagonal, one elsewhere.

    Raises:
        dyadnet.errors.PartitionIndexError: If ``k`` is out of range.

    """
    if not 1 <= k <= partition.n_sets:
        raise PartitionIndexError(k, partition.n_sets)
    mask = 1.0 - np.eye(partition.n_nodes)
    pairs = partition.sets[k - 1]
    mask[pairs[:, 0], pairs[:, 1]] = 0.0
    return mask


def dump_partition(partition):
    """
    Get a JSON friendly audit dump of the sets, with 1-based nodes.

    Args:
        partition (LeaveOutPartition): The partition.

    Returns:
        dict: ``n_nodes``, ``l`` and the list of sets of pairs.

    """
    return {
        'n_nodes': partition.n_nodes,
        'l': partition.l,
        'sets': [(np.asarray(pairs) + 1).tolist()
                 for pairs in partition.sets]
    }
