"""
This module contains the dyadic data set and its preprocessing.

A network of ``N`` nodes is stored densely: outcomes are an ``N x N`` matrix
and covariates an ``N x N x K`` array. The diagonal holds zeros and is never
used; every routine masks it out with `NetworkData.mask`.

"""
import logging
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

import numpy as np
import pandas as pd

from dyadnet import constants
from dyadnet.errors import DuplicateObservation
from dyadnet.errors import MissingObservation
from dyadnet.errors import ParseError
from dyadnet.errors import SelfLoopRejected
from dyadnet.errors import TooSmallAfterFiltering
from dyadnet.families import get_family
from dyadnet.utils import format_float
from dyadnet.utils import rng_stream


log = logging.getLogger('dyadnet')

#: Passing this seed to `relabel` leaves the node order unchanged.
IDENTITY_SEED = -1


@dataclass
class EdgeListSchema:
    """
    The column mapping of an edge list file.

    Args:
        sender_col (str): The sender id column.
        receiver_col (str): The receiver id column.
        outcome_col (str): The outcome column.
        covariate_cols (list): The covariate columns. If empty, every
            remaining column is a covariate, in file order.

    """
    sender_col: str = 'sender_id'
    receiver_col: str = 'receiver_id'
    outcome_col: str = 'outcome'
    covariate_cols: list = field(default_factory=list)


@dataclass
class NetworkData:
    """
    A complete directed network with edge outcomes and covariates.

    Args:
        outcomes: The ``N x N`` outcome matrix.
        covariates: The ``N x N x K`` covariate array.
        node_labels (list): The external identifier of each node.
        covariate_names (list): The name of each covariate.

    """
    outcomes: np.ndarray
    covariates: np.ndarray
    node_labels: list = None
    covariate_names: list = None

    def __post_init__(self):
        self.outcomes = np.array(self.outcomes, dtype=float)
        covariates = np.array(self.covariates, dtype=float)
        if covariates.ndim == 2:
            covariates = covariates[:, :, None]
        self.covariates = covariates
        n_nodes = self.outcomes.shape[0]
        if self.outcomes.shape != (n_nodes, n_nodes):
            raise ValueError('outcomes must be a square matrix')
        if covariates.shape[:2] != (n_nodes, n_nodes):
            raise ValueError('covariates must be N x N x K')
        if n_nodes < constants.MIN_NODES:
            raise TooSmallAfterFiltering(n_nodes)
        mask = self.mask.astype(bool)
        if not (np.all(np.isfinite(self.outcomes[mask])) and
                np.all(np.isfinite(covariates[mask]))):
            raise ValueError('off-diagonal observations must be finite')
        np.fill_diagonal(self.outcomes, 0.0)
        for k in range(covariates.shape[2]):
            np.fill_diagonal(covariates[:, :, k], 0.0)
        if self.node_labels is None:
            self.node_labels = [str(i + 1) for i in range(n_nodes)]
        self.node_labels = list(self.node_labels)
        if self.covariate_names is None:
            self.covariate_names = [
                'x{}'.format(k + 1) for k in range(covariates.shape[2])]
        self.covariate_names = list(self.covariate_names)

    @property
    def n_nodes(self):
        """
        `int`: The number of nodes ``N``.

        """
        return self.outcomes.shape[0]

    @property
    def n_beta(self):
        """
        `int`: The number of covariates ``dim(beta)``.

        """
        return self.covariates.shape[2]

    @property
    def mask(self):
        """
        `numpy.ndarray`: Ones off the diagonal, zeros on it.

        """
        return 1.0 - np.eye(self.n_nodes)

    @property
    def density(self):
        """
        `float`: The mean outcome over all ``N(N-1)`` observations.

        """
        n = self.n_nodes
        return float(self.outcomes.sum() / (n * (n - 1)))

    @property
    def out_degree(self):
        """
        `numpy.ndarray`: Row sums of the outcome matrix.

        """
        return self.outcomes.sum(axis=1)

    @property
    def in_degree(self):
        """
        `numpy.ndarray`: Column sums of the outcome matrix.

        """
        return self.outcomes.sum(axis=0)

    def subnetwork(self, nodes):
        """
        Restrict the network to a subset of nodes.

        Args:
            nodes: Node indices to keep, in their new order.

        Returns:
            NetworkData: The induced subnetwork.

        """
        nodes = np.asarray(nodes, dtype=int)
        return NetworkData(
            self.outcomes[np.ix_(nodes, nodes)],
            self.covariates[np.ix_(nodes, nodes)],
            [self.node_labels[i] for i in nodes],
            self.covariate_names)


@dataclass
class DegeneracyReport:
    """
    The nodes removed by `filter_degenerate`.

    Args:
        dropped_nodes (list): Labels of the removed nodes.
        reasons (dict): Maps each removed label to a list of reasons, out
            of ``all-ones row``, ``all-zeros row``, ``all-ones column`` and
            ``all-zeros column``.
        passes (int): The number of sweeps that removed nodes.

    """
    dropped_nodes: list = field(default_factory=list)
    reasons: dict = field(default_factory=dict)
    passes: int = 0

    def to_dict(self):
        """
        Get the report as a plain dict.

        """
        return {
            'dropped_nodes': list(self.dropped_nodes),
            'reasons': dict(self.reasons),
            'passes': self.passes
        }


def _read_frame(path, sep):
    try:
        return pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False,
                           encoding='utf-8')
    except pd.errors.ParserError as error:
        raise ParseError(0, None, str(error)) from None


def _numeric_column(frame, column):
    values = pd.to_numeric(frame[column], errors='coerce')
    bad = np.flatnonzero(values.isna().to_numpy())
    if len(bad):
        row = bad[0]
        # The header is line 1.
        raise ParseError(int(row) + 2, column, frame[column].iloc[row])
    return values.to_numpy(dtype=float)


def _separator(path):
    return '\t' if Path(str(path)).suffix.lower() in ('.tsv', '.tab') else ','


def load_edge_list(path, schema=None):
    """
    Load a complete directed network from a CSV or TSV edge list.

    Nodes are indexed in order of first appearance, scanning each row's
    sender before its receiver.

    Args:
        path: The file to read. Files ending in ``.tsv`` are tab separated.
        schema (EdgeListSchema): The column mapping.

    Returns:
        NetworkData: The network.

    Raises:
        dyadnet.errors.SelfLoopRejected: If a row links a node to itself.
        dyadnet.errors.DuplicateObservation: If a pair appears twice.
        dyadnet.errors.MissingObservation: If a pair is absent.
        dyadnet.errors.ParseError: If a field is not numeric.

    """
    schema = schema or EdgeListSchema()
    frame = _read_frame(str(path), _separator(path))
    for column in (schema.sender_col, schema.receiver_col, schema.outcome_col,
                   *schema.covariate_cols):
        if column not in frame.columns:
            raise ParseError(1, column, 'missing column')
    covariate_cols = list(schema.covariate_cols) or [
        column for column in frame.columns
        if column not in (schema.sender_col, schema.receiver_col,
                          schema.outcome_col)]
    senders = frame[schema.sender_col].str.strip().tolist()
    receivers = frame[schema.receiver_col].str.strip().tolist()
    outcomes = _numeric_column(frame, schema.outcome_col)
    covariates = np.column_stack(
        [_numeric_column(frame, column) for column in covariate_cols]
    ) if covariate_cols else np.zeros((len(frame), 0))

    index = {}
    for sender, receiver in zip(senders, receivers):
        index.setdefault(sender, len(index))
        index.setdefault(receiver, len(index))
    n_nodes = len(index)
    labels = list(index)
    y = np.zeros((n_nodes, n_nodes))
    x = np.zeros((n_nodes, n_nodes, len(covariate_cols)))
    seen = np.zeros((n_nodes, n_nodes), dtype=bool)
    for row, (sender, receiver) in enumerate(zip(senders, receivers)):
        i, j = index[sender], index[receiver]
        if i == j:
            raise SelfLoopRejected(sender, row + 2)
        if seen[i, j]:
            raise DuplicateObservation(sender, receiver, row + 2)
        seen[i, j] = True
        y[i, j] = outcomes[row]
        x[i, j] = covariates[row]
    np.fill_diagonal(seen, True)
    if not seen.all():
        i, j = np.argwhere(~seen)[0]
        raise MissingObservation(labels[i], labels[j])
    log.info('Loaded %d nodes and %d covariates from %s',
             n_nodes, len(covariate_cols), path)
    return NetworkData(y, x, labels, covariate_cols)


def write_edge_list(data, path, schema=None):
    """
    Write a network in the format read by `load_edge_list`.

    Rows are written for every ordered pair in index order, with numbers at
    full round-trip precision.

    Args:
        data (NetworkData): The network.
        path: The file to write.
        schema (EdgeListSchema): The column mapping. Covariate names default
            to ``data.covariate_names``.

    """
    schema = schema or EdgeListSchema()
    covariate_cols = list(schema.covariate_cols) or data.covariate_names
    senders, receivers = np.nonzero(data.mask)
    columns = {
        schema.sender_col: [data.node_labels[i] for i in senders],
        schema.receiver_col: [data.node_labels[j] for j in receivers],
        schema.outcome_col: [
            format_float(v) for v in data.outcomes[senders, receivers]]
    }
    for k, name in enumerate(covariate_cols):
        columns[name] = [
            format_float(v) for v in data.covariates[senders, receivers, k]]
    pd.DataFrame(columns).to_csv(
        str(path), sep=_separator(path), index=False, lineterminator='\n')


def _degenerate_lines(outcomes, weights, family, axis):
    # Lines (rows for axis=1, columns for axis=0) whose included outcomes
    # carry no information about their fixed effect.
    count = weights.sum(axis=axis)
    total = (outcomes * weights).sum(axis=axis)
    active = count > 0
    reasons = {}
    if family.is_binary:
        reasons['all-zeros'] = active & (total == 0)
        reasons['all-ones'] = active & (total == count)
    elif family.is_count:
        reasons['all-zeros'] = active & (total == 0)
    return reasons


def filter_degenerate(data, family):
    """
    Iteratively remove nodes whose fixed effects cannot be estimated.

    For binary families a node is removed when its outgoing or incoming
    outcomes are constant, for the count family when they are all zero.
    Removing a node can make another one constant, so sweeps repeat until
    nothing changes. Gaussian outcomes are never filtered since the design
    is complete.

    Args:
        data (NetworkData): The network.
        family: The model family.

    Returns:
        tuple: The filtered `NetworkData` and a `DegeneracyReport`.

    Raises:
        dyadnet.errors.TooSmallAfterFiltering: If fewer than four nodes
            remain.

    """
    family = get_family(family)
    report = DegeneracyReport()
    keep = np.arange(data.n_nodes)
    while True:
        y = data.outcomes[np.ix_(keep, keep)]
        w = 1.0 - np.eye(len(keep))
        drop = np.zeros(len(keep), dtype=bool)
        for axis, line in ((1, 'row'), (0, 'column')):
            for reason, flags in _degenerate_lines(y, w, family,
                                                   axis).items():
                for i in np.flatnonzero(flags):
                    label = data.node_labels[keep[i]]
                    report.reasons.setdefault(label, []).append(
                        '{} {}'.format(reason, line))
                drop |= flags
        if not drop.any():
            break
        report.passes += 1
        report.dropped_nodes.extend(
            data.node_labels[i] for i in keep[drop])
        keep = keep[~drop]
        if len(keep) < constants.MIN_NODES:
            raise TooSmallAfterFiltering(len(keep))
    if report.dropped_nodes:
        log.info('Dropped %d degenerate nodes in %d passes',
                 len(report.dropped_nodes), report.passes)
        return data.subnetwork(keep), report
    return data, report


def trim_degenerate_weights(outcomes, weights, family):
    """
    Exclude the observations of agents whose fixed effects diverge.

    This is the observation-level counterpart of `filter_degenerate`, used
    for leave-out and half samples. A sender whose included outcomes are
    constant (binary) or all zero (count) has its row of weights set to
    zero, and likewise for receivers and columns, until a fixed point. The
    common parameters do not depend on such agents.

    Args:
        outcomes: The ``N x N`` outcome matrix.
        weights: The ``N x N`` 0/1 inclusion mask.
        family: The model family.

    Returns:
        tuple: The trimmed weights, and the trimmed sender and receiver
        indices as sorted lists.

    """
    family = get_family(family)
    weights = np.array(weights, dtype=float)
    senders, receivers = set(), set()
    while True:
        changed = False
        for axis, trimmed in ((1, senders), (0, receivers)):
            flags = np.zeros(weights.shape[0], dtype=bool)
            for line_flags in _degenerate_lines(outcomes, weights, family,
                                                axis).values():
                flags |= line_flags
            if flags.any():
                changed = True
                trimmed.update(np.flatnonzero(flags).tolist())
                if axis == 1:
                    weights[flags, :] = 0.0
                else:
                    weights[:, flags] = 0.0
        if not changed:
            return weights, sorted(senders), sorted(receivers)


def permutation(n_nodes, seed):
    """
    Get the node permutation that `relabel` applies for a seed.

    >>> permutation(4, IDENTITY_SEED).tolist()
    [0, 1, 2, 3]

    """
    if seed == IDENTITY_SEED:
        return np.arange(n_nodes)
    return rng_stream(seed, 'relabel').permutation(n_nodes)


def relabel(data, seed):
    """
    Apply a random permutation to the node indices.

    New node ``i`` is old node ``order[i]`` where ``order`` is
    `permutation`. Outcomes and covariates move with their nodes and
    ``node_labels`` keeps the external identifiers, so the inverse map is
    recoverable.

    Args:
        data (NetworkData): The network.
        seed (int): The seed. `IDENTITY_SEED` leaves the order unchanged.

    Returns:
        NetworkData: The relabeled network.

    """
    return data.subnetwork(permutation(data.n_nodes, seed))
