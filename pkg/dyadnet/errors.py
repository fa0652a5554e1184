"""
This module contains the exceptions raised by dyadnet.

Every exception derives from `DyadnetError`. Problems with the input data
or the requested options derive from `InputError`, failures of the numerical
routines derive from `NumericalError`. The command line interface maps these
two families to distinct exit codes.

"""


class DyadnetError(Exception):
    """
    Base class for all dyadnet errors.

    """


class InputError(DyadnetError):
    """
    Raised when the input data or options are invalid.

    """


class NumericalError(DyadnetError):
    """
    Raised when a numerical routine fails.

    """


class MissingObservation(InputError):
    """
    Raised when an ordered pair of distinct nodes has no observation.

    Args:
        sender: The label of the sending node.
        receiver: The label of the receiving node.

    """
    def __init__(self, sender, receiver):  # noqa: D102
        self.sender = sender
        self.receiver = receiver

    def __str__(self):
        return '{0.__class__.__name__}({0.sender!r}, {0.receiver!r})'.format(
            self)


class DuplicateObservation(InputError):
    """
    Raised when an ordered pair appears more than once in an edge list.

    Args:
        sender: The label of the sending node.
        receiver: The label of the receiving node.
        line (int): The line number of the repeated row.

    """
    def __init__(self, sender, receiver, line):  # noqa: D102
        self.sender = sender
        self.receiver = receiver
        self.line = line

    def __str__(self):
        return ('{0.__class__.__name__}({0.sender!r}, {0.receiver!r}, '
                'line={0.line})').format(self)


class SelfLoopRejected(InputError):
    """
    Raised when an edge list contains a row from a node to itself.

    Args:
        node: The label of the node.
        line (int): The line number of the offending row.

    """
    def __init__(self, node, line):  # noqa: D102
        self.node = node
        self.line = line

    def __str__(self):
        return '{0.__class__.__name__}({0.node!r}, line={0.line})'.format(
            self)


class ParseError(InputError):
    """
    Raised when a field of an edge list cannot be parsed as a number.

    Args:
        line (int): The line number of the offending row.
        column (str): The column holding the bad value.
        value (str): The raw value.

    """
    def __init__(self, line, column, value):  # noqa: D102
        self.line = line
        self.column = column
        self.value = value

    def __str__(self):
        return ('{0.__class__.__name__}(line={0.line}, {0.column!r}, '
                '{0.value!r})').format(self)


class TooSmallAfterFiltering(InputError):
    """
    Raised when fewer than four nodes remain after degeneracy filtering.

    Args:
        n_nodes (int): The number of remaining nodes.

    """
    def __init__(self, n_nodes):  # noqa: D102
        self.n_nodes = n_nodes

    def __str__(self):
        return '{0.__class__.__name__}({0.n_nodes})'.format(self)


class DomainError(InputError):
    """
    Raised when outcomes fall outside the domain of a model family.

    Args:
        family (str): The family identifier.
        detail (str): A description of the offending values.

    """
    def __init__(self, family, detail):  # noqa: D102
        self.family = family
        self.detail = detail

    def __str__(self):
        return '{0.__class__.__name__}({0.family}: {0.detail})'.format(self)


class UnsupportedFamily(InputError):
    """
    Raised when an operation does not support the requested model family.

    Args:
        family (str): The family identifier.
        operation (str): The operation that was requested.

    """
    def __init__(self, family, operation):  # noqa: D102
        self.family = family
        self.operation = operation

    def __str__(self):
        return '{0.__class__.__name__}({0.family}, {0.operation})'.format(
            self)


class InvalidBlockSize(InputError):
    """
    Raised when the leave-out block size does not divide ``N - 1``.

    Args:
        n_nodes (int): The number of nodes.
        l (int): The requested block size.

    """
    def __init__(self, n_nodes, l):  # noqa: D102,E741
        self.n_nodes = n_nodes
        self.l = l  # noqa: E741

    def __str__(self):
        return '{0.__class__.__name__}(N={0.n_nodes}, l={0.l})'.format(self)


class PartitionIndexError(InputError):
    """
    Raised when a leave-out set index is out of range.

    Args:
        k (int): The requested set index.
        n_sets (int): The number of sets in the partition.

    """
    def __init__(self, k, n_sets):  # noqa: D102
        self.k = k
        self.n_sets = n_sets

    def __str__(self):
        return '{0.__class__.__name__}(k={0.k}, sets={0.n_sets})'.format(self)


class PatternTooLargeForLeaveOut(InputError):
    """
    Raised when a pattern spans too many observations to be jackknifed.

    Only patterns whose moment reads outcomes are checked. They fail when
    ``r`` is at least the number of leave-out sets minus one. Moments of
    the parameters alone have no limit.

    Args:
        r (int): The number of observations in the pattern.
        n_nodes (int): The number of nodes.

    """
    def __init__(self, r, n_nodes):  # noqa: D102
        self.r = r
        self.n_nodes = n_nodes

    def __str__(self):
        return '{0.__class__.__name__}(r={0.r}, N={0.n_nodes})'.format(self)


class PatternTooLarge(InputError):
    """
    Raised when enumerating a pattern would visit too many instances.

    Args:
        p (int): The number of agents in the pattern.
        n_nodes (int): The number of nodes.

    """
    def __init__(self, p, n_nodes):  # noqa: D102
        self.p = p
        self.n_nodes = n_nodes

    def __str__(self):
        return '{0.__class__.__name__}(p={0.p}, N={0.n_nodes})'.format(self)


class UnknownConfigKey(InputError):
    """
    Raised when a configuration file contains an unknown key.

    Args:
        key (str): The unknown key.

    """
    def __init__(self, key):  # noqa: D102
        self.key = key

    def __str__(self):
        return '{0.__class__.__name__}({0.key})'.format(self)


class ConfigError(InputError):
    """
    Raised when a configuration value is invalid.

    Args:
        detail (str): The validation message.

    """
    def __init__(self, detail):  # noqa: D102
        self.detail = detail

    def __str__(self):
        return '{0.__class__.__name__}({0.detail})'.format(self)


class NonConvergence(NumericalError):
    """
    Raised when the Newton iterations do not reach the score tolerance.

    Args:
        iterations (int): The number of iterations performed.
        score_norm (float): The max-norm of the score at the last iterate.
        params: The last iterate, a `dyadnet.families.ParameterSet`.

    """
    def __init__(self, iterations, score_norm, params=None):  # noqa: D102
        self.iterations = iterations
        self.score_norm = score_norm
        self.params = params

    def __str__(self):
        return ('{0.__class__.__name__}(iterations={0.iterations}, '
                'score_norm={0.score_norm:.3g})').format(self)


class SingularHessian(NumericalError):
    """
    Raised when a Hessian block cannot be factorized.

    Args:
        nodes (list): Indices of the nodes whose curvature collapsed.
        block (str): The block that failed.

    """
    def __init__(self, nodes, block='phi'):  # noqa: D102
        self.nodes = list(nodes)
        self.block = block

    def __str__(self):
        return '{0.__class__.__name__}({0.block}, nodes={0.nodes})'.format(
            self)


class NotPositiveDefinite(NumericalError):
    """
    Raised when a matrix that must be positive definite is not.

    Args:
        name (str): The name of the matrix.
        eigenvalues: The eigenvalues of the matrix.

    """
    def __init__(self, name, eigenvalues):  # noqa: D102
        self.name = name
        self.eigenvalues = list(eigenvalues)

    def __str__(self):
        return '{0.__class__.__name__}({0.name}, min_eig={1:.3g})'.format(
            self, min(self.eigenvalues))


class DegenerateSample(NumericalError):
    """
    Raised when a subsample has no usable variation left.

    Args:
        sample (str): A description of the subsample.

    """
    def __init__(self, sample):  # noqa: D102
        self.sample = sample

    def __str__(self):
        return '{0.__class__.__name__}({0.sample})'.format(self)


class InvalidPartition(InputError):
    """
    Raised when a partition violates the leave-out conditions.

    Args:
        violation (str): The first violation found by
            `dyadnet.partition.validate`.

    """
    def __init__(self, violation):  # noqa: D102
        self.violation = violation

    def __str__(self):
        return '{0.__class__.__name__}({0.violation})'.format(self)
