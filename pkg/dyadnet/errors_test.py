"""
Tests for `dyadnet.errors`.

"""
import pytest

from dyadnet import errors


@pytest.mark.parametrize('error,expected', [
    (errors.MissingObservation('a', 'b'), "MissingObservation('a', 'b')"),
    (errors.DuplicateObservation('a', 'b', 4),
     "DuplicateObservation('a', 'b', line=4)"),
    (errors.SelfLoopRejected('a', 3), "SelfLoopRejected('a', line=3)"),
    (errors.ParseError(5, 'x', 'abc'), "ParseError(line=5, 'x', 'abc')"),
    (errors.TooSmallAfterFiltering(3), 'TooSmallAfterFiltering(3)'),
    (errors.InvalidBlockSize(10, 2), 'InvalidBlockSize(N=10, l=2)'),
    (errors.PartitionIndexError(0, 9), 'PartitionIndexError(k=0, sets=9)'),
    (errors.UnknownConfigKey('repz'), 'UnknownConfigKey(repz)'),
    (errors.NonConvergence(200, 0.5),
     'NonConvergence(iterations=200, score_norm=0.5)'),
    (errors.SingularHessian([1, 2], 'alpha'),
     'SingularHessian(alpha, nodes=[1, 2])'),
    (errors.NotPositiveDefinite('W', [-1.0, 2.0]),
     'NotPositiveDefinite(W, min_eig=-1)'),
    (errors.DegenerateSample('sender half 1'),
     'DegenerateSample(sender half 1)')
])
def test_str(error, expected):
    """
    Test if errors render their class name and arguments.

    """
    assert str(error) == expected


@pytest.mark.parametrize('error,family', [
    (errors.MissingObservation('a', 'b'), errors.InputError),
    (errors.ConfigError('bad'), errors.InputError),
    (errors.InvalidPartition('set 1'), errors.InputError),
    (errors.PatternTooLarge(4, 200), errors.InputError),
    (errors.NonConvergence(1, 1.0), errors.NumericalError),
    (errors.DegenerateSample('x'), errors.NumericalError)
])
def test_families(error, family):
    """
    Test if every error belongs to the family that picks its exit code.

    """
    assert isinstance(error, family)
    assert isinstance(error, errors.DyadnetError)
