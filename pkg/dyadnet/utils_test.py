"""
Tests for `dyadnet.utils`.

"""
import json

import numpy as np
import pytest

from dyadnet import utils


@pytest.mark.parametrize('data,key,value,expected', [
    ({}, 'foo', None, {}),
    ({}, 'foo', {}, {}),
    ({}, 'foo', 'bar', {'foo': 'bar'}),
    ({}, 'foo', [], {'foo': []})
])
def test_add_optional(data, key, value, expected):
    """
    Test if a value is added to the dict if it is not None or empty.

    """
    utils.add_optional(data, key, value)
    assert data == expected


def test_rng_stream_reproducible():
    """
    Test if the same keys always give the same draws.

    """
    a = utils.rng_stream(3, 'dense', 7).standard_normal(5)
    b = utils.rng_stream(3, 'dense', 7).standard_normal(5)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize('other', [
    (4, 'dense', 7),
    (3, 'mid', 7),
    (3, 'dense', 8),
    (3, 'dense')
])
def test_rng_stream_distinct(other):
    """
    Test if changing any key gives a different stream.

    """
    a = utils.rng_stream(3, 'dense', 7).standard_normal(5)
    b = utils.rng_stream(*other).standard_normal(5)
    assert not np.array_equal(a, b)


def test_rng_stream_order_independent():
    """
    Test if a stream does not depend on which streams were drawn first.

    """
    expected = utils.rng_stream(0, 'rep', 5).standard_normal()
    for rep in range(5):
        utils.rng_stream(0, 'rep', rep).standard_normal(100)
    assert utils.rng_stream(0, 'rep', 5).standard_normal() == expected


def test_format_float_round_trip():
    """
    Test if formatted floats read back to the identical double.

    """
    value = 1 / 3 + 1e-16
    assert float(utils.format_float(value)) == value


def test_to_jsonable():
    """
    Test if numpy values become plain Python objects.

    """
    result = utils.to_jsonable({
        'array': np.eye(2),
        'flag': np.bool_(True),
        'count': np.int64(3),
        'missing': np.nan,
        'nested': (np.float32(0.5),)
    })
    assert result == {
        'array': [[1.0, 0.0], [0.0, 1.0]],
        'flag': True,
        'count': 3,
        'missing': None,
        'nested': [0.5]
    }


def test_dumps_full_precision():
    """
    Test if small differences survive serialization.

    """
    value = 0.1 + 1e-17 * 3
    other = np.nextafter(0.1, 1.0)
    loaded = json.loads(utils.dumps({'a': value, 'b': other}))
    assert loaded['a'] == value
    assert loaded['b'] == other


def test_dumps_sorted():
    """
    Test if keys are written in sorted order.

    """
    assert utils.dumps({'b': 1, 'a': 2}).index('"a"') < utils.dumps(
        {'b': 1, 'a': 2}).index('"b"')
