"""
This module contains some utility functions.

.. testsetup::

    from dyadnet.utils import *

"""
import json
import zlib

import numpy as np

from dyadnet.constants import FLOAT_DIGITS


def add_optional(data, key, value):
    """
    Add a value to the data dict, but only if the value is not None.

    Args:
        data (dict): The dict to add the value to.
        key (str): The key to assign the value to in the data dict.
        value: The value to assign if it's not None.

    """
    if value is not None and not (isinstance(value, dict) and not value):
        data[key] = value


def _stream_key(name):
    if isinstance(name, str):
        return zlib.crc32(name.encode('utf-8'))
    return int(name)


def rng_stream(seed, *names):
    """
    Get a counter-based random stream keyed on a seed and sub-stream names.

    The same ``(seed, *names)`` always yields the same stream, whatever
    order streams are created in, so replications are reproducible under
    any parallel schedule.

    >>> a = rng_stream(7, 'design', 3).standard_normal()
    >>> b = rng_stream(7, 'design', 3).standard_normal()
    >>> a == b
    True

    Args:
        seed (int): The root seed.
        *names: Sub-stream names (`str`) or indices (`int`).

    Returns:
        numpy.random.Generator: A Philox based generator.

    """
    entropy = [int(seed)] + [_stream_key(name) for name in names]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(
        entropy)))


def format_float(value):
    """
    Format a float with full round-trip precision.

    >>> format_float(0.1)
    '0.10000000000000001'
    >>> format_float(1.0)
    '1'

    """
    return '{0:.{1}g}'.format(float(value), FLOAT_DIGITS)


def to_jsonable(value):
    """
    Convert numpy containers and scalars to plain Python objects.

    >>> to_jsonable({'a': np.arange(2), 'b': np.float64(0.5)})
    {'a': [0, 1], 'b': 0.5}

    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def dumps(data):
    """
    Serialize results to JSON.

    Floats are written with the shortest representation that reads back
    to the identical double, so small jackknife corrections survive.

    >>> dumps({"x": 0.1})
    '{\\n  "x": 0.1\\n}'

    Args:
        data: Any structure accepted by `to_jsonable`.

    Returns:
        str: The JSON document.

    """
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True)
