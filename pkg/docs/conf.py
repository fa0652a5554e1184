"""
Setup the Sphinx configuration options.

"""
project = 'dyadnet'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx',
    'sphinx.ext.napoleon',
    'sphinx.ext.todo'
]

default_role = 'any'
html_theme = 'sphinx_rtd_theme'
master_doc = 'index'
nitpicky = True
nitpick_ignore = [
    # This is an undocumented class by JSON schema.
    ('py:class', 'Validator')
]

doctest_global_setup = '''
import numpy as np

from dyadnet.data import *
from dyadnet.effects import *
from dyadnet.families import *
from dyadnet.inference import *
from dyadnet.jackknife import *
from dyadnet.partition import *
from dyadnet.simulation import *
from dyadnet.utils import *
'''

intersphinx_mapping = dict(
    jsonschema=('https://python-jsonschema.readthedocs.io/en/latest', None),
    numpy=('https://numpy.org/doc/stable', None),
    pandas=('https://pandas.pydata.org/docs', None),
    python=('https://docs.python.org/3', None)
)

todo_include_todos = True
