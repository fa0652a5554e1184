"""
This package exports the public interface of dyadnet.

"""
__version__ = '0.1.0'

from dyadnet.data import filter_degenerate  # noqa: E402,F401
from dyadnet.data import load_edge_list  # noqa: E402,F401
from dyadnet.data import NetworkData  # noqa: E402,F401
from dyadnet.effects import average_effect  # noqa: E402,F401
from dyadnet.estimator import fit  # noqa: E402,F401
from dyadnet.estimator import FitConfig  # noqa: E402,F401
from dyadnet.families import get_family  # noqa: E402,F401
from dyadnet.families import ParameterSet  # noqa: E402,F401
from dyadnet.inference import compute_partialled_score  # noqa: E402,F401
from dyadnet.inference import sandwich_variance  # noqa: E402,F401
from dyadnet.jackknife import jackknife_beta  # noqa: E402,F401
from dyadnet.jackknife import jackknife_weighted  # noqa: E402,F401
from dyadnet.partition import build_partition  # noqa: E402,F401
