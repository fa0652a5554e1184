"""
This module contains the Monte Carlo harness.

Networks are drawn from a probit model with a single dyadic covariate
``X_ij = X_i X_j``, ``X_i = 1 - 2 * 1{i odd}``, and sender and receiver
effects on an equally spaced grid ``[C_l, C_u]``. Four standard grids span
dense to sparse networks:

========  ==========================
name      ``(C_l, C_u)``
========  ==========================
dense     ``(-log log N, log log N)``
mid       ``(-log log N, 0)``
sqrt      ``(-sqrt(log N), 0)``
sparse    ``(-log N, 0)``
========  ==========================

Replication ``rep`` of a design always uses the random stream
``(seed, design, rep)``, so results do not depend on the number of worker
processes.

"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd

from dyadnet import constants
from dyadnet.data import filter_degenerate
from dyadnet.data import NetworkData
from dyadnet.errors import DyadnetError
from dyadnet.estimator import fit
from dyadnet.estimator import FitConfig
from dyadnet.families import get_family
from dyadnet.families import ParameterSet
from dyadnet.inference import compute_partialled_score
from dyadnet.inference import sandwich_variance
from dyadnet.jackknife import jackknife_beta
from dyadnet.jackknife import jackknife_double
from dyadnet.jackknife import jackknife_split_sample
from dyadnet.jackknife import jackknife_weighted
from dyadnet.utils import rng_stream


log = logging.getLogger('dyadnet')

DESIGNS = ('dense', 'mid', 'sqrt', 'sparse')

SHARED = 'shared'
INDEPENDENT = 'independent'

#: The two-sided 5% critical value of the normal distribution.
CRITICAL_VALUE = 1.959963984540054

STANDARD = 'standard'
COMPARISON = 'comparison'

_LAYOUTS = {
    STANDARD: ('mle', 'j', 'wj'),
    COMPARISON: ('j', 'wj', 'd', 'ss')
}

_STATISTICS = (
    ('bias_mean', 'Bias (mean)'),
    ('bias_median', 'Bias (median)'),
    ('std_dev', 'Std. dev.'),
    ('p5_p95_range', '5-95 percentile'),
    ('rejection_rate', 'Rejection (5%)')
)

_LABELS = {'mle': 'MLE', 'j': 'J', 'wj': 'WJ', 'd': 'D', 'ss': 'SS'}


def design_range(name, n_nodes):
    """
    Get the fixed effect range of a standard design.

    >>> design_range('sparse', 50) == (-np.log(50), 0.0)
    True

    """
    log_n = np.log(n_nodes)
    if name == 'dense':
        return -np.log(log_n), np.log(log_n)
    if name == 'mid':
        return -np.log(log_n), 0.0
    if name == 'sqrt':
        return -np.sqrt(log_n), 0.0
    if name == 'sparse':
        return -log_n, 0.0
    raise ValueError('unknown design {!r}'.format(name))


@dataclass
class SimDesign:
    """
    A Monte Carlo design.

    Args:
        name (str): The design label, also a random stream key.
        n_nodes (int): The number of nodes.
        theta (float): The true coefficient.
        fe_range (tuple): ``(C_l, C_u)``.
        n_reps (int): The number of replications.
        seed (int): The root seed.
        estimators (tuple): A subset of `dyadnet.constants.ESTIMATORS`.
        fe_mode (str): ``shared`` gives ``alpha == gamma``; ``independent``
            randomly permutes the grid for ``gamma``.
        family (str): The model family.

    """
    name: str = 'dense'
    n_nodes: int = 50
    theta: float = 1.0
    fe_range: tuple = None
    n_reps: int = 1
    seed: int = 0
    estimators: tuple = constants.ESTIMATORS
    fe_mode: str = SHARED
    family: str = constants.PROBIT

    def __post_init__(self):
        if self.fe_range is None:
            self.fe_range = design_range(self.name, self.n_nodes)
        self.fe_range = tuple(float(c) for c in self.fe_range)
        if self.fe_range[0] > self.fe_range[1]:
            raise ValueError('C_l must not exceed C_u')
        if self.n_reps < 1:
            raise ValueError('n_reps must be at least 1')
        unknown = set(self.estimators) - set(constants.ESTIMATORS)
        if unknown:
            raise ValueError('unknown estimators {}'.format(sorted(unknown)))
        if self.fe_mode not in (SHARED, INDEPENDENT):
            raise ValueError('unknown fe_mode {!r}'.format(self.fe_mode))
        self.estimators = tuple(self.estimators)

    def to_dict(self):
        """
        Get the design as a plain dict.

        """
        return {
            'name': self.name,
            'n_nodes': self.n_nodes,
            'theta': self.theta,
            'fe_range': list(self.fe_range),
            'n_reps': self.n_reps,
            'seed': self.seed,
            'estimators': list(self.estimators),
            'fe_mode': self.fe_mode,
            'family': self.family
        }


@dataclass
class SimTruth:
    """
    The parameters a network was drawn from.

    """
    theta: float
    alpha: np.ndarray
    gamma: np.ndarray

    @property
    def params(self):
        """
        `dyadnet.families.ParameterSet`: The true parameters.

        """
        return ParameterSet([self.theta], self.alpha, self.gamma)


def _covariate(n_nodes):
    # X_i = 1 - 2 * 1{i odd} for 1-based i.
    x = np.where(np.arange(1, n_nodes + 1) % 2 == 1, -1.0, 1.0)
    return np.outer(x, x)


def _fixed_effects(design, rng):
    lower, upper = design.fe_range
    alpha = np.linspace(lower, upper, design.n_nodes)
    if design.fe_mode == SHARED:
        return alpha, alpha.copy()
    return alpha, rng.permutation(alpha)


def generate_design(design, rep):
    """
    Draw one network of a design.

    Args:
        design (SimDesign): The design.
        rep (int): The replication index.

    Returns:
        tuple: The `dyadnet.data.NetworkData` and its `SimTruth`.

    """
    rng = rng_stream(design.seed, design.name, rep)
    alpha, gamma = _fixed_effects(design, rng)
    x = _covariate(design.n_nodes)
    eta = design.theta * x + alpha[:, None] + gamma[None, :]
    family = get_family(design.family)
    outcomes = family.simulate(eta, rng)
    np.fill_diagonal(outcomes, 0.0)
    data = NetworkData(outcomes, x, covariate_names=['x'])
    return data, SimTruth(design.theta, alpha, gamma)


def generate_transitive_alternative(design, rep, strength=1.0):
    """
    Draw a network with strategic transitivity.

    A network is first drawn from the design; every link is then redrawn
    with an extra payoff of ``strength`` times the share of intermediaries
    ``k`` with ``i -> k -> j`` in the first draw.

    Returns:
        tuple: The `dyadnet.data.NetworkData` and its `SimTruth`.

    """
    first, truth = generate_design(design, rep)
    rng = rng_stream(design.seed, design.name, rep, 'transitive')
    y = first.outcomes
    n = design.n_nodes
    shared = (y @ y) / (n - 2)
    eta = (design.theta * first.covariates[:, :, 0] +
           truth.alpha[:, None] + truth.gamma[None, :] + strength * shared)
    outcomes = (eta > rng.standard_normal(eta.shape)).astype(float)
    np.fill_diagonal(outcomes, 0.0)
    data = NetworkData(outcomes, first.covariates, covariate_names=['x'])
    return data, truth


def connected_count(data):
    """
    Count the agents with at least one link.

    """
    return int(np.count_nonzero(data.out_degree + data.in_degree > 0))


def _split_seed(design, rep):
    return int(rng_stream(design.seed, design.name, rep, 'split').integers(
        2 ** 31))


def _estimate(estimator, design, rep, data, full, config):
    if estimator == 'mle':
        return full.params.beta[0]
    if estimator == 'j':
        result = jackknife_beta(data, design.family, config, full_fit=full)
    elif estimator == 'wj':
        result = jackknife_weighted(data, design.family, config,
                                    full_fit=full)
    elif estimator == 'ss':
        result = jackknife_split_sample(data, design.family, config,
                                        _split_seed(design, rep),
                                        full_fit=full)
    else:
        result = jackknife_double(data, design.family, config, full_fit=full)
    return result.beta_corrected[0]


def run_replication(design, rep, config=None):
    """
    Run one replication of a design.

    The network is drawn, degenerate agents are removed, the model is
    fitted and every requested estimator is computed. All estimators are
    tested against the true coefficient with the full sample standard error.

    Returns:
        dict: One raw result row.

    """
    config = config or FitConfig()
    data, _ = generate_design(design, rep)
    row = {'rep': rep, 'density': data.density,
           'connected': connected_count(data), 'status': 'ok'}
    try:
        data, report = filter_degenerate(data, design.family)
        row['n_estimated'] = data.n_nodes
        full = fit(data, design.family, config)
        variance = sandwich_variance(
            full, compute_partialled_score(full, data), data)
    except DyadnetError as error:
        row['status'] = str(error)
        log.warning('Replication %d failed: %s', rep, error)
        return row
    se = float(variance.se[0])
    row['se'] = se
    for estimator in design.estimators:
        try:
            estimate = float(_estimate(estimator, design, rep, data, full,
                                       config))
        except DyadnetError as error:
            row['{}_status'.format(estimator)] = str(error)
            log.warning('Replication %d, estimator %s failed: %s', rep,
                        estimator, error)
            continue
        row['{}_estimate'.format(estimator)] = estimate
        row['{}_reject'.format(estimator)] = float(
            abs(estimate - design.theta) / se > CRITICAL_VALUE)
    return row


@dataclass
class EstimatorSummary:
    """
    Monte Carlo moments of one estimator.

    """
    bias_mean: float
    bias_median: float
    std_dev: float
    p5_p95_range: float
    rejection_rate: float
    n: int


@dataclass
class SimSummary:
    """
    The summary of a Monte Carlo experiment.

    Args:
        design (SimDesign): The design.
        rows (dict): Maps each estimator to its `EstimatorSummary`.
        mean_density (float): The mean density of the drawn networks.
        mean_connected (float): The mean number of connected agents.
        n_failed (int): Replications that could not be estimated.
        raw (pandas.DataFrame): One row per replication.

    """
    design: SimDesign
    rows: dict = field(default_factory=dict)
    mean_density: float = np.nan
    mean_connected: float = np.nan
    n_failed: int = 0
    raw: pd.DataFrame = None


def summarize(design, records):
    """
    Reduce raw replication rows to a `SimSummary`.

    Rows are sorted by replication index before reducing.

    """
    raw = pd.DataFrame(sorted(records, key=lambda row: row['rep']))
    summary = SimSummary(design, raw=raw)
    if raw.empty:
        return summary
    summary.mean_density = float(raw['density'].mean())
    summary.mean_connected = float(raw['connected'].mean())
    summary.n_failed = int((raw['status'] != 'ok').sum())
    for estimator in design.estimators:
        column = '{}_estimate'.format(estimator)
        if column not in raw:
            continue
        estimates = raw[column].dropna().to_numpy(dtype=float)
        if not len(estimates):
            continue
        bias = estimates - design.theta
        p5, p95 = np.percentile(estimates, [5, 95])
        summary.rows[estimator] = EstimatorSummary(
            float(bias.mean()), float(np.median(bias)),
            float(estimates.std(ddof=1)) if len(estimates) > 1 else 0.0,
            float(p95 - p5),
            float(raw['{}_reject'.format(estimator)].dropna().mean()),
            len(estimates))
    return summary


def run_monte_carlo(design, jobs=1, out_dir=None, config=None):
    """
    Run a Monte Carlo experiment.

    Replications run on a process pool of ``jobs`` workers; every fit
    inside a replication is single threaded.

    Args:
        design (SimDesign): The design.
        jobs (int): The number of worker processes.
        out_dir: Optional directory for ``replications.csv``.
        config (dyadnet.estimator.FitConfig): Solver options.

    Returns:
        SimSummary: The summary.

    """
    config = config or FitConfig()
    reps = range(design.n_reps)
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            records = list(executor.map(
                run_replication, [design] * design.n_reps, reps,
                [config] * design.n_reps))
    else:
        records = []
        for rep in reps:
            records.append(run_replication(design, rep, config))
            log.info('Replication %d of %d done', rep + 1, design.n_reps)
    summary = summarize(design, records)
    if out_dir is not None:
        path = Path(out_dir) / 'replications.csv'
        summary.raw.to_csv(str(path), index=False, float_format='%.17g',
                           lineterminator='\n')
        log.info('Wrote %s', path)
    if summary.n_failed:
        log.warning('%d of %d replications failed', summary.n_failed,
                    design.n_reps)
    return summary


def summary_frame(summary, layout=STANDARD):
    """
    Arrange a summary in a table layout.

    Returns:
        pandas.DataFrame: One row per statistic, one column per estimator
        present in both the layout and the summary.

    """
    if layout not in _LAYOUTS:
        raise ValueError('unknown layout {!r}'.format(layout))
    estimators = [e for e in _LAYOUTS[layout] if e in summary.rows]
    frame = pd.DataFrame(
        {_LABELS[e]: [getattr(summary.rows[e], key) for key, _ in _STATISTICS]
         for e in estimators},
        index=pd.Index([label for _, label in _STATISTICS], name='statistic'))
    return frame


def emit_table(summary, layout=STANDARD):
    """
    Format a summary as CSV and as an aligned text table.

    Args:
        summary (SimSummary): The summary.
        layout (str): ``standard`` (MLE, J, WJ) or ``comparison``
            (J, WJ, D, SS).

    Returns:
        tuple: The CSV text and the aligned text.

    """
    frame = summary_frame(summary, layout)
    buffer = StringIO()
    frame.to_csv(buffer, float_format='%.17g', lineterminator='\n')
    title = '{} ({:.3f}, {:.3f}), N={}'.format(
        summary.design.name, *summary.design.fe_range,
        summary.design.n_nodes)
    if frame.columns.empty:
        text = title + '\n' + 'statistic'
    else:
        text = title + '\n' + frame.to_string(
            float_format=lambda v: '%.3f' % v)
    return buffer.getvalue(), text


def read_summary_csv(text, design):
    """
    Parse a CSV written by `emit_table` back into a `SimSummary`.

    Sample sizes and auxiliary moments are not part of the table and are
    left unset.

    """
    frame = pd.read_csv(StringIO(text), index_col='statistic')
    labels = {label: key for key, label in _STATISTICS}
    codes = {label: code for code, label in _LABELS.items()}
    summary = SimSummary(design)
    for column in frame.columns:
        values = {labels[row]: float(frame.loc[row, column])
                  for row in frame.index}
        summary.rows[codes[column]] = EstimatorSummary(n=0, **values)
    return summary


def fixed_effect_table(designs, n_draws=1000, jobs=1):
    """
    Tabulate density, connectivity and the out-degree distribution.

    For every design the density, the number of connected agents and the
    minimum, quartiles and maximum of the out-degrees are averaged over
    ``n_draws`` networks.

    Args:
        designs (list): The `SimDesign` objects.
        n_draws (int): The number of networks per design.
        jobs (int): The number of worker processes.

    Returns:
        pandas.DataFrame: One row per design.

    """
    rows = []
    for design in designs:
        draws = range(n_draws)
        if jobs and jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as executor:
                stats = list(executor.map(
                    _draw_statistics, [design] * n_draws, draws))
        else:
            stats = [_draw_statistics(design, rep) for rep in draws]
        mean = np.mean(stats, axis=0)
        rows.append([design.name, *design.fe_range, *mean])
    return pd.DataFrame(rows, columns=[
        'design', 'c_lower', 'c_upper', 'density', 'connected', 'min',
        'q1', 'median', 'q3', 'max'])


def _draw_statistics(design, rep):
    data, _ = generate_design(design, rep)
    degrees = data.out_degree
    return [data.density, connected_count(data),
            *np.percentile(degrees, [0, 25, 50, 75, 100])]
