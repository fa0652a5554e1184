"""
This module contains the ``dyadnet`` command line interface.

Every run resolves a `RunConfig` from three sources: command line flags,
an optional YAML configuration file and the defaults, in that order of
precedence. The output directory receives ``results.json``, a
``summary.csv`` for the tabular subcommands and a ``manifest.json`` that
echoes the resolved configuration.

Exit codes are ``0`` on success, ``2`` on invalid input or options and
``3`` when a numerical routine fails.

"""
import argparse
import logging
import sys
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from dyadnet import __version__
from dyadnet import constants
from dyadnet.data import EdgeListSchema
from dyadnet.data import filter_degenerate
from dyadnet.data import load_edge_list
from dyadnet.effects import average_effect
from dyadnet.effects import effect_from_name
from dyadnet.effects import expected_clustering
from dyadnet.effects import transitivity_statistic
from dyadnet.errors import ConfigError
from dyadnet.errors import InputError
from dyadnet.errors import NumericalError
from dyadnet.errors import UnknownConfigKey
from dyadnet.estimator import fit
from dyadnet.estimator import FitConfig
from dyadnet.families import get_family
from dyadnet.inference import compute_partialled_score
from dyadnet.inference import format_summary
from dyadnet.inference import sandwich_variance
from dyadnet.inference import summary_table
from dyadnet.inference import t_statistics
from dyadnet.inference import write_summary_csv
from dyadnet.jackknife import jackknife_beta
from dyadnet.jackknife import jackknife_double
from dyadnet.jackknife import jackknife_split_sample
from dyadnet.jackknife import jackknife_weighted
from dyadnet.jackknife import jackknife_with_relabeling
from dyadnet.partition import build_partition
from dyadnet.partition import dump_partition
from dyadnet.simulation import DESIGNS
from dyadnet.simulation import emit_table
from dyadnet.simulation import fixed_effect_table
from dyadnet.simulation import run_monte_carlo
from dyadnet.simulation import SimDesign
from dyadnet.utils import dumps
from dyadnet.validators import RUN_CONFIG_SCHEMA
from dyadnet.validators import RunConfigValidator


log = logging.getLogger('dyadnet')

_handler = logging.StreamHandler()
_handler.setFormatter(logging.Formatter('%(levelname)s %(message)s'))

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_DEFAULT_CONFIG = {
    'input': None,
    'out': '.',
    'family': constants.PROBIT,
    'seed': 0,
    'jobs': 1,
    'log_level': 'warning',
    'sender_col': 'sender_id',
    'receiver_col': 'receiver_id',
    'outcome_col': 'outcome',
    'covariates': [],
    'filter': True,
    'max_iterations': 200,
    'gradient_tolerance': 1e-9,
    'penalty_b': 1.0,
    'variant': constants.PLAIN,
    'l': 1,
    'relabels': 1,
    'xi_variant': 'block_inverse',
    'effects': ['probability'],
    'target': 'conditional',
    'allow_large': False,
    'statistic': 'covariance_form',
    'n_boot': 0,
    'refit': False,
    'design': 'dense',
    'n_nodes': 50,
    'theta': 1.0,
    'c_lower': None,
    'c_upper': None,
    'reps': 1,
    'estimators': list(constants.ESTIMATORS),
    'fe_mode': 'shared',
    'layout': 'standard',
    'designs': list(DESIGNS),
    'draws': 1000
}

FLAG = 'flag'
FILE = 'file'
DEFAULT = 'default'


@dataclass
class RunConfig:
    """
    A fully resolved run configuration.

    Args:
        subcommand (str): The subcommand to run.
        values (dict): Every configuration key with its resolved value.
        provenance (dict): Maps every key to ``flag``, ``file`` or
            ``default``.

    """
    subcommand: str = None
    values: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.values[name]

    def to_manifest(self):
        """
        Get the manifest written next to the results.

        """
        return {
            'subcommand': self.subcommand,
            'config': dict(self.values),
            'provenance': dict(self.provenance),
            'seed': self.values['seed'],
            'version': __version__
        }

    @classmethod
    def from_manifest(cls, manifest):
        """
        Rebuild a run configuration from a manifest.

        """
        return cls(manifest['subcommand'], dict(manifest['config']),
                   dict(manifest['provenance']))

    def fit_config(self):
        """
        Get the solver options of this run.

        """
        return FitConfig(max_iterations=self['max_iterations'],
                         gradient_tolerance=self['gradient_tolerance'],
                         penalty_b=self['penalty_b'])


def _read_config_file(path):
    try:
        with open(str(path)) as f:
            content = yaml.safe_load(f)
    except yaml.YAMLError as error:
        raise ConfigError('{}: {}'.format(path, error))
    except OSError as error:
        raise ConfigError(str(error))
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigError(
            '{}: expected a mapping of "key: value" lines'.format(path))
    return content


def validate_config(values):
    """
    Validate configuration values.

    Raises:
        dyadnet.errors.UnknownConfigKey: For the first unknown key, in
            sorted order.
        dyadnet.errors.ConfigError: If a value has the wrong type.

    """
    unknown = sorted(set(values) - set(RUN_CONFIG_SCHEMA['properties']))
    if unknown:
        raise UnknownConfigKey(unknown[0])
    validator = RunConfigValidator(RUN_CONFIG_SCHEMA)
    for error in sorted(validator.iter_errors(values), key=str):
        path = '.'.join(str(part) for part in error.path)
        raise ConfigError('{}: {}'.format(path, error.message))


def load_config(path=None, flags=None, subcommand=None):
    """
    Resolve a run configuration.

    Args:
        path: An optional YAML configuration file. An empty file selects
            every default.
        flags (dict): Values given on the command line.
        subcommand (str): The subcommand to run.

    Returns:
        RunConfig: The resolved configuration with the provenance of every
        key.

    Raises:
        dyadnet.errors.UnknownConfigKey: If the file holds an unknown key.
        dyadnet.errors.ConfigError: If the file cannot be read or holds an
            invalid value.

    """
    from_file = _read_config_file(path) if path is not None else {}
    if 'variant' in from_file:
        from_file['variant'] = _variant(from_file['variant'])
    validate_config(from_file)
    flags = flags or {}
    config = RunConfig(subcommand)
    for key, default in _DEFAULT_CONFIG.items():
        if key in flags:
            config.values[key] = flags[key]
            config.provenance[key] = FLAG
        elif key in from_file:
            config.values[key] = from_file[key]
            config.provenance[key] = FILE
        else:
            config.values[key] = (list(default) if isinstance(default, list)
                                  else default)
            config.provenance[key] = DEFAULT
    validate_config(config.values)
    return config


def _csv_list(text):
    return [item.strip() for item in text.split(',') if item.strip()]


def _variant(text):
    if isinstance(text, str):
        return constants.VARIANT_ALIASES.get(text, text)
    return text


def _common_parser():
    parser = argparse.ArgumentParser(add_help=False,
                                     argument_default=argparse.SUPPRESS)
    parser.add_argument(
        '--config',
        help='a YAML configuration file of "key: value" lines; keys are '
             'the long option names with underscores')
    parser.add_argument('--out', help='the output directory')
    parser.add_argument('--seed', type=int, help='the root random seed')
    parser.add_argument('--jobs', type=int, help='the number of workers')
    parser.add_argument('--log-level', dest='log_level',
                        choices=['debug', 'info', 'warning', 'error',
                                 'critical'])
    parser.add_argument('--max-iterations', '--max-iter',
                        dest='max_iterations', type=int)
    parser.add_argument('--gradient-tolerance', '--tol',
                        dest='gradient_tolerance', type=float)
    parser.add_argument('--penalty-b', dest='penalty_b', type=float)
    parser.add_argument('--family', help='the model family')
    return parser


def _data_parser():
    parser = argparse.ArgumentParser(add_help=False,
                                     argument_default=argparse.SUPPRESS)
    parser.add_argument('--input', help='the edge list (CSV or TSV)')
    parser.add_argument('--sender-col', dest='sender_col')
    parser.add_argument('--receiver-col', dest='receiver_col')
    parser.add_argument('--outcome-col', dest='outcome_col')
    parser.add_argument('--covariates', '--covariate-cols', type=_csv_list,
                        help='comma separated covariate columns')
    parser.add_argument('--no-filter', dest='filter', action='store_false',
                        help='keep degenerate nodes')
    return parser


def _leaveout_arguments(parser):
    parser.add_argument('--l', '--leave-l', dest='l', type=int,
                        help='the leave-out block size')


def build_parser():
    """
    Build the argument parser.

    """
    parser = argparse.ArgumentParser(
        prog='dyadnet',
        description='Bias corrected estimation of two-way fixed effect '
                    'network models.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s {}'.format(__version__))
    common = _common_parser()
    data = _data_parser()
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True

    def add(name, summary, with_data=True):
        parents = [common, data] if with_data else [common]
        return subparsers.add_parser(name, help=summary, parents=parents,
                                     argument_default=argparse.SUPPRESS)

    estimate = add('estimate', 'fit the model and report sandwich errors')
    estimate.add_argument('--xi-variant', dest='xi_variant',
                          choices=['block_inverse', 'direct'])

    jackknife = add('jackknife', 'bias correct the common parameters')
    jackknife.add_argument('--variant', type=_variant, choices=[
        constants.PLAIN, constants.LEAVE_L, constants.WEIGHTED,
        constants.SPLIT_SAMPLE, constants.DOUBLE_AGENT])
    _leaveout_arguments(jackknife)
    jackknife.add_argument('--relabels', type=int,
                           help='average over this many node relabelings')
    jackknife.add_argument('--xi-variant', dest='xi_variant',
                           choices=['block_inverse', 'direct'])

    effects = add('effects', 'bias correct fixed effect averages')
    effects.add_argument('--effects', '--effect', type=_csv_list,
                         help='comma separated effect names')
    effects.add_argument('--target', choices=['conditional', 'population'])
    effects.add_argument('--allow-large', dest='allow_large',
                         action='store_true')
    _leaveout_arguments(effects)

    test = add('test', 'test the dyadic model against transitivity')
    test.add_argument('--statistic', choices=[
        'covariance_form', 'triangle_count_form', 'reciprocity'])
    test.add_argument('--n-boot', dest='n_boot', type=int)
    test.add_argument('--refit', '--bootstrap-refit', dest='refit',
                      action='store_true')
    _leaveout_arguments(test)

    simulate = add('simulate', 'run a Monte Carlo experiment',
                   with_data=False)
    simulate.add_argument('--design')
    simulate.add_argument('--n-nodes', '--n', dest='n_nodes', type=int)
    simulate.add_argument('--theta', type=float)
    simulate.add_argument('--c-lower', dest='c_lower', type=float)
    simulate.add_argument('--c-upper', dest='c_upper', type=float)
    simulate.add_argument('--reps', type=int)
    simulate.add_argument('--estimators', type=_csv_list)
    simulate.add_argument('--fe-mode', dest='fe_mode',
                          choices=['shared', 'independent'])
    simulate.add_argument('--layout', choices=['standard', 'comparison'])

    dump = add('partition-dump', 'write the leave-out partition')
    dump.add_argument('--n-nodes', dest='n_nodes', type=int)
    _leaveout_arguments(dump)

    calibrate = add('calibrate', 'tabulate the simulated degree distribution',
                    with_data=False)
    calibrate.add_argument('--designs', type=_csv_list)
    calibrate.add_argument('--n-nodes', dest='n_nodes', type=int)
    calibrate.add_argument('--draws', type=int)
    return parser


def _load_network(config):
    if config['input'] is None:
        raise ConfigError('input: an edge list is required')
    schema = EdgeListSchema(config['sender_col'], config['receiver_col'],
                            config['outcome_col'], list(config['covariates']))
    data = load_edge_list(config['input'], schema)
    if not config['filter']:
        return data, None
    return filter_degenerate(data, config['family'])


def _degeneracy(report):
    return report.to_dict() if report is not None else None


def _fit_diagnostics(result):
    return {
        'iterations': result.iterations,
        'converged': result.converged,
        'score_norm': result.score_norm,
        'objective': result.objective,
        'n_clamped': result.diagnostics.get('n_clamped', 0)
    }


def _full_fit(config, data):
    result = fit(data, config['family'], config.fit_config())
    log.info('Full sample fit stopped after %d iterations, converged: %s',
             result.iterations, result.converged)
    return result


def _variance(config, result, data):
    partialled = compute_partialled_score(
        result, data, xi_variant=config['xi_variant'])
    return sandwich_variance(result, partialled, data)


def run_estimate(config):
    """
    Fit the model and compute sandwich standard errors.

    Returns:
        tuple: The results dict and the summary table.

    """
    data, report = _load_network(config)
    result = _full_fit(config, data)
    variance = _variance(config, result, data)
    beta = result.params.beta
    stats = t_statistics(beta, np.zeros_like(beta), variance)
    table = pd.DataFrame({
        'coefficient': data.covariate_names,
        'estimate': beta,
        'se': variance.se,
        't': stats.t,
        'p': stats.p
    })
    results = {
        'family': get_family(config['family']).family_id,
        'n_nodes': data.n_nodes,
        'covariates': data.covariate_names,
        'beta': beta,
        'se': variance.se,
        'alpha': result.params.alpha,
        'gamma': result.params.gamma,
        'nodes': data.node_labels,
        'variance': variance.to_dict(),
        'tests': stats.to_dict(),
        'diagnostics': _fit_diagnostics(result),
        'degeneracy': _degeneracy(report)
    }
    return results, table


def run_jackknife(config):
    """
    Compute a jackknife corrected estimate of the common parameters.

    Returns:
        tuple: The results dict and the summary table.

    """
    data, report = _load_network(config)
    family = config['family']
    fit_config = config.fit_config()
    full = _full_fit(config, data)
    variant = config['variant']
    jobs = config['jobs']
    l = config['l']  # noqa: E741
    leaveout = (constants.PLAIN, constants.LEAVE_L, constants.WEIGHTED)
    if config['relabels'] > 1:
        if variant not in leaveout:
            raise ConfigError('relabels: only leave-out variants relabel')
        result = jackknife_with_relabeling(
            data, family, fit_config, l, config['relabels'], config['seed'],
            variant, jobs, full)
    elif variant in (constants.PLAIN, constants.LEAVE_L):
        result = jackknife_beta(data, family, fit_config,
                                build_partition(data.n_nodes, l), jobs, full)
    elif variant == constants.WEIGHTED:
        result = jackknife_weighted(data, family, fit_config,
                                    build_partition(data.n_nodes, l), jobs,
                                    full)
    elif variant == constants.SPLIT_SAMPLE:
        result = jackknife_split_sample(data, family, fit_config,
                                        config['seed'], jobs, full)
    else:
        result = jackknife_double(data, family, fit_config, jobs, full)
    if not result.reliable:
        log.warning('Some subsample fits did not converge')
    variance = _variance(config, full, data)
    stats = t_statistics(result.beta_corrected,
                         np.zeros_like(result.beta_corrected), variance)
    table = summary_table(data.covariate_names, full.params.beta,
                          result.beta_corrected, variance)
    results = result.to_dict()
    results.update({
        'covariates': data.covariate_names,
        'n_nodes': data.n_nodes,
        'se': variance.se,
        'variance': variance.to_dict(),
        'tests': stats.to_dict(),
        'diagnostics': _fit_diagnostics(full),
        'degeneracy': _degeneracy(report)
    })
    return results, table


def _leaveout(config, data, full):
    partition = build_partition(data.n_nodes, config['l'])
    result = jackknife_beta(data, config['family'], config.fit_config(),
                            partition, config['jobs'], full)
    return result.leaveout_fits, partition


def _effect_row(result):
    return {
        'effect': result.name,
        'target': result.target,
        'plugin': result.delta_plugin,
        'jackknife': result.delta_jackknife,
        'se': result.se,
        't_plugin': result.t_plugin,
        't_jackknife': result.t_jackknife
    }


def run_effects(config):
    """
    Compute bias corrected fixed effect averages.

    Returns:
        tuple: The results dict and the summary table.

    """
    data, report = _load_network(config)
    full = _full_fit(config, data)
    fits, partition = _leaveout(config, data, full)
    effects = []
    for name in config['effects']:
        spec = effect_from_name(name, data.covariate_names, config['target'])
        effects.append(average_effect(
            full, fits, spec, data, partition, config['family'],
            config['jobs'], config['allow_large']))
        log.info('Computed effect %s', name)
    results = {
        'n_nodes': data.n_nodes,
        'effects': [effect.to_dict() for effect in effects],
        'diagnostics': _fit_diagnostics(full),
        'degeneracy': _degeneracy(report)
    }
    return results, pd.DataFrame([_effect_row(e) for e in effects])


def run_test(config):
    """
    Test the dyadic model with a corrected network statistic.

    Returns:
        tuple: The results dict and the summary table.

    """
    data, report = _load_network(config)
    full = _full_fit(config, data)
    fits, partition = _leaveout(config, data, full)
    result = transitivity_statistic(
        full, data, config['statistic'], fits, partition, config['n_boot'],
        config['seed'], config['family'], config.fit_config(), config['jobs'],
        config['refit'])
    results = {
        'n_nodes': data.n_nodes,
        'statistic': result.to_dict(),
        'expected_clustering': expected_clustering(full, data,
                                                   config['family']),
        'diagnostics': _fit_diagnostics(full),
        'degeneracy': _degeneracy(report)
    }
    return results, pd.DataFrame([_effect_row(result)])


def _fe_range(config):
    if config['c_lower'] is None and config['c_upper'] is None:
        return None
    if config['c_lower'] is None or config['c_upper'] is None:
        raise ConfigError('c_lower and c_upper must be given together')
    return config['c_lower'], config['c_upper']


def run_simulate(config):
    """
    Run a Monte Carlo experiment.

    Returns:
        tuple: The results dict and the summary CSV text.

    """
    Path(config['out']).mkdir(parents=True, exist_ok=True)
    try:
        design = SimDesign(
            name=config['design'], n_nodes=config['n_nodes'],
            theta=config['theta'], fe_range=_fe_range(config),
            n_reps=config['reps'], seed=config['seed'],
            estimators=tuple(config['estimators']),
            fe_mode=config['fe_mode'], family=config['family'])
    except ValueError as error:
        raise ConfigError(str(error))
    summary = run_monte_carlo(design, config['jobs'], config['out'],
                              config.fit_config())
    csv, text = emit_table(summary, config['layout'])
    sys.stdout.write(text + '\n')
    results = {
        'design': design.to_dict(),
        'estimators': {name: asdict(row)
                       for name, row in summary.rows.items()},
        'mean_density': summary.mean_density,
        'mean_connected': summary.mean_connected,
        'n_failed': summary.n_failed
    }
    return results, csv


def run_partition_dump(config):
    """
    Dump the leave-out partition of an edge list or of ``n_nodes`` nodes.

    Returns:
        tuple: The partition dict and no table.

    """
    if config['input'] is not None:
        data, _ = _load_network(config)
        n_nodes = data.n_nodes
    else:
        n_nodes = config['n_nodes']
    return dump_partition(build_partition(n_nodes, config['l'])), None


def run_calibrate(config):
    """
    Tabulate density and degrees of the standard designs.

    Returns:
        tuple: The results dict and the table.

    """
    try:
        designs = [SimDesign(name=name, n_nodes=config['n_nodes'],
                             seed=config['seed'], family=config['family'])
                   for name in config['designs']]
    except ValueError as error:
        raise ConfigError(str(error))
    table = fixed_effect_table(designs, config['draws'], config['jobs'])
    return {'designs': table.to_dict(orient='records')}, table


_COMMANDS = {
    'estimate': run_estimate,
    'jackknife': run_jackknife,
    'effects': run_effects,
    'test': run_test,
    'simulate': run_simulate,
    'partition-dump': run_partition_dump,
    'calibrate': run_calibrate
}


def _setup_logging(level):
    if _handler not in log.handlers:
        log.addHandler(_handler)
    log.setLevel(level.upper())


def write_outputs(config, results, table):
    """
    Write ``results.json``, ``summary.csv`` and ``manifest.json``.

    Args:
        config (RunConfig): The run configuration.
        results (dict): The results.
        table: A `pandas.DataFrame`, CSV text or `None`.

    """
    out = Path(config['out'])
    out.mkdir(parents=True, exist_ok=True)
    (out / 'results.json').write_text(dumps(results) + '\n')
    if isinstance(table, pd.DataFrame):
        write_summary_csv(out / 'summary.csv', table)
        if config.subcommand != 'calibrate':
            sys.stdout.write(format_summary(table) + '\n')
        else:
            sys.stdout.write(table.to_string(index=False) + '\n')
    elif table is not None:
        (out / 'summary.csv').write_text(table)
    (out / 'manifest.json').write_text(dumps(config.to_manifest()) + '\n')
    log.info('Wrote results to %s', out)


def main(argv=None):
    """
    Run the ``dyadnet`` command.

    Args:
        argv (list): The arguments, ``sys.argv[1:]`` by default.

    Returns:
        int: The exit code.

    """
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as error:
        return error.code if isinstance(error.code, int) else EXIT_INPUT
    command = args.pop('command')
    path = args.pop('config', None)
    try:
        config = load_config(path, args, command)
        _setup_logging(config['log_level'])
        results, table = _COMMANDS[command](config)
        write_outputs(config, results, table)
    except InputError as error:
        sys.stderr.write('dyadnet: error: {}\n'.format(error))
        return EXIT_INPUT
    except NumericalError as error:
        sys.stderr.write('dyadnet: numerical failure: {}\n'.format(error))
        return EXIT_NUMERICAL
    except (ValueError, OSError) as error:
        sys.stderr.write('dyadnet: error: {}\n'.format(error))
        return EXIT_INPUT
    return EXIT_OK
