"""
Tests for `dyadnet.cli`.

"""
import json

import pytest

from conftest import make_network
from dyadnet.cli import build_parser
from dyadnet.cli import DEFAULT
from dyadnet.cli import EXIT_INPUT
from dyadnet.cli import EXIT_NUMERICAL
from dyadnet.cli import EXIT_OK
from dyadnet.cli import FILE
from dyadnet.cli import FLAG
from dyadnet.cli import load_config
from dyadnet.cli import main
from dyadnet.cli import RunConfig
from dyadnet.cli import validate_config
from dyadnet.data import write_edge_list
from dyadnet.errors import ConfigError
from dyadnet.errors import NonConvergence
from dyadnet.errors import UnknownConfigKey


@pytest.fixture
def edge_list(tmpdir, network):
    """
    Write the shared network as an edge list and return its path.

    """
    path = tmpdir.join('edges.csv')
    write_edge_list(network, str(path))
    return str(path)


def _read_json(directory, name):
    return json.loads(directory.join(name).read())


def test_empty_config_file(tmpdir):
    """
    Test if an empty configuration file selects every default.

    """
    path = tmpdir.join('config.yaml')
    path.write('')
    config = load_config(str(path), subcommand='estimate')
    assert config['family'] == 'probit'
    assert config['seed'] == 0
    assert set(config.provenance.values()) == {DEFAULT}


def test_config_precedence(tmpdir):
    """
    Test if flags override the file and the file overrides defaults.

    """
    path = tmpdir.join('config.yaml')
    path.write('reps: 100\nseed: 7\n')
    config = load_config(str(path), {'reps': 50}, 'simulate')
    assert config['reps'] == 50
    assert config.provenance['reps'] == FLAG
    assert config['seed'] == 7
    assert config.provenance['seed'] == FILE
    assert config.provenance['jobs'] == DEFAULT


def test_config_defaults_not_shared():
    """
    Test if list defaults are copied into every configuration.

    """
    config = load_config()
    config.values['effects'].append('clustering')
    assert load_config()['effects'] == ['probability']


def test_unknown_config_key(tmpdir):
    """
    Test if an unknown key in the file is reported by name.

    """
    path = tmpdir.join('config.yaml')
    path.write('seed: 1\nzeta: 2\nbogus: 3\n')
    with pytest.raises(UnknownConfigKey) as info:
        load_config(str(path))
    assert info.value.key == 'bogus'


@pytest.mark.parametrize('values', [
    {'jobs': 'many'},
    {'family': 3},
    {'filter': 'yes'},
    {'covariates': 'x1'}
])
def test_invalid_config_value(values):
    """
    Test if values of the wrong type are rejected.

    """
    with pytest.raises(ConfigError):
        validate_config(values)


def test_config_not_a_mapping(tmpdir):
    """
    Test if a configuration file must hold a mapping.

    """
    path = tmpdir.join('config.yaml')
    path.write('- seed\n')
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_config_key_equals_value(tmpdir):
    """
    Test if a ``key=value`` file is refused with the expected format.

    """
    path = tmpdir.join('config.yaml')
    path.write('reps=100\n')
    with pytest.raises(ConfigError) as info:
        load_config(str(path))
    assert 'key: value' in info.value.detail


def test_manifest_round_trip():
    """
    Test if a manifest rebuilds the configuration it was written from.

    """
    config = load_config(flags={'seed': 3}, subcommand='jackknife')
    manifest = json.loads(json.dumps(config.to_manifest()))
    assert manifest['seed'] == 3
    again = RunConfig.from_manifest(manifest)
    assert again.values == config.values
    assert again.provenance == config.provenance
    assert again.subcommand == 'jackknife'


def test_main_estimate(tmpdir, edge_list, capsys):
    """
    Test if ``estimate`` writes results, summary and manifest.

    """
    out = tmpdir.join('out')
    assert main(['estimate', '--input', edge_list, '--out', str(out)]) == (
        EXIT_OK)
    results = _read_json(out, 'results.json')
    assert results['covariates'] == ['x1']
    assert len(results['se']) == 1
    assert results['diagnostics']['converged']
    assert out.join('summary.csv').read().startswith('coefficient,')
    manifest = _read_json(out, 'manifest.json')
    assert manifest['subcommand'] == 'estimate'
    assert manifest['provenance']['input'] == FLAG
    assert 'x1' in capsys.readouterr().out


@pytest.mark.parametrize('arguments,key,expected', [
    (['jackknife', '--variant', 'weighted'], 'variant', 'weighted'),
    (['jackknife', '--variant', 'double_agent'], 'variant', 'double_agent'),
    (['jackknife', '--variant', 'double'], 'variant', 'double_agent'),
    (['effects', '--effects', 'probability,marginal:x1'], 'n_nodes', 12),
    (['test', '--statistic', 'reciprocity'], 'n_nodes', 12)
])
def test_main_subcommands(tmpdir, edge_list, arguments, key, expected):
    """
    Test if the estimation subcommands run on an edge list.

    """
    out = tmpdir.join('out')
    assert main(arguments + ['--input', edge_list, '--out', str(out)]) == (
        EXIT_OK)
    assert _read_json(out, 'results.json')[key] == expected


def test_main_effects_results(tmpdir, edge_list):
    """
    Test if every requested effect is reported.

    """
    out = tmpdir.join('out')
    main(['effects', '--input', edge_list, '--out', str(out), '--effects',
          'probability,clustering'])
    names = [e['name'] for e in _read_json(out, 'results.json')['effects']]
    assert names == ['link_probability', 'clustering']


@pytest.mark.parametrize('arguments', [
    ['estimate', '--bogus'],
    [],
    ['jackknife', '--variant', 'textbook']
])
def test_main_invalid_arguments(arguments):
    """
    Test if invalid command lines exit with the input error code.

    """
    assert main(arguments) == EXIT_INPUT


def test_main_missing_input(tmpdir):
    """
    Test if estimation without an edge list is an input error.

    """
    assert main(['estimate', '--out', str(tmpdir)]) == EXIT_INPUT


def test_main_unknown_config_key(tmpdir, edge_list):
    """
    Test if an unknown configuration key exits with the input error code.

    """
    path = tmpdir.join('config.yaml')
    path.write('bogus: 1\n')
    assert main(['estimate', '--config', str(path), '--input',
                 edge_list]) == EXIT_INPUT


def test_main_non_convergence(mocker, tmpdir, edge_list):
    """
    Test if a failed fit exits with the numerical error code.

    """
    mocker.patch('dyadnet.cli.fit', side_effect=NonConvergence(200, 1.0))
    assert main(['estimate', '--input', edge_list, '--out',
                 str(tmpdir)]) == EXIT_NUMERICAL


def test_main_partition_dump(tmpdir):
    """
    Test if a partition can be dumped without an edge list.

    """
    out = tmpdir.join('out')
    assert main(['partition-dump', '--n-nodes', '7', '--l', '2', '--out',
                 str(out)]) == EXIT_OK
    dump = _read_json(out, 'results.json')
    assert dump['n_nodes'] == 7
    assert len(dump['sets']) == 3
    assert not out.join('summary.csv').check()


def test_main_invalid_block_size(tmpdir):
    """
    Test if a block size that does not divide ``N - 1`` is refused.

    """
    assert main(['partition-dump', '--n-nodes', '10', '--l', '2', '--out',
                 str(tmpdir)]) == EXIT_INPUT


def test_main_simulate(tmpdir, capsys):
    """
    Test if a tiny Monte Carlo run writes its table and raw rows.

    """
    out = tmpdir.join('out')
    assert main(['simulate', '--n-nodes', '10', '--reps', '2',
                 '--estimators', 'mle,j', '--seed', '4', '--out',
                 str(out)]) == EXIT_OK
    assert out.join('replications.csv').check()
    assert out.join('summary.csv').read().startswith('statistic')
    results = _read_json(out, 'results.json')
    assert results['design']['n_reps'] == 2
    assert capsys.readouterr().out.startswith('dense (')


def test_main_simulate_invalid_design(tmpdir):
    """
    Test if an unknown design is an input error.

    """
    assert main(['simulate', '--design', 'huge', '--out',
                 str(tmpdir)]) == EXIT_INPUT


@pytest.mark.parametrize('arguments,expected', [
    (['simulate', '--n', '20', '--max-iter', '5', '--tol', '1e-6'],
     {'n_nodes': 20, 'max_iterations': 5, 'gradient_tolerance': 1e-6}),
    (['partition-dump', '--n-nodes', '7', '--leave-l', '2'],
     {'n_nodes': 7, 'l': 2}),
    (['effects', '--effect', 'clustering', '--covariate-cols', 'a,b'],
     {'effects': ['clustering'], 'covariates': ['a', 'b']}),
    (['test', '--bootstrap-refit'], {'refit': True}),
    (['jackknife', '--variant', 'split'], {'variant': 'split_sample'})
])
def test_flag_aliases(arguments, expected):
    """
    Test if the short flag spellings fill the same settings.

    """
    namespace = vars(build_parser().parse_args(arguments))
    for key, value in expected.items():
        assert namespace[key] == value


def test_main_plain_leave_l(tmpdir):
    """
    Test if the plain jackknife honors the leave-out block size.

    """
    data, _ = make_network('logit', 13, 2)
    path = tmpdir.join('edges.csv')
    write_edge_list(data, str(path))
    out = tmpdir.join('out')
    assert main(['jackknife', '--variant', 'plain', '--leave-l', '3',
                 '--family', 'logit', '--input', str(path), '--out',
                 str(out)]) == EXIT_OK
    results = _read_json(out, 'results.json')
    assert results['l'] == 3
    assert results['variant'] == 'leave_l'
    assert len(results['per_k_diagnostics']) == 4


def test_config_variant_spelling(tmpdir):
    """
    Test if a short variant spelling in the file selects the variant.

    """
    path = tmpdir.join('config.yaml')
    path.write('variant: double\n')
    assert load_config(str(path), subcommand='jackknife')['variant'] == (
        'double_agent')


def test_main_logs_load_once(tmpdir, edge_list, caplog):
    """
    Test if loading the edge list is logged once per run.

    """
    main(['estimate', '--input', edge_list, '--out', str(tmpdir),
          '--log-level', 'info'])
    loaded = [r for r in caplog.records if r.getMessage().startswith(
        'Loaded ')]
    assert len(loaded) == 1
