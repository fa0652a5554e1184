"""
This module contains the `RunConfigValidator`.

The `RunConfigValidator` extends the `jsonschema.Draft4Validator`. Run
configuration files are validated against `RUN_CONFIG_SCHEMA` before they
are merged with the command line flags.

"""
from jsonschema import Draft4Validator
from jsonschema.validators import extend

from dyadnet import constants


def _string_list():
    return {'type': 'array', 'items': {'type': 'string'}}


def _positive_integer():
    return {'type': 'integer', 'minimum': 1}


#: The schema of a run configuration file. Keys are the long command line
#: flags with dashes replaced by underscores.
RUN_CONFIG_SCHEMA = {
    'type': 'object',
    'additionalProperties': False,
    'properties': {
        'input': {'type': ['string', 'null']},
        'out': {'type': 'string'},
        'family': {'type': 'string'},
        'seed': {'type': 'integer'},
        'jobs': _positive_integer(),
        'log_level': {
            'enum': ['debug', 'info', 'warning', 'error', 'critical']
        },
        'sender_col': {'type': 'string'},
        'receiver_col': {'type': 'string'},
        'outcome_col': {'type': 'string'},
        'covariates': _string_list(),
        'filter': {'type': 'boolean'},
        'max_iterations': _positive_integer(),
        'gradient_tolerance': {'type': 'number', 'exclusiveMinimum': True,
                               'minimum': 0},
        'penalty_b': {'type': 'number', 'exclusiveMinimum': True,
                      'minimum': 0},
        'variant': {'enum': [constants.PLAIN, constants.LEAVE_L,
                             constants.WEIGHTED, constants.SPLIT_SAMPLE,
                             constants.DOUBLE_AGENT]},
        'l': _positive_integer(),
        'relabels': _positive_integer(),
        'xi_variant': {'enum': ['block_inverse', 'direct']},
        'effects': _string_list(),
        'target': {'enum': ['conditional', 'population']},
        'allow_large': {'type': 'boolean'},
        'statistic': {
            'enum': ['covariance_form', 'triangle_count_form', 'reciprocity']
        },
        'n_boot': {'type': 'integer', 'minimum': 0},
        'refit': {'type': 'boolean'},
        'design': {'type': 'string'},
        'n_nodes': {'type': 'integer', 'minimum': constants.MIN_NODES},
        'theta': {'type': 'number'},
        'c_lower': {'type': ['number', 'null']},
        'c_upper': {'type': ['number', 'null']},
        'reps': _positive_integer(),
        'estimators': {
            'type': 'array',
            'items': {'enum': list(constants.ESTIMATORS)}
        },
        'fe_mode': {'enum': ['shared', 'independent']},
        'layout': {'enum': ['standard', 'comparison']},
        'designs': _string_list(),
        'draws': _positive_integer()
    }
}


#: This extended validator checks run configuration files.
RunConfigValidator = extend(Draft4Validator, {})
