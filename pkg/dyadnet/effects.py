"""
This module contains fixed effect averages and network statistics.

An average is the mean of a moment ``m`` over every instance ``lambda`` of
a pattern: an ordered tuple of ``p`` distinct agents together with ``r``
directed observations among them. A single observation gives the simple
averages (link probabilities, marginal effects), triads give clustering
and transitivity statistics.

Instances are enumerated in stripes of a common first agent. Stripes may be
reduced on a thread pool; partial sums are always added in stripe order.

"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from functools import partial

import numpy as np

from dyadnet.data import filter_degenerate
from dyadnet.data import NetworkData
from dyadnet.errors import DyadnetError
from dyadnet.errors import InputError
from dyadnet.errors import PatternTooLarge
from dyadnet.errors import PatternTooLargeForLeaveOut
from dyadnet.errors import UnsupportedFamily
from dyadnet.estimator import edge_terms
from dyadnet.estimator import FitConfig
from dyadnet.families import get_family
from dyadnet.families import linear_index
from dyadnet.families import ParameterSet
from dyadnet.jackknife import combine
from dyadnet.jackknife import jackknife_beta
from dyadnet.partition import build_partition
from dyadnet.partition import edge_mask
from dyadnet.utils import add_optional
from dyadnet.utils import rng_stream


log = logging.getLogger('dyadnet')

#: Relative step of the central differences of an average in the
#: parameters.
FD_STEP = 1e-5

#: Four-agent patterns are only enumerated up to this many nodes unless
#: explicitly allowed.
MAX_NODES_P4 = 150

CONDITIONAL = 'conditional'
POPULATION = 'population'

MARGINAL_DERIVATIVE = 'marginal_derivative'
DISCRETE_DIFFERENCE = 'discrete_difference'
CUSTOM_MOMENT = 'custom_moment'

COVARIANCE_FORM = 'covariance_form'
TRIANGLE_COUNT_FORM = 'triangle_count_form'
RECIPROCITY = 'reciprocity'


@dataclass(frozen=True)
class LambdaPattern:
    """
    A pattern of directed observations among placeholder agents.

    Placeholders are numbered ``0 .. p - 1``.

    >>> LambdaPattern(((0, 1), (0, 2), (2, 1))).p
    3

    Args:
        edges (tuple): The ``r`` observations as ``(sender, receiver)``
            placeholder pairs.
        uses_outcomes (bool): Whether the moment depends on the outcomes of
            the observations.

    """
    edges: tuple
    uses_outcomes: bool = False

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, 'edges', edges)
        if not edges:
            raise ValueError('a pattern needs at least one observation')
        if any(a == b for a, b in edges):
            raise ValueError('a pattern cannot contain self pairs')
        slots = {slot for edge in edges for slot in edge}
        if slots != set(range(len(slots))):
            raise ValueError('placeholders must be numbered 0 .. p - 1')

    @property
    def r(self):
        """
        `int`: The number of observations.

        """
        return len(self.edges)

    @property
    def p(self):
        """
        `int`: The number of agents.

        """
        return 1 + max(slot for edge in self.edges for slot in edge)

    def observations(self, agents):
        """
        Map instances to their observations.

        Args:
            agents: ``M x p`` agent tuples.

        Returns:
            list: One ``(senders, receivers)`` pair of index arrays per
            observation of the pattern.

        """
        return [(agents[:, a], agents[:, b]) for a, b in self.edges]


#: A single observation.
DYAD = LambdaPattern(((0, 1),))

#: A transitive triangle ``i -> j``, ``i -> k``, ``k -> j``.
TRIAD = LambdaPattern(((0, 1), (0, 2), (2, 1)))


@dataclass
class EdgeState:
    """
    Per-observation quantities at a parameter value.

    """
    outcomes: np.ndarray
    covariates: np.ndarray
    beta: np.ndarray
    eta: np.ndarray
    prob: np.ndarray
    slope: np.ndarray
    family: object

    @classmethod
    def at(cls, data, family, params):
        """
        Evaluate the index, mean and mean slope of every observation.

        """
        family = get_family(family)
        eta = linear_index(data.covariates, params.beta, params.pi)
        mask = data.mask
        return cls(data.outcomes, data.covariates, params.beta, eta,
                   family.mean(eta) * mask, family.mean_derivative(eta) * mask,
                   family)


@dataclass
class EffectSpec:
    """
    An average of a moment over the instances of a pattern.

    Args:
        name (str): A label for reports.
        kind (str): ``marginal_derivative``, ``discrete_difference`` or
            ``custom_moment``.
        pattern (LambdaPattern): The pattern.
        moment: ``moment(state, agents)`` evaluates ``m`` on ``M x p``
            agent tuples given an `EdgeState`.
        expected: ``expected(state, agents)`` evaluates the conditional mean
            of ``m`` given the covariates and fixed effects. Only needed when
            the moment uses outcomes.
        target (str): ``conditional`` or ``population``.
        binary_only (bool): Whether the moment needs a binary family.

    """
    name: str
    kind: str
    pattern: LambdaPattern
    moment: object
    expected: object = None
    target: str = CONDITIONAL
    binary_only: bool = False

    def __post_init__(self):
        if self.pattern.uses_outcomes and self.expected is None:
            raise ValueError('outcome dependent moments need an expectation')
        if self.target not in (CONDITIONAL, POPULATION):
            raise ValueError('unknown target {!r}'.format(self.target))

    def expected_values(self, state, agents):
        """
        Evaluate the conditional mean of the moment.

        """
        if self.expected is None:
            return self.moment(state, agents)
        return self.expected(state, agents)

    def with_target(self, target):
        """
        Get a copy of this spec for another target.

        """
        return EffectSpec(self.name, self.kind, self.pattern, self.moment,
                          self.expected, target, self.binary_only)


@dataclass
class EffectResult:
    """
    A plug-in and a bias corrected average with its standard error.

    Args:
        name (str): The effect label.
        target (str): ``conditional`` or ``population``.
        delta_plugin (float): The full sample average.
        delta_jackknife (float): The jackknife corrected average.
        variance (float): The asymptotic variance.
        se (float): The standard error.
        diagnostics (dict): Leave-out averages and enumeration counts.

    """
    name: str
    target: str
    delta_plugin: float
    delta_jackknife: float
    variance: float
    se: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def t_plugin(self):
        """
        `float`: The plug-in average in standard error units.

        """
        return self.delta_plugin / self.se if self.se > 0 else np.nan

    @property
    def t_jackknife(self):
        """
        `float`: The corrected average in standard error units.

        """
        return self.delta_jackknife / self.se if self.se > 0 else np.nan

    def to_dict(self):
        """
        Get the result as a JSON friendly dict.

        """
        data = {
            'name': self.name,
            'target': self.target,
            'delta_plugin': self.delta_plugin,
            'delta_jackknife': self.delta_jackknife,
            'variance': self.variance,
            'se': self.se,
            't_plugin': self.t_plugin,
            't_jackknife': self.t_jackknife
        }
        add_optional(data, 'diagnostics', self.diagnostics)
        return data


def _pair(agents):
    return agents[:, 0], agents[:, 1]


def _triple(agents):
    return agents[:, 0], agents[:, 1], agents[:, 2]


def _link_probability(state, agents):
    return state.prob[_pair(agents)]


def _marginal(k, state, agents):
    return state.slope[_pair(agents)] * state.beta[k]


def _difference(k, state, agents):
    index = _pair(agents)
    base = state.eta[index] - state.covariates[index][:, k] * state.beta[k]
    return (state.family.mean(base + state.beta[k]) -
            state.family.mean(base))


def _triangles(state, agents):
    i, j, k = _triple(agents)
    p = state.prob
    return p[i, j] * p[i, k] * p[k, j]


def _transitivity_covariance(state, agents):
    i, j, k = _triple(agents)
    y = state.outcomes
    return (y[i, j] - state.prob[i, j]) * y[i, k] * y[k, j]


def _triangle_excess(state, agents):
    i, j, k = _triple(agents)
    y = state.outcomes
    return y[i, j] * y[i, k] * y[k, j] - _triangles(state, agents)


def _reciprocity(state, agents):
    i, j = _pair(agents)
    y = state.outcomes
    return (y[i, j] - state.prob[i, j]) * y[j, i]


def _zero(state, agents):
    return np.zeros(len(agents))


def link_probability(target=CONDITIONAL):
    """
    Get the average link probability ``mean(P(Y_ij = 1))``.

    """
    return EffectSpec('link_probability', CUSTOM_MOMENT, DYAD,
                      _link_probability, target=target)


def marginal_effect(k, name=None, target=CONDITIONAL):
    """
    Get the average marginal effect of continuous covariate ``k``.

    The moment is the derivative of the conditional mean in ``x_k``,
    ``mean'(eta_ij) * beta_k``.

    """
    return EffectSpec('marginal:{}'.format(name or k), MARGINAL_DERIVATIVE,
                      DYAD, partial(_marginal, k), target=target)


def discrete_difference(k, name=None, target=CONDITIONAL):
    """
    Get the average effect of switching binary covariate ``k`` on.

    The moment is ``mean(eta with x_k = 1) - mean(eta with x_k = 0)``.

    """
    return EffectSpec('diff:{}'.format(name or k), DISCRETE_DIFFERENCE, DYAD,
                      partial(_difference, k), target=target)


def expected_triangles(target=CONDITIONAL):
    """
    Get the expected share of transitive triangles ``p_ij p_ik p_kj``.

    """
    return EffectSpec('clustering', CUSTOM_MOMENT, TRIAD, _triangles,
                      target=target, binary_only=True)


def transitivity(kind=COVARIANCE_FORM):
    """
    Get a transitivity test statistic.

    The covariance form averages ``(Y_ij - p_ij) Y_ik Y_kj``, the triangle
    count form ``Y_ij Y_ik Y_kj - p_ij p_ik p_kj``. Both have mean zero
    under a dyadic model.

    """
    if kind == COVARIANCE_FORM:
        moment = _transitivity_covariance
    elif kind == TRIANGLE_COUNT_FORM:
        moment = _triangle_excess
    elif kind == RECIPROCITY:
        return reciprocity()
    else:
        raise InputError('unknown statistic {!r}'.format(kind))
    pattern = LambdaPattern(TRIAD.edges, uses_outcomes=True)
    return EffectSpec(kind, CUSTOM_MOMENT, pattern, moment, _zero,
                      binary_only=True)


def reciprocity():
    """
    Get the reciprocity test statistic ``(Y_ij - p_ij) Y_ji``.

    """
    pattern = LambdaPattern(((0, 1), (1, 0)), uses_outcomes=True)
    return EffectSpec(RECIPROCITY, CUSTOM_MOMENT, pattern, _reciprocity,
                      _zero, binary_only=True)


def effect_from_name(text, covariate_names, target=CONDITIONAL):
    """
    Parse a command line effect name.

    Accepted names are ``probability``, ``marginal:VAR``, ``diff:VAR``,
    ``clustering``, ``transitivity`` and ``reciprocity``.

    Raises:
        dyadnet.errors.InputError: If the name or covariate is unknown.

    """
    kind, _, variable = text.partition(':')
    if kind in ('marginal', 'diff'):
        if variable not in covariate_names:
            raise InputError('unknown covariate {!r}'.format(variable))
        k = list(covariate_names).index(variable)
        builder = marginal_effect if kind == 'marginal' else (
            discrete_difference)
        return builder(k, variable, target)
    if kind == 'probability':
        return link_probability(target)
    if kind == 'clustering':
        return expected_triangles(target)
    if kind == 'transitivity':
        return transitivity(COVARIANCE_FORM)
    if kind == 'reciprocity':
        return reciprocity()
    raise InputError('unknown effect {!r}'.format(text))


def instance_count(n_nodes, p):
    """
    Get the number of instances ``N! / (N - p)!``.

    >>> instance_count(5, 3)
    60

    """
    return math.perm(n_nodes, p)


def _check_size(n_nodes, p, allow_large):
    if p > n_nodes:
        raise PatternTooLarge(p, n_nodes)
    if p >= 4 and n_nodes > MAX_NODES_P4 and not allow_large:
        raise PatternTooLarge(p, n_nodes)


def _ordered_tuples(values, k):
    # All ordered k-tuples of distinct entries of ``values``, in
    # lexicographic order.
    values = np.asarray(values, dtype=int)
    tuples = np.empty((1, 0), dtype=int)
    for _ in range(k):
        candidates = np.repeat(tuples, len(values), axis=0)
        new = np.tile(values, len(tuples))
        keep = ~(candidates == new[:, None]).any(axis=1)
        tuples = np.column_stack([candidates[keep], new[keep]])
    return tuples


def stripe(n_nodes, p, i):
    """
    Get the instances whose first agent is ``i``.

    >>> stripe(3, 2, 1).tolist()
    [[1, 0], [1, 2]]

    """
    rest = _ordered_tuples(np.delete(np.arange(n_nodes), i), p - 1)
    return np.column_stack([np.full(len(rest), i, dtype=int), rest])


def enumerate_instances(n_nodes, p, allow_large=False):
    """
    Enumerate all ordered tuples of ``p`` distinct agents.

    Args:
        n_nodes (int): The number of nodes.
        p (int): The tuple length.
        allow_large (bool): Allow four-agent patterns on large networks.

    Yields:
        numpy.ndarray: The ``M x p`` instances of one stripe, for first
        agents ``0 .. N - 1`` in order.

    Raises:
        dyadnet.errors.PatternTooLarge: If the enumeration is refused.

    """
    _check_size(n_nodes, p, allow_large)
    for i in range(n_nodes):
        yield stripe(n_nodes, p, i)


def _reduce(func, n_nodes, p, jobs=1, allow_large=False):
    # Apply func to every stripe and sum the results in stripe order.
    _check_size(n_nodes, p, allow_large)

    def task(i):
        return func(stripe(n_nodes, p, i))
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            parts = list(executor.map(task, range(n_nodes)))
    else:
        parts = [task(i) for i in range(n_nodes)]
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def _instance_mask(pattern, agents, mask):
    included = np.ones(len(agents))
    for senders, receivers in pattern.observations(agents):
        included = included * mask[senders, receivers]
    return included


def plugin_average(spec, state, n_nodes, mask=None, jobs=1,
                   allow_large=False):
    """
    Average the moment over all instances.

    Args:
        spec (EffectSpec): The effect.
        state (EdgeState): The per-observation quantities.
        n_nodes (int): The number of nodes.
        mask: Optional ``N x N`` 0/1 matrix; instances with an excluded
            observation contribute zero.
        jobs (int): Threads for the stripe reduction.
        allow_large (bool): Allow four-agent patterns on large networks.

    Returns:
        float: ``sum(m * mask) / (N! / (N - p)!)``.

    """
    pattern = spec.pattern

    def stripe_sum(agents):
        values = spec.moment(state, agents)
        if mask is not None:
            values = values * _instance_mask(pattern, agents, mask)
        return float(np.sum(values))
    total = _reduce(stripe_sum, n_nodes, pattern.p, jobs, allow_large)
    return total / instance_count(n_nodes, pattern.p)


def _check_family(spec, family):
    if spec.binary_only and not family.is_binary:
        raise UnsupportedFamily(family.family_id, spec.name)


def average_effect(fit_full, fits_leaveout, spec, data, partition=None,
                   family=None, jobs=1, allow_large=False, variance=True):
    """
    Compute a plug-in and a jackknife corrected average.

    Leave-out averages use the leave-out estimates. When the moment uses
    outcomes, only instances whose observations all lie in the leave-out
    sample count, rescaled by ``N_l / (N_l - r)`` for the instances lost.

    Args:
        fit_full (dyadnet.estimator.FitResult): The full sample fit.
        fits_leaveout (list): The leave-out fits in set order; `None`
            entries are skipped.
        spec (EffectSpec): The effect.
        data (dyadnet.data.NetworkData): The network.
        partition (dyadnet.partition.LeaveOutPartition): The partition the
            leave-out fits used; inferred from their number by default.
        family: The model family, ``fit_full.family`` by default.
        jobs (int): Threads for the stripe reductions.
        allow_large (bool): Allow four-agent patterns on large networks.
        variance (bool): Whether to compute the standard error.

    Returns:
        EffectResult: The averages.

    Raises:
        dyadnet.errors.PatternTooLargeForLeaveOut: If the moment reads
            outcomes and ``r`` is at least the number of leave-out sets
            minus one.

    """
    family = get_family(family if family is not None else fit_full.family)
    _check_family(spec, family)
    n = data.n_nodes
    n_sets = len(fits_leaveout)
    l = (n - 1) // n_sets  # noqa: E741
    partition = partition or build_partition(n, l)
    r = spec.pattern.r
    if spec.pattern.uses_outcomes and r >= n_sets - 1:
        raise PatternTooLargeForLeaveOut(r, n)
    plugin = plugin_average(spec, EdgeState.at(data, family, fit_full.params),
                            n, jobs=jobs, allow_large=allow_large)
    leaveout = []
    for k, result in enumerate(fits_leaveout, start=1):
        if result is None:
            leaveout.append(None)
            continue
        state = EdgeState.at(data, family, result.params)
        if spec.pattern.uses_outcomes:
            value = n_sets / (n_sets - r) * plugin_average(
                spec, state, n, edge_mask(partition, k), jobs, allow_large)
        else:
            value = plugin_average(spec, state, n, jobs=jobs,
                                   allow_large=allow_large)
        leaveout.append(value)
    corrected = float(combine(plugin, leaveout, n, l))
    v, se = np.nan, np.nan
    if variance:
        if spec.target == POPULATION:
            v = population_variance(fit_full, spec, data, family, jobs,
                                    allow_large)
            se = float(np.sqrt(v / n))
        else:
            v = conditional_variance(fit_full, spec, data, family, jobs,
                                     allow_large)
            se = float(np.sqrt(v) / n)
    return EffectResult(spec.name, spec.target, plugin, corrected, v, se, {
        'leaveout': leaveout,
        'l': l,
        'n_instances': instance_count(n, spec.pattern.p)
    })


def involving(n_nodes, p, i):
    """
    Get the instances that contain agent ``i`` in any position.

    >>> involving(3, 2, 1).tolist()
    [[1, 0], [1, 2], [0, 1], [2, 1]]

    """
    rest = _ordered_tuples(np.delete(np.arange(n_nodes), i), p - 1)
    column = np.full((len(rest), 1), i, dtype=int)
    return np.concatenate([
        np.hstack([rest[:, :q], column, rest[:, q:]]) for q in range(p)])


def effect_gradient(fit, spec, data, family=None, jobs=1, allow_large=False):
    """
    Differentiate the plug-in average in ``(beta, alpha, gamma)``.

    Central differences with relative step `FD_STEP` are used, holding the
    outcomes fixed. A moment may only read observations among its own
    agents, so the difference in ``alpha_i`` or ``gamma_i`` is taken over
    the instances that contain ``i``.

    Returns:
        numpy.ndarray: The gradient, a vector of length ``K + 2N``.

    """
    family = get_family(family if family is not None else fit.family)
    theta = fit.params.to_vector()
    n, n_beta = data.n_nodes, data.n_beta
    p = spec.pattern.p
    _check_size(n, p, allow_large)
    count = instance_count(n, p)

    def state(vector):
        return EdgeState.at(data, family,
                            ParameterSet.from_vector(vector, n_beta))

    def central(c, value):
        step = FD_STEP * max(1.0, abs(theta[c]))
        upper, lower = theta.copy(), theta.copy()
        upper[c] += step
        lower[c] -= step
        return (value(upper) - value(lower)) / (2 * step)

    def average(vector):
        return plugin_average(spec, state(vector), n, jobs=jobs,
                              allow_large=allow_large)

    def fixed_effect(c):
        agents = involving(n, p, (c - n_beta) % n)

        def local_sum(vector):
            return float(np.sum(spec.moment(state(vector), agents)))
        return central(c, local_sum) / count
    gradient = np.zeros_like(theta)
    for c in range(n_beta):
        gradient[c] = central(c, average)
    columns = range(n_beta, len(theta))
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            gradient[n_beta:] = list(executor.map(fixed_effect, columns))
    else:
        gradient[n_beta:] = [fixed_effect(c) for c in columns]
    return gradient


def dyad_sums(spec, state, n_nodes, jobs=1, allow_large=False):
    """
    Compute ``s_ij``, the scaled sum of ``m - E[m]`` over the instances
    that contain observation ``(i, j)`` or ``(j, i)``.

    Each instance counts once per dyad it touches.

    Returns:
        numpy.ndarray: The symmetric ``N x N`` matrix of ``s_ij``.

    """
    pattern = spec.pattern

    def stripe_sums(agents):
        deviation = (spec.moment(state, agents) -
                     spec.expected_values(state, agents))
        sums = np.zeros((n_nodes, n_nodes))
        seen = []
        for senders, receivers in pattern.observations(agents):
            lo = np.minimum(senders, receivers)
            hi = np.maximum(senders, receivers)
            fresh = np.ones(len(agents), dtype=bool)
            for lo_seen, hi_seen in seen:
                fresh &= ~((lo == lo_seen) & (hi == hi_seen))
            np.add.at(sums, (lo[fresh], hi[fresh]), deviation[fresh])
            seen.append((lo, hi))
        return sums
    sums = _reduce(stripe_sums, n_nodes, pattern.p, jobs, allow_large)
    scale = 1.0 / math.perm(n_nodes - 2, pattern.p - 2)
    return scale * (sums + sums.T)


def dyad_influence(fit, spec, data, family=None, jobs=1, allow_large=False):
    """
    Compute the dyad influence terms ``h_ij`` and ``s_ij``.

    ``h_ij = N z' (d_theta ell_ij + d_theta ell_ji)`` with
    ``z = inv(H) d_theta Delta`` propagates the estimation noise of the
    parameters; ``s_ij`` is the outcome noise of the moment itself, zero
    for outcome free moments.

    Returns:
        tuple: The symmetric ``N x N`` matrices ``(h, s)``.

    """
    family = get_family(family if family is not None else fit.family)
    n, n_beta = data.n_nodes, data.n_beta
    gradient = effect_gradient(fit, spec, data, family, jobs, allow_large)
    z = fit.hessian.solve(gradient)
    z_beta, z_alpha, z_gamma = z[:n_beta], z[n_beta:n_beta + n], z[n_beta + n:]
    _, d1, _, _ = edge_terms(data, family, fit.params)
    loading = (data.covariates @ z_beta + z_alpha[:, None] +
               z_gamma[None, :])
    u = fit.obs_weights * d1 * loading
    h = n * (u + u.T)
    if spec.pattern.uses_outcomes:
        s = dyad_sums(spec, EdgeState.at(data, family, fit.params), n, jobs,
                      allow_large)
    else:
        s = np.zeros((n, n))
    return h, s


def conditional_variance(fit, spec, data, family=None, jobs=1,
                         allow_large=False):
    """
    Compute the variance of an average around its conditional mean.

    This is ``sum_{j<i} (h_ij + s_ij)^2 / (N (N - 1))``; the standard error
    of the average is its square root divided by ``N``.

    Returns:
        float: The variance.

    """
    h, s = dyad_influence(fit, spec, data, family, jobs, allow_large)
    n = data.n_nodes
    lower = np.tril_indices(n, -1)
    return float(np.sum((h + s)[lower] ** 2) / (n * (n - 1)))


def agent_projections(fit, spec, data, family=None, jobs=1,
                      allow_large=False):
    """
    Compute the agent level projections ``mu_i`` of the expected moment.

    ``mu_i = sum over instances containing i of (E[m] - mu) / ((N - 1)! /
    (N - p)!)`` where ``mu`` is the mean of ``E[m]`` over all instances.

    Returns:
        numpy.ndarray: The ``N`` projections.

    """
    family = get_family(family if family is not None else fit.family)
    state = EdgeState.at(data, family, fit.params)
    n, p = data.n_nodes, spec.pattern.p

    def stripe_sums(agents):
        values = spec.expected_values(state, agents)
        sums = np.zeros(n + 1)
        for q in range(p):
            np.add.at(sums, agents[:, q], values)
        sums[n] = values.sum()
        return sums
    sums = _reduce(stripe_sums, n, p, jobs, allow_large)
    mean = sums[n] / instance_count(n, p)
    per_agent = math.perm(n - 1, p - 1)
    return (sums[:n] - p * per_agent * mean) / per_agent


def population_variance(fit, spec, data, family=None, jobs=1,
                        allow_large=False):
    """
    Compute the variance of an average around its population mean.

    The average is a U-statistic in the agents; its variance is the mean
    square of `agent_projections` and the standard error is
    ``sqrt(variance / N)``.

    Returns:
        float: The variance.

    """
    projections = agent_projections(fit, spec, data, family, jobs,
                                    allow_large)
    return float(np.mean(projections ** 2))


def _require_binary(family, operation):
    if not family.is_binary:
        raise UnsupportedFamily(family.family_id, operation)


def _bootstrap_draw(fit, data, spec, family, seed, b, refit, config):
    rng = rng_stream(seed, 'bootstrap', b)
    eta = linear_index(data.covariates, fit.params.beta, fit.params.pi)
    outcomes = family.simulate(eta, rng) * data.mask
    draw = NetworkData(outcomes, data.covariates, data.node_labels,
                       data.covariate_names)
    if not refit:
        return plugin_average(spec, EdgeState.at(draw, family, fit.params),
                              data.n_nodes)
    try:
        draw, _ = filter_degenerate(draw, family)
        index = {node: k for k, node in enumerate(data.node_labels)}
        kept = [index[node] for node in draw.node_labels]
        warm = config.with_warm_start(ParameterSet(
            fit.params.beta, fit.params.alpha[kept], fit.params.gamma[kept]))
        jackknife = jackknife_beta(draw, family, warm)
        return average_effect(jackknife.full_fit, jackknife.leaveout_fits,
                              spec, draw, family=family,
                              variance=False).delta_jackknife
    except DyadnetError as error:
        log.warning('Bootstrap draw %d skipped: %s', b, error)
        return None


def bootstrap_statistic_se(fit, data, statistic, n_boot=200, seed=0,
                           family=None, refit=False, config=None, jobs=1):
    """
    Compute a parametric bootstrap standard error of a statistic.

    Networks are drawn from the fitted link probabilities with the
    parameters held fixed, and the plug-in statistic is recomputed at the
    fitted parameters on every draw. With ``refit`` every draw is
    re-estimated and the jackknife corrected statistic is used instead.
    Draw ``b`` uses the random stream ``(seed, 'bootstrap', b)``.

    Args:
        fit (dyadnet.estimator.FitResult): The full sample fit.
        data (dyadnet.data.NetworkData): The network.
        statistic (EffectSpec): The statistic.
        n_boot (int): The number of draws.
        seed (int): The root seed.
        family: The model family, ``fit.family`` by default.
        refit (bool): Re-estimate on every draw.
        config (dyadnet.estimator.FitConfig): Solver options for ``refit``.
        jobs (int): Threads over draws.

    Returns:
        float: The standard deviation over draws.

    """
    family = get_family(family if family is not None else fit.family)
    _require_binary(family, 'bootstrap')
    config = config or FitConfig()

    def draw(b):
        return _bootstrap_draw(fit, data, statistic, family, seed, b, refit,
                               config)
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            values = list(executor.map(draw, range(n_boot)))
    else:
        values = [draw(b) for b in range(n_boot)]
    values = [value for value in values if value is not None]
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def transitivity_statistic(fit, data, kind=COVARIANCE_FORM, fits_leaveout=None,
                           partition=None, n_boot=0, seed=0, family=None,
                           config=None, jobs=1, refit=False):
    """
    Compute a jackknife corrected and studentized transitivity statistic.

    Args:
        fit (dyadnet.estimator.FitResult): The full sample fit.
        data (dyadnet.data.NetworkData): The network.
        kind (str): ``covariance_form``, ``triangle_count_form`` or
            ``reciprocity``.
        fits_leaveout (list): Leave-out fits; computed when omitted.
        partition (dyadnet.partition.LeaveOutPartition): Their partition.
        n_boot (int): Studentize with a bootstrap of this many draws
            instead of the analytic standard error.
        seed (int): The bootstrap seed.
        family: The model family, ``fit.family`` by default.
        config (dyadnet.estimator.FitConfig): Solver options.
        jobs (int): The number of threads.
        refit (bool): Re-estimate on every bootstrap draw.

    Returns:
        EffectResult: The statistic; ``t_plugin`` and ``t_jackknife`` are
        the uncorrected and corrected test statistics.

    Raises:
        dyadnet.errors.UnsupportedFamily: If the family is not binary.

    """
    family = get_family(family if family is not None else fit.family)
    _require_binary(family, 'transitivity test')
    spec = transitivity(kind)
    if fits_leaveout is None:
        jackknife = jackknife_beta(data, family, config, partition, jobs,
                                   full_fit=fit)
        fits_leaveout = jackknife.leaveout_fits
    result = average_effect(fit, fits_leaveout, spec, data, partition, family,
                            jobs, variance=not n_boot)
    if n_boot:
        result.se = bootstrap_statistic_se(fit, data, spec, n_boot, seed,
                                           family, refit, config, jobs)
        result.variance = (data.n_nodes * result.se) ** 2
        result.diagnostics['se_method'] = 'bootstrap'
        result.diagnostics['n_boot'] = n_boot
    else:
        result.diagnostics['se_method'] = 'analytic'
    return result


def expected_clustering(fit, data, family=None, fast=True):
    """
    Compute the expected share of transitive triangles.

    The fast path uses ``sum_k p_ik p_kj = (P P)_ij``, which already skips
    ``k in {i, j}`` since ``P`` has a zero diagonal.

    Args:
        fit (dyadnet.estimator.FitResult): The fit.
        data (dyadnet.data.NetworkData): The network.
        family: The model family, ``fit.family`` by default.
        fast (bool): Use the matrix product instead of enumerating triads.

    Returns:
        float: ``sum p_ij p_ik p_kj / (N (N - 1) (N - 2))``.

    """
    family = get_family(family if family is not None else fit.family)
    _require_binary(family, 'clustering')
    state = EdgeState.at(data, family, fit.params)
    n = data.n_nodes
    if not fast:
        return plugin_average(expected_triangles(), state, n)
    p = state.prob
    return float(np.sum(p * (p @ p)) / (n * (n - 1) * (n - 2)))
