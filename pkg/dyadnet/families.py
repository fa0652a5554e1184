"""
This module contains the link-level model families.

Every family is defined by a scalar objective ``ell(y, eta)`` of the outcome
and the linear index ``eta = x'beta + pi``, where ``pi = alpha_i + gamma_j``.
Because the parameters enter only through the index, the derivatives in
``(beta, pi)`` follow from the first two derivatives in ``eta``:

- ``d_beta = ell' x`` and ``d_pi = ell'``
- ``d_beta_beta = ell'' x x'``, ``d_beta_pi = ell'' x`` and
  ``d_pi_pi = ell''``

All rules are vectorized over arrays of edges.

.. testsetup::

    from dyadnet.families import *

"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import special

from dyadnet import constants
from dyadnet.errors import DomainError


log = logging.getLogger('dyadnet')

_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


@dataclass
class ParameterSet:
    """
    The common parameters and the sender and receiver fixed effects.

    Args:
        beta: The common parameters, shape ``(K,)``.
        alpha: The sender effects, shape ``(N,)``.
        gamma: The receiver effects, shape ``(N,)``.

    """
    beta: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float).reshape(-1)
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        self.gamma = np.asarray(self.gamma, dtype=float).reshape(-1)

    @property
    def pi(self):
        """
        `numpy.ndarray`: The ``N x N`` matrix of ``alpha_i + gamma_j``.

        """
        return self.alpha[:, None] + self.gamma[None, :]

    @property
    def phi(self):
        """
        `numpy.ndarray`: The stacked fixed effects ``(alpha, gamma)``.

        """
        return np.concatenate([self.alpha, self.gamma])

    @property
    def normalization_gap(self):
        """
        `float`: ``sum(alpha) - sum(gamma)``.

        """
        return float(self.alpha.sum() - self.gamma.sum())

    def to_vector(self):
        """
        Stack the parameters as ``(beta, alpha, gamma)``.

        Returns:
            numpy.ndarray: A vector of length ``K + 2N``.

        """
        return np.concatenate([self.beta, self.alpha, self.gamma])

    @classmethod
    def from_vector(cls, vector, n_beta):
        """
        Split a stacked ``(beta, alpha, gamma)`` vector.

        >>> p = ParameterSet.from_vector([1.0, 2.0, 3.0, 4.0, 5.0], 1)
        >>> p.alpha.tolist(), p.gamma.tolist()
        ([2.0, 3.0], [4.0, 5.0])

        Args:
            vector: The stacked vector.
            n_beta (int): The number of common parameters.

        Returns:
            ParameterSet: The split parameters.

        """
        vector = np.asarray(vector, dtype=float)
        n_nodes = (len(vector) - n_beta) // 2
        return cls(
            vector[:n_beta],
            vector[n_beta:n_beta + n_nodes],
            vector[n_beta + n_nodes:])

    def copy(self):
        """
        Get a deep copy of the parameters.

        """
        return ParameterSet(
            self.beta.copy(), self.alpha.copy(), self.gamma.copy())

    def permute(self, order):
        """
        Reorder the fixed effects so that new node ``i`` is old node
        ``order[i]``.

        """
        order = np.asarray(order)
        return ParameterSet(
            self.beta.copy(), self.alpha[order], self.gamma[order])


def linear_index(covariates, beta, pi):
    """
    Compute ``eta = x'beta + pi`` for arrays of edges.

    Args:
        covariates: Covariates of shape ``(..., K)``.
        beta: The common parameters, shape ``(K,)``.
        pi: The fixed effect index, broadcastable to ``covariates[..., 0]``.

    Returns:
        numpy.ndarray: The linear index.

    """
    return np.asarray(covariates, dtype=float) @ np.asarray(beta, float) + pi


def _probit_mills(eta):
    # phi(eta) / Phi(eta), evaluated in logs so the lower tail stays finite.
    return np.exp(-0.5 * eta * eta - _LOG_SQRT_2PI - special.log_ndtr(eta))


class ModelFamily:
    """
    A link-level objective with derivatives, mean and simulation rules.

    Use `get_family` to obtain one of the supported families.

    Args:
        family_id (str): One of `dyadnet.constants.FAMILIES`.

    """
    def __init__(self, family_id):  # noqa: D102
        if family_id not in constants.FAMILIES:
            raise DomainError(family_id, 'unknown family')
        self.family_id = family_id

    def __repr__(self):
        return '{0.__class__.__name__}({0.family_id!r})'.format(self)

    def __eq__(self, other):
        return (isinstance(other, ModelFamily) and
                other.family_id == self.family_id)

    def __hash__(self):
        return hash(self.family_id)

    @property
    def is_binary(self):
        """
        `bool`: Whether outcomes are 0/1 link indicators.

        """
        return self.family_id in constants.BINARY_FAMILIES

    @property
    def is_count(self):
        """
        `bool`: Whether outcomes are non-negative counts.

        """
        return self.family_id == constants.POISSON_QMLE

    def check_domain(self, y):
        """
        Check that outcomes lie in the family's domain.

        Raises:
            dyadnet.errors.DomainError: If any outcome is outside the
                domain.

        """
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise DomainError(self.family_id, 'non-finite outcome')
        if self.is_binary and not np.all((y == 0) | (y == 1)):
            raise DomainError(self.family_id, 'outcomes must be 0 or 1')
        if self.is_count and np.any(y < 0):
            raise DomainError(self.family_id, 'outcomes must be >= 0')

    def clamp(self, eta):
        """
        Apply the numeric guard band to a linear index.

        Only the probit log-CDF needs the guard band.

        Returns:
            tuple: The clamped index and the number of clamped entries.

        """
        eta = np.asarray(eta, dtype=float)
        if self.family_id != constants.PROBIT:
            return eta, 0
        clamped = np.clip(eta, -constants.ETA_GUARD, constants.ETA_GUARD)
        return clamped, int(np.count_nonzero(clamped != eta))

    def value(self, y, eta):
        """
        Evaluate ``ell(y, eta)``.

        """
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.family_id == constants.PROBIT:
            return (y * special.log_ndtr(eta) +
                    (1 - y) * special.log_ndtr(-eta))
        if self.family_id == constants.LOGIT:
            return y * eta - np.logaddexp(0, eta)
        if self.family_id == constants.GAUSSIAN_NLS:
            return -(y - eta) ** 2
        return y * eta - np.exp(eta)

    def d_eta(self, y, eta):
        """
        Evaluate the first derivative of ``ell`` in ``eta``.

        """
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.family_id == constants.PROBIT:
            return y * _probit_mills(eta) - (1 - y) * _probit_mills(-eta)
        if self.family_id == constants.LOGIT:
            return y - special.expit(eta)
        if self.family_id == constants.GAUSSIAN_NLS:
            return 2 * (y - eta)
        return y - np.exp(eta)

    def d_eta_eta(self, y, eta):
        """
        Evaluate the second derivative of ``ell`` in ``eta``.

        """
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.family_id == constants.PROBIT:
            upper = _probit_mills(eta)
            lower = _probit_mills(-eta)
            return (-y * upper * (eta + upper) -
                    (1 - y) * lower * (lower - eta))
        if self.family_id == constants.LOGIT:
            return -special.expit(eta) * special.expit(-eta)
        if self.family_id == constants.GAUSSIAN_NLS:
            return np.full(np.broadcast(y, eta).shape, -2.0)
        return np.broadcast_to(-np.exp(eta), np.broadcast(y, eta).shape)

    def mean(self, eta):
        """
        Evaluate the conditional mean of the outcome given the index.

        """
        eta = np.asarray(eta, dtype=float)
        if self.family_id == constants.PROBIT:
            return special.ndtr(eta)
        if self.family_id == constants.LOGIT:
            return special.expit(eta)
        if self.family_id == constants.GAUSSIAN_NLS:
            return eta
        return np.exp(eta)

    def mean_derivative(self, eta):
        """
        Evaluate the derivative of the conditional mean in the index.

        """
        eta = np.asarray(eta, dtype=float)
        if self.family_id == constants.PROBIT:
            return np.exp(-0.5 * eta * eta - _LOG_SQRT_2PI)
        if self.family_id == constants.LOGIT:
            return special.expit(eta) * special.expit(-eta)
        if self.family_id == constants.GAUSSIAN_NLS:
            return np.ones_like(eta)
        return np.exp(eta)

    def simulate(self, eta, rng):
        """
        Draw outcomes from the family's data generating process.

        Args:
            eta: The linear index, any shape.
            rng (numpy.random.Generator): The random stream.

        Returns:
            numpy.ndarray: Outcomes with the shape of ``eta``.

        """
        eta = np.asarray(eta, dtype=float)
        if self.family_id == constants.PROBIT:
            return (eta > rng.standard_normal(eta.shape)).astype(float)
        if self.family_id == constants.LOGIT:
            return (eta > rng.logistic(size=eta.shape)).astype(float)
        if self.family_id == constants.GAUSSIAN_NLS:
            return eta + rng.standard_normal(eta.shape)
        return rng.poisson(np.exp(eta)).astype(float)


_FAMILIES = {family_id: ModelFamily(family_id)
             for family_id in constants.FAMILIES}

_ALIASES = {
    'gaussian-nls': constants.GAUSSIAN_NLS,
    'poisson': constants.POISSON_QMLE,
    'poisson-qmle': constants.POISSON_QMLE
}


def get_family(name):
    """
    Look up a model family by name.

    >>> get_family('gaussian-nls')
    ModelFamily('gaussian_nls')

    Args:
        name (str): A family identifier or its command line spelling.

    Returns:
        ModelFamily: The family.

    """
    if isinstance(name, ModelFamily):
        return name
    try:
        return _FAMILIES[_ALIASES.get(name, name)]
    except KeyError:
        raise DomainError(name, 'unknown family') from None


def _edge_index(family, x, beta, pi):
    eta = linear_index(np.atleast_1d(np.asarray(x, float)), beta, pi)
    eta, n_clamped = family.clamp(eta)
    if n_clamped:
        log.warning('Clamped %d index values to the guard band', n_clamped)
    return eta


def link_value(family, y, x, beta, pi):
    """
    Evaluate the link-level objective for a single edge.

    >>> round(link_value(get_family('probit'), 1, [0.0], [1.0], 0.0), 6)
    -0.693147

    Args:
        family (ModelFamily): The model family.
        y (float): The outcome.
        x: The covariate vector.
        beta: The common parameters.
        pi (float): ``alpha_i + gamma_j``.

    Returns:
        float: ``ell(y, x, beta, pi)``.

    """
    family = get_family(family)
    family.check_domain(y)
    return float(family.value(y, _edge_index(family, x, beta, pi)))


def link_derivatives(family, y, x, beta, pi):
    """
    Evaluate the derivatives of the link-level objective for a single edge.

    Args:
        family (ModelFamily): The model family.
        y (float): The outcome.
        x: The covariate vector.
        beta: The common parameters.
        pi (float): ``alpha_i + gamma_j``.

    Returns:
        tuple: ``(d_beta, d_pi, d_beta_beta, d_beta_pi, d_pi_pi)``.

    """
    family = get_family(family)
    family.check_domain(y)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eta = _edge_index(family, x, beta, pi)
    first = float(family.d_eta(y, eta))
    second = float(family.d_eta_eta(y, eta))
    return (first * x, first, second * np.outer(x, x), second * x, second)


def simulate_outcome(family, x, beta, pi, rng):
    """
    Draw the outcome of a single edge.

    Args:
        family (ModelFamily): The model family.
        x: The covariate vector.
        beta: The common parameters.
        pi (float): ``alpha_i + gamma_j``.
        rng (numpy.random.Generator): The random stream.

    Returns:
        float: The simulated outcome.

    """
    family = get_family(family)
    eta = linear_index(np.atleast_1d(np.asarray(x, float)), beta, pi)
    return float(family.simulate(np.asarray(eta), rng))
