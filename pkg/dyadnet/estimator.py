"""
This module contains the penalized fixed effects estimator.

The objective is

.. math::

    \\frac{1}{n} \\sum_{i \\ne j} w_{ij} \\ell_{ij}(\\beta, \\alpha_i +
    \\gamma_j) - \\frac{b}{2N} \\Big(\\sum_i \\alpha_i - \\sum_i \\gamma_i
    \\Big)^2

with ``n = N - 1`` for the full sample and ``n = N - 1 - l`` for a
leave-out sample. It is maximized by a joint Newton method over
``(beta, alpha, gamma)``. The negative Hessian is an arrow matrix: a dense
``beta`` border, diagonal ``alpha`` and ``gamma`` blocks, a dense
``alpha``-``gamma`` cross block and the rank-one penalty. `StructuredHessian`
factorizes it by block elimination instead of a dense solve.

"""
import logging
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from scipy import linalg
from scipy import special

from dyadnet import constants
from dyadnet.errors import NonConvergence
from dyadnet.errors import SingularHessian
from dyadnet.families import get_family
from dyadnet.families import linear_index
from dyadnet.families import ParameterSet


log = logging.getLogger('dyadnet')


_DEFAULT_CONFIG = {
    'max_iterations': 200,
    'gradient_tolerance': 1e-9,
    'penalty_b': 1.0,
    'shrink': 0.5,
    'sufficient_decrease': 1e-4,
    'max_line_search': 60
}


@dataclass
class FitConfig:
    """
    Options for `fit`.

    Args:
        max_iterations (int): The Newton iteration limit.
        gradient_tolerance (float): Convergence threshold on the max-norm of
            the score.
        penalty_b (float): The normalization penalty constant ``b``.
        shrink (float): The backtracking step shrink factor.
        sufficient_decrease (float): The Armijo constant.
        max_line_search (int): The backtracking step limit.
        warm_start (ParameterSet): Optional starting values.

    """
    max_iterations: int = _DEFAULT_CONFIG['max_iterations']
    gradient_tolerance: float = _DEFAULT_CONFIG['gradient_tolerance']
    penalty_b: float = _DEFAULT_CONFIG['penalty_b']
    shrink: float = _DEFAULT_CONFIG['shrink']
    sufficient_decrease: float = _DEFAULT_CONFIG['sufficient_decrease']
    max_line_search: int = _DEFAULT_CONFIG['max_line_search']
    warm_start: ParameterSet = None

    def __post_init__(self):
        if self.gradient_tolerance <= 0 or self.penalty_b <= 0:
            raise ValueError('tolerances and penalty_b must be positive')
        if not 0 < self.shrink < 1 or not 0 < self.sufficient_decrease < 1:
            raise ValueError('line search parameters must lie in (0, 1)')
        if self.max_iterations < 1:
            raise ValueError('max_iterations must be positive')

    def with_warm_start(self, params):
        """
        Get a copy of this config that starts at ``params``.

        """
        return FitConfig(
            self.max_iterations, self.gradient_tolerance, self.penalty_b,
            self.shrink, self.sufficient_decrease, self.max_line_search,
            params)


class StructuredHessian:
    """
    A factorized negative Hessian of the penalized objective.

    The matrix, ordered as ``(beta, alpha, gamma)``, is::

        [ Hbb   Hba        Hbg        ]
        [ Hab   diag(da)   C          ] + c v v'
        [ Hgb   C'         diag(dg)   ]

    with ``v = (0, u_alpha, -u_gamma)``. The ``alpha`` block
    ``diag(da) + c u u'`` is inverted by Sherman-Morrison, the ``gamma``
    block through its dense Schur complement, and ``beta`` through the
    ``K x K`` concentrated Hessian.

    Args:
        beta_beta: ``K x K`` block.
        beta_alpha: ``K x N`` block.
        beta_gamma: ``K x N`` block.
        alpha_diag: The ``N`` diagonal entries of the ``alpha`` block.
        gamma_diag: The ``N`` diagonal entries of the ``gamma`` block.
        cross: ``N x N`` block between ``alpha_i`` and ``gamma_j``.
        penalty (float): The penalty curvature ``c = b / N``.
        penalty_alpha: Penalty loadings on ``alpha``, defaults to ones.
        penalty_gamma: Penalty loadings on ``gamma``, defaults to ones.

    Raises:
        dyadnet.errors.SingularHessian: If a block cannot be factorized.

    """
    def __init__(self, beta_beta, beta_alpha, beta_gamma, alpha_diag,
                 gamma_diag, cross, penalty=0.0, penalty_alpha=None,
                 penalty_gamma=None):  # noqa: D102
        self.beta_beta = np.atleast_2d(np.asarray(beta_beta, dtype=float))
        self.n_beta = self.beta_beta.shape[0] if np.size(beta_beta) else 0
        self.beta_beta = self.beta_beta.reshape(self.n_beta, self.n_beta)
        self.alpha_diag = np.asarray(alpha_diag, dtype=float)
        self.gamma_diag = np.asarray(gamma_diag, dtype=float)
        self.n_nodes = len(self.alpha_diag)
        self.beta_alpha = np.asarray(beta_alpha, dtype=float).reshape(
            self.n_beta, self.n_nodes)
        self.beta_gamma = np.asarray(beta_gamma, dtype=float).reshape(
            self.n_beta, self.n_nodes)
        self.cross = np.asarray(cross, dtype=float)
        self.penalty = float(penalty)
        ones = np.ones(self.n_nodes)
        self.penalty_alpha = ones if penalty_alpha is None else np.asarray(
            penalty_alpha, dtype=float)
        self.penalty_gamma = ones if penalty_gamma is None else np.asarray(
            penalty_gamma, dtype=float)
        self._factorize()

    @property
    def size(self):
        """
        `int`: The dimension ``K + 2N``.

        """
        return self.n_beta + 2 * self.n_nodes

    def _factorize(self):
        scale = max(np.abs(self.alpha_diag).max(), 1.0)
        weak = np.flatnonzero(self.alpha_diag <= 1e-14 * scale)
        if len(weak):
            raise SingularHessian(weak, 'alpha')
        weak = np.flatnonzero(self.gamma_diag <= 1e-14 * scale)
        if len(weak):
            raise SingularHessian(weak, 'gamma')
        u = self.penalty_alpha
        d_inv = 1.0 / self.alpha_diag
        self._d_inv = d_inv
        self._d_inv_u = d_inv * u
        self._sm_scale = self.penalty / (
            1.0 + self.penalty * u @ self._d_inv_u)
        # alpha-gamma block including the penalty.
        self._b = (self.cross -
                   self.penalty * np.outer(u, self.penalty_gamma))
        self._a_inv_b = self._alpha_solve(self._b)
        schur = (np.diag(self.gamma_diag) +
                 self.penalty * np.outer(self.penalty_gamma,
                                         self.penalty_gamma) -
                 self._b.T @ self._a_inv_b)
        try:
            self._schur = linalg.cho_factor(schur, lower=True)
        except linalg.LinAlgError:
            diag = np.diag(schur)
            weak = np.flatnonzero(diag <= 1e-10 * max(diag.max(), 1.0))
            raise SingularHessian(
                weak if len(weak) else [int(np.argmin(diag))],
                'gamma') from None
        if self.n_beta:
            phi_beta = self.phi_solve(
                np.vstack([self.beta_alpha.T, self.beta_gamma.T]))
            self._phi_beta = phi_beta
            concentrated = self.beta_beta - self._beta_phi() @ phi_beta
            self._concentrated = 0.5 * (concentrated + concentrated.T)
            try:
                self._beta_factor = linalg.cho_factor(
                    self._concentrated, lower=True)
            except linalg.LinAlgError:
                raise SingularHessian([], 'beta') from None

    def _beta_phi(self):
        return np.hstack([self.beta_alpha, self.beta_gamma])

    def _alpha_solve(self, rhs):
        # (diag(d) + c u u')^{-1} rhs by Sherman-Morrison.
        rhs = np.asarray(rhs, dtype=float)
        scaled = self._d_inv.reshape((-1,) + (1,) * (rhs.ndim - 1)) * rhs
        correction = np.tensordot(self._d_inv_u, rhs, axes=(0, 0))
        return scaled - self._sm_scale * np.multiply.outer(
            self._d_inv_u, correction)

    def phi_solve(self, rhs):
        """
        Solve a system in the ``(alpha, gamma)`` block only.

        Args:
            rhs: A vector of length ``2N`` or a ``2N x m`` matrix.

        Returns:
            numpy.ndarray: The solution, shaped like ``rhs``.

        """
        rhs = np.asarray(rhs, dtype=float)
        n = self.n_nodes
        y_alpha = self._alpha_solve(rhs[:n])
        x_gamma = linalg.cho_solve(self._schur, rhs[n:] - self._b.T @ y_alpha)
        x_alpha = y_alpha - self._a_inv_b @ x_gamma
        return np.concatenate([x_alpha, x_gamma])

    def solve(self, rhs):
        """
        Solve a system in the full ``(beta, alpha, gamma)`` matrix.

        Args:
            rhs: A vector of length ``K + 2N`` or a matrix with that many
                rows.

        Returns:
            numpy.ndarray: The solution, shaped like ``rhs``.

        """
        rhs = np.asarray(rhs, dtype=float)
        k = self.n_beta
        if not k:
            return self.phi_solve(rhs)
        rhs_beta, rhs_phi = rhs[:k], rhs[k:]
        z = self.phi_solve(rhs_phi)
        x_beta = linalg.cho_solve(self._beta_factor,
                                  rhs_beta - self._beta_phi() @ z)
        x_phi = z - self._phi_beta @ x_beta
        return np.concatenate([x_beta, x_phi])

    def schur_complement(self):
        """
        Get the concentrated ``beta`` Hessian.

        Returns:
            numpy.ndarray: ``Hbb - Hbphi Hphiphi^{-1} Hphib``, ``K x K``.

        """
        if not self.n_beta:
            return np.zeros((0, 0))
        return self._concentrated.copy()

    def inverse_phi_blocks(self):
        """
        Invert the ``(alpha, gamma)`` block.

        Returns:
            tuple: The ``N x N`` blocks ``(aa, ag, ga, gg)`` of the inverse.

        """
        n = self.n_nodes
        gg = linalg.cho_solve(self._schur, np.eye(n))
        ag = -self._a_inv_b @ gg
        a_inv = self._alpha_solve(np.eye(n))
        aa = a_inv - ag @ self._a_inv_b.T
        aa = 0.5 * (aa + aa.T)
        gg = 0.5 * (gg + gg.T)
        return aa, ag, ag.T.copy(), gg

    def dense(self):
        """
        Assemble the full matrix.

        """
        n, k = self.n_nodes, self.n_beta
        matrix = np.zeros((self.size, self.size))
        matrix[:k, :k] = self.beta_beta
        matrix[:k, k:k + n] = self.beta_alpha
        matrix[:k, k + n:] = self.beta_gamma
        matrix[k:, :k] = matrix[:k, k:].T
        matrix[k:k + n, k:k + n] = np.diag(self.alpha_diag)
        matrix[k + n:, k + n:] = np.diag(self.gamma_diag)
        matrix[k:k + n, k + n:] = self.cross
        matrix[k + n:, k:k + n] = self.cross.T
        v = np.concatenate([self.penalty_alpha, -self.penalty_gamma])
        matrix[k:, k:] += self.penalty * np.outer(v, v)
        return matrix


@dataclass
class FitResult:
    """
    A converged fit.

    Args:
        params (ParameterSet): The estimates.
        objective (float): The penalized objective at the estimates.
        iterations (int): The number of Newton iterations.
        converged (bool): Whether the score tolerance was reached.
        score_norm (float): The max-norm of the score.
        obs_weights: The ``N x N`` inclusion weights.
        hessian (StructuredHessian): The factorized negative Hessian at the
            estimates.
        normalizer (float): The objective normalizer ``n``.
        diagnostics (dict): Clamping counts and trimmed agents.
        family (str): The model family identifier.

    """
    params: ParameterSet
    objective: float
    iterations: int
    converged: bool
    score_norm: float
    obs_weights: np.ndarray
    hessian: StructuredHessian
    normalizer: float
    diagnostics: dict = field(default_factory=dict)
    family: str = None

    @property
    def hessian_handle(self):
        """
        `StructuredHessian`: Alias of ``hessian``.

        """
        return self.hessian


def edge_terms(data, family, params):
    """
    Evaluate the index and its first two objective derivatives per edge.

    Args:
        data (dyadnet.data.NetworkData): The network.
        family: The model family.
        params (ParameterSet): The parameters.

    Returns:
        tuple: ``(eta, d1, d2, n_clamped)`` with ``N x N`` arrays.

    """
    family = get_family(family)
    eta = linear_index(data.covariates, params.beta, params.pi)
    eta, n_clamped = family.clamp(eta)
    y = data.outcomes
    return eta, family.d_eta(y, eta), family.d_eta_eta(y, eta), n_clamped


def penalized_objective(data, family, params, weights=None, normalizer=None,
                        penalty_b=1.0):
    """
    Evaluate the penalized objective.

    Args:
        data (dyadnet.data.NetworkData): The network.
        family: The model family.
        params (ParameterSet): The parameters.
        weights: The ``N x N`` inclusion weights, all ones by default.
        normalizer (float): ``n``, ``N - 1`` by default.
        penalty_b (float): The penalty constant ``b``.

    Returns:
        float: The objective value.

    """
    family = get_family(family)
    weights = data.mask if weights is None else weights
    normalizer = data.n_nodes - 1 if normalizer is None else normalizer
    eta, _ = family.clamp(linear_index(data.covariates, params.beta,
                                       params.pi))
    values = np.where(weights > 0, family.value(data.outcomes, eta), 0.0)
    gap = params.normalization_gap
    return float((weights * values).sum() / normalizer -
                 penalty_b / (2 * data.n_nodes) * gap * gap)


class _Problem:
    # The penalized objective of one sample, with its active parameters.

    def __init__(self, data, family, weights, normalizer, penalty_b):
        self.data = data
        self.family = family
        self.weights = weights
        self.normalizer = float(normalizer)
        self.penalty_b = penalty_b
        self.penalty = penalty_b / data.n_nodes
        self.active_alpha = (weights.sum(axis=1) > 0).astype(float)
        self.active_gamma = (weights.sum(axis=0) > 0).astype(float)
        self.active = np.concatenate([
            np.ones(data.n_beta), self.active_alpha, self.active_gamma]) > 0

    def objective(self, params):
        return penalized_objective(self.data, self.family, params,
                                   self.weights, self.normalizer,
                                   self.penalty_b)

    def evaluate(self, params):
        """
        Get the objective, score and factorized negative Hessian.

        """
        data, w = self.data, self.weights
        x = data.covariates
        eta, d1, d2, n_clamped = edge_terms(data, self.family, params)
        e1 = w * d1 / self.normalizer
        e2 = w * d2 / self.normalizer
        gap = params.normalization_gap
        score = np.concatenate([
            np.einsum('ijk,ij->k', x, e1),
            e1.sum(axis=1) - self.penalty * gap * self.active_alpha,
            e1.sum(axis=0) + self.penalty * gap * self.active_gamma])
        score[~self.active] = 0.0
        alpha_diag = -e2.sum(axis=1)
        gamma_diag = -e2.sum(axis=0)
        alpha_diag[self.active_alpha == 0] = 1.0
        gamma_diag[self.active_gamma == 0] = 1.0
        hessian = StructuredHessian(
            -np.einsum('ijk,ijl,ij->kl', x, x, e2),
            -np.einsum('ijk,ij->ki', x, e2),
            -np.einsum('ijk,ij->kj', x, e2),
            alpha_diag, gamma_diag, -e2, self.penalty,
            self.active_alpha, self.active_gamma)
        return score, hessian, n_clamped

    def start(self):
        """
        Get default starting values from row and column means.

        """
        data, w, family = self.data, self.weights, self.family
        y = data.outcomes
        count_row = w.sum(axis=1)
        count_column = w.sum(axis=0)
        total = (w * y).sum()
        rows = ((w * y).sum(axis=1) + 0.5) / (count_row + 1)
        columns = ((w * y).sum(axis=0) + 0.5) / (count_column + 1)
        overall = (total + 0.5) / (w.sum() + 1)
        if family.family_id == constants.PROBIT:
            transform = special.ndtri
        elif family.family_id == constants.LOGIT:
            transform = special.logit
        elif family.is_count:
            transform = np.log
        else:
            rows = (w * y).sum(axis=1) / np.maximum(count_row, 1)
            columns = (w * y).sum(axis=0) / np.maximum(count_column, 1)
            overall = total / max(w.sum(), 1)

            def transform(values):
                return values
        level = transform(overall)
        alpha = (transform(rows) - level / 2) * self.active_alpha
        gamma = (transform(columns) - level / 2) * self.active_gamma
        params = ParameterSet(np.zeros(data.n_beta), alpha, gamma)
        return self.level_shift(params)

    def level_shift(self, params):
        """
        Move the fixed effect levels so that ``sum(alpha) == sum(gamma)``.

        The shift leaves every ``alpha_i + gamma_j`` unchanged when as many
        senders as receivers are active.

        """
        n_alpha = self.active_alpha.sum()
        n_gamma = self.active_gamma.sum()
        if n_alpha != n_gamma or not n_alpha:
            return params
        gap = params.normalization_gap
        params = params.copy()
        params.alpha -= gap / (2 * n_alpha) * self.active_alpha
        params.gamma += gap / (2 * n_gamma) * self.active_gamma
        return params


def fit(data, family, config=None, weights=None, normalizer=None):
    """
    Maximize the penalized objective by Newton's method.

    Each iteration solves the Newton system with `StructuredHessian` and
    backtracks until the Armijo condition holds, so the objective never
    decreases. Agents without any included observation keep their starting
    values and are left out of the Newton system.

    Args:
        data (dyadnet.data.NetworkData): The network.
        family: The model family.
        config (FitConfig): Solver options.
        weights: The ``N x N`` 0/1 inclusion mask, all ones by default.
        normalizer (float): ``n``; ``N - 1`` for the full sample and
            ``N - 1 - l`` for a leave-out sample.

    Returns:
        FitResult: The fit. ``converged`` is false if the line search
        stalled within a factor 1000 of the score tolerance.

    Raises:
        dyadnet.errors.NonConvergence: If the iteration limit is reached
            or the line search stalls further from the tolerance.
        dyadnet.errors.SingularHessian: If the Hessian collapses.

    """
    family = get_family(family)
    config = config or FitConfig()
    weights = data.mask if weights is None else np.asarray(weights, float)
    weights = weights * data.mask
    family.check_domain(data.outcomes[weights > 0])
    normalizer = data.n_nodes - 1 if normalizer is None else normalizer
    problem = _Problem(data, family, weights, normalizer, config.penalty_b)
    params = (config.warm_start.copy() if config.warm_start is not None
              else problem.start())
    objective = problem.objective(params)
    score, hessian, n_clamped = problem.evaluate(params)
    score_norm = float(np.abs(score).max())
    iterations = 0
    while score_norm > config.gradient_tolerance:
        if iterations >= config.max_iterations:
            raise NonConvergence(iterations, score_norm, params)
        iterations += 1
        direction = hessian.solve(score)
        slope = float(score @ direction)
        step = 1.0
        for _ in range(config.max_line_search):
            candidate = ParameterSet.from_vector(
                params.to_vector() + step * direction, data.n_beta)
            value = problem.objective(candidate)
            if value >= objective + config.sufficient_decrease * step * slope:
                break
            step *= config.shrink
        else:
            # No ascent is left at machine precision.
            log.debug('Line search stalled at score norm %.3g', score_norm)
            if score_norm > 1e3 * config.gradient_tolerance:
                raise NonConvergence(iterations, score_norm, params)
            break
        params, objective = candidate, value
        score, hessian, n_clamped = problem.evaluate(params)
        score_norm = float(np.abs(score).max())
        log.debug('Iteration %d: objective %.12g, score norm %.3g, step %g',
                  iterations, objective, score_norm, step)
    shifted = problem.level_shift(params)
    if shifted is not params:
        params = shifted
        objective = problem.objective(params)
        score, hessian, n_clamped = problem.evaluate(params)
        score_norm = float(np.abs(score).max())
    converged = score_norm <= config.gradient_tolerance
    if not converged:
        log.warning('Stopped at score norm %.3g above the tolerance %.3g',
                    score_norm, config.gradient_tolerance)
    if n_clamped:
        log.warning('%d index values hit the guard band at the estimates',
                    n_clamped)
    return FitResult(
        params, objective, iterations, converged, score_norm, weights, hessian,
        float(normalizer), {'n_clamped': n_clamped}, family.family_id)


def solve_structured(hessian_handle, rhs):
    """
    Solve a system in the full negative Hessian.

    Args:
        hessian_handle (StructuredHessian): The factorization.
        rhs: A vector of length ``K + 2N``.

    Returns:
        numpy.ndarray: The solution.

    """
    return hessian_handle.solve(rhs)


def inverse_phi_blocks(hessian_handle):
    """
    Get the four ``N x N`` blocks of the inverse fixed effect Hessian.

    The blocks include the penalty term.

    Args:
        hessian_handle (StructuredHessian): The factorization.

    Returns:
        tuple: ``(aa, ag, ga, gg)``.

    """
    return hessian_handle.inverse_phi_blocks()
