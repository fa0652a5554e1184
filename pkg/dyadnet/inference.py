"""
This module contains the sandwich variance of the common parameters.

The influence of observation ``(i, j)`` on ``beta`` is the partialled score
``D_ij = d_beta ell_ij - Xi_ij * d_pi ell_ij``, where ``Xi_ij = a_i + b_j``
projects ``d_beta_pi ell`` on the fixed effect directions. Scores are
clustered by dyad: ``(i, j)`` and ``(j, i)`` may be dependent.

"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats

from dyadnet.errors import NotPositiveDefinite
from dyadnet.estimator import edge_terms
from dyadnet.estimator import inverse_phi_blocks
from dyadnet.families import get_family


log = logging.getLogger('dyadnet')

#: Ξ from the block inverse with prefactor ``1 / (N - 1)``.
XI_BLOCK_INVERSE = 'block_inverse'

#: Ξ with prefactor ``1 / N`` and the alternative index pattern.
XI_DIRECT = 'direct'

XI_VARIANTS = (XI_BLOCK_INVERSE, XI_DIRECT)


@dataclass
class PartialledScore:
    """
    The partialled score of every observation.

    Args:
        xi: ``N x N x K`` array of ``Xi_ij``.
        d_beta_ell: ``N x N x K`` array of ``D_ij``, zero on the diagonal.
        variant (str): The Ξ variant used.

    """
    xi: np.ndarray
    d_beta_ell: np.ndarray
    variant: str = XI_BLOCK_INVERSE


@dataclass
class VarianceEstimate:
    """
    The sandwich variance ``V = inv(W) Omega inv(W)``.

    Args:
        w_hat: The concentrated Hessian ``W``.
        omega_hat: The dyad clustered outer product of the partialled
            scores.
        v_hat: The sandwich.
        se: The standard errors ``sqrt(diag(V)) / N``.
        n_nodes (int): The number of nodes.
        clustering (str): The clustering level.

    """
    w_hat: np.ndarray
    omega_hat: np.ndarray
    v_hat: np.ndarray
    se: np.ndarray
    n_nodes: int
    clustering: str = 'dyad'

    def to_dict(self):
        """
        Get the estimate as a JSON friendly dict.

        """
        return {
            'W': self.w_hat,
            'Omega': self.omega_hat,
            'V': self.v_hat,
            'se': self.se,
            'clustering': self.clustering
        }


@dataclass
class TStatistics:
    """
    Per-coefficient t statistics with two-sided normal p-values.

    """
    t: np.ndarray
    p: np.ndarray

    def to_dict(self):
        """
        Get the statistics as a JSON friendly dict.

        """
        return {'t': self.t, 'p': self.p}


def _family(fit, family):
    return get_family(family if family is not None else fit.family)


def compute_partialled_score(fit, data, family=None,
                             xi_variant=XI_BLOCK_INVERSE):
    """
    Compute ``Xi`` and the partialled score at a fit.

    With ``R_s = sum_t d_beta_pi ell_st`` and ``C_t = sum_s d_beta_pi
    ell_st``, the default form is ``(a, b) = -inv(H) (R, C) / (N - 1)``
    using the fixed effect blocks of the inverse Hessian, which is
    ``O(N^2 K)`` instead of a quadruple sum.

    Args:
        fit (dyadnet.estimator.FitResult): A converged fit.
        data (dyadnet.data.NetworkData): The network it was fitted on.
        family: The model family, ``fit.family`` by default.
        xi_variant (str): `XI_BLOCK_INVERSE` or `XI_DIRECT`.

    Returns:
        PartialledScore: ``Xi`` and ``D``.

    """
    if xi_variant not in XI_VARIANTS:
        raise ValueError('unknown Xi variant {!r}'.format(xi_variant))
    family = _family(fit, family)
    _, d1, d2, _ = edge_terms(data, family, fit.params)
    weights = fit.obs_weights
    x = data.covariates
    cross = (weights * d2)[:, :, None] * x
    rows = cross.sum(axis=1)
    columns = cross.sum(axis=0)
    aa, ag, ga, gg = inverse_phi_blocks(fit.hessian)
    n = data.n_nodes
    if xi_variant == XI_BLOCK_INVERSE:
        a = aa @ rows + ag @ columns
        b = ga @ rows + gg @ columns
        xi = -(a[:, None, :] + b[None, :, :]) / fit.normalizer
    else:
        a = aa @ rows + ag @ columns
        b = ga @ columns
        total = np.einsum('st,stk->k', gg, cross)
        xi = -(a[:, None, :] + b[None, :, :] + total) / n
    xi = xi * data.mask[:, :, None]
    scores = (weights * d1)[:, :, None] * (x - xi)
    return PartialledScore(xi, scores, xi_variant)


def concentrated_hessian(fit):
    """
    Get ``W`` from the inverse fixed effect blocks.

    This recomputes ``Hbb - Hbphi inv(Hphiphi) Hphib`` explicitly, scaled by
    ``1 / N``. It matches the factorization's own Schur complement.

    """
    hessian = fit.hessian
    aa, ag, ga, gg = inverse_phi_blocks(hessian)
    ba, bg = hessian.beta_alpha, hessian.beta_gamma
    projected = (ba @ aa @ ba.T + ba @ ag @ bg.T + bg @ ga @ ba.T +
                 bg @ gg @ bg.T)
    w = (hessian.beta_beta - projected) / hessian.n_nodes
    return 0.5 * (w + w.T)


def dyad_outer_product(scores):
    """
    Sum the outer products of the dyad-summed scores.

    Args:
        scores: ``N x N x K`` per-observation scores.

    Returns:
        numpy.ndarray: ``sum_{j<i} (s_ij + s_ji)(s_ij + s_ji)' /
        (N (N - 1))``.

    """
    n = scores.shape[0]
    pairs = scores + scores.transpose(1, 0, 2)
    lower = pairs[np.tril_indices(n, -1)]
    return lower.T @ lower / (n * (n - 1))


def sandwich_variance(fit, partialled, data):
    """
    Compute the sandwich variance of ``beta``.

    Args:
        fit (dyadnet.estimator.FitResult): A converged full sample fit.
        partialled (PartialledScore): Its partialled score.
        data (dyadnet.data.NetworkData): The network.

    Returns:
        VarianceEstimate: ``W``, ``Omega``, ``V`` and standard errors.

    Raises:
        dyadnet.errors.NotPositiveDefinite: If ``W`` is not positive
            definite.

    """
    w = concentrated_hessian(fit)
    eigenvalues = np.linalg.eigvalsh(w)
    if eigenvalues.size and eigenvalues.min() <= 0:
        raise NotPositiveDefinite('W', eigenvalues)
    omega = dyad_outer_product(partialled.d_beta_ell)
    w_inv = np.linalg.inv(w)
    v = w_inv @ omega @ w_inv
    v = 0.5 * (v + v.T)
    se = np.sqrt(np.maximum(np.diag(v), 0.0)) / data.n_nodes
    return VarianceEstimate(w, omega, v, se, data.n_nodes)


def t_statistics(beta_corrected, beta_null, variance):
    """
    Compute t statistics and two-sided normal p-values.

    >>> import numpy as np
    >>> se = VarianceEstimate(None, None, None, np.array([1.0]), 4)
    >>> t_statistics(np.array([1.96]), np.array([0.0]), se).p.round(3)
    array([0.05])

    Args:
        beta_corrected: The estimate.
        beta_null: The null values.
        variance (VarianceEstimate): Provides the standard errors.

    Returns:
        TStatistics: The statistics.

    """
    se = np.asarray(variance.se, dtype=float)
    t = (np.asarray(beta_corrected, float) - np.asarray(beta_null, float)) / se
    return TStatistics(t, 2 * stats.norm.sf(np.abs(t)))


def summary_table(names, beta_mle, beta_corrected, variance):
    """
    Build the coefficient summary table.

    Columns are the estimate, the jackknife estimate, the standard error and
    the estimated bias in standard error units.

    Returns:
        pandas.DataFrame: One row per coefficient.

    """
    beta_mle = np.asarray(beta_mle, dtype=float)
    beta_corrected = np.asarray(beta_corrected, dtype=float)
    se = np.asarray(variance.se, dtype=float)
    return pd.DataFrame({
        'coefficient': list(names),
        'estimate': beta_mle,
        'jackknife': beta_corrected,
        'se': se,
        'bias_over_se': (beta_mle - beta_corrected) / se
    })


def write_summary_csv(path, table):
    """
    Write a summary table as CSV at full precision.

    """
    table.to_csv(str(path), index=False, float_format='%.17g',
                 lineterminator='\n')
    log.info('Wrote %s', path)


def format_summary(table):
    """
    Format a summary table as aligned text.

    """
    return table.to_string(index=False, float_format=lambda v: '%.3f' % v)
