"""
This module contains the leave-out jackknife bias corrections.

Every variant refits the model on a family of subsamples and combines the
subsample estimates with the full sample estimate so that the leading
``1 / N`` incidental parameter bias cancels. Subsample fits are independent
and may run on a thread pool; results are always combined in subsample
order.

"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from dyadnet import constants
from dyadnet.data import filter_degenerate
from dyadnet.data import permutation
from dyadnet.data import relabel
from dyadnet.data import trim_degenerate_weights
from dyadnet.errors import DegenerateSample
from dyadnet.errors import InvalidPartition
from dyadnet.errors import NonConvergence
from dyadnet.errors import NotPositiveDefinite
from dyadnet.errors import SingularHessian
from dyadnet.errors import TooSmallAfterFiltering
from dyadnet.estimator import fit
from dyadnet.estimator import FitConfig
from dyadnet.families import get_family
from dyadnet.families import ParameterSet
from dyadnet.partition import build_partition
from dyadnet.partition import edge_mask
from dyadnet.partition import validate
from dyadnet.utils import add_optional
from dyadnet.utils import rng_stream


log = logging.getLogger('dyadnet')

#: Relative ridge added to a leave-out concentrated Hessian that is not
#: positive definite.
RIDGE = 1e-8


@dataclass
class SubsampleFit:
    """
    The outcome of one subsample fit.

    Args:
        label: The subsample index or name.
        result (dyadnet.estimator.FitResult): The fit, or `None` if it
            failed.
        params (dyadnet.families.ParameterSet): The estimates, or the last
            iterate of a fit that did not converge.
        error (str): The failure, if any.
        trimmed_senders (list): Senders excluded as degenerate.
        trimmed_receivers (list): Receivers excluded as degenerate.
        dropped_nodes (list): Labels of the nodes removed from a
            subnetwork before it was fitted.

    """
    label: object
    result: object = None
    params: ParameterSet = None
    error: str = None
    trimmed_senders: list = field(default_factory=list)
    trimmed_receivers: list = field(default_factory=list)
    dropped_nodes: list = field(default_factory=list)

    @property
    def converged(self):
        """
        `bool`: Whether the fit converged.

        """
        return self.result is not None

    @property
    def usable(self):
        """
        `bool`: Whether the fit produced estimates at all.

        """
        return self.params is not None

    def diagnostics(self):
        """
        Get the per-subsample diagnostics as a plain dict.

        """
        data = {
            'label': self.label,
            'converged': self.converged,
            'trimmed_senders': self.trimmed_senders,
            'trimmed_receivers': self.trimmed_receivers
        }
        if self.result is not None:
            data['iterations'] = self.result.iterations
            data['score_norm'] = self.result.score_norm
            data['n_clamped'] = self.result.diagnostics.get('n_clamped', 0)
        add_optional(data, 'dropped_nodes', self.dropped_nodes or None)
        add_optional(data, 'error', self.error)
        return data


@dataclass
class JackknifeResult:
    """
    A bias corrected estimate with its ingredients.

    Args:
        variant (str): One of the variant names in `dyadnet.constants`.
        beta_full: The full sample estimate.
        beta_leaveout (list): The subsample estimates, in subsample order.
            Failed subsamples hold `None`.
        beta_corrected: The corrected estimate.
        phi_corrected: The corrected fixed effects ``(alpha, gamma)`` for the
            leave-out variants, else `None`.
        full_fit (dyadnet.estimator.FitResult): The full sample fit.
        subsamples (list): The `SubsampleFit` of every subsample.
        l (int): The leave-out block size, for the leave-out variants.
        weights_used (list): The concentrated Hessians of the weighted
            variant.
        extra (dict): Variant specific diagnostics.

    """
    variant: str
    beta_full: np.ndarray
    beta_leaveout: list
    beta_corrected: np.ndarray
    phi_corrected: np.ndarray = None
    full_fit: object = None
    subsamples: list = field(default_factory=list)
    l: int = None  # noqa: E741
    weights_used: list = None
    extra: dict = field(default_factory=dict)

    @property
    def reliable(self):
        """
        `bool`: Whether every subsample fit converged.

        """
        return all(sample.converged for sample in self.subsamples)

    @property
    def per_k_diagnostics(self):
        """
        `list`: The diagnostics of every subsample, in subsample order.

        """
        return [sample.diagnostics() for sample in self.subsamples]

    @property
    def leaveout_fits(self):
        """
        `list`: The converged subsample `FitResult` objects, `None` where a
        fit failed.

        """
        return [sample.result for sample in self.subsamples]

    def to_dict(self):
        """
        Get the result as a JSON friendly dict.

        """
        data = {
            'variant': self.variant,
            'beta_full': self.beta_full,
            'beta_leaveout': self.beta_leaveout,
            'beta_corrected': self.beta_corrected,
            'reliable': self.reliable,
            'per_k_diagnostics': self.per_k_diagnostics
        }
        add_optional(data, 'l', self.l)
        add_optional(data, 'phi_corrected', self.phi_corrected)
        add_optional(data, 'weights_used', self.weights_used)
        add_optional(data, 'extra', self.extra)
        return data


def combine(full, leaveout, n_nodes, l=1):  # noqa: E741
    """
    Apply the leave-``l``-out jackknife combination to any statistic.

    The result is ``((N - 1) / l) * full - ((N - 1 - l) / l) * mean``, where
    ``mean`` averages the subsample statistics. For ``l = 1`` this is
    ``(N - 1) * full - (N - 2) * mean``.

    >>> float(combine(2.0, [2.0, 2.0, 2.0], 4))
    2.0

    Args:
        full: The full sample statistic, scalar or array.
        leaveout: The subsample statistics; `None` entries are skipped.
        n_nodes (int): The number of nodes ``N``.
        l (int): The block size.

    Returns:
        The combined statistic, shaped like ``full``.

    """
    values = [np.asarray(value, dtype=float) for value in leaveout
              if value is not None]
    if not values:
        raise ValueError('no subsample statistic to combine')
    mean = np.mean(values, axis=0)
    return ((n_nodes - 1) / l * np.asarray(full, dtype=float) -
            (n_nodes - 1 - l) / l * mean)


def _fit_subsample(data, family, config, weights, normalizer, label):
    weights, senders, receivers = trim_degenerate_weights(
        data.outcomes, weights, family)
    sample = SubsampleFit(label, trimmed_senders=senders,
                          trimmed_receivers=receivers)
    if not weights.any():
        sample.error = str(DegenerateSample(label))
        log.warning('Subsample %s has no informative observations', label)
        return sample
    try:
        result = fit(data, family, config, weights, normalizer)
    except NonConvergence as error:
        log.warning('Subsample %s did not converge: %s', label, error)
        sample.params = error.params
        sample.error = str(error)
        return sample
    except SingularHessian as error:
        log.warning('Subsample %s has a singular Hessian: %s', label, error)
        sample.error = str(error)
        return sample
    result.diagnostics['trimmed_senders'] = senders
    result.diagnostics['trimmed_receivers'] = receivers
    sample.result = result
    sample.params = result.params
    return sample


def _run(tasks, jobs):
    # Run the tasks on up to ``jobs`` threads, keeping task order.
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(lambda task: task(), tasks))


def _full_fit(data, family, config, full_fit):
    if full_fit is not None:
        return full_fit
    return fit(data, family, config)


def _leaveout_fits(data, family, config, partition, full, jobs):
    report = validate(partition)
    if not report.valid:
        raise InvalidPartition(report.first_violation)
    warm = config.with_warm_start(full.params)
    normalizer = data.n_nodes - 1 - partition.l
    tasks = [
        (lambda k=k: _fit_subsample(data, family, warm,
                                    edge_mask(partition, k), normalizer, k))
        for k in range(1, partition.n_sets + 1)]
    log.info('Running %d leave-%d-out fits', len(tasks), partition.l)
    return _run(tasks, jobs)


def _beta(sample):
    return sample.params.beta if sample.usable else None


def jackknife_beta(data, family, config=None, partition=None, jobs=1,
                   full_fit=None):
    """
    Compute the leave-``l``-out jackknife estimator.

    Each leave-out sample drops one set of the partition and is fitted with
    normalizer ``N - 1 - l``, warm started at the full sample estimates.
    Both ``beta`` and the fixed effects are combined with `combine`.

    Args:
        data (dyadnet.data.NetworkData): The (filtered) network.
        family: The model family.
        config (dyadnet.estimator.FitConfig): Solver options.
        partition (dyadnet.partition.LeaveOutPartition): The leave-out
            partition, leave-one-out slices by default.
        jobs (int): The number of concurrent fits.
        full_fit (dyadnet.estimator.FitResult): A full sample fit to reuse.

    Returns:
        JackknifeResult: The corrected estimate.

    Raises:
        dyadnet.errors.InvalidPartition: If the partition is not valid.

    """
    family = get_family(family)
    config = config or FitConfig()
    partition = partition or build_partition(data.n_nodes)
    full = _full_fit(data, family, config, full_fit)
    samples = _leaveout_fits(data, family, config, partition, full, jobs)
    usable = [s for s in samples if s.usable]
    if not usable:
        raise DegenerateSample('every leave-out sample')
    n, l = data.n_nodes, partition.l  # noqa: E741
    beta = combine(full.params.beta, [_beta(s) for s in samples], n, l)
    phi = combine(full.params.phi,
                  [s.params.phi if s.usable else None for s in samples], n, l)
    result = JackknifeResult(
        constants.PLAIN if l == 1 else constants.LEAVE_L,
        full.params.beta, [_beta(s) for s in samples], beta, phi, full,
        samples, l)
    if not result.reliable:
        log.warning('Jackknife estimate is unreliable: %d of %d leave-out '
                    'fits failed', len(samples) - sum(
                        s.converged for s in samples), len(samples))
    return result


def _ridge_floor(matrix, label):
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues.min() > 0:
        return matrix, False
    dim = matrix.shape[0]
    ridge = RIDGE * abs(np.trace(matrix)) / dim or RIDGE
    log.warning('Concentrated Hessian of sample %s is not positive definite, '
                'adding a ridge of %g', label, ridge)
    floored = matrix + ridge * np.eye(dim)
    if np.linalg.eigvalsh(floored).min() <= 0:
        floored = matrix + (ridge - eigenvalues.min()) * np.eye(dim)
    return floored, True


def jackknife_weighted(data, family, config=None, partition=None, jobs=1,
                       full_fit=None):
    """
    Compute the weighted jackknife estimator.

    The leave-out estimates are weighted by their concentrated Hessians
    ``W_k``, the ``beta`` Schur complement of the leave-out Hessian scaled
    by ``1 / N``::

        (N - 1) * beta - (N - 2) * inv(mean(W_k)) * mean(W_k beta_k)

    A ``W_k`` that is not positive definite gets a ridge of ``1e-8`` times
    its mean eigenvalue and is flagged.

    Args:
        data (dyadnet.data.NetworkData): The (filtered) network.
        family: The model family.
        config (dyadnet.estimator.FitConfig): Solver options.
        partition (dyadnet.partition.LeaveOutPartition): The leave-out
            partition, leave-one-out slices by default.
        jobs (int): The number of concurrent fits.
        full_fit (dyadnet.estimator.FitResult): A full sample fit to reuse.

    Returns:
        JackknifeResult: The corrected estimate.

    Raises:
        dyadnet.errors.NotPositiveDefinite: If the mean weight is singular.

    """
    family = get_family(family)
    config = config or FitConfig()
    partition = partition or build_partition(data.n_nodes)
    full = _full_fit(data, family, config, full_fit)
    samples = _leaveout_fits(data, family, config, partition, full, jobs)
    n, l = data.n_nodes, partition.l  # noqa: E741
    weights, weighted, floored = [], [], []
    for sample in samples:
        if not sample.converged:
            weights.append(None)
            continue
        matrix = sample.result.hessian.schur_complement() / n
        matrix, ridged = _ridge_floor(matrix, sample.label)
        if ridged:
            floored.append(sample.label)
        weights.append(matrix)
        weighted.append(matrix @ sample.params.beta)
    used = [w for w in weights if w is not None]
    if not used:
        raise DegenerateSample('every leave-out sample')
    mean_weight = np.mean(used, axis=0)
    eigenvalues = np.linalg.eigvalsh(mean_weight)
    if eigenvalues.min() <= 0:
        raise NotPositiveDefinite('mean leave-out weight', eigenvalues)
    pooled = np.linalg.solve(mean_weight, np.mean(weighted, axis=0))
    beta = ((n - 1) / l * full.params.beta - (n - 1 - l) / l * pooled)
    phi = combine(full.params.phi,
                  [s.params.phi if s.converged else None for s in samples],
                  n, l)
    result = JackknifeResult(
        constants.WEIGHTED, full.params.beta, [_beta(s) for s in samples],
        beta, phi, full, samples, l, weights)
    add_optional(result.extra, 'ridge_floored', floored or None)
    return result


def split_halves(n_nodes, seed):
    """
    Split the nodes into two halves by a seeded permutation.

    >>> a, b = split_halves(5, 0)
    >>> len(a), len(b)
    (2, 3)

    Returns:
        tuple: Two sorted index arrays, of sizes ``floor(N / 2)`` and
        ``ceil(N / 2)``.

    """
    order = rng_stream(seed, 'split').permutation(n_nodes)
    half = n_nodes // 2
    return np.sort(order[:half]), np.sort(order[half:])


def jackknife_split_sample(data, family, config=None, seed=0, jobs=1,
                           full_fit=None):
    """
    Compute the split-sample jackknife estimator.

    The nodes are split in two halves ``A1`` and ``A2``. Four fits each keep
    every observation whose receiver (or sender) is in one half; the fixed
    effects of the excluded agents are held at their full sample values.
    The estimate is ``3 beta - beta_senders - beta_receivers`` where each
    half-panel estimate averages the two halves.

    Args:
        data (dyadnet.data.NetworkData): The (filtered) network.
        family: The model family.
        config (dyadnet.estimator.FitConfig): Solver options.
        seed (int): Seeds the split.
        jobs (int): The number of concurrent fits.
        full_fit (dyadnet.estimator.FitResult): A full sample fit to reuse.

    Returns:
        JackknifeResult: The corrected estimate.

    Raises:
        dyadnet.errors.DegenerateSample: If a half sample cannot be fitted.

    """
    family = get_family(family)
    config = config or FitConfig()
    full = _full_fit(data, family, config, full_fit)
    warm = config.with_warm_start(full.params)
    n = data.n_nodes
    halves = split_halves(n, seed)
    tasks, labels = [], []
    for axis, name in ((1, 'receiver'), (0, 'sender')):
        for h, nodes in enumerate(halves, start=1):
            weights = np.zeros((n, n))
            if axis == 1:
                weights[:, nodes] = 1.0
            else:
                weights[nodes, :] = 1.0
            weights *= data.mask
            label = '{} half {}'.format(name, h)
            labels.append(label)
            tasks.append(lambda w=weights, label=label: _fit_subsample(
                data, family, warm, w, n - 1, label))
    samples = _run(tasks, jobs)
    for sample in samples:
        if not sample.usable:
            raise DegenerateSample(sample.label)
    betas = [s.params.beta for s in samples]
    receivers = 0.5 * (betas[0] + betas[1])
    senders = 0.5 * (betas[2] + betas[3])
    beta = 3 * full.params.beta - senders - receivers
    result = JackknifeResult(
        constants.SPLIT_SAMPLE, full.params.beta, betas, beta, None, full,
        samples)
    result.extra['halves'] = [(nodes + 1).tolist() for nodes in halves]
    if n % 2:
        result.extra['unequal_halves'] = True
        log.warning('Odd number of nodes, halves have sizes %d and %d',
                    len(halves[0]), len(halves[1]))
    return result


def _fit_without_agent(data, family, config, full, i):
    keep = np.delete(np.arange(data.n_nodes), i)
    label = data.node_labels[i]
    try:
        subnetwork, report = filter_degenerate(data.subnetwork(keep), family)
    except TooSmallAfterFiltering as error:
        return SubsampleFit(label, error=str(error))
    index = {node: k for k, node in enumerate(data.node_labels)}
    kept = [index[node] for node in subnetwork.node_labels]
    warm = config.with_warm_start(ParameterSet(
        full.params.beta, full.params.alpha[kept], full.params.gamma[kept]))
    sample = _fit_subsample(subnetwork, family, warm, subnetwork.mask,
                            subnetwork.n_nodes - 1, label)
    sample.dropped_nodes = list(report.dropped_nodes)
    return sample


def jackknife_double(data, family, config=None, jobs=1, full_fit=None):
    """
    Compute the leave-one-agent-out jackknife estimator.

    Agent ``i``'s subsample is the network of the other ``N - 1`` agents,
    filtered again for degenerate agents. The estimate is
    ``N beta - (N - 1) * mean(beta_i)``, where the mean runs over the
    subnetworks that could be fitted; the number of skipped agents is
    recorded.

    Args:
        data (dyadnet.data.NetworkData): The (filtered) network.
        family: The model family.
        config (dyadnet.estimator.FitConfig): Solver options.
        jobs (int): The number of concurrent fits.
        full_fit (dyadnet.estimator.FitResult): A full sample fit to reuse.

    Returns:
        JackknifeResult: The corrected estimate.

    """
    family = get_family(family)
    config = config or FitConfig()
    full = _full_fit(data, family, config, full_fit)
    n = data.n_nodes
    tasks = [(lambda i=i: _fit_without_agent(data, family, config, full, i))
             for i in range(n)]
    samples = _run(tasks, jobs)
    betas = [_beta(s) for s in samples]
    used = [b for b in betas if b is not None]
    if not used:
        raise DegenerateSample('every leave-one-agent-out subnetwork')
    beta = n * full.params.beta - (n - 1) * np.mean(used, axis=0)
    result = JackknifeResult(
        constants.DOUBLE_AGENT, full.params.beta, betas, beta, None, full,
        samples)
    skipped = [s.label for s in samples if not s.usable]
    if skipped:
        result.extra['skipped_agents'] = skipped
        log.warning('Skipped %d degenerate leave-one-agent-out subnetworks',
                    len(skipped))
    result.extra['n_used'] = len(used)
    return result


_VARIANTS = {
    constants.PLAIN: jackknife_beta,
    constants.LEAVE_L: jackknife_beta,
    constants.WEIGHTED: jackknife_weighted
}


def jackknife_with_relabeling(data, family, config=None, l=1,  # noqa: E741
                              n_relabels=1, seed=0, variant=constants.PLAIN,
                              jobs=1, full_fit=None):
    """
    Average a leave-out jackknife over random node relabelings.

    Relabeling ``r`` uses `dyadnet.data.relabel` with seed ``seed + r``.
    The corrected fixed effects are mapped back to the original node order
    before averaging.

    Args:
        data (dyadnet.data.NetworkData): The (filtered) network.
        family: The model family.
        config (dyadnet.estimator.FitConfig): Solver options.
        l (int): The block size.
        n_relabels (int): The number of relabelings.
        seed (int): The first relabeling seed.
        variant (str): ``plain`` or ``weighted``.
        jobs (int): The number of concurrent fits.
        full_fit (dyadnet.estimator.FitResult): A full sample fit to reuse.

    Returns:
        JackknifeResult: The averaged estimate, with ``relabel_estimates``
        and ``relabel_sd`` in ``extra``.

    """
    if n_relabels < 1:
        raise ValueError('n_relabels must be at least 1')
    family = get_family(family)
    config = config or FitConfig()
    full = _full_fit(data, family, config, full_fit)
    method = _VARIANTS[variant]
    results, betas, phis = [], [], []
    for r in range(n_relabels):
        order = permutation(data.n_nodes, seed + r)
        relabeled = relabel(data, seed + r)
        warm = config.with_warm_start(full.params.permute(order))
        result = method(relabeled, family, warm,
                        build_partition(data.n_nodes, l), jobs)
        phi = np.empty(2 * data.n_nodes)
        phi[order] = result.phi_corrected[:data.n_nodes]
        phi[data.n_nodes + order] = result.phi_corrected[data.n_nodes:]
        results.append(result)
        betas.append(result.beta_corrected)
        phis.append(phi)
        log.info('Relabeling %d of %d done', r + 1, n_relabels)
    first = results[0]
    averaged = JackknifeResult(
        first.variant, full.params.beta, first.beta_leaveout,
        np.mean(betas, axis=0), np.mean(phis, axis=0), full,
        [s for result in results for s in result.subsamples], l,
        first.weights_used)
    averaged.extra['relabel_estimates'] = betas
    averaged.extra['relabel_sd'] = (np.std(betas, axis=0, ddof=1)
                                    if n_relabels > 1
                                    else np.zeros_like(betas[0]))
    averaged.extra['relabel_seeds'] = [seed + r for r in range(n_relabels)]
    return averaged
