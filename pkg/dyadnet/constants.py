"""
This module defines several common constants.

"""
#: The smallest network for which both a leave-out partition and a triad
#: average are defined.
MIN_NODES = 4

#: Linear indices beyond this magnitude are clamped when evaluating the
#: probit log-likelihood. Beyond it the double precision normal CDF
#: underflows.
ETA_GUARD = 37.0

#: Tolerance on ``|sum(alpha) - sum(gamma)|`` after convergence.
NORMALIZATION_TOLERANCE = 1e-8

#: The model families. Families are a closed enumeration so that each one
#: carries its own derivative tests.
PROBIT = 'probit'
LOGIT = 'logit'
GAUSSIAN_NLS = 'gaussian_nls'
POISSON_QMLE = 'poisson_qmle'

FAMILIES = (PROBIT, LOGIT, GAUSSIAN_NLS, POISSON_QMLE)

#: Families with a 0/1 outcome.
BINARY_FAMILIES = (PROBIT, LOGIT)

#: Jackknife variants.
PLAIN = 'plain'
LEAVE_L = 'leave_l'
WEIGHTED = 'weighted'
SPLIT_SAMPLE = 'split_sample'
DOUBLE_AGENT = 'double_agent'

#: Short spellings of the jackknife variants.
VARIANT_ALIASES = {'split': SPLIT_SAMPLE, 'double': DOUBLE_AGENT}

#: Estimator labels used by the Monte Carlo harness, in table order.
ESTIMATORS = ('mle', 'j', 'wj', 'd', 'ss')

#: Significant digits used when numbers are serialized.
FLOAT_DIGITS = 17
