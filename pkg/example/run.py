#!/usr/bin/env python3
"""
This example demonstrates how to use dyadnet as a library.

A network is drawn from the dense simulation design and written as an edge
list. The model is then fitted, its coefficient bias corrected and the
average link probability reported.

"""
import logging

from dyadnet import average_effect
from dyadnet import fit
from dyadnet import jackknife_weighted
from dyadnet import load_edge_list
from dyadnet.data import write_edge_list
from dyadnet.effects import link_probability
from dyadnet.simulation import generate_design
from dyadnet.simulation import SimDesign


logging.basicConfig(level=logging.INFO)
log = logging.getLogger('example')

network, truth = generate_design(SimDesign('dense', n_nodes=40, seed=7), 0)
write_edge_list(network, 'trade.csv')

data = load_edge_list('trade.csv')
full = fit(data, 'probit')
result = jackknife_weighted(data, 'probit', full_fit=full, jobs=4)
effect = average_effect(full, result.leaveout_fits, link_probability(),
                        data)

log.info('true beta %.3f, estimate %.3f, corrected %.3f', truth.theta,
         full.params.beta[0], result.beta_corrected[0])
log.info('link probability %.3f, corrected %.3f (se %.3f)',
         effect.delta_plugin, effect.delta_jackknife, effect.se)
