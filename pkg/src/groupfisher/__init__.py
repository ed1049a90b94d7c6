"""Fisher information in group transformation models.

Closed-form scores and information matrices, the variational (supremal)
characterization over test functions on the compactified line, minimum
Fisher information over contamination neighborhoods, and Monte Carlo
checks of local asymptotic normality.
"""
from .closed import FisherEstimate, fisher_directional, fisher_matrix, score
from .compact import CompactMap, backward, forward, make_basis
from .distributions import (CentralDistribution, atom, cauchy, exp_tail, huber_lfd, make_distribution, mixture,
                            point_contaminated, product, std_normal)
from .lan import lan_experiment, score_moments
from .minimize import (ContaminationNeighborhood, atom_grid, convexity_certificate, exp_tail_templates,
                       grid_l1_distance, minimize_directional, minimize_trace_inverse)
from .models import GroupModel, make_model, sym_kron, unvech, vech
from .variational import convergence_profile, variational_matrix, variational_value

__version__ = "0.1.0"
