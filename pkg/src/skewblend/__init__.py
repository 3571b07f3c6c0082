"""Blenders for polynomial skew products: certified constructions and estimators."""
from .assumptions import check_assumptions
from .base import BaseParam, base_lyapunov, base_periodic_points, q
from .certify import certify_blender, certify_ifs_covering
from .disk import Disk
from .errors import *  # noqa: F401,F403
from .graphs import (blender_intersection_sweep, graph_blender_intersection, random_vertical_graph,
                     solve_X_omega, unstable_graph, unstable_value, x_in_unstable_residual)
from .green import (Budgets, RegularSkewMap, bedford_jonsson_check, green, lyapunov_skew,
                    line_at_infinity_lyapunov)
from .heights import RationalPoint, RationalSkewMap, canonical_height_rational
from .multipliers import independence_report, multiplier_jacobian_rank, relation_from_multipliers
from .raster import (SliceSpec, laplacian_density, misiurewicz_parameters, misiurewicz_roots_up_to,
                     pcf_density_report, raster_map, x_omega_locus)
from .skew import (IFSParams, SkewParams, ifs_limit_point, lambda_0, lambda_hat, lambda_point,
                   phi_maps, repelling_two_cycle, saddle_point)
from .words import SymbolWord

__version__ = "0.1.0"
