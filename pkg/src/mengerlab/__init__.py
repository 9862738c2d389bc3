"""Discrete integral Menger curvature, beta numbers and the stopping-time
graph construction for weighted point clouds."""

from .beta import BetaResult, ScaleGrid, beta1, beta2, beta_fixed_plane, best_plane_l2, multiscale_beta
from .curvature import CurvatureEstimate, LocalRegion, curvature_exact, curvature_local, curvature_mc
from .errors import *  # noqa: F401,F403
from .geometry import AffineMap, AffineSubspace, affine_hull, angle, dist_to_subspace, gram_schmidt_tracked, plane_as_graph, project
from .integrands import IntegrandKind, check_propriety, evaluate, symmetrize
from .measure import Ball, DiscreteMeasure, generate, read_csv, write_csv
from .simplex import Simplex, face, hausdorff_volume, height, heights, is_sigma_simplex, max_volume_simplex, normalized_volume, slab_cover

__version__ = "0.1.0"
