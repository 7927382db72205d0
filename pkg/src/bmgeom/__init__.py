"""Convex-body geometry: inertia ellipses, Banach-Mazur estimates, sections.

The hot polygon loops run in a compiled extension when it is built and fall
back to numpy otherwise; ``bmgeom.kernels.BACKEND`` says which is active.
"""
__version__ = "0.1.0"

from .convex2d import (ConvexPolygon, Ellipse, MomentForm, Transform2, area_and_moments,
                       binet_legendre_ellipse, bl_normalize, centroid, gauge_radial,
                       hausdorff_distance, inclusion_scale, make_polygon, minkowski_symmetrize)
from .errors import (Degenerate, GeometryError, NoStableWindow, NotSymmetric, OriginOutside,
                     ParseError, PreconditionViolated, SeparationViolated)
from .isometry import (ArcSet, ClusterSet, IsometryProfile, StabilityParams, cluster_count_curve,
                       extract_clusters, is_beta_net, iso_profile, near_euclidean_certificate,
                       stable_window_search, sublevel_arcs)
from .metrics import (ConstantsTable, DistanceEstimate, constants_table, d_bl, d_bm_affine,
                      d_bm_disc, d_bm_linear, vnj_constant)
from .sections3d import (ConvexPolytope3, Ellipsoid3, SectionFrame, binet_legendre_3d,
                         central_section, find_centered_section, global_ball_deviation,
                         make_polytope, one_center_report, sections_eps)
from .spherefield import (BodyField, ExperimentRow, SphereMesh, ellipse_deviation_eps,
                          icosphere, monochromaticity_delta, scaling_experiment, section_field)
