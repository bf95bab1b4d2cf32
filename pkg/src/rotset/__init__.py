"""Guaranteed outer approximations of rotation sets of torus maps."""
from .bounds import ErrorBudget, gamma, kappa, shadowing_error, total_error
from .boxgrid import (BoxIndex, box_diameter, box_of, boxes_near, default_test_grid,
                      point_box_distance, test_grid_density, test_points)
from .dynamics import (DomainError, HorizontalShear, MapSpec, Translation, VerticalShear,
                       displacement_bound, evaluate, high_period_map, identity_map, iterate,
                       lipschitz_bound, parse_map, perturbed, standard_family)
from .evolve import BoxSet, RotationApprox, advance, extreme_corners, initial_set, run
from .geometry import (Polygon, convex_hull, covered_by_neighborhood, distance_to_approx,
                       distance_to_polygon, hausdorff_points, hausdorff_to_polygon, rectangle)
from .sampling import (PseudoOrbit, is_pseudo_orbit, random_pseudo_orbit, sample_Kn,
                       sample_Kn_eps, segment_average_check)
from .transition import TransitionTable, UnsoundParameters, build_table, image_of

__version__ = "0.1.0"
