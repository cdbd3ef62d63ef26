"""Planar optimal transport for costs h(||x - y||) with flat faces."""
from .costs import (
    ConstrainedOneVar,
    ConstrainedStrict,
    HNorm,
    Power,
    ShiftedSquarePlus,
    cost_matrix,
    is_strictly_convex_cost,
    shifted_square_plus,
)
from .decomposition import FaceDecomposition, decompose, decomposition_stats
from .errors import Infeasible, MassImbalance, NotApplicable, PlanarOTError, PointNotInK, TooLarge, ZeroDisplacement
from .geometry import (
    ConvexPolygon,
    Disk,
    Face,
    NormSpec,
    euclidean_norm,
    face_of_direction,
    faces,
    gauge,
    hexagon_norm,
    polyhedral_norm,
    project_onto,
    section,
    square_norm,
)
from .measures import DiscreteMeasure, DualPotentials, TransportPlan
from .ot_core import brute_force_value, solve_kantorovich, solve_transport, verify_duality
from .pipeline import InstanceConfig, gen, run_config, run_pipeline
from .rebuild import (
    build_fiber_blocks,
    constrained_map_check,
    face_frame,
    monotone_coupling,
    monotone_rearrange,
    rebuild_plan,
    secondary_selection,
    zbar,
)

__version__ = "0.1.0"
