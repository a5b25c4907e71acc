"""Convex shape priors through signed distance functions.

A 2D/3D level-set toolkit that represents convex shapes by the convexity
of their signed distance function (positive semi-definite Hessian inside a
band around the boundary) and solves convexity-constrained segmentation
and variational convex-hull problems with an ADMM splitting, validated
against exact computational-geometry baselines.
"""

from .convexity import (
    BandSpec,
    band_mask,
    convexity_violation,
    project_hessian_field,
    psd_project,
)
from .diffops import (
    backward_diff,
    divergence_adjoint,
    forward_diff,
    gradient,
    hessian,
    hessian_adjoint,
    laplacian,
)
from .geometry import (
    HullFacets,
    PointSet,
    convex_layers_approx,
    exact_hull,
    hull_contains,
    hull_error,
    mask_points,
    rasterize_hull,
)
from .grid import (
    GridShape,
    MaskField,
    ScalarField,
    SymMatField,
    VectorField,
    inner_product,
    wrap_index,
)
from .models import (
    HullParams,
    ModelSpec,
    SegParams,
    edge_detector,
    objective_gradient,
    objective_value,
    region_force,
    similarity,
    smoothed_delta,
    smoothed_heaviside,
)
from .solver import (
    AdmmParams,
    IterationStats,
    SolveResult,
    SolverDivergenceError,
    SolverState,
    initialize,
    multiplier_update,
    p_update,
    phi_update,
    q_update,
    solve,
    z_update,
)
from .synth import synth
from .transforms import (
    SpectralSolveParams,
    gaussian_convolve,
    signed_distance_transform,
    solve_phi_pde,
)

__version__ = "0.1.0"
