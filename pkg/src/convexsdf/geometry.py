"""Exact computational-geometry baselines and error metrics.

Point-set convex hulls (through Qhull), hull rasterization onto grid
masks, the onion-peeling approximate hull used as the outlier baseline,
and the equivalent-radius Hausdorff error that scores a candidate mask
against a reference region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from .grid import GridShape, MaskField

# A point this close to a facet plane counts as lying on the hull boundary.
FACET_SLACK = 1e-9


@dataclass(frozen=True)
class PointSet:
    """Integer grid coordinates in 2 or 3 dimensions."""

    dim: int
    points: np.ndarray  # (n, dim)

    def __post_init__(self):
        pts = np.asarray(self.points)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"expected points of shape (n, {self.dim}), got {pts.shape}")
        if pts.shape[0] == 0:
            raise ValueError("point set must be nonempty")
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        object.__setattr__(self, "points", pts.astype(np.float64))

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class HullFacets:
    """Convex hull of a point set.

    For a full-dimensional hull, ``vertices`` holds the hull vertex
    coordinates, ``facets`` indexes them (an ordered counter-clockwise
    cycle in 2D, outward-oriented triangles in 3D), and ``equations``
    holds one outward facet equation (normal..., offset) per row with
    normal . x + offset <= 0 inside. Affinely degenerate input produces a
    flagged lower-dimensional hull with no facet equations.
    """

    dim: int
    vertices: np.ndarray
    facets: np.ndarray
    equations: np.ndarray
    degenerate: bool = False


def mask_points(mask: MaskField) -> PointSet:
    """Cell-center coordinates of the mask's true cells."""
    pts = np.argwhere(mask.values)
    if pts.shape[0] == 0:
        raise ValueError("mask has no true cells")
    return PointSet(mask.shape.ndim, pts)


def _degenerate_hull(points: np.ndarray, dim: int) -> HullFacets:
    """Lower-dimensional hull of an affinely flat point set, flagged."""
    uniq = np.unique(points, axis=0)
    centered = uniq - uniq.mean(axis=0)
    if uniq.shape[0] == 1:
        verts = uniq
    else:
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
        rank = int((s > 1e-9 * max(1.0, s[0])).sum())
        if rank <= 1:
            t = centered @ vt[0]
            verts = uniq[[int(np.argmin(t)), int(np.argmax(t))]]
        else:
            # planar set in 3D: hull it in-plane, keep the cycle order
            coords2 = centered @ vt[:2].T
            try:
                flat = ConvexHull(coords2)
                verts = uniq[flat.vertices]
            except QhullError:
                verts = uniq
    return HullFacets(
        dim=dim,
        vertices=verts.astype(np.float64),
        facets=np.empty((0, dim), dtype=np.intp),
        equations=np.empty((0, dim + 1)),
        degenerate=True,
    )


def exact_hull(ps: PointSet) -> HullFacets:
    """Convex hull with consistently oriented facets.

    Collinear (2D) or coplanar (3D) input does not have a full-dimensional
    hull; it comes back flagged ``degenerate`` with the extreme points of
    the flat set instead of being silently promoted.
    """
    try:
        hull = ConvexHull(ps.points)
    except QhullError:
        return _degenerate_hull(ps.points, ps.dim)
    vertices = ps.points[hull.vertices]
    if ps.dim == 2:
        # Qhull returns 2D hull vertices in counter-clockwise order already.
        facets = np.arange(len(hull.vertices), dtype=np.intp)
    else:
        remap = np.full(ps.points.shape[0], -1, dtype=np.intp)
        remap[hull.vertices] = np.arange(len(hull.vertices))
        facets = remap[hull.simplices]
        # orient each triangle so its winding matches the outward normal
        tri = vertices[facets]
        winding = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        flip = (winding * hull.equations[:, :3]).sum(axis=1) < 0.0
        facets[flip] = facets[flip][:, [0, 2, 1]]
    return HullFacets(
        dim=ps.dim,
        vertices=vertices,
        facets=facets,
        equations=hull.equations.copy(),
        degenerate=False,
    )


def facet_distances(hull: HullFacets, points: np.ndarray) -> np.ndarray:
    """Largest signed facet-plane distance per query point (<= 0 inside)."""
    if hull.degenerate:
        raise ValueError("degenerate hull has no facet equations")
    pts = np.asarray(points, dtype=np.float64)
    return (pts @ hull.equations[:, :-1].T + hull.equations[:, -1]).max(axis=1)


def hull_contains(hull: HullFacets, points: np.ndarray, slack: float = FACET_SLACK):
    """Whether each query point lies inside or on the hull."""
    return facet_distances(hull, points) <= slack


def rasterize_hull(hull: HullFacets, shape: GridShape) -> MaskField:
    """Mask of grid cells whose centers lie inside or on the hull."""
    if hull.dim != shape.ndim:
        raise ValueError("hull dimension does not match the grid")
    centers = np.indices(shape.dims).reshape(shape.ndim, -1).T
    inside = hull_contains(hull, centers)
    return MaskField(shape, inside.reshape(shape.dims))


def convex_layers_approx(ps: PointSet, k: int) -> HullFacets:
    """Approximate hull after peeling roughly k boundary points.

    Repeatedly removes every point on the current hull boundary (vertices
    and points lying on a facet within the slack) until at least k points
    are gone, then returns the hull of the survivors. With k = 0 this is
    exactly :func:`exact_hull`.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k >= len(ps):
        raise ValueError(f"k={k} must be smaller than the point count {len(ps)}")
    points = ps.points
    removed = 0
    while removed < k:
        hull = exact_hull(PointSet(ps.dim, points))
        if hull.degenerate:
            on_boundary = np.ones(points.shape[0], dtype=bool)
        else:
            on_boundary = facet_distances(hull, points) >= -FACET_SLACK
        points = points[~on_boundary]
        removed += int(on_boundary.sum())
        if points.shape[0] == 0:
            raise ValueError(
                f"peeling consumed all points after removing {removed} (k={k})"
            )
    return exact_hull(PointSet(ps.dim, points))


def _directed_hausdorff(src: np.ndarray, dst: np.ndarray) -> float:
    # distance_transform_edt(~dst) is the distance to the nearest dst cell
    reach = ndimage.distance_transform_edt(~dst)
    return float(reach[src].max())


def hull_error(candidate: MaskField, reference: MaskField) -> float:
    """Symmetric Hausdorff distance between two masks, normalized by the
    equivalent radius of the reference (the ball of the same area/volume).
    """
    if candidate.shape != reference.shape:
        raise ValueError("masks live on different grids")
    ref = reference.values
    cand = candidate.values
    if not ref.any():
        raise ValueError("reference mask is empty")
    if not cand.any():
        raise ValueError("candidate mask is empty")
    hausdorff = max(_directed_hausdorff(cand, ref), _directed_hausdorff(ref, cand))
    measure = float(ref.sum())
    if reference.shape.ndim == 2:
        radius = np.sqrt(measure / np.pi)
    else:
        radius = (3.0 * measure / (4.0 * np.pi)) ** (1.0 / 3.0)
    return hausdorff / radius
