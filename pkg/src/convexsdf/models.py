"""The three variational objectives and their ingredients.

Three models share one constrained level-set formulation and differ only in
the data term F(phi):

* segmentation      -- label-driven region force plus an edge-weighted
                       boundary penalty, F = sum force*h(phi) + mu*g*delta(phi)
* exact-hull        -- smallest enclosing convex shape, F = sum -phi with
                       phi <= 0 pinned on the input set
* approx-hull       -- outlier-tolerant variant, F = sum -phi plus a
                       penalty lam * R(phi) on input cells left outside

The solver linearizes F at the current iterate, so each model only has to
provide its objective value and its pointwise derivative field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .diffops import gradient
from .grid import GridShape, MaskField, ScalarField
from .transforms import gaussian_convolve

KIND_SEGMENTATION = "segmentation"
KIND_EXACT_HULL = "exact-hull"
KIND_APPROX_HULL = "approx-hull"

# Probabilities are clamped here before taking logarithms: a query pixel
# coinciding with a label would otherwise hit log(0).
PROB_CLAMP = 1e-6


@dataclass(frozen=True)
class SegParams:
    """Segmentation weights.

    a, b scale the spatial and intensity terms of the label similarity
    (intensities are expected in [0, 1], which keeps b=10 discriminative);
    mu weighs the edge-detector boundary term; alpha_h is the smoothing
    width of the Heaviside/delta pair; g_alpha, g_beta shape the edge
    detector; sigma is the Gaussian width of the pre-smoothing kernel.
    """

    a: float = 1.0
    b: float = 10.0
    mu: float = 1.0
    alpha_h: float = 1.5
    g_alpha: float = 1.0
    g_beta: float = 10.0
    sigma: float = 1.5

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.mu < 0 or self.g_beta < 0:
            raise ValueError("a, b, mu, g_beta must be nonnegative")
        if not (self.alpha_h > 0 and self.g_alpha > 0 and self.sigma > 0):
            raise ValueError("alpha_h, g_alpha, sigma must be positive")


@dataclass(frozen=True)
class HullParams:
    """Outlier penalty weight and the sharpness of its smooth ramp.

    softplus_t = None selects the exact positive-part penalty instead of
    the softplus approximation.
    """

    lam: float = 800.0
    softplus_t: float | None = 5.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.softplus_t is not None and not (self.softplus_t > 0):
            raise ValueError("softplus_t must be positive (or None for exact)")


def penalty(s, t: float | None):
    """Ramp penalty R(s): positive part, or its softplus smoothing."""
    s = np.asarray(s, dtype=np.float64)
    if t is None:
        return np.maximum(s, 0.0)
    return np.logaddexp(0.0, t * s) / t


def penalty_slope(s, t: float | None):
    """Derivative of :func:`penalty`: a unit step, or a sigmoid."""
    s = np.asarray(s, dtype=np.float64)
    if t is None:
        return (s > 0.0).astype(np.float64)
    return expit(t * s)


def smoothed_heaviside(y, alpha_h: float):
    """Arctan-smoothed unit step, strictly increasing onto (0, 1)."""
    return 0.5 + np.arctan(np.asarray(y, dtype=np.float64) / alpha_h) / np.pi


def smoothed_delta(y, alpha_h: float):
    """Derivative of :func:`smoothed_heaviside`: a Cauchy bump of width alpha_h."""
    y = np.asarray(y, dtype=np.float64)
    return alpha_h / (np.pi * (y * y + alpha_h * alpha_h))


def smoothed_delta_prime(y, alpha_h: float):
    y = np.asarray(y, dtype=np.float64)
    q = y * y + alpha_h * alpha_h
    return -2.0 * alpha_h * y / (np.pi * q * q)


def similarity(x, y, u: ScalarField, params: SegParams) -> float:
    """Similarity of two grid points: exp(-a|x-y|^2 - b(u(x)-u(y))^2)."""
    x = tuple(int(c) for c in x)
    y = tuple(int(c) for c in y)
    d2 = sum((cx - cy) ** 2 for cx, cy in zip(x, y))
    du = float(u.values[x]) - float(u.values[y])
    return float(np.exp(-params.a * d2 - params.b * du * du))


def region_force(
    u: ScalarField,
    labels_in: MaskField,
    labels_out: MaskField,
    params: SegParams,
) -> ScalarField:
    """Per-pixel data term log p_out(x) - log p_in(x).

    p_in(x) is the similarity-weighted fraction of mass the inside labels
    claim at x; probabilities are computed symmetrically from the two label
    sums, so swapping the label sets negates the force bitwise. Pixels so
    far from every label that both sums underflow get p = 1/2 (force 0).
    """
    if labels_in.count == 0 or labels_out.count == 0:
        raise ValueError("region force needs at least one label of each class")
    coords = np.indices(u.shape.dims, dtype=np.float64)
    sums = []
    for labels in (labels_in, labels_out):
        acc = np.zeros(u.shape.dims)
        for point in np.argwhere(labels.values):
            d2 = np.zeros(u.shape.dims)
            for ax, c in enumerate(point):
                d2 += (coords[ax] - float(c)) ** 2
            du = u.values - u.values[tuple(point)]
            acc += np.exp(-params.a * d2 - params.b * du * du)
        sums.append(acc)
    total = sums[0] + sums[1]
    with np.errstate(invalid="ignore"):
        p_in = np.where(total > 0.0, sums[0] / total, 0.5)
        p_out = np.where(total > 0.0, sums[1] / total, 0.5)
    p_in = np.clip(p_in, PROB_CLAMP, 1.0 - PROB_CLAMP)
    p_out = np.clip(p_out, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return ScalarField(u.shape, np.log(p_out) - np.log(p_in))


def edge_detector(u: ScalarField, params: SegParams) -> ScalarField:
    """g = g_alpha / (1 + g_beta * |grad(K * u)|), small across strong edges."""
    smooth = gaussian_convolve(u, params.sigma)
    comps = gradient(smooth).values
    mag = np.sqrt((comps * comps).sum(axis=0))
    return ScalarField(u.shape, params.g_alpha / (1.0 + params.g_beta * mag))


@dataclass(frozen=True)
class ModelSpec:
    """A fully assembled problem instance: which objective, on which data.

    labels_in marks cells pinned to phi <= 0 (object side) and labels_out
    cells pinned to phi >= 0; either may be empty depending on the model.
    Segmentation instances carry their precomputed region force and edge
    fields, which do not depend on phi.
    """

    kind: str
    grid: GridShape
    image: ScalarField | None = None
    input_set: MaskField | None = None
    labels_in: MaskField | None = None
    labels_out: MaskField | None = None
    seg: SegParams | None = None
    hull: HullParams | None = None
    force: ScalarField | None = None
    edge: ScalarField | None = None

    def __post_init__(self):
        if self.kind not in (KIND_SEGMENTATION, KIND_EXACT_HULL, KIND_APPROX_HULL):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.labels_in is not None and self.labels_out is not None:
            if np.any(self.labels_in.values & self.labels_out.values):
                raise ValueError("label sets must be disjoint")

    @classmethod
    def segmentation(
        cls,
        image: ScalarField,
        labels_in: MaskField,
        labels_out: MaskField,
        params: SegParams | None = None,
    ) -> "ModelSpec":
        params = params or SegParams()
        if labels_in.count == 0 and labels_out.count == 0:
            raise ValueError("segmentation needs at least one labelled pixel")
        lo, hi = float(image.values.min()), float(image.values.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError("image intensities must be in [0, 1]; rescale first")
        force = region_force(image, labels_in, labels_out, params)
        edge = edge_detector(image, params)
        return cls(
            kind=KIND_SEGMENTATION,
            grid=image.shape,
            image=image,
            labels_in=labels_in,
            labels_out=labels_out,
            seg=params,
            force=force,
            edge=edge,
        )

    @classmethod
    def exact_hull(cls, input_set: MaskField) -> "ModelSpec":
        """Smallest convex shape containing every cell of the input set.

        The input cells are pinned to the phi <= 0 side; the area term then
        shrinks the shape onto their convex hull.
        """
        if input_set.count == 0:
            raise ValueError("exact hull needs a nonempty input set")
        return cls(
            kind=KIND_EXACT_HULL,
            grid=input_set.shape,
            input_set=input_set,
            labels_in=input_set,
            labels_out=MaskField.zeros(input_set.shape),
        )

    @classmethod
    def approx_hull(
        cls,
        input_set: MaskField,
        params: HullParams | None = None,
        labels_in: MaskField | None = None,
        labels_out: MaskField | None = None,
    ) -> "ModelSpec":
        """Outlier-tolerant hull: input cells are penalized, not pinned."""
        if input_set.count == 0:
            raise ValueError("approximate hull needs a nonempty input set")
        return cls(
            kind=KIND_APPROX_HULL,
            grid=input_set.shape,
            input_set=input_set,
            labels_in=labels_in or MaskField.zeros(input_set.shape),
            labels_out=labels_out or MaskField.zeros(input_set.shape),
            hull=params or HullParams(),
        )


def _check_phi(phi: ScalarField, spec: ModelSpec) -> None:
    if phi.shape != spec.grid:
        raise ValueError("phi does not live on the model's grid")


def objective_value(phi: ScalarField, spec: ModelSpec) -> float:
    """Value of the model's data term F(phi)."""
    _check_phi(phi, spec)
    if spec.kind == KIND_EXACT_HULL:
        return float(-phi.values.sum())
    if spec.kind == KIND_APPROX_HULL:
        m = spec.input_set.values
        pen = penalty(phi.values[m], spec.hull.softplus_t).sum()
        return float(-phi.values.sum() + spec.hull.lam * pen)
    h = smoothed_heaviside(phi.values, spec.seg.alpha_h)
    delta = smoothed_delta(phi.values, spec.seg.alpha_h)
    boundary = spec.seg.mu * spec.edge.values * delta
    return float((spec.force.values * h + boundary).sum())


def objective_gradient(phi: ScalarField, spec: ModelSpec) -> ScalarField:
    """Pointwise derivative dF/dphi, evaluated at the given iterate."""
    _check_phi(phi, spec)
    if spec.kind == KIND_EXACT_HULL:
        return ScalarField.full(spec.grid, -1.0)
    if spec.kind == KIND_APPROX_HULL:
        slope = penalty_slope(phi.values, spec.hull.softplus_t)
        g = -1.0 + spec.hull.lam * spec.input_set.values * slope
        return ScalarField(spec.grid, g)
    delta = smoothed_delta(phi.values, spec.seg.alpha_h)
    dprime = smoothed_delta_prime(phi.values, spec.seg.alpha_h)
    g = spec.force.values * delta + spec.seg.mu * spec.edge.values * dprime
    return ScalarField(spec.grid, g)
