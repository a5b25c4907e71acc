"""ADMM loop for the unified convexity-constrained level-set problem.

Per iteration: phi solves a linear fourth-order PDE spectrally, p pulls the
gradient back onto unit length, Q projects the Hessian onto the PSD cone
inside the constraint band, z clamps the label cells to their required
sign, and the three multipliers take a dual ascent step with step size
equal to their penalty weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .convexity import BandSpec, band_mask, project_hessian_field
from .diffops import divergence_adjoint, gradient, hessian, hessian_adjoint
from .grid import GridShape, MaskField, ScalarField, SymMatField, VectorField
from .models import (
    KIND_APPROX_HULL,
    KIND_EXACT_HULL,
    KIND_SEGMENTATION,
    ModelSpec,
    objective_gradient,
    objective_value,
)
from .transforms import SpectralSolveParams, signed_distance_transform, solve_phi_pde

# A gradient this small has no usable direction; see p_update.
P_DEGENERATE_TOL = 1e-12

# Pointwise cap on the unit-gradient multiplier, in units of rho1. The
# |grad phi| = 1 constraint cannot hold at the ridges of a periodic
# distance field (every periodic function has flat critical points), so an
# unbounded dual ascent diverges there and destabilizes the whole loop;
# keeping gamma1 inside a ball turns those infeasible cells into a bounded
# constant forcing instead. Feasible cells never get near the cap.
GAMMA1_CAP_FACTOR = 1.0


class SolverDivergenceError(RuntimeError):
    """Raised when the iterate blows past any plausible distance scale."""


@dataclass(frozen=True)
class AdmmParams:
    """Penalty weights and loop controls.

    rho1 defaults to 2*sqrt(rho2*rho3), the critically-damped choice for
    the fourth-order solve. Defaults suit the exact hull model; use
    :meth:`for_model` to get the approximate-hull tuning (rho3=400,
    epsilon=5). epsilon = 0 disables the convexity constraint.
    """

    rho2: float = 2000.0
    rho3: float = 10.0
    rho1: float | None = None
    epsilon: float = 10.0
    max_iters: int = 500
    tol: float = 1e-4
    band_refresh: int = 1

    def __post_init__(self):
        if self.rho1 is None:
            object.__setattr__(self, "rho1", 2.0 * math.sqrt(self.rho2 * self.rho3))
        if not (self.rho1 > 0 and self.rho2 > 0 and self.rho3 > 0):
            raise ValueError("rho1, rho2, rho3 must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.max_iters < 1 or self.band_refresh < 1:
            raise ValueError("max_iters and band_refresh must be >= 1")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")

    @classmethod
    def for_model(cls, kind: str, **overrides) -> "AdmmParams":
        if kind == KIND_APPROX_HULL:
            base = dict(rho2=2000.0, rho3=400.0, epsilon=5.0)
        else:
            base = dict(rho2=2000.0, rho3=10.0, epsilon=10.0)
        base.update(overrides)
        return cls(**base)

    def spectral(self) -> SpectralSolveParams:
        return SpectralSolveParams(rho1=self.rho1, rho2=self.rho2, rho3=self.rho3)


@dataclass(frozen=True)
class IterationStats:
    iteration: int
    objective: float
    res_p: float
    res_q: float
    res_z: float
    dphi: float


@dataclass
class SolverState:
    """All primal and dual variables plus the running diagnostics."""

    phi: ScalarField
    p: VectorField
    q: SymMatField
    z: ScalarField
    gamma1: VectorField
    gamma2: SymMatField
    gamma3: ScalarField
    band: MaskField
    iteration: int = 0
    history: list[IterationStats] = field(default_factory=list)


@dataclass(frozen=True)
class SolveResult:
    phi: ScalarField
    mask: MaskField
    history: list[IterationStats]
    iterations: int
    converged: bool


def default_init_mask(spec: ModelSpec) -> MaskField:
    """Initial shape when the caller provides none.

    Hull models start from the input set dilated by one cell, which puts
    every input cell strictly inside the zero level-set. Segmentation
    starts from the cells the region force votes into the object.
    """
    if spec.kind in (KIND_EXACT_HULL, KIND_APPROX_HULL):
        grown = ndimage.binary_dilation(spec.input_set.values)
        return MaskField(spec.grid, grown)
    return MaskField(spec.grid, spec.force.values < 0.0)


def initialize(
    spec: ModelSpec,
    init_mask: MaskField | None = None,
    params: AdmmParams | None = None,
) -> SolverState:
    """Fresh state: phi is the SDF of the initial shape, multipliers zero.

    The splitting variables start consistent with phi0 (p = grad phi0,
    Q = Hess phi0, z = phi0) rather than at zero: with all-zero splitting
    variables the first linear solve returns a constant field and the
    initial shape would be discarded entirely, so a zero start makes the
    initialization meaningless and the loop markedly less stable.
    """
    params = params or AdmmParams.for_model(spec.kind)
    if init_mask is None:
        init_mask = default_init_mask(spec)
    if init_mask.count == 0 or init_mask.count == init_mask.shape.npoints:
        raise ValueError("initial mask must contain both phases")
    phi0 = signed_distance_transform(init_mask)
    shape = spec.grid
    return SolverState(
        phi=phi0,
        p=gradient(phi0),
        q=hessian(phi0),
        z=phi0,
        gamma1=VectorField.zeros(shape),
        gamma2=SymMatField.zeros(shape),
        gamma3=ScalarField.zeros(shape),
        band=band_mask(phi0, BandSpec(params.epsilon)),
    )


def phi_update(state: SolverState, spec: ModelSpec, params: AdmmParams) -> ScalarField:
    """Solve the linear fourth-order optimality PDE for the next phi.

    The data term enters through its derivative at the current iterate, the
    split variables and multipliers through the adjoint operators.
    """
    shape = spec.grid
    rhs = -objective_gradient(state.phi, spec).values
    vec = VectorField(shape, state.gamma1.values - params.rho1 * state.p.values)
    rhs -= divergence_adjoint(vec).values
    mat = SymMatField(shape, state.gamma2.values - params.rho2 * state.q.values)
    rhs -= hessian_adjoint(mat).values
    rhs -= state.gamma3.values - params.rho3 * state.z.values
    return solve_phi_pde(ScalarField(shape, rhs), params.spectral())


def p_update(
    state: SolverState, params: AdmmParams, *, grad: VectorField | None = None
) -> VectorField:
    """Project gamma1/rho1 + grad(phi) onto unit vectors, pointwise.

    Where the argument is numerically zero there is no direction to keep:
    the previous p survives if it is already unit, otherwise the first
    basis vector is emitted.
    """
    if grad is None:
        grad = gradient(state.phi)
    v = state.gamma1.values / params.rho1 + grad.values
    norm = np.sqrt((v * v).sum(axis=0))
    degenerate = norm < P_DEGENERATE_TOL
    out = v / np.where(degenerate, 1.0, norm)
    if degenerate.any():
        prev = state.p.values
        prev_norm = np.sqrt((prev * prev).sum(axis=0))
        prev_ok = np.abs(prev_norm - 1.0) <= P_DEGENERATE_TOL
        d = state.phi.shape.ndim
        e0 = np.zeros((d,) + (1,) * d)
        e0[0] = 1.0
        replacement = np.where(prev_ok[None], prev, e0)
        out = np.where(degenerate[None], replacement, out)
    return VectorField(state.phi.shape, out)


def q_update(
    state: SolverState, params: AdmmParams, *, hess: SymMatField | None = None
) -> SymMatField:
    """PSD-project gamma2/rho2 + Hess(phi) inside the band, copy it outside."""
    if hess is None:
        hess = hessian(state.phi)
    arg = SymMatField(state.phi.shape, state.gamma2.values / params.rho2 + hess.values)
    return project_hessian_field(arg, state.band)


def z_update(state: SolverState, spec: ModelSpec, params: AdmmParams) -> ScalarField:
    """Clamp gamma3/rho3 + phi to the required sign on the label cells."""
    w = state.gamma3.values / params.rho3 + state.phi.values
    out = w.copy()
    if spec.labels_in is not None and spec.labels_in.count:
        m = spec.labels_in.values
        out[m] = np.minimum(w[m], 0.0)
    if spec.labels_out is not None and spec.labels_out.count:
        m = spec.labels_out.values
        out[m] = np.maximum(w[m], 0.0)
    return ScalarField(spec.grid, out)


def multiplier_update(
    state: SolverState,
    params: AdmmParams,
    *,
    grad: VectorField | None = None,
    hess: SymMatField | None = None,
):
    """Dual ascent on all three constraints with step = penalty weight.

    gamma1 is additionally projected onto the pointwise ball of radius
    GAMMA1_CAP_FACTOR * rho1; see the constant's note.
    """
    if grad is None:
        grad = gradient(state.phi)
    if hess is None:
        hess = hessian(state.phi)
    g1 = state.gamma1.values + params.rho1 * (grad.values - state.p.values)
    cap = GAMMA1_CAP_FACTOR * params.rho1
    norm = np.sqrt((g1 * g1).sum(axis=0))
    g1 = g1 * np.minimum(1.0, cap / np.maximum(norm, 1e-30))
    g2 = state.gamma2.values + params.rho2 * (hess.values - state.q.values)
    g3 = state.gamma3.values + params.rho3 * (state.phi.values - state.z.values)
    shape = state.phi.shape
    return VectorField(shape, g1), SymMatField(shape, g2), ScalarField(shape, g3)


def _sup_vec_norm(values: np.ndarray) -> float:
    return float(np.sqrt((values * values).sum(axis=0)).max())


def _sup_sym_norm(field: SymMatField) -> float:
    w = np.array([1.0 if i == j else 2.0 for (i, j) in field.shape.sym_pairs()])
    sq = (field.values * field.values) * w[(...,) + (None,) * field.shape.ndim]
    return float(np.sqrt(sq.sum(axis=0)).max())


def solve(
    spec: ModelSpec,
    init_mask: MaskField | None = None,
    params: AdmmParams | None = None,
) -> SolveResult:
    """Run the ADMM loop until the relative sup-norm change of phi drops
    below tol or max_iters is reached.

    The constraint band is recomputed from the current phi every
    band_refresh iterations. phi is never re-distanced: the unit-gradient
    property is enforced only through the (p, gamma1) splitting.
    """
    params = params or AdmmParams.for_model(spec.kind)
    state = initialize(spec, init_mask, params)
    guard = 10.0 * spec.grid.diameter
    band = BandSpec(params.epsilon)
    converged = False
    for it in range(1, params.max_iters + 1):
        phi_prev = state.phi
        state.phi = phi_update(state, spec, params)
        state.iteration = it
        if (it - 1) % params.band_refresh == 0:
            state.band = band_mask(state.phi, band)
        grad = gradient(state.phi)
        hess = hessian(state.phi)
        state.p = p_update(state, params, grad=grad)
        state.q = q_update(state, params, hess=hess)
        state.z = z_update(state, spec, params)
        res_p = _sup_vec_norm(grad.values - state.p.values)
        res_q = _sup_sym_norm(
            SymMatField(spec.grid, hess.values - state.q.values)
        )
        res_z = float(np.abs(state.phi.values - state.z.values).max())
        state.gamma1, state.gamma2, state.gamma3 = multiplier_update(
            state, params, grad=grad, hess=hess
        )
        phi_max = float(np.abs(state.phi.values).max())
        dphi = float(np.abs(state.phi.values - phi_prev.values).max()) / max(
            phi_max, 1e-30
        )
        state.history.append(
            IterationStats(
                iteration=it,
                objective=objective_value(state.phi, spec),
                res_p=res_p,
                res_q=res_q,
                res_z=res_z,
                dphi=dphi,
            )
        )
        if phi_max > guard:
            raise SolverDivergenceError(
                f"|phi| reached {phi_max:.3g}, over 10x the grid diameter"
            )
        if dphi < params.tol:
            converged = True
            break
    mask = MaskField(spec.grid, state.phi.values < 0.0)
    return SolveResult(
        phi=state.phi,
        mask=mask,
        history=state.history,
        iterations=state.iteration,
        converged=converged,
    )
