"""Discrete differential operators on periodic grids.

Forward and backward first differences plus the gradient, divergence
adjoint, Laplacian, Hessian and Hessian adjoint built from them. The
stencils are fixed (no upwind switching) so that the adjoint pairings

    <grad f, p> = <f, grad* p>        <Hess f, Q>_F = <f, Hess* Q>

hold exactly under periodic wrap-around, and the composition identity
hess_adjoint(hessian(f)) == laplacian(laplacian(f)) holds to rounding.
"""

from __future__ import annotations

import numpy as np

from .grid import GridShape, ScalarField, SymMatField, VectorField


def _check_axis(shape: GridShape, axis: int) -> None:
    if not 0 <= axis < shape.ndim:
        raise ValueError(f"axis {axis} out of range for a {shape.ndim}D grid")


def _fwd(values: np.ndarray, axis: int) -> np.ndarray:
    # f(x + e_axis) - f(x), wrapping at the top edge
    return np.roll(values, -1, axis=axis) - values


def _bwd(values: np.ndarray, axis: int) -> np.ndarray:
    # f(x) - f(x - e_axis), wrapping at the bottom edge
    return values - np.roll(values, 1, axis=axis)


def forward_diff(f: ScalarField, axis: int) -> ScalarField:
    """Periodic forward difference along one axis (0-based)."""
    _check_axis(f.shape, axis)
    return ScalarField(f.shape, _fwd(f.values, axis))


def backward_diff(f: ScalarField, axis: int) -> ScalarField:
    """Periodic backward difference along one axis (0-based)."""
    _check_axis(f.shape, axis)
    return ScalarField(f.shape, _bwd(f.values, axis))


def gradient(f: ScalarField) -> VectorField:
    """Forward-difference gradient: component i is the axis-i forward diff."""
    comps = np.stack([_fwd(f.values, ax) for ax in range(f.shape.ndim)])
    return VectorField(f.shape, comps)


def divergence_adjoint(p: VectorField) -> ScalarField:
    """Adjoint of the gradient: minus the sum of backward diffs per component."""
    out = np.zeros(p.shape.dims)
    for ax in range(p.shape.ndim):
        out -= _bwd(p.values[ax], ax)
    return ScalarField(p.shape, out)


def laplacian(f: ScalarField) -> ScalarField:
    """Periodic Laplacian, the (-2d)-center second-difference stencil.

    Computed as the per-axis composition backward(forward(f)), which makes
    it bitwise equal to -divergence_adjoint(gradient(f)).
    """
    out = np.zeros(f.shape.dims)
    for ax in range(f.shape.ndim):
        out += _bwd(_fwd(f.values, ax), ax)
    return ScalarField(f.shape, out)


def hessian(f: ScalarField) -> SymMatField:
    """Discrete Hessian with backward-forward diagonals and forward-forward
    off-diagonals. Mixed forward diffs commute, so symmetry is exact and
    only the upper triangle is computed.
    """
    comps = np.empty((f.shape.nsym,) + f.shape.dims)
    for slot, (i, j) in enumerate(f.shape.sym_pairs()):
        if i == j:
            comps[slot] = _bwd(_fwd(f.values, i), i)
        else:
            comps[slot] = _fwd(_fwd(f.values, j), i)
    return SymMatField(f.shape, comps)


def hessian_adjoint(Q: SymMatField) -> ScalarField:
    """Adjoint of :func:`hessian` under the doubled-off-diagonal pairing.

    Diagonal slots contribute backward(forward(Q_ii)); each stored
    off-diagonal slot stands for the two entries (i,j) and (j,i) and
    contributes twice its backward-backward difference.
    """
    out = np.zeros(Q.shape.dims)
    for slot, (i, j) in enumerate(Q.shape.sym_pairs()):
        if i == j:
            out += _bwd(_fwd(Q.values[slot], i), i)
        else:
            out += 2.0 * _bwd(_bwd(Q.values[slot], j), i)
    return ScalarField(Q.shape, out)
