"""Pointwise convexity machinery: PSD projection, constraint bands, and a
sampled convexity-defect statistic.

The projection maps a symmetric matrix to its Frobenius-nearest positive
semi-definite matrix by clamping negative eigenvalues to zero. 2x2 matrices
use the closed-form eigensystem; 3x3 matrices use the trigonometric
analytic eigenvalues plus spectral-projector recombination, falling back
to a LAPACK eigendecomposition at points where a near-degenerate
eigenvalue pair straddles zero and the analytic projectors lose accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import GridShape, MaskField, ScalarField, SymMatField

# Error model of the analytic 3x3 eigenvalues: roughly eps*scale^2/gap for
# an eigenvalue whose nearest neighbor sits at distance gap, capped at the
# sqrt(eps)*scale resolution floor of the trigonometric formulas. A point
# takes the fast analytic projection only when every eigenvalue's sign is
# certain under this model and the projector denominators are well away
# from zero; everything else goes to the LAPACK fallback.
_EIG_ERR_CAP = 2e-8
_EIG_ERR_COEF = 1e-15
_CERTAIN_FACTOR = 10.0
_PROJ_GAP_MIN = 1e-3

# Interpolation weights used by the sampled convexity defect.
_THETAS = np.array([0.25, 0.5, 0.75])


@dataclass(frozen=True)
class BandSpec:
    """Half-width (grid units) of the |phi| <= epsilon constraint band.

    epsilon = 0 is allowed and yields an empty band, which disables the
    convexity constraint entirely.
    """

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon >= 0):
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")


def band_mask(phi: ScalarField, band: BandSpec) -> MaskField:
    """Cells with |phi| <= epsilon: the region the PSD constraint acts on."""
    return MaskField(phi.shape, np.abs(phi.values) <= band.epsilon)


def _sym3_eigvals(mats: np.ndarray):
    """Analytic eigenvalues of a batch of symmetric 3x3 matrices, ascending."""
    a00 = mats[:, 0, 0]
    a01 = mats[:, 0, 1]
    a02 = mats[:, 0, 2]
    a11 = mats[:, 1, 1]
    a12 = mats[:, 1, 2]
    a22 = mats[:, 2, 2]
    q = (a00 + a11 + a22) / 3.0
    b00 = a00 - q
    b11 = a11 - q
    b22 = a22 - q
    p2 = (b00 * b00 + b11 * b11 + b22 * b22) / 6.0 + (
        a01 * a01 + a02 * a02 + a12 * a12
    ) / 3.0
    p = np.sqrt(p2)
    det_b = (
        b00 * (b11 * b22 - a12 * a12)
        - a01 * (a01 * b22 - a12 * a02)
        + a02 * (a01 * a12 - b11 * a02)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        r = det_b / (2.0 * p2 * p)
    r = np.where(p > 0.0, np.clip(r, -1.0, 1.0), 0.0)
    angle = np.arccos(r) / 3.0
    two_p = np.where(p > 0.0, 2.0 * p, 0.0)
    hi = q + two_p * np.cos(angle)
    lo = q + two_p * np.cos(angle + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - hi - lo
    return lo, mid, hi


def _project_batch_2x2(mats: np.ndarray) -> np.ndarray:
    a = mats[:, 0, 0]
    b = mats[:, 0, 1]
    c = mats[:, 1, 1]
    mean = 0.5 * (a + c)
    r = np.hypot(0.5 * (a - c), b)
    lo = mean - r
    hi = mean + r
    out = mats.copy()
    out[hi <= 0.0] = 0.0
    mixed = (lo < 0.0) & (hi > 0.0)  # here hi - lo = 2r > 0
    if mixed.any():
        idx = np.nonzero(mixed)[0]
        s = hi[idx] / (hi[idx] - lo[idx])
        out[idx, 0, 0] = s * (a[idx] - lo[idx])
        out[idx, 1, 1] = s * (c[idx] - lo[idx])
        out[idx, 0, 1] = s * b[idx]
        out[idx, 1, 0] = out[idx, 0, 1]
    return out


def _project_batch_3x3(mats: np.ndarray) -> np.ndarray:
    lo, mid, hi = _sym3_eigvals(mats)
    out = mats.copy()
    scale = np.maximum(np.abs(lo), np.abs(hi))
    nonzero = scale > 0.0
    safe_scale = np.where(nonzero, scale, 1.0)
    rel_lm = (mid - lo) / safe_scale
    rel_mh = (hi - mid) / safe_scale
    err_lo = np.minimum(_EIG_ERR_CAP, _EIG_ERR_COEF / np.maximum(rel_lm, 1e-300))
    err_hi = np.minimum(_EIG_ERR_CAP, _EIG_ERR_COEF / np.maximum(rel_mh, 1e-300))
    err_mid = np.maximum(err_lo, err_hi)
    margin = _CERTAIN_FACTOR * scale
    certain = (
        nonzero
        & (np.abs(lo) > err_lo * margin)
        & (np.abs(mid) > err_mid * margin)
        & (np.abs(hi) > err_hi * margin)
    )
    nsd = certain & (hi < 0.0)
    out[nsd] = 0.0
    psd = certain & (lo > 0.0)
    eye = np.eye(3)
    one_neg = certain & (lo < 0.0) & (mid > 0.0) & (rel_lm >= _PROJ_GAP_MIN)
    two_neg = certain & (mid < 0.0) & (hi > 0.0) & (rel_mh >= _PROJ_GAP_MIN)
    if one_neg.any():
        # remove the single negative spectral component: A - lo * P_lo
        idx = np.nonzero(one_neg)[0]
        sub = mats[idx]
        l, m, h = lo[idx, None, None], mid[idx, None, None], hi[idx, None, None]
        proj = (sub - h * eye) @ (sub - m * eye) / ((l - h) * (l - m))
        res = sub - l * proj
        out[idx] = 0.5 * (res + np.transpose(res, (0, 2, 1)))
    if two_neg.any():
        # keep only the single positive spectral component: hi * P_hi
        idx = np.nonzero(two_neg)[0]
        sub = mats[idx]
        l, m, h = lo[idx, None, None], mid[idx, None, None], hi[idx, None, None]
        proj = (sub - l * eye) @ (sub - m * eye) / ((h - l) * (h - m))
        res = h * proj
        out[idx] = 0.5 * (res + np.transpose(res, (0, 2, 1)))
    rest = nonzero & ~(psd | nsd | one_neg | two_neg)
    if rest.any():
        idx = np.nonzero(rest)[0]
        w, v = np.linalg.eigh(mats[idx])
        w = np.maximum(w, 0.0)
        out[idx] = (v * w[:, None, :]) @ np.transpose(v, (0, 2, 1))
    return out


def _project_batch(mats: np.ndarray) -> np.ndarray:
    if mats.shape[-1] == 2:
        return _project_batch_2x2(mats)
    return _project_batch_3x3(mats)


def psd_project(mat) -> np.ndarray:
    """Frobenius-nearest symmetric positive semi-definite matrix.

    Accepts a single symmetric 2x2 or 3x3 matrix; negative eigenvalues are
    clamped to zero while the eigenbasis is kept.
    """
    a = np.asarray(mat, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 3):
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > 1e-9 * scale:
        raise ValueError("matrix must be symmetric")
    sym = 0.5 * (a + a.T)
    return _project_batch(sym[None])[0]


def project_hessian_field(field: SymMatField, band: MaskField) -> SymMatField:
    """PSD-project the per-point matrices inside the band; identity elsewhere."""
    if field.shape != band.shape:
        raise ValueError("field and band live on different grids")
    where = band.values.ravel()
    if not where.any():
        return SymMatField(field.shape, field.values.copy())
    d = field.shape.ndim
    flat = field.values.reshape(field.shape.nsym, -1)
    idx = np.nonzero(where)[0]
    mats = np.empty((idx.size, d, d))
    for slot, (i, j) in enumerate(field.shape.sym_pairs()):
        mats[:, i, j] = flat[slot, idx]
        mats[:, j, i] = mats[:, i, j]
    projected = _project_batch(mats)
    out = flat.copy()
    for slot, (i, j) in enumerate(field.shape.sym_pairs()):
        out[slot, idx] = projected[:, i, j]
    return SymMatField(field.shape, out.reshape(field.values.shape))


def convexity_violation(phi: ScalarField, samples: int, rng_seed: int) -> float:
    """Largest sampled midpoint-convexity defect of phi, floored at zero.

    Draws random grid-point pairs and a mixing weight theta from
    {0.25, 0.5, 0.75}, evaluates phi at the convex combination by
    multilinear interpolation, and returns the maximum of
    phi(combination) - theta*phi(x1) - (1-theta)*phi(x2) over the sample
    (or 0 if every draw satisfies the inequality). Deterministic for a
    fixed seed; a convex phi scores near zero, a deeply concave shape's
    signed distance function scores roughly its concavity depth.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    n = phi.shape.npoints
    i1 = rng.integers(0, n, size=samples)
    i2 = rng.integers(0, n, size=samples)
    theta = rng.choice(_THETAS, size=samples)
    c1 = np.array(np.unravel_index(i1, phi.shape.dims), dtype=np.float64)
    c2 = np.array(np.unravel_index(i2, phi.shape.dims), dtype=np.float64)
    mix = theta * c1 + (1.0 - theta) * c2
    vals = ndimage.map_coordinates(phi.values, mix, order=1, mode="grid-wrap")
    flat = phi.values.ravel()
    defect = vals - (theta * flat[i1] + (1.0 - theta) * flat[i2])
    return float(max(0.0, defect.max()))
