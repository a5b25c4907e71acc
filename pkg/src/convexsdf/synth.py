"""Deterministic synthetic test shapes with optional uniform outliers.

Shape names accept an optional numeric argument after a colon, e.g.
``disc:20`` for an explicit radius or ``two-discs:16`` for the boundary
gap between the pair. Outliers are drawn uniformly over the complement of
the shape dilated by two cells; their count is ``round(fraction * shape
cell count)``.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .grid import GridShape, MaskField

SHAPE_NAMES = ("disc", "ball", "plus", "L", "star", "two-discs", "box-minus-notch")


def _center(dims) -> np.ndarray:
    return (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0


def _radial(dims) -> np.ndarray:
    coords = np.indices(dims, dtype=np.float64)
    c = _center(dims)
    r2 = np.zeros(dims)
    for ax in range(len(dims)):
        r2 += (coords[ax] - c[ax]) ** 2
    return np.sqrt(r2)


def _box(dims, lo_frac, hi_frac) -> np.ndarray:
    coords = np.indices(dims, dtype=np.float64)
    out = np.ones(dims, dtype=bool)
    for ax, n in enumerate(dims):
        out &= (coords[ax] >= lo_frac[ax] * (n - 1)) & (coords[ax] <= hi_frac[ax] * (n - 1))
    return out


def _ball(dims, radius=None) -> np.ndarray:
    r = radius if radius is not None else 0.35 * min(dims)
    return _radial(dims) <= r


def _plus(dims, arm_half_width=None) -> np.ndarray:
    w = arm_half_width if arm_half_width is not None else 0.14 * min(dims)
    length = 0.4 * min(dims)
    coords = np.indices(dims, dtype=np.float64)
    c = _center(dims)
    offs = [np.abs(coords[ax] - c[ax]) for ax in range(len(dims))]
    out = np.zeros(dims, dtype=bool)
    for ax in range(len(dims)):
        bar = offs[ax] <= length
        for other in range(len(dims)):
            if other != ax:
                bar &= offs[other] <= w
        out |= bar
    return out


def _ell(dims) -> np.ndarray:
    if len(dims) != 2:
        raise ValueError("shape 'L' is 2D only")
    vertical = _box(dims, (0.15, 0.15), (0.85, 0.45))
    horizontal = _box(dims, (0.55, 0.15), (0.85, 0.85))
    return vertical | horizontal


def _point_in_polygon(dims, poly: np.ndarray) -> np.ndarray:
    """Even-odd rasterization of a closed 2D polygon over cell centers."""
    xs, ys = np.indices(dims, dtype=np.float64)
    inside = np.zeros(dims, dtype=bool)
    n = poly.shape[0]
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        crosses = (y0 <= ys) != (y1 <= ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x0 + (ys - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (xs < x_at)
    return inside


def _star(dims, outer=None) -> np.ndarray:
    if len(dims) != 2:
        raise ValueError("shape 'star' is 2D only")
    r_out = outer if outer is not None else 0.41 * min(dims)
    r_in = 0.5 * r_out
    c = _center(dims)
    angles = -np.pi / 2.0 + np.arange(10) * np.pi / 5.0
    radii = np.where(np.arange(10) % 2 == 0, r_out, r_in)
    poly = np.stack([c[0] + radii * np.cos(angles), c[1] + radii * np.sin(angles)], axis=1)
    return _point_in_polygon(dims, poly)


def _two_balls(dims, gap=None) -> np.ndarray:
    g = gap if gap is not None else 12.0
    r = 0.18 * min(dims)
    coords = np.indices(dims, dtype=np.float64)
    c = _center(dims)
    shift = (2.0 * r + g) / 2.0
    out = np.zeros(dims, dtype=bool)
    for sign in (-1.0, 1.0):
        r2 = np.zeros(dims)
        for ax in range(len(dims)):
            offset = sign * shift if ax == len(dims) - 1 else 0.0
            r2 += (coords[ax] - c[ax] - offset) ** 2
        out |= np.sqrt(r2) <= r
    return out


def _box_minus_notch(dims, lo=None) -> np.ndarray:
    lo = lo if lo is not None else 0.22
    box = _box(dims, (lo,) * len(dims), (1.0 - lo,) * len(dims))
    coords = np.indices(dims, dtype=np.float64)
    notch = np.ones(dims, dtype=bool)
    for ax in (0, len(dims) - 1):
        notch &= coords[ax] >= 0.5 * (dims[ax] - 1)
    return box & ~notch


def _base_shape(name: str, dims, arg: float | None) -> np.ndarray:
    d = len(dims)
    if name == "disc":
        if d != 2:
            raise ValueError("shape 'disc' is 2D; use 'ball' in 3D")
        return _ball(dims, arg)
    if name == "ball":
        if d != 3:
            raise ValueError("shape 'ball' is 3D; use 'disc' in 2D")
        return _ball(dims, arg)
    if name == "plus":
        return _plus(dims, arg)
    if name == "L":
        return _ell(dims)
    if name == "star":
        return _star(dims, arg)
    if name == "two-discs":
        return _two_balls(dims, arg)
    if name == "box-minus-notch":
        return _box_minus_notch(dims, arg)
    raise ValueError(f"unknown shape {name!r}; known: {', '.join(SHAPE_NAMES)}")


def synth(shape_name: str, dims, outlier_fraction: float = 0.0, seed: int = 0) -> MaskField:
    """Named shape mask plus seeded uniform outliers.

    outlier_fraction must lie in [0, 1); outliers never touch the shape's
    two-cell dilation, so the clean shape is recoverable as the largest
    connected component.
    """
    if not (0.0 <= outlier_fraction < 1.0):
        raise ValueError("outlier_fraction must be in [0, 1)")
    shape = GridShape(tuple(int(n) for n in dims))
    name, _, argstr = shape_name.partition(":")
    arg = float(argstr) if argstr else None
    base = _base_shape(name, shape.dims, arg)
    if not base.any():
        raise ValueError(f"shape {shape_name!r} rasterized empty on {shape.dims}")
    out = base.copy()
    n_outliers = int(round(outlier_fraction * base.sum()))
    if n_outliers > 0:
        forbidden = ndimage.binary_dilation(base, iterations=2)
        candidates = np.nonzero(~forbidden.ravel())[0]
        if candidates.size < n_outliers:
            raise ValueError("not enough room for the requested outliers")
        rng = np.random.default_rng(seed)
        chosen = rng.choice(candidates, size=n_outliers, replace=False)
        flat = out.ravel()
        flat[chosen] = True
        out = flat.reshape(shape.dims)
    return MaskField(shape, out)
