"""Periodic grid fields for 2D and 3D level-set computations.

Everything in this package lives on a d-dimensional lattice (d = 2 or 3)
with unit spacing and periodic wrap-around along every axis. Scalar
quantities (level-set functions, images, right-hand sides) are
``ScalarField``s; per-point vectors (gradients and their multipliers) are
``VectorField``s; per-point symmetric matrices (Hessians and their
multipliers) are ``SymMatField``s storing the upper triangle only; point
sets, label sets and constraint bands are ``MaskField``s.

Fields are treated as immutable once returned from an operation: all
operations allocate fresh output arrays and never write to their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Hard cap on total point count: keeps flat indices comfortably inside int64
# and makes accidentally huge grids fail fast at construction.
MAX_POINTS = 2**31

# Upper-triangle component order for symmetric per-point matrices.
_SYM_PAIRS = {
    2: ((0, 0), (0, 1), (1, 1)),
    3: ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)),
}


@dataclass(frozen=True)
class GridShape:
    """Axis lengths (N1, ..., Nd) of a periodic unit-spaced grid, d in {2, 3}."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(dims)}")
        if any(n < 4 for n in dims):
            raise ValueError(f"every axis needs at least 4 points, got {dims}")
        total = 1
        for n in dims:
            total *= n
        if total > MAX_POINTS:
            raise ValueError(
                f"grid with {total} points exceeds the {MAX_POINTS}-point limit"
            )

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def npoints(self) -> int:
        total = 1
        for n in self.dims:
            total *= n
        return total

    @property
    def nsym(self) -> int:
        """Number of stored components of a symmetric d x d matrix."""
        d = self.ndim
        return d * (d + 1) // 2

    @property
    def diameter(self) -> float:
        """Euclidean length of the grid diagonal, in grid units."""
        return float(np.sqrt(sum(float(n) ** 2 for n in self.dims)))

    def sym_pairs(self) -> tuple[tuple[int, int], ...]:
        """(i, j) index pairs, i <= j, in storage order of SymMatField slots."""
        return _SYM_PAIRS[self.ndim]

    def sym_slot(self, i: int, j: int) -> int:
        """Storage slot of matrix entry (i, j); symmetric in i, j."""
        if i > j:
            i, j = j, i
        return _SYM_PAIRS[self.ndim].index((i, j))


def _as_finite(values, expected_shape, what: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.shape != expected_shape:
        raise ValueError(f"{what}: expected array of shape {expected_shape}, got {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError(f"{what}: values must be finite (found NaN or Inf)")
    return v


@dataclass(frozen=True)
class ScalarField:
    """One real value per grid point, stored C-contiguously (axis 1 slowest)."""

    shape: GridShape
    values: np.ndarray

    def __post_init__(self):
        v = _as_finite(self.values, self.shape.dims, "ScalarField")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, shape: GridShape) -> "ScalarField":
        return cls(shape, np.zeros(shape.dims))

    @classmethod
    def full(cls, shape: GridShape, value: float) -> "ScalarField":
        return cls(shape, np.full(shape.dims, float(value)))


@dataclass(frozen=True)
class VectorField:
    """d real components per grid point; component axis leads the storage."""

    shape: GridShape
    values: np.ndarray  # (d, N1, ..., Nd)

    def __post_init__(self):
        expected = (self.shape.ndim,) + self.shape.dims
        v = _as_finite(self.values, expected, "VectorField")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, shape: GridShape) -> "VectorField":
        return cls(shape, np.zeros((shape.ndim,) + shape.dims))

    def component(self, axis: int) -> np.ndarray:
        return self.values[axis]


@dataclass(frozen=True)
class SymMatField:
    """Symmetric d x d matrix per grid point, upper triangle stored once.

    Storage order is row-major over the upper triangle: (0,0), (0,1), (1,1)
    in 2D and (0,0), (0,1), (0,2), (1,1), (1,2), (2,2) in 3D. Symmetry is
    structural: there is no slot a lower-triangle entry could disagree in.
    """

    shape: GridShape
    values: np.ndarray  # (d(d+1)/2, N1, ..., Nd)

    def __post_init__(self):
        expected = (self.shape.nsym,) + self.shape.dims
        v = _as_finite(self.values, expected, "SymMatField")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, shape: GridShape) -> "SymMatField":
        return cls(shape, np.zeros((shape.nsym,) + shape.dims))

    def component(self, i: int, j: int) -> np.ndarray:
        return self.values[self.shape.sym_slot(i, j)]

    def as_matrices(self) -> np.ndarray:
        """Dense (npoints, d, d) view-copy of all per-point matrices."""
        d = self.shape.ndim
        out = np.empty((self.shape.npoints, d, d))
        flat = self.values.reshape(self.shape.nsym, -1)
        for slot, (i, j) in enumerate(self.shape.sym_pairs()):
            out[:, i, j] = flat[slot]
            out[:, j, i] = flat[slot]
        return out

    @classmethod
    def from_matrices(cls, shape: GridShape, mats: np.ndarray) -> "SymMatField":
        """Inverse of :meth:`as_matrices`; only the upper triangle is read."""
        comps = np.empty((shape.nsym,) + shape.dims)
        mats = mats.reshape((shape.npoints, shape.ndim, shape.ndim))
        for slot, (i, j) in enumerate(shape.sym_pairs()):
            comps[slot] = mats[:, i, j].reshape(shape.dims)
        return cls(shape, comps)


@dataclass(frozen=True)
class MaskField:
    """One boolean per grid point."""

    shape: GridShape
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype != np.bool_:
            v = v.astype(bool)
        if v.shape != self.shape.dims:
            raise ValueError(
                f"MaskField: expected array of shape {self.shape.dims}, got {v.shape}"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, shape: GridShape) -> "MaskField":
        return cls(shape, np.zeros(shape.dims, dtype=bool))

    @classmethod
    def full(cls, shape: GridShape) -> "MaskField":
        return cls(shape, np.ones(shape.dims, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.values.sum())


def wrap_index(shape: GridShape, coord) -> int:
    """Flat C-order index of a lattice coordinate, wrapped into the grid.

    Any integer coordinates are accepted; each component is reduced modulo
    the corresponding axis length, so the result is periodic with period
    Ni along axis i.
    """
    coord = tuple(int(c) for c in coord)
    if len(coord) != shape.ndim:
        raise ValueError(f"coordinate has {len(coord)} components, grid has {shape.ndim}")
    idx = 0
    for c, n in zip(coord, shape.dims):
        idx = idx * n + (c % n)
    return idx


def _sym_weights(shape: GridShape) -> np.ndarray:
    # Off-diagonal slots represent two matrix entries each.
    return np.array([1.0 if i == j else 2.0 for (i, j) in shape.sym_pairs()])


def inner_product(a, b) -> float:
    """Sum over all grid points of the pointwise pairing of two fields.

    Scalar and vector fields pair with the Euclidean dot product; symmetric
    matrix fields pair with the Frobenius product, in which each stored
    off-diagonal component counts twice.
    """
    if type(a) is not type(b):
        raise TypeError(f"cannot pair {type(a).__name__} with {type(b).__name__}")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape.dims} vs {b.shape.dims}")
    if isinstance(a, ScalarField):
        return float(np.dot(a.values.ravel(), b.values.ravel()))
    if isinstance(a, VectorField):
        return float(np.dot(a.values.ravel(), b.values.ravel()))
    if isinstance(a, SymMatField):
        w = _sym_weights(a.shape)
        prods = (a.values * b.values).reshape(a.shape.nsym, -1).sum(axis=1)
        return float(np.dot(w, prods))
    raise TypeError(f"unsupported field type {type(a).__name__}")
