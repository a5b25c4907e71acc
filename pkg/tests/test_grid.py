import numpy as np
import pytest

from convexsdf.grid import (
    GridShape,
    MaskField,
    ScalarField,
    SymMatField,
    VectorField,
    inner_product,
    wrap_index,
)


class TestGridShape:
    def test_basic_properties(self):
        shape = GridShape((4, 6, 8))
        assert shape.ndim == 3
        assert shape.npoints == 192
        assert shape.nsym == 6
        assert shape.diameter == pytest.approx(np.sqrt(16 + 36 + 64))

    @pytest.mark.parametrize("dims", [(4,), (4, 4, 4, 4)])
    def test_rejects_wrong_dimensionality(self, dims):
        with pytest.raises(ValueError):
            GridShape(dims)

    def test_rejects_tiny_axes(self):
        with pytest.raises(ValueError):
            GridShape((3, 8))

    def test_rejects_overflowing_point_count(self):
        with pytest.raises(ValueError):
            GridShape((1 << 16, 1 << 16))

    def test_sym_slot_is_symmetric_in_indices(self):
        shape = GridShape((4, 4, 4))
        for i in range(3):
            for j in range(3):
                assert shape.sym_slot(i, j) == shape.sym_slot(j, i)


class TestFieldValidation:
    def test_scalar_rejects_nan(self):
        shape = GridShape((4, 4))
        values = np.zeros((4, 4))
        values[1, 2] = np.nan
        with pytest.raises(ValueError, match="finite"):
            ScalarField(shape, values)

    def test_scalar_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            ScalarField(GridShape((4, 4)), np.zeros((4, 5)))

    def test_vector_layout(self):
        shape = GridShape((4, 5))
        field = VectorField.zeros(shape)
        assert field.values.shape == (2, 4, 5)

    def test_symmat_component_access(self):
        shape = GridShape((4, 4))
        comps = np.zeros((3, 4, 4))
        comps[1] = 7.0  # the off-diagonal slot
        field = SymMatField(shape, comps)
        assert field.component(0, 1)[0, 0] == 7.0
        assert field.component(1, 0)[0, 0] == 7.0

    def test_symmat_matrix_round_trip(self):
        shape = GridShape((4, 6, 4))
        rng = np.random.default_rng(3)
        field = SymMatField(shape, rng.normal(size=(6, 4, 6, 4)))
        back = SymMatField.from_matrices(shape, field.as_matrices())
        np.testing.assert_array_equal(back.values, field.values)
        mats = field.as_matrices()
        np.testing.assert_array_equal(mats, np.transpose(mats, (0, 2, 1)))

    def test_mask_coerces_dtype(self):
        mask = MaskField(GridShape((4, 4)), np.eye(4))
        assert mask.values.dtype == np.bool_
        assert mask.count == 4


class TestWrapIndex:
    def test_in_range_identity(self):
        shape = GridShape((4, 4))
        assert wrap_index(shape, (1, 2)) == 1 * 4 + 2

    def test_negative_wraps(self):
        shape = GridShape((4, 4))
        assert wrap_index(shape, (-1, 0)) == wrap_index(shape, (3, 0))

    def test_overflow_wraps(self):
        shape = GridShape((4, 4))
        assert wrap_index(shape, (4, 5)) == wrap_index(shape, (0, 1))

    def test_periodic_in_every_axis(self):
        shape = GridShape((4, 6, 8))
        rng = np.random.default_rng(0)
        for _ in range(50):
            coord = rng.integers(-20, 20, size=3)
            for axis, n in enumerate(shape.dims):
                shifted = coord.copy()
                shifted[axis] += n
                assert wrap_index(shape, coord) == wrap_index(shape, shifted)

    def test_matches_ravel_multi_index(self):
        shape = GridShape((5, 7))
        rng = np.random.default_rng(1)
        for _ in range(50):
            coord = rng.integers(-15, 15, size=2)
            expected = np.ravel_multi_index(tuple(coord), shape.dims, mode="wrap")
            assert wrap_index(shape, coord) == expected


class TestInnerProduct:
    def test_all_ones_scalar(self):
        shape = GridShape((4, 4))
        ones = ScalarField(shape, np.ones(shape.dims))
        assert inner_product(ones, ones) == 16.0

    def test_zero_field(self):
        shape = GridShape((4, 4))
        rng = np.random.default_rng(2)
        b = ScalarField(shape, rng.normal(size=shape.dims))
        assert inner_product(ScalarField.zeros(shape), b) == 0.0

    def test_symmat_counts_off_diagonals_twice(self):
        # single "point" spread over the minimal grid: put A=[[1,2],[2,3]],
        # B=identity at one cell, zero elsewhere -> Frobenius pairing is 4
        shape = GridShape((4, 4))
        a = np.zeros((3, 4, 4))
        b = np.zeros((3, 4, 4))
        a[:, 0, 0] = [1.0, 2.0, 3.0]
        b[:, 0, 0] = [1.0, 0.0, 1.0]
        assert inner_product(SymMatField(shape, a), SymMatField(shape, b)) == 4.0
        # and against a dense oracle over the full matrices
        a[:, 2, 3] = [0.5, -1.0, 2.0]
        b[:, 2, 3] = [1.5, 0.25, -2.0]
        fa, fb = SymMatField(shape, a), SymMatField(shape, b)
        dense = float((fa.as_matrices() * fb.as_matrices()).sum())
        assert inner_product(fa, fb) == pytest.approx(dense, rel=1e-15)

    @pytest.mark.parametrize("kind", ["scalar", "vector", "symmat"])
    def test_symmetric_bilinear(self, kind):
        shape = GridShape((6, 5))
        rng = np.random.default_rng(4)
        def make():
            if kind == "scalar":
                return ScalarField(shape, rng.normal(size=shape.dims))
            if kind == "vector":
                return VectorField(shape, rng.normal(size=(2,) + shape.dims))
            return SymMatField(shape, rng.normal(size=(3,) + shape.dims))
        a, b = make(), make()
        assert inner_product(a, b) == pytest.approx(inner_product(b, a), rel=1e-15)

    def test_kind_mismatch_rejected(self):
        shape = GridShape((4, 4))
        with pytest.raises(TypeError):
            inner_product(ScalarField.zeros(shape), VectorField.zeros(shape))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            inner_product(ScalarField.zeros(GridShape((4, 4))),
                          ScalarField.zeros(GridShape((4, 5))))
