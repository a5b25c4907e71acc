import numpy as np
import pytest

from convexsdf.diffops import (
    backward_diff,
    divergence_adjoint,
    forward_diff,
    gradient,
    hessian,
    hessian_adjoint,
    laplacian,
)
from convexsdf.grid import (
    GridShape,
    ScalarField,
    SymMatField,
    VectorField,
    inner_product,
)


def random_scalar(shape, seed):
    rng = np.random.default_rng(seed)
    return ScalarField(shape, rng.uniform(-1.0, 1.0, shape.dims))


def brute_force_forward(values, axis):
    out = np.empty_like(values)
    n = values.shape[axis]
    for idx in np.ndindex(values.shape):
        nxt = list(idx)
        nxt[axis] = (idx[axis] + 1) % n
        out[idx] = values[tuple(nxt)] - values[idx]
    return out


class TestFirstDifferences:
    def test_constant_is_flat(self):
        shape = GridShape((5, 4))
        const = ScalarField.full(shape, 3.25)
        for axis in range(2):
            assert not forward_diff(const, axis).values.any()
            assert not backward_diff(const, axis).values.any()

    def test_ramp_with_wrap(self):
        shape = GridShape((4, 4))
        ramp = ScalarField(shape, np.indices(shape.dims)[0].astype(float))
        fwd = forward_diff(ramp, 0).values
        assert (fwd[:3] == 1.0).all()
        assert (fwd[3] == -3.0).all()
        bwd = backward_diff(ramp, 0).values
        assert (bwd[1:] == 1.0).all()
        assert (bwd[0] == -3.0).all()

    def test_matches_brute_force_stencil(self):
        shape = GridShape((8, 8))
        f = random_scalar(shape, 0)
        for axis in range(2):
            expected = brute_force_forward(f.values, axis)
            np.testing.assert_array_equal(forward_diff(f, axis).values, expected)

    def test_backward_is_shifted_forward(self):
        shape = GridShape((6, 7))
        f = random_scalar(shape, 1)
        for axis in range(2):
            fwd = forward_diff(f, axis).values
            bwd = backward_diff(f, axis).values
            np.testing.assert_array_equal(np.roll(bwd, -1, axis=axis), fwd)

    def test_invalid_axis(self):
        f = random_scalar(GridShape((4, 4)), 2)
        with pytest.raises(ValueError):
            forward_diff(f, 2)
        with pytest.raises(ValueError):
            backward_diff(f, -1)


class TestGradientDivergence:
    def test_gradient_of_constant(self):
        assert not gradient(ScalarField.full(GridShape((4, 4)), 2.0)).values.any()

    def test_gradient_of_linear_interior(self):
        shape = GridShape((8, 8))
        coords = np.indices(shape.dims).astype(float)
        f = ScalarField(shape, coords[0] + 2.0 * coords[1])
        g = gradient(f).values
        assert (g[0, :7, :7] == 1.0).all()
        assert (g[1, :7, :7] == 2.0).all()

    def test_gradient_components_are_forward_diffs(self):
        shape = GridShape((5, 6, 4))
        f = random_scalar(shape, 3)
        g = gradient(f)
        for axis in range(3):
            np.testing.assert_array_equal(g.values[axis], forward_diff(f, axis).values)

    def test_divergence_adjoint_of_zero(self):
        assert not divergence_adjoint(VectorField.zeros(GridShape((4, 4)))).values.any()

    @pytest.mark.parametrize("dims", [(8, 8), (5, 6, 4)])
    def test_adjoint_identity(self, dims):
        shape = GridShape(dims)
        rng = np.random.default_rng(4)
        f = ScalarField(shape, rng.uniform(-1, 1, dims))
        p = VectorField(shape, rng.uniform(-1, 1, (shape.ndim,) + dims))
        lhs = inner_product(gradient(f), p)
        rhs = inner_product(f, divergence_adjoint(p))
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


class TestLaplacian:
    def test_constant(self):
        assert not laplacian(ScalarField.full(GridShape((4, 4)), 5.0)).values.any()

    def test_delta_stencil(self):
        shape = GridShape((4, 4))
        values = np.zeros(shape.dims)
        values[0, 0] = 1.0
        lap = laplacian(ScalarField(shape, values)).values
        assert lap[0, 0] == -4.0
        for nbr in ((1, 0), (3, 0), (0, 1), (0, 3)):
            assert lap[nbr] == 1.0
        assert lap.sum() == 0.0

    def test_cosine_eigenfunction(self):
        # a pure mode is an eigenvector with the analytic discrete symbol
        shape = GridShape((16, 8))
        x = np.indices(shape.dims)[0]
        f = ScalarField(shape, np.cos(2.0 * np.pi * x / 16))
        lam = 2.0 * np.cos(2.0 * np.pi / 16) - 2.0
        np.testing.assert_allclose(
            laplacian(f).values, lam * f.values, rtol=0, atol=1e-13
        )

    def test_equals_composition(self):
        shape = GridShape((6, 5))
        f = random_scalar(shape, 5)
        composed = divergence_adjoint(gradient(f)).values
        np.testing.assert_array_equal(laplacian(f).values, -composed)


class TestHessian:
    def test_constant(self):
        assert not hessian(ScalarField.full(GridShape((4, 4)), 1.0)).values.any()

    def test_bilinear_form_interior(self):
        shape = GridShape((8, 8))
        coords = np.indices(shape.dims).astype(float)
        h = hessian(ScalarField(shape, coords[0] * coords[1]))
        assert (h.component(0, 1)[:7, :7] == 1.0).all()
        assert (h.component(0, 0)[1:7, 1:7] == 0.0).all()
        assert (h.component(1, 1)[1:7, 1:7] == 0.0).all()

    @pytest.mark.parametrize("dims", [(8, 8), (5, 4, 6)])
    def test_trace_is_laplacian(self, dims):
        shape = GridShape(dims)
        f = random_scalar(shape, 6)
        h = hessian(f)
        trace = sum(h.component(i, i) for i in range(shape.ndim))
        np.testing.assert_array_equal(trace, laplacian(f).values)

    @pytest.mark.parametrize("dims", [(8, 8), (5, 6, 4)])
    def test_hessian_adjoint_identity(self, dims):
        shape = GridShape(dims)
        rng = np.random.default_rng(7)
        f = ScalarField(shape, rng.uniform(-1, 1, dims))
        q = SymMatField(shape, rng.uniform(-1, 1, (shape.nsym,) + dims))
        lhs = inner_product(hessian(f), q)
        rhs = inner_product(f, hessian_adjoint(q))
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)

    def test_adjoint_of_zero(self):
        assert not hessian_adjoint(SymMatField.zeros(GridShape((4, 4)))).values.any()

    @pytest.mark.parametrize("dims", [(8, 8), (6, 5, 4)])
    def test_biharmonic_identity(self, dims):
        # hess_adjoint(hessian(f)) equals lap(lap(f)) up to a few ulps at
        # the field scale; the two paths associate additions differently.
        shape = GridShape(dims)
        f = random_scalar(shape, 8)
        via_hessian = hessian_adjoint(hessian(f)).values
        via_laplacian = laplacian(laplacian(f)).values
        scale = max(np.abs(via_hessian).max(), np.abs(via_laplacian).max())
        diff = np.abs(via_hessian - via_laplacian).max()
        assert diff <= 8.0 * np.spacing(scale)


class TestOperatorProperties:
    @pytest.mark.parametrize(
        "op", [lambda f: gradient(f).values, lambda f: laplacian(f).values,
               lambda f: hessian(f).values]
    )
    def test_linearity(self, op):
        shape = GridShape((8, 6))
        a = random_scalar(shape, 9)
        b = random_scalar(shape, 10)
        combo = ScalarField(shape, 2.5 * a.values - 1.25 * b.values)
        np.testing.assert_allclose(
            op(combo), 2.5 * op(a) - 1.25 * op(b), rtol=0, atol=1e-14
        )

    def test_translation_commutes(self):
        shape = GridShape((8, 8))
        f = random_scalar(shape, 11)
        shifted = ScalarField(shape, np.roll(f.values, (2, 3), axis=(0, 1)))
        for op in (lambda g: laplacian(g).values, lambda g: hessian(g).values[1]):
            np.testing.assert_array_equal(
                np.roll(op(f), (2, 3), axis=(-2, -1)), op(shifted)
            )
