import numpy as np
import pytest

from convexsdf.diffops import gradient, laplacian
from convexsdf.grid import GridShape, MaskField, ScalarField
from convexsdf.transforms import (
    SpectralSolveParams,
    gaussian_convolve,
    gaussian_kernel_1d,
    signed_distance_transform,
    solve_phi_pde,
)

PAPER_PARAMS = SpectralSolveParams(
    rho1=2.0 * np.sqrt(2000.0 * 10.0), rho2=2000.0, rho3=10.0
)


def apply_forward_operator(phi, params):
    lap = laplacian(phi)
    bih = laplacian(lap)
    return (
        params.rho2 * bih.values - params.rho1 * lap.values + params.rho3 * phi.values
    )


class TestSpectralSolve:
    def test_params_validation(self):
        with pytest.raises(ValueError):
            SpectralSolveParams(rho1=1.0, rho2=1.0, rho3=0.0)
        with pytest.raises(ValueError):
            SpectralSolveParams(rho1=-1.0, rho2=1.0, rho3=1.0)

    def test_constant_mode(self):
        shape = GridShape((8, 8))
        rhs = ScalarField.full(shape, 10.0 * 3.5)  # rho3 * c
        phi = solve_phi_pde(rhs, PAPER_PARAMS)
        np.testing.assert_allclose(phi.values, 3.5, rtol=1e-13)

    def test_single_mode_closed_form(self):
        shape = GridShape((16, 8))
        x = np.indices(shape.dims)[0]
        rhs = ScalarField(shape, np.cos(2.0 * np.pi * x / 16))
        lam = 2.0 * np.cos(2.0 * np.pi / 16) - 2.0
        denom = 2000.0 * lam * lam - PAPER_PARAMS.rho1 * lam + 10.0
        phi = solve_phi_pde(rhs, PAPER_PARAMS)
        np.testing.assert_allclose(phi.values, rhs.values / denom, atol=1e-14)

    @pytest.mark.parametrize("dims", [(16, 16), (16, 16, 16)])
    def test_forward_operator_recovers_rhs(self, dims):
        shape = GridShape(dims)
        rng = np.random.default_rng(12)
        rhs = ScalarField(shape, rng.uniform(-1.0, 1.0, dims))
        phi = solve_phi_pde(rhs, PAPER_PARAMS)
        recovered = apply_forward_operator(phi, PAPER_PARAMS)
        rel = np.abs(recovered - rhs.values).max() / np.abs(rhs.values).max()
        assert rel < 1e-10

    def test_linearity(self):
        shape = GridShape((8, 8))
        rng = np.random.default_rng(13)
        a = ScalarField(shape, rng.normal(size=shape.dims))
        b = ScalarField(shape, rng.normal(size=shape.dims))
        combo = ScalarField(shape, 2.0 * a.values + 0.5 * b.values)
        lhs = solve_phi_pde(combo, PAPER_PARAMS).values
        rhs = (
            2.0 * solve_phi_pde(a, PAPER_PARAMS).values
            + 0.5 * solve_phi_pde(b, PAPER_PARAMS).values
        )
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)

    def test_imaginary_residue_guard(self, monkeypatch):
        # a transform that leaks imaginary parts must be reported, not
        # silently truncated
        shape = GridShape((8, 8))
        rhs = ScalarField.full(shape, 1.0)
        real_ifftn = np.fft.ifftn

        def broken_ifftn(a, *args, **kwargs):
            return real_ifftn(a, *args, **kwargs) + 1e-6j

        monkeypatch.setattr(np.fft, "ifftn", broken_ifftn)
        with pytest.raises(ValueError, match="imaginary"):
            solve_phi_pde(rhs, PAPER_PARAMS)


class TestGaussianConvolve:
    def test_kernel_is_normalized(self):
        k = gaussian_kernel_1d(1.5)
        assert k.sum() == pytest.approx(1.0, rel=1e-14)
        assert len(k) == 2 * 5 + 1  # ceil(3 * 1.5) = 5

    def test_constant_preserved(self):
        shape = GridShape((9, 9))
        out = gaussian_convolve(ScalarField.full(shape, 0.7), 1.0)
        np.testing.assert_allclose(out.values, 0.7, rtol=1e-13)

    def test_delta_mass_and_mode(self):
        shape = GridShape((9, 9))
        values = np.zeros(shape.dims)
        values[4, 4] = 1.0
        out = gaussian_convolve(ScalarField(shape, values), 1.0)
        assert out.values.sum() == pytest.approx(1.0, rel=1e-12)
        assert out.values.argmax() == np.ravel_multi_index((4, 4), shape.dims)

    def test_delta_center_value(self):
        # separable kernel: the center equals the 1D center weight squared
        shape = GridShape((9, 9))
        values = np.zeros(shape.dims)
        values[4, 4] = 1.0
        out = gaussian_convolve(ScalarField(shape, values), 1.0)
        k = gaussian_kernel_1d(1.0)
        assert out.values[4, 4] == pytest.approx(k[3] ** 2, rel=1e-13)

    def test_matches_dense_convolution_oracle(self):
        shape = GridShape((9, 9))
        rng = np.random.default_rng(14)
        f = ScalarField(shape, rng.normal(size=shape.dims))
        sigma = 1.0
        k = gaussian_kernel_1d(sigma)
        dense = np.zeros(shape.dims)
        r = len(k) // 2
        for di in range(-r, r + 1):
            for dj in range(-r, r + 1):
                dense += k[di + r] * k[dj + r] * np.roll(f.values, (di, dj), axis=(0, 1))
        out = gaussian_convolve(f, sigma)
        np.testing.assert_allclose(out.values, dense, atol=1e-12)

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            gaussian_kernel_1d(0.0)


def brute_force_sdt(mask):
    inside = np.argwhere(mask)
    outside = np.argwhere(~mask)
    out = np.empty(mask.shape)
    for idx in np.ndindex(mask.shape):
        targets = outside if mask[idx] else inside
        d2 = ((targets - np.array(idx)) ** 2).sum(axis=1)
        dist = np.sqrt(d2.min())
        out[idx] = 0.5 - dist if mask[idx] else dist - 0.5
    return out


class TestSignedDistanceTransform:
    def test_half_space(self):
        shape = GridShape((16, 8))
        x = np.indices(shape.dims)[0]
        mask = MaskField(shape, x < 8)
        phi = signed_distance_transform(mask).values
        # away from the top/bottom domain edges the profile is planar
        np.testing.assert_allclose(phi[:, 2:6], (x - 8 + 0.5)[:, 2:6])

    def test_single_true_cell(self):
        shape = GridShape((8, 8))
        mask = np.zeros(shape.dims, dtype=bool)
        mask[3, 4] = True
        phi = signed_distance_transform(MaskField(shape, mask)).values
        assert phi[3, 4] == -0.5
        coords = np.indices(shape.dims)
        dist = np.sqrt((coords[0] - 3.0) ** 2 + (coords[1] - 4.0) ** 2)
        expected = np.where(mask, -0.5, dist - 0.5)
        np.testing.assert_allclose(phi, expected)

    def test_matches_brute_force_exactly(self):
        shape = GridShape((24, 24))
        rng = np.random.default_rng(15)
        mask = rng.random(shape.dims) < 0.3
        mask[0, 0] = True
        mask[5, 5] = False
        phi = signed_distance_transform(MaskField(shape, mask)).values
        np.testing.assert_array_equal(phi, brute_force_sdt(mask))

    def test_disc_center_value(self):
        shape = GridShape((64, 64))
        coords = np.indices(shape.dims).astype(float)
        r = np.sqrt((coords[0] - 32.0) ** 2 + (coords[1] - 32.0) ** 2)
        mask = MaskField(shape, r <= 10.0)
        phi = signed_distance_transform(mask).values
        assert -10.0 <= phi[32, 32] <= -9.0
        np.testing.assert_array_equal(phi, brute_force_sdt(mask.values))

    def test_sign_change_at_phase_boundary(self):
        shape = GridShape((16, 16))
        rng = np.random.default_rng(16)
        mask = rng.random(shape.dims) < 0.5
        mask[0, 0] = True
        mask[1, 1] = False
        phi = signed_distance_transform(MaskField(shape, mask)).values
        assert (phi[mask] < 0).all()
        assert (phi[~mask] > 0).all()

    def test_inclusion_ordering_exact(self):
        # nested masks give pointwise-ordered distance fields, no tolerance
        shape = GridShape((20, 20))
        rng = np.random.default_rng(17)
        for trial in range(20):
            small = rng.random(shape.dims) < 0.2
            small[3, 3] = True
            grow = rng.random(shape.dims) < 0.2
            big = small | grow
            big[0, 0] = False
            small &= big
            if not small.any() or big.all():
                continue
            phi_small = signed_distance_transform(MaskField(shape, small)).values
            phi_big = signed_distance_transform(MaskField(shape, big)).values
            assert (phi_small >= phi_big).all()

    def test_degenerate_masks_rejected(self):
        shape = GridShape((4, 4))
        with pytest.raises(ValueError):
            signed_distance_transform(MaskField.full(shape))
        with pytest.raises(ValueError):
            signed_distance_transform(MaskField.zeros(shape))

    def test_eikonal_away_from_medial_axis(self):
        shape = GridShape((64, 64))
        coords = np.indices(shape.dims).astype(float)
        r = np.sqrt((coords[0] - 31.5) ** 2 + (coords[1] - 31.5) ** 2)
        phi = signed_distance_transform(MaskField(shape, r <= 12.0))
        g = gradient(phi).values
        mag = np.sqrt((g * g).sum(axis=0))
        ring = (r > 4.0) & (r < 20.0)
        assert np.median(np.abs(mag[ring] - 1.0)) < 0.05
