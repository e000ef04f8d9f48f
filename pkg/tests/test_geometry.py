import numpy as np
import pytest

import dhym_lab as dl
from conftest import cos_axis


class TestBuildTorus:
    def test_volume_n1(self):
        geom = dl.build_torus(1, 8, [1])
        assert geom.vol == pytest.approx(4 * np.pi**2, rel=1e-15)

    def test_volume_n2_identity(self):
        geom = dl.build_torus(2, 16, np.eye(2))
        assert geom.vol == pytest.approx((2 * np.pi) ** 4, rel=1e-15)

    def test_negative_metric_rejected(self):
        with pytest.raises(ValueError, match="not positive definite"):
            dl.build_torus(1, 8, [-1])

    def test_indefinite_metric_rejected(self):
        with pytest.raises(ValueError, match="not positive definite"):
            dl.build_torus(2, 8, np.diag([1.0, -2.0]))

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            dl.build_torus(1, 12, [1])

    def test_too_small_grid_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            dl.build_torus(1, 4, [1])

    def test_bad_dimension_rejected(self):
        with pytest.raises(ValueError, match="dimension"):
            dl.build_torus(4, 8, np.eye(4))

    def test_grid_point_count(self, torus2):
        assert torus2.num_points == 16**4
        assert torus2.shape == (16,) * 4


class TestDerivatives:
    def test_dz_cosine(self, torus1):
        u = cos_axis(torus1, 0)
        expect = -0.5 * np.broadcast_to(np.sin(torus1.axis_coordinate(0)), torus1.shape)
        assert np.abs(dl.d_z(torus1, u, 0) - expect).max() < 1e-14

    def test_dzbar_cosine(self, torus1):
        u = cos_axis(torus1, 0)
        expect = -0.5 * np.broadcast_to(np.sin(torus1.axis_coordinate(0)), torus1.shape)
        assert np.abs(dl.d_zbar(torus1, u, 0) - expect).max() < 1e-14

    def test_dz_constant(self, torus1):
        assert np.abs(dl.d_z(torus1, np.ones(torus1.shape), 0)).max() < 1e-15

    def test_dz_y_dependence(self, torus1):
        # d/dz of cos(y) is (i/2) sin(y)
        u = cos_axis(torus1, 1)
        expect = 0.5j * np.broadcast_to(np.sin(torus1.axis_coordinate(1)), torus1.shape)
        assert np.abs(dl.d_z(torus1, u, 0) - expect).max() < 1e-14

    def test_spectral_roundtrip(self, torus2):
        rng = np.random.default_rng(0)
        f = rng.standard_normal(torus2.shape)
        back = torus2.ifft(torus2.fft(f)).real
        assert np.abs(back - f).max() < 1e-13 * np.abs(f).max()

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_quarter_laplacian(self, torus1, seed):
        # d_z d_zbar equals one quarter of the planar Laplacian per axis
        u = dl.bandlimited_noise(torus1, torus1.N // 3, 1.0, seed)
        uh = torus1.fft(u)
        m = torus1.wavevector(0)
        l = torus1.wavevector(1)
        lap = torus1.ifft(-(m**2 + l**2) * uh).real
        hess = dl.complex_hessian(torus1, u)[..., 0, 0].real
        assert np.abs(hess - lap / 4).max() < 1e-12 * (1 + np.abs(lap).max())


class TestComplexHessian:
    def test_zero_field(self, torus1):
        H = dl.complex_hessian(torus1, np.zeros(torus1.shape))
        assert np.abs(H).max() == 0.0

    def test_cosine_n1(self, torus1):
        u = cos_axis(torus1, 0)
        H = dl.complex_hessian(torus1, u)
        assert np.abs(H[..., 0, 0] + 0.25 * u).max() < 1e-13

    def test_diagonal_n2(self, torus2):
        # u = cos x_1 + cos y_2 has Hessian diag(-cos(x_1)/4, -cos(y_2)/4)
        u = cos_axis(torus2, 0) + cos_axis(torus2, 3)
        H = dl.complex_hessian(torus2, u)
        assert np.abs(H[..., 0, 0] + 0.25 * cos_axis(torus2, 0)).max() < 1e-13
        assert np.abs(H[..., 1, 1] + 0.25 * cos_axis(torus2, 3)).max() < 1e-13
        assert np.abs(H[..., 0, 1]).max() < 1e-13

    @pytest.mark.parametrize("seed", [3, 4])
    def test_hermitian_pointwise(self, torus2, seed):
        u = dl.bandlimited_noise(torus2, 4, 1.0, seed)
        H = dl.complex_hessian(torus2, u)
        dev = np.abs(H - H.conj().swapaxes(-1, -2)).max()
        assert dev < 1e-12 * max(1.0, np.abs(H).max())

    @pytest.mark.parametrize("seed", [5, 6])
    def test_diagonal_integrates_to_zero(self, torus2, seed):
        # integration by parts on the torus: the trace entries are mean-free
        u = dl.bandlimited_noise(torus2, 4, 1.0, seed)
        H = dl.complex_hessian(torus2, u)
        for j in range(torus2.n):
            val = dl.volume_integral(torus2, H[..., j, j])
            assert abs(val) < 1e-11 * (1 + np.abs(u).max())


class TestVolumeIntegral:
    def test_constant(self, torus1):
        assert dl.volume_integral(torus1, np.ones(torus1.shape)) == pytest.approx(
            4 * np.pi**2, rel=1e-15)

    def test_mean_zero_mode(self, torus1):
        assert abs(dl.volume_integral(torus1, cos_axis(torus1, 0))) < 1e-13

    def test_scaled_metric(self):
        geom = dl.build_torus(1, 8, [2.0])
        f = 2.0 + cos_axis(geom, 0)
        assert dl.volume_integral(geom, f) == pytest.approx(16 * np.pi**2, rel=1e-14)

    def test_linearity(self, torus1):
        rng = np.random.default_rng(9)
        f = rng.standard_normal(torus1.shape)
        g = rng.standard_normal(torus1.shape)
        lhs = dl.volume_integral(torus1, 2.0 * f + 3.0 * g)
        rhs = 2.0 * dl.volume_integral(torus1, f) + 3.0 * dl.volume_integral(torus1, g)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestBandlimitedNoise:
    def test_deterministic(self, torus1):
        a = dl.bandlimited_noise(torus1, 2, 1.0, 7)
        b = dl.bandlimited_noise(torus1, 2, 1.0, 7)
        assert (a == b).all()

    def test_zero_amplitude(self, torus1):
        f = dl.bandlimited_noise(torus1, 2, 0.0, 7)
        assert (f == 0).all()

    def test_band_too_large(self, torus1):
        with pytest.raises(ValueError, match="dealiasing"):
            dl.bandlimited_noise(torus1, torus1.N // 2, 1.0, 7)

    def test_zero_mean_and_amplitude(self, torus1):
        f = dl.bandlimited_noise(torus1, 2, 0.37, 11)
        assert abs(f.mean()) < 1e-15
        assert np.abs(f).max() == pytest.approx(0.37, rel=1e-14)

    def test_fourier_support(self, torus1):
        k_band = 3
        f = dl.bandlimited_noise(torus1, k_band, 1.0, 13)
        fh = torus1.fft(f)
        m = np.abs(torus1.wavevector(0))
        l = np.abs(torus1.wavevector(1))
        outside = (np.maximum(m, l) > k_band)
        mask = np.broadcast_to(outside, fh.shape)
        assert np.abs(fh[mask]).max() < 1e-12 * np.abs(fh).max()


class TestWorkerCap:
    def test_env_var_respected(self, monkeypatch):
        from dhym_lab.geometry import _workers

        monkeypatch.setenv("DHYM_THREADS", "2")
        assert _workers() == 2

    def test_worker_count_does_not_change_results(self, torus1, monkeypatch):
        f = dl.bandlimited_noise(torus1, 3, 1.0, 2)
        monkeypatch.setenv("DHYM_THREADS", "1")
        a = dl.complex_hessian(torus1, f)
        monkeypatch.setenv("DHYM_THREADS", "4")
        b = dl.complex_hessian(torus1, f)
        assert (a == b).all()
