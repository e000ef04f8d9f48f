import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

import dhym_lab as dl
from conftest import cos_axis


def random_hermitian(rng, count, n, scale=3.0):
    A = rng.uniform(-scale, scale, (count, n, n)) + 1j * rng.uniform(-scale, scale, (count, n, n))
    return (A + A.conj().swapaxes(-1, -2)) / 2


def random_metric(rng, count, n):
    B = rng.uniform(-1, 1, (count, n, n)) + 1j * rng.uniform(-1, 1, (count, n, n))
    return B @ B.conj().swapaxes(-1, -2) + 0.5 * np.eye(n)


class TestPointwisePhase:
    def test_zero_curvature(self):
        d = dl.pointwise_phase(np.zeros((2, 2)), np.eye(2))
        assert np.abs(d.lam).max() == 0.0
        assert float(d.theta) == 0.0
        assert complex(d.zeta) == 1.0 + 0.0j
        assert np.abs(d.eta - np.eye(2)).max() == 0.0

    def test_scalar_unit(self):
        d = dl.pointwise_phase(1.0, 1.0)
        assert float(d.theta) == pytest.approx(np.pi / 4, abs=1e-15)
        assert complex(d.zeta) == pytest.approx(1 + 1j, abs=1e-15)
        assert complex(d.eta.ravel()[0]) == pytest.approx(2.0, abs=1e-15)
        assert complex(d.eta_inv.ravel()[0]) == pytest.approx(0.5, abs=1e-15)

    def test_two_angles_add(self):
        d = dl.pointwise_phase(np.diag([1.0, np.sqrt(3.0)]), np.eye(2))
        assert float(d.theta) == pytest.approx(np.pi / 4 + np.pi / 3, abs=1e-14)
        expect = (1 - np.sqrt(3.0)) + 1j * (1 + np.sqrt(3.0))
        assert complex(d.zeta) == pytest.approx(expect, abs=1e-14)

    def test_non_pd_metric_rejected(self):
        with pytest.raises(ValueError, match="not positive definite"):
            dl.pointwise_phase(np.eye(2), np.diag([1.0, -1.0]))

    def test_non_hermitian_curvature_rejected(self):
        with pytest.raises(ValueError, match="non-Hermitian"):
            dl.pointwise_phase(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_invariants_on_ensemble(self, n):
        rng = np.random.default_rng(100 + n)
        F = random_hermitian(rng, 2000, n)
        g = random_metric(rng, 2000, n)
        d = dl.pointwise_phase(F, g)
        # theta strictly inside its branch
        assert np.abs(d.theta).max() < n * np.pi / 2
        # zeta = exp(i theta) sqrt(det eta / det g)
        det_eta = np.linalg.det(d.eta).real
        det_g = np.linalg.det(g).real
        rel = np.abs(d.zeta - np.exp(1j * d.theta) * np.sqrt(det_eta / det_g)) / np.abs(d.zeta)
        assert rel.max() < 1e-10
        # det eta = det g * prod(1 + lam^2)
        expect = det_g * np.prod(1 + d.lam**2, axis=-1)
        assert np.abs(det_eta - expect).max() < 1e-10 * np.abs(expect).max()
        # PSD order: eta >= g and g^-1 >= eta^-1
        eta_scale = np.abs(d.eta).max()
        assert np.linalg.eigvalsh(d.eta - g).min() > -1e-12 * eta_scale
        ginv = np.linalg.inv(g)
        assert np.linalg.eigvalsh(ginv - d.eta_inv).min() > -1e-12 * np.abs(ginv).max()

    @pytest.mark.parametrize("n", [2, 3])
    def test_generalized_eigenvalues_against_library(self, n):
        rng = np.random.default_rng(200 + n)
        F = random_hermitian(rng, 200, n)
        g = random_metric(rng, 200, n)
        d = dl.pointwise_phase(F, g)
        for k in range(200):
            lam_ref, V = scipy.linalg.eigh(F[k], g[k])
            assert np.abs(d.lam[k] - lam_ref).max() < 1e-10 * max(1.0, np.abs(F[k]).max())
            resid = np.abs(F[k] @ V - g[k] @ V @ np.diag(lam_ref)).max()
            assert resid < 1e-10 * max(1.0, np.abs(F[k]).max())

    def test_monotone_in_metric_shift(self):
        rng = np.random.default_rng(42)
        F = random_hermitian(rng, 500, 2)
        g = random_metric(rng, 500, 2)
        d0 = dl.pointwise_phase(F, g)
        d1 = dl.pointwise_phase(F + 0.5 * g, g)
        assert (d1.lam > d0.lam).all()
        assert (d1.theta > d0.theta).all()

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**31 - 1))
    def test_branch_and_consistency_property(self, n, seed):
        rng = np.random.default_rng(seed)
        F = random_hermitian(rng, 1, n)[0]
        g = random_metric(rng, 1, n)[0]
        d = dl.pointwise_phase(F, g)
        assert abs(d.theta) < n * np.pi / 2
        mod = np.abs(d.zeta)
        assert complex(d.zeta) == pytest.approx(mod * np.exp(1j * float(d.theta)), rel=1e-10)


class TestPhaseFields:
    def test_constant_proportional(self, torus1):
        F = np.broadcast_to(torus1.g, torus1.shape + (1, 1)).copy()
        pf = dl.phase_fields(torus1, F)
        assert np.abs(pf.theta - np.pi / 4).max() < 1e-15
        assert np.abs(pf.zeta - (1 + 1j)).max() < 1e-15

    def test_zero_field(self, torus1):
        pf = dl.phase_fields(torus1, np.zeros(torus1.shape + (1, 1)))
        assert np.abs(pf.theta).max() == 0.0
        assert np.abs(pf.zeta - 1.0).max() == 0.0

    @pytest.mark.parametrize("c,delta", [(1.0, 0.1), (0.5, 0.05)])
    def test_perturbation_phase_bound(self, torus1, c, delta):
        # eigenvalue perturbation plus the 1-Lipschitz arctan bound
        u = delta * cos_axis(torus1, 0)
        F = c * np.broadcast_to(torus1.g, torus1.shape + (1, 1)) + dl.complex_hessian(torus1, u)
        pf = dl.phase_fields(torus1, F)
        n = torus1.n
        assert np.abs(pf.theta - n * np.arctan(c)).max() <= n * delta / 4 * (1 + 1e-12)

    def test_matches_pointwise_brute_force(self):
        geom = dl.build_torus(2, 8, np.array([[2.0, 0.3j], [-0.3j, 1.0]]))
        u = dl.bandlimited_noise(geom, 2, 1.0, 17)
        F = np.broadcast_to(geom.g, geom.shape + (2, 2)) + dl.complex_hessian(geom, u)
        pf = dl.phase_fields(geom, F)
        flatF = F.reshape(-1, 2, 2)
        flat_theta = pf.theta.reshape(-1)
        for k in range(0, flatF.shape[0], 257):
            lam = scipy.linalg.eigh(flatF[k], geom.g, eigvals_only=True)
            assert np.arctan(lam).sum() == pytest.approx(flat_theta[k], abs=1e-12)

    def test_eigenvalue_ordering(self, torus2):
        u = dl.bandlimited_noise(torus2, 3, 1.0, 23)
        F = np.broadcast_to(torus2.g, torus2.shape + (2, 2)) + dl.complex_hessian(torus2, u)
        pf = dl.phase_fields(torus2, F)
        assert (pf.lambda_min <= pf.lambda_max).all()

    def test_pointwise_error_carries_grid_location(self, torus2):
        F = np.broadcast_to(torus2.g, torus2.shape + (2, 2)).copy()
        F[3, 1, 4, 2, 0, 1] += 1.0  # break Hermitian symmetry at one point
        with pytest.raises(ValueError, match=r"grid point \(3, 1, 4, 2\)"):
            dl.phase_fields(torus2, F)


class TestHypercriticalClassify:
    def test_hypercritical_n2(self):
        assert dl.hypercritical_classify(np.full(4, np.pi / 2 + 0.1), 2) == "hypercritical"

    def test_supercritical_n2(self):
        assert dl.hypercritical_classify(np.full(4, 0.1), 2) == "supercritical"

    def test_supercritical_n1_negative(self):
        assert dl.hypercritical_classify(np.full(4, -0.3), 1) == "supercritical"

    def test_none(self):
        assert dl.hypercritical_classify(np.full(4, -2.0), 1) == "none"
