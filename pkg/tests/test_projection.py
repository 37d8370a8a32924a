import numpy as np
import pytest

from tetnewton.elements import element_hessian
from tetnewton.materials import MaterialParams
from tetnewton.mesh import TetMesh
from tetnewton.projection import (
    FILTER_ABS,
    FILTER_CLAMP,
    FILTER_NONE,
    FILTER_SHIFT,
    EigAbs,
    EigClamp,
    LocalShift,
    NoProjection,
    count_negative_eigenvalues,
    filter_code,
    project_blocks,
    project_symmetric,
)
from tetnewton.toy2d import toy_hess


def random_symmetric(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) * scale
    return 0.5 * (a + a.T)


# ============================================================
# Single-matrix filters
# ============================================================


class TestProjectSymmetric:
    def test_abs_on_diagonal(self):
        out, report = project_symmetric(np.diag([-2.0, 3.0]), EigAbs())
        np.testing.assert_allclose(out, np.diag([2.0, 3.0]), atol=1e-14)
        assert report.negative_count == 1
        assert report.min_eig_before == pytest.approx(-2.0)
        assert report.min_eig_after == pytest.approx(2.0)

    def test_clamp_zero_on_diagonal(self):
        out, report = project_symmetric(np.diag([-2.0, 3.0]), EigClamp(0.0))
        np.testing.assert_allclose(out, np.diag([0.0, 3.0]), atol=1e-14)
        assert report.min_eig_after == 0.0

    def test_paper_toy_hessian(self):
        # the near-center Hessian with eigenvalues (-1.99e6, 3.99)
        h = toy_hess((1.0 - 1e-6, 1e-8))
        w, v = np.linalg.eigh(h)
        assert w[0] == pytest.approx(-1.99e6, rel=0.01)
        assert w[1] == pytest.approx(3.99, rel=0.01)
        out, _ = project_symmetric(h, EigAbs())
        w_abs, v_abs = np.linalg.eigh(out)
        np.testing.assert_allclose(np.sort(w_abs), np.sort(np.abs(w)), rtol=1e-10)
        # eigenvectors preserved: same invariant subspaces up to sign
        for k in range(2):
            overlap = abs(float(v[:, k] @ v_abs[:, 1 - k]))  # order swaps: |w| sorts differently
            assert overlap > 1.0 - 1e-8

    def test_identity_on_psd_cone(self, rng):
        for _ in range(100):
            a = rng.standard_normal((6, 6))
            h = a @ a.T  # PSD
            scale = np.abs(h).max()
            out_abs, _ = project_symmetric(h, EigAbs())
            out_clamp, _ = project_symmetric(h, EigClamp(0.0))
            assert np.abs(out_abs - h).max() <= 1e-10 * scale
            assert np.abs(out_clamp - h).max() <= 1e-10 * scale

    def test_local_shift(self, rng):
        for _ in range(50):
            h = random_symmetric(rng, 9)
            out, report = project_symmetric(h, LocalShift())
            w = np.linalg.eigvalsh(h)
            tau = max(0.0, -w[0])
            np.testing.assert_allclose(out, h + tau * np.eye(9), atol=1e-14)
            assert report.min_eig_after >= -1e-12 * max(1, np.abs(w).max())

    def test_no_projection_passthrough(self, rng):
        h = random_symmetric(rng, 5)
        out, report = project_symmetric(h, NoProjection())
        np.testing.assert_allclose(out, h, atol=1e-15)
        assert report.min_eig_before == report.min_eig_after

    def test_rejects_nonfinite(self):
        h = np.array([[1.0, np.nan], [np.nan, 1.0]])
        with pytest.raises(ValueError, match="finite"):
            project_symmetric(h, EigAbs())

    def test_rejects_gross_asymmetry(self):
        h = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            project_symmetric(h, EigAbs())


# ============================================================
# Spectral properties (randomized)
# ============================================================


class TestSpectralProperties:
    @pytest.mark.parametrize("n", [2, 9, 12])
    def test_abs_multiset_mapping(self, n, rng):
        for _ in range(200):
            h = random_symmetric(rng, n, scale=float(rng.uniform(0.1, 100)))
            out, _ = project_symmetric(h, EigAbs())
            got = np.sort(np.linalg.eigvalsh(out))
            want = np.sort(np.abs(np.linalg.eigvalsh(h)))
            scale = max(1e-30, want.max())
            assert np.abs(got - want).max() <= 1e-8 * scale

    @pytest.mark.parametrize(
        "strategy", [EigAbs(), EigClamp(0.0), EigClamp(1e-3), LocalShift()]
    )
    def test_psd_guarantee(self, strategy, rng):
        for _ in range(100):
            h = random_symmetric(rng, 12)
            out, _ = project_symmetric(h, strategy)
            w = np.linalg.eigvalsh(out)
            assert w.min() >= -1e-10 * max(1.0, np.abs(h).max())

    @pytest.mark.parametrize("strategy", [EigAbs(), EigClamp(0.0), EigClamp(1e-3)])
    def test_idempotence(self, strategy, rng):
        for _ in range(100):
            h = random_symmetric(rng, 9)
            once, _ = project_symmetric(h, strategy)
            twice, _ = project_symmetric(once, strategy)
            assert np.abs(once - twice).max() <= 1e-10 * max(1, np.abs(once).max())

    def test_abs_dominates_clamp0(self, rng):
        # |l| - max(l, 0) = max(-l, 0) >= 0 on the shared eigenbasis
        for _ in range(200):
            h = random_symmetric(rng, 9)
            h_abs, _ = project_symmetric(h, EigAbs())
            h_clamp, _ = project_symmetric(h, EigClamp(0.0))
            w = np.linalg.eigvalsh(h_abs - h_clamp)
            assert w.min() >= -1e-10 * max(1.0, np.abs(h).max())


# ============================================================
# Negative eigenvalue counting
# ============================================================


class TestCountNegative:
    def test_identity(self):
        assert count_negative_eigenvalues(np.eye(4)) == 0

    def test_mixed_diagonal(self):
        assert count_negative_eigenvalues(np.diag([-1.0, -2.0, 5.0])) == 2

    def test_scaled_tet_element_hessian(self):
        # uniform 1.2x scaling, mu=1, lam=99: the three flip modes go to -84.29
        pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
        mesh = TetMesh.from_arrays(pos, [[0, 1, 2, 3]])
        m = MaterialParams(1.0, 99.0)
        h = element_hessian(mesh, 0, 1.2 * pos, m)
        assert count_negative_eigenvalues(h) >= 3

    def test_near_zero_not_counted(self):
        h = np.diag([1.0, -1e-15])
        assert count_negative_eigenvalues(h) == 0


# ============================================================
# Batched filters
# ============================================================


class TestProjectBlocks:
    def test_matches_single(self, rng):
        blocks = np.stack([random_symmetric(rng, 12) for _ in range(40)])
        pairs = [
            (FILTER_CLAMP, 0.0, EigClamp(0.0)),
            (FILTER_CLAMP, 1e-3, EigClamp(1e-3)),
            (FILTER_ABS, 0.0, EigAbs()),
            (FILTER_SHIFT, 0.0, LocalShift()),
            (FILTER_NONE, 0.0, NoProjection()),
        ]
        for mode, eps, strategy in pairs:
            out, counts = project_blocks(blocks, mode, eps)
            for i in range(len(blocks)):
                single, report = project_symmetric(blocks[i], strategy)
                assert np.abs(out[i] - single).max() <= 1e-10 * max(
                    1, np.abs(single).max()
                )
                assert counts[i] == report.negative_count

    def test_filter_code_mapping(self):
        assert filter_code(EigClamp(1e-3)) == (FILTER_CLAMP, 1e-3)
        assert filter_code(EigAbs()) == (FILTER_ABS, 0.0)
        assert filter_code(LocalShift()) == (FILTER_SHIFT, 0.0)
        assert filter_code(NoProjection()) == (FILTER_NONE, 0.0)

    def test_strategy_validation(self):
        with pytest.raises(ValueError):
            EigClamp(-1.0)
