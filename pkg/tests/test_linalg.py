import numpy as np
import pytest

from bowforge import _linalg as la
from bowforge.errors import RankIndeterminate


def test_rel_residual_scale_free():
    lhs = np.array([[2.0]])
    rhs = np.array([[1.0]])
    assert la.rel_residual(lhs, rhs) == pytest.approx(1.0 / 4.0)
    assert la.rel_residual(lhs, lhs) == 0.0
    assert la.rel_residual(np.zeros((0, 3)), np.zeros((0, 3))) == 0.0
    with pytest.raises(ValueError):
        la.rel_residual(np.zeros((1, 2)), np.zeros((2, 1)))


def test_null_space_edge_shapes():
    assert la.null_space(np.zeros((0, 3))).shape == (3, 3)  # no constraints
    assert la.null_space(np.zeros((3, 0))).shape == (0, 0)
    assert la.null_space(np.zeros((2, 2))).shape == (2, 2)
    basis = la.null_space(np.array([[1.0, 1.0]]))
    assert basis.shape == (2, 1)
    assert abs(basis[0, 0] + basis[1, 0]) < 1e-14


def test_svd_rank_and_straddle_detection():
    assert la.svd_rank(np.diag([1.0, 1e-3])) == 2
    assert la.svd_rank(np.diag([1.0, 0.0])) == 1
    # a singular value sitting right at the cutoff is indeterminate
    cutoff = la.rank_cutoff(1.0, (2, 2))
    m = np.diag([1.0, cutoff])
    with pytest.raises(RankIndeterminate):
        la.svd_rank(m, raise_indeterminate=True)
    assert la.svd_rank(m) in (1, 2)  # silent mode still answers


def test_orth_and_complement():
    m = np.array([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0]])
    basis = la.orth(m)
    assert basis.shape == (3, 1)
    comp = la.complement_in(basis, 3)
    assert comp.shape == (3, 2)
    assert np.linalg.norm(basis.conj().T @ comp) < 1e-12


def test_charpoly_conventions():
    np.testing.assert_allclose(la.charpoly(np.zeros((0, 0))), [1.0])
    np.testing.assert_allclose(la.charpoly(np.diag([2.0, 3.0])), [1.0, -5.0, 6.0])
    with pytest.raises(ValueError):
        la.charpoly(np.zeros((1, 2)))


def test_cluster_eigenvalues():
    vals = [1.0, 1.0 + 1e-10, 5.0, 5.0 - 1e-9j]
    clusters = la.cluster_eigenvalues(vals, tol=1e-8)
    assert len(clusters) == 2
    assert min(abs(c - 1.0) for c in clusters) < 1e-9
    assert min(abs(c - 5.0) for c in clusters) < 1e-9


def test_divided_difference_single_root_is_identity():
    beta = np.array([[0.3, 1.0], [0.0, -0.2]], dtype=complex)
    np.testing.assert_allclose(la.divided_difference([0.7], 2.0, beta), np.eye(2))


def test_divided_difference_matches_resolvent_formula():
    # away from eigenvalues: S = (p(eta) I - p(beta)) (eta I - beta)^{-1}
    rng = np.random.default_rng(1)
    roots = [0.3 + 0.1j, -0.5, 1.2 - 0.4j]
    beta = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    eta = 2.5 + 1.0j
    S = la.divided_difference(roots, eta, beta)
    p_eta = np.prod([eta - z for z in roots])
    direct = (p_eta * np.eye(4) - la.matrix_poly_at_roots(beta, roots)) @ np.linalg.inv(
        eta * np.eye(4) - beta
    )
    np.testing.assert_allclose(S, direct, atol=1e-10)


def test_divided_difference_defined_at_eigenvalues():
    # polynomial in beta and eta: no singularity when eta hits the spectrum
    beta = np.diag([0.5 + 0j, -1.0 + 0j])
    S = la.divided_difference([0.0, 1.0], 0.5, beta)
    assert np.all(np.isfinite(S))
    # value against the scalar divided difference on each eigenvalue
    p = lambda t: t * (t - 1.0)
    np.testing.assert_allclose(S[1, 1], (p(0.5) - p(-1.0)) / (0.5 - (-1.0)))


def test_spectral_projector():
    rng = np.random.default_rng(2)
    v = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    m = v @ np.diag([1.0, 2.0, 3.0]) @ np.linalg.inv(v)
    proj = la.spectral_projector(m, 2.0)
    np.testing.assert_allclose(proj @ proj, proj, atol=1e-10)
    np.testing.assert_allclose(m @ proj, 2.0 * proj, atol=1e-10)
    with pytest.raises(ValueError):
        la.spectral_projector(m, 99.0)


def test_matrix_poly_at_roots_empty():
    out = la.matrix_poly_at_roots(np.array([[4.0]]), [])
    np.testing.assert_allclose(out, [[1.0]])
