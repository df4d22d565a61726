"""Shared numerical conventions: residuals, rank thresholds, null spaces.

Every rank decision in the package goes through `rank_cutoff` so that the
thresholding convention (sigma_max * max(dim) * eps * 64) is set in exactly
one place.
"""

from __future__ import annotations

import numpy as np

from .errors import RankIndeterminate

# Default tolerance for validating the defining relations.
DEFAULT_TOL = 1e-9
# Tolerance for derived invariants, which amplify rounding.
DERIVED_TOL = 1e-6
# Eigenvalues closer than this are treated as one candidate.
EIG_CLUSTER_TOL = 1e-8
# Safety factor on top of the standard numerical-rank convention.
RANK_SAFETY = 64
# Singular values within this factor of the cutoff (either side) make a
# rank decision indeterminate.
STRADDLE_FACTOR = np.sqrt(10.0)

_EPS = float(np.finfo(np.float64).eps)


def cmat(a) -> np.ndarray:
    """Coerce to a 2-d complex array without copying when possible."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got ndim={m.ndim}")
    return m


def fro(a) -> float:
    m = np.asarray(a)
    return 0.0 if m.size == 0 else float(np.linalg.norm(m))


def rel_residual(lhs, rhs) -> float:
    """Scale-free mismatch ||lhs - rhs||_F / (1 + ||lhs||_F + ||rhs||_F)."""
    lhs = np.asarray(lhs, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    if lhs.shape != rhs.shape:
        raise ValueError(f"residual of mismatched shapes {lhs.shape} vs {rhs.shape}")
    return fro(lhs - rhs) / (1.0 + fro(lhs) + fro(rhs))


def rank_cutoff(sigma_max: float, shape: tuple[int, int]) -> float:
    return sigma_max * max(shape + (1,)) * _EPS * RANK_SAFETY


def svd_rank(m, raise_indeterminate: bool = False) -> int:
    """Numerical rank by SVD thresholding.

    With `raise_indeterminate`, a singular value within STRADDLE_FACTOR of
    the cutoff raises RankIndeterminate instead of being silently rounded.
    """
    m = cmat(m)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    cut = rank_cutoff(float(s[0]), m.shape)
    if raise_indeterminate and cut > 0.0:
        straddling = (s > cut / STRADDLE_FACTOR) & (s < cut * STRADDLE_FACTOR)
        if np.any(straddling):
            raise RankIndeterminate(
                f"singular values {s[straddling]} straddle cutoff {cut:.3e}"
            )
    return int(np.count_nonzero(s > cut))


def null_space(m, raise_indeterminate: bool = False) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of m."""
    m = cmat(m)
    rows, cols = m.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if rows == 0 or fro(m) == 0.0:
        return np.eye(cols, dtype=np.complex128)
    u, s, vh = np.linalg.svd(m)
    cut = rank_cutoff(float(s[0]), m.shape)
    if raise_indeterminate:
        straddling = (s > cut / STRADDLE_FACTOR) & (s < cut * STRADDLE_FACTOR)
        if np.any(straddling):
            raise RankIndeterminate(
                f"singular values {s[straddling]} straddle cutoff {cut:.3e}"
            )
    rank = int(np.count_nonzero(s > cut))
    return vh[rank:].conj().T


def orth(m) -> np.ndarray:
    """Orthonormal basis (columns) of the column span of m."""
    m = cmat(m)
    if m.size == 0 or fro(m) == 0.0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    cut = rank_cutoff(float(s[0]), m.shape)
    return u[:, s > cut]


def complement_in(subspace: np.ndarray, ambient_dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(subspace) in C^ambient_dim."""
    if subspace.shape[1] == 0:
        return np.eye(ambient_dim, dtype=np.complex128)
    return null_space(subspace.conj().T)


def eigenvalues(m) -> np.ndarray:
    m = cmat(m)
    if m.shape[0] == 0:
        return np.zeros(0, dtype=np.complex128)
    return np.linalg.eigvals(m)


def cluster_eigenvalues(vals, tol: float = EIG_CLUSTER_TOL) -> list[complex]:
    """Greedy clustering of (complex) eigenvalues; returns cluster means.

    Avoids double-counting multiple roots that rounding has split.
    """
    means: list[complex] = []
    members: list[list[complex]] = []
    for v in sorted(np.asarray(vals, dtype=np.complex128), key=lambda c: (c.real, c.imag)):
        for idx, mu in enumerate(means):
            if abs(v - mu) <= tol:
                members[idx].append(v)
                means[idx] = complex(np.mean(members[idx]))
                break
        else:
            means.append(complex(v))
            members.append([complex(v)])
    return means


def charpoly(m) -> np.ndarray:
    """Monic characteristic polynomial coefficients, highest degree first."""
    m = cmat(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"charpoly of non-square matrix {m.shape}")
    if m.shape[0] == 0:
        return np.array([1.0 + 0j])
    return np.atleast_1d(np.poly(m)).astype(np.complex128)


def poly_from_roots(roots) -> np.ndarray:
    """Coefficients of prod(t - r) over the given roots, highest first."""
    return np.atleast_1d(np.poly(np.asarray(roots, dtype=np.complex128))).astype(
        np.complex128
    )


def polyval_matrix(coeffs, m) -> np.ndarray:
    """Evaluate a polynomial (highest-first coefficients) at a square matrix."""
    m = cmat(m)
    d = m.shape[0]
    out = np.zeros((d, d), dtype=np.complex128)
    eye = np.eye(d, dtype=np.complex128)
    for c in np.asarray(coeffs, dtype=np.complex128):
        out = out @ m + c * eye
    return out


def matrix_poly_at_roots(m, roots) -> np.ndarray:
    """prod_j (m - z_j I), computed as an explicit product of commuting factors."""
    m = cmat(m)
    d = m.shape[0]
    out = np.eye(d, dtype=np.complex128)
    for z in roots:
        out = out @ (m - complex(z) * np.eye(d, dtype=np.complex128))
    return out


def divided_difference(roots, eta: complex, beta) -> np.ndarray:
    """The matrix divided difference (p(eta) I - p(beta)) (eta I - beta)^{-1}.

    Here p(t) = prod_j (t - z_j) over `roots`.  Computed as the synthetic-
    division quotient q(t) = (p(t) - p(eta)) / (t - eta) evaluated at beta,
    so the result is a polynomial in beta and eta; no inversion is ever
    performed and the formula is valid also when eta is an eigenvalue.
    """
    beta = cmat(beta)
    coeffs = poly_from_roots(roots)
    # Horner/synthetic division of p by (t - eta); drop the remainder p(eta).
    quot = np.zeros(len(coeffs) - 1, dtype=np.complex128)
    acc = 0.0 + 0.0j
    for i in range(len(coeffs) - 1):
        acc = coeffs[i] + complex(eta) * acc
        quot[i] = acc
    return polyval_matrix(quot, beta)


def spectral_projector(m, eigenvalue: complex, tol: float = 1e-6) -> np.ndarray:
    """Spectral projector of a diagonalizable matrix at one eigenvalue cluster."""
    m = cmat(m)
    vals, vecs = np.linalg.eig(m)
    idx = np.abs(vals - complex(eigenvalue)) < tol
    if not np.any(idx):
        raise ValueError(f"{eigenvalue} is not an eigenvalue (tol {tol})")
    vinv = np.linalg.inv(vecs)
    return vecs[:, idx] @ vinv[idx, :]


def subspace_max_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between the column spans of a and b."""
    from scipy.linalg import subspace_angles

    if a.shape[1] == 0 and b.shape[1] == 0:
        return 0.0
    return float(np.max(subspace_angles(a, b)))
