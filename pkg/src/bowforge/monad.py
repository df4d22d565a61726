"""Monad assembly on the surface, fiber evaluation, and local freeness.

Everything is evaluated on the affine chart xi*psi = prod_i (eta - z_i),
where every line-bundle twist trivializes.  The lifts into the first
resolution stage use the matrix divided difference
S(eta, beta) = (p(eta) I - p(beta)) (eta I - beta)^{-1}, a polynomial in
beta and eta computed by synthetic division; their correctness is asserted
numerically by the lift-commutativity residuals rather than trusted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .bowdata import BowDatum, aggregate_maps
from .errors import RankIndeterminate, ShapeMismatch, SurfaceViolation

SURFACE_TOL = 1e-9


@dataclass(frozen=True)
class SurfacePoint:
    """A point (xi, psi, eta) on the affine chart of the surface."""

    xi: complex
    psi: complex
    eta: complex

    def surface_residual(self, z) -> float:
        prod = np.prod([self.eta - zi for zi in z]) if len(z) else 1.0
        lhs = self.xi * self.psi
        return abs(lhs - prod) / (1.0 + abs(lhs) + abs(prod))

    @staticmethod
    def from_xi_eta(z, xi: complex, eta: complex) -> "SurfacePoint":
        """Point with psi derived from the surface equation (xi != 0)."""
        if xi == 0:
            raise ValueError("psi is not determined by xi = 0; construct directly")
        prod = complex(np.prod([eta - zi for zi in z])) if len(z) else 1.0 + 0j
        return SurfacePoint(xi=complex(xi), psi=prod / complex(xi), eta=complex(eta))


@dataclass(frozen=True)
class BlockIndex:
    """Named (offset, size) for every block of the four monad spaces."""

    A: dict
    B: dict
    C: dict
    D: dict
    F: dict


@dataclass(frozen=True)
class MonadAtPoint:
    """The monad maps evaluated at one surface point.

    Amap stacks (alpha; -beta_tilde): (dimB + dimC) x dimA.
    Bmap concatenates (delta, gamma): dimD x (dimB + dimC).
    mu maps the auxiliary space F = C^{d_0 + d_n} into the R blocks of A.
    """

    point: SurfacePoint
    Amap: np.ndarray
    Bmap: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray  # dimB x dimA block of Amap
    beta_tilde: np.ndarray  # dimC x dimA block (unsigned)
    block_index: BlockIndex

    @property
    def dimA(self) -> int:
        return self.Amap.shape[1]

    @property
    def dimB(self) -> int:
        return self.alpha.shape[0]

    @property
    def dimC(self) -> int:
        return self.beta_tilde.shape[0]

    @property
    def dimD(self) -> int:
        return self.Bmap.shape[0]

    def composition_residual(self) -> float:
        prod = self.Bmap @ self.Amap
        scale = 1.0 + la.fro(self.Bmap) * la.fro(self.Amap)
        return la.fro(prod) / scale


def _offsets(sizes: list[tuple[str, int]]) -> tuple[dict, int]:
    table = {}
    off = 0
    for name, size in sizes:
        table[name] = (off, size)
        off += size
    return table, off


def monad_dimensions(dims) -> tuple[int, int, int, int]:
    d = dims.d
    n = len(d) - 1
    dim_a = sum(d[:n]) + 2 * d[0] + 2 * d[n]
    dim_b = sum(di + 1 for di in d[:n]) + d[0] + d[n]
    dim_c = sum(d)
    return dim_a, dim_b, dim_c, dim_c


def assemble_monad(b: BowDatum, x: SurfacePoint, tol: float = SURFACE_TOL) -> MonadAtPoint:
    """Evaluate the monad maps at a surface point.

    Block layout (offsets recorded in the returned block_index):
      A: P-blocks C^{d_i}, i = 0..n-1, then R-blocks C^{d_0}, C^{d_n},
         C^{d_0}, C^{d_n} in resolution order;
      B: P-blocks C^{d_i + 1}, then the R-block C^{d_0} + C^{d_n};
      C = D: Q-blocks C^{d_i}, i = 0..n.
    """
    if x.surface_residual(b.topo.z) >= tol:
        raise SurfaceViolation(
            f"point {x} violates xi*psi = prod(eta - z_i): "
            f"residual {x.surface_residual(b.topo.z):.3e}"
        )
    b.validate_shapes()
    n = b.topo.n
    d = b.dims.d
    d0, dnn = d[0], d[n]
    eta, xi, psi = x.eta, x.xi, x.psi
    mxi_hat, mpsi_hat = aggregate_maps(b)

    a_table, dim_a = _offsets(
        [(f"P{i}", d[i]) for i in range(n)]
        + [("R0", d0), ("R1", dnn), ("R2", d0), ("R3", dnn)]
    )
    b_table, dim_b = _offsets(
        [(f"P{i}", d[i] + 1) for i in range(n)] + [("R", d0 + dnn)]
    )
    c_table, dim_c = _offsets([(f"Q{i}", d[i]) for i in range(n + 1)])
    f_table, dim_f = _offsets([("F0", d0), ("F1", dnn)])

    eye = lambda m: np.eye(m, dtype=np.complex128)
    res = lambda i: eta * eye(d[i]) - b.beta[i]  # eta I - beta_i

    def put(mat, table_r, row, table_c, col, block):
        r0, rs = table_r[row]
        c0, cs = table_c[col]
        if block.shape != (rs, cs):
            raise ShapeMismatch(
                f"block {row}<-{col} has shape {block.shape}, expected {(rs, cs)}"
            )
        mat[r0 : r0 + rs, c0 : c0 + cs] += block

    alpha = np.zeros((dim_b, dim_a), dtype=np.complex128)
    for i in range(n):
        put(alpha, b_table, f"P{i}", a_table, f"P{i}", np.vstack([res(i), -b.gamma[i]]))
    G = np.zeros((d0 + dnn, 2 * d0 + 2 * dnn), dtype=np.complex128)
    G[:d0, :d0] = res(0)
    G[:d0, d0 + dnn : 2 * d0 + dnn] = xi * eye(d0)
    G[:d0, 2 * d0 + dnn :] = mxi_hat
    G[d0:, d0 : d0 + dnn] = res(n)
    G[d0:, d0 + dnn : 2 * d0 + dnn] = -mpsi_hat
    G[d0:, 2 * d0 + dnn :] = -psi * eye(dnn)
    r0_a = a_table["R0"][0]
    rb = b_table["R"][0]
    alpha[rb : rb + d0 + dnn, r0_a : r0_a + 2 * d0 + 2 * dnn] = G

    S = la.divided_difference(b.topo.z, eta, b.beta[0])
    T = la.divided_difference(b.topo.z, eta, b.beta[n])

    beta_t = np.zeros((dim_c, dim_a), dtype=np.complex128)
    for i in range(n):
        put(beta_t, c_table, f"Q{i}", a_table, f"P{i}", eye(d[i]))
        put(beta_t, c_table, f"Q{i + 1}", a_table, f"P{i}", b.A[i])
    put(beta_t, c_table, "Q0", a_table, "R0", psi * eye(d0))
    put(beta_t, c_table, "Q0", a_table, "R1", mxi_hat)
    put(beta_t, c_table, "Q0", a_table, "R2", S)
    put(beta_t, c_table, f"Q{n}", a_table, "R0", -mpsi_hat)
    put(beta_t, c_table, f"Q{n}", a_table, "R1", -xi * eye(dnn))
    put(beta_t, c_table, f"Q{n}", a_table, "R3", T)

    delta = np.zeros((dim_c, dim_b), dtype=np.complex128)
    for i in range(n):
        put(
            delta,
            c_table,
            f"Q{i}",
            b_table,
            f"P{i}",
            np.hstack([eye(d[i]), np.zeros((d[i], 1))]),
        )
        put(delta, c_table, f"Q{i + 1}", b_table, f"P{i}", np.hstack([b.A[i], b.alpha[i]]))
    put(delta, c_table, "Q0", b_table, "R", np.hstack([psi * eye(d0), mxi_hat]))
    put(delta, c_table, f"Q{n}", b_table, "R", np.hstack([-mpsi_hat, -xi * eye(dnn)]))

    gamma = np.zeros((dim_c, dim_c), dtype=np.complex128)
    for i in range(n + 1):
        put(gamma, c_table, f"Q{i}", c_table, f"Q{i}", res(i))

    # mu spans ker(alpha) at generic points: polynomial first-stage lift of
    # the R resolution (divided differences in the top blocks).
    mu = np.zeros((dim_a, dim_f), dtype=np.complex128)
    put(mu, a_table, "R0", f_table, "F0", -S)
    put(mu, a_table, "R1", f_table, "F1", -T)
    put(mu, a_table, "R2", f_table, "F0", psi * eye(d0))
    put(mu, a_table, "R2", f_table, "F1", mxi_hat)
    put(mu, a_table, "R3", f_table, "F0", -mpsi_hat)
    put(mu, a_table, "R3", f_table, "F1", -xi * eye(dnn))

    amap = np.vstack([alpha, -beta_t])
    bmap = np.hstack([delta, gamma])
    return MonadAtPoint(
        point=x,
        Amap=amap,
        Bmap=bmap,
        mu=mu,
        alpha=alpha,
        beta_tilde=beta_t,
        block_index=BlockIndex(A=a_table, B=b_table, C=c_table, D=c_table, F=f_table),
    )


def lift_commutativity_residuals(b: BowDatum, x: SurfacePoint) -> tuple[float, float]:
    """Residuals of the two squares the divided-difference lifts must close.

    (eta - beta_0) [row of beta_tilde into Q0] = (psi, Mxi_hat) o G and
    (eta - beta_n) [row into Qn] = (-Mpsi_hat, -xi) o G.
    """
    m = assemble_monad(b, x)
    n = b.topo.n
    d0, dnn = b.dims.d[0], b.dims.d[n]
    mxi_hat, mpsi_hat = aggregate_maps(b)
    a0 = m.block_index.A["R0"][0]
    G = m.alpha[m.block_index.B["R"][0] :, a0 : a0 + 2 * d0 + 2 * dnn]
    row0 = m.beta_tilde[
        m.block_index.C["Q0"][0] : m.block_index.C["Q0"][0] + d0,
        a0 : a0 + 2 * d0 + 2 * dnn,
    ]
    rown = m.beta_tilde[
        m.block_index.C[f"Q{n}"][0] : m.block_index.C[f"Q{n}"][0] + dnn,
        a0 : a0 + 2 * d0 + 2 * dnn,
    ]
    lhs0 = (x.eta * np.eye(d0) - b.beta[0]) @ row0
    rhs0 = np.hstack([x.psi * np.eye(d0), mxi_hat]) @ G
    lhsn = (x.eta * np.eye(dnn) - b.beta[n]) @ rown
    rhsn = np.hstack([-mpsi_hat, -x.xi * np.eye(dnn)]) @ G
    return la.rel_residual(lhs0, rhs0), la.rel_residual(lhsn, rhsn)


def fiber_at(b: BowDatum, x: SurfacePoint, tol: float = SURFACE_TOL) -> np.ndarray:
    """Orthonormal basis of the monad cohomology ker(Bmap)/Im(Amap) at x.

    Returns a (dimB + dimC) x r matrix; r = dim ker(Bmap) - rank(Amap).
    At locally free points r equals the structure-group rank n.  Raises
    RankIndeterminate when a singular value sits too close to the rank
    threshold to call.
    """
    m = assemble_monad(b, x, tol)
    kernel = la.null_space(m.Bmap, raise_indeterminate=True)
    if kernel.shape[1] == 0:
        return kernel
    image_in_kernel = kernel.conj().T @ m.Amap
    rank_a = la.svd_rank(m.Amap, raise_indeterminate=True)
    span = la.orth(image_in_kernel)
    if span.shape[1] != rank_a:
        raise RankIndeterminate(
            f"image of Amap not contained in ker(Bmap): rank {rank_a} vs "
            f"projected rank {span.shape[1]}"
        )
    return kernel @ la.complement_in(span, kernel.shape[1])


@dataclass(frozen=True)
class LocalFreenessResult:
    passed: bool
    witness: np.ndarray | None = None
    quotient_dim: int = 0


def is_locally_free_at(
    b: BowDatum, x: SurfacePoint, tol: float = SURFACE_TOL
) -> LocalFreenessResult:
    """Pointwise local-freeness criterion.

    Computes ker(alpha) at x, quotients by the column span of mu, and tests
    injectivity of beta_tilde on the quotient; a failure returns a witness
    vector in ker(alpha) \\ Im(mu) annihilated by beta_tilde.
    """
    m = assemble_monad(b, x, tol)
    kernel = la.null_space(m.alpha, raise_indeterminate=True)
    if kernel.shape[1] == 0:
        return LocalFreenessResult(passed=True)
    mu_in_kernel = la.orth(kernel.conj().T @ m.mu)
    reps = kernel @ la.complement_in(mu_in_kernel, kernel.shape[1])
    q = reps.shape[1]
    if q == 0:
        return LocalFreenessResult(passed=True)
    mapped = m.beta_tilde @ reps
    u, s, vh = np.linalg.svd(mapped)
    scale = max(float(s[0]) if s.size else 0.0, float(np.linalg.norm(m.beta_tilde, 2)))
    cut = la.rank_cutoff(scale, mapped.shape)
    straddling = (s > cut / la.STRADDLE_FACTOR) & (s < cut * la.STRADDLE_FACTOR)
    if np.any(straddling):
        raise RankIndeterminate(
            f"beta_tilde rank decision straddles cutoff at {x}: {s[straddling]}"
        )
    rank = int(np.count_nonzero(s > cut))
    if rank == q:
        return LocalFreenessResult(passed=True, quotient_dim=q)
    witness = reps @ vh.conj().T[:, -1]
    return LocalFreenessResult(passed=False, witness=witness, quotient_dim=q)


@dataclass(frozen=True)
class ScanConfig:
    n_random: int = 50
    include_structured: bool = True
    seed: int = 0


@dataclass(frozen=True)
class PointReport:
    point: SurfacePoint
    kind: str  # "random" | "structured"
    fiber_rank: int | None
    locally_free: bool | None
    status: str  # "ok" | "fail" | "indeterminate"


@dataclass(frozen=True)
class ScanReport:
    points: tuple[PointReport, ...]
    expected_rank: int

    @property
    def indeterminate(self) -> tuple[PointReport, ...]:
        return tuple(p for p in self.points if p.status == "indeterminate")

    @property
    def failures(self) -> tuple[PointReport, ...]:
        return tuple(p for p in self.points if p.status == "fail")

    @property
    def all_pass(self) -> bool:
        return all(p.status == "ok" for p in self.points)

    @property
    def ranks_all_expected(self) -> bool:
        return all(
            p.fiber_rank == self.expected_rank
            for p in self.points
            if p.status != "indeterminate"
        )


def structured_points(b: BowDatum) -> list[SurfacePoint]:
    """Stress points over every chain eigenvalue.

    For each eigenvalue eta*: (xi, psi) = (1, p(eta*)) and (10, p(eta*)/10);
    over NUT fibers (eta* at some z_i, where the fiber breaks into two
    lines) also the xi = 0 branch and the node (0, 0).
    """
    z = b.topo.z
    pts: list[SurfacePoint] = []
    for eta in la.cluster_eigenvalues(b.spectra()):
        near_nut = min((abs(eta - zi) for zi in z), default=np.inf)
        if near_nut < 1e-8:
            eta = min(z, key=lambda zi: abs(eta - zi))
            pts.append(SurfacePoint(0.0, 1.0, eta))
            pts.append(SurfacePoint(0.0, 0.0, eta))
        pts.append(SurfacePoint.from_xi_eta(z, 1.0, eta))
        pts.append(SurfacePoint.from_xi_eta(z, 10.0, eta))
    return pts


def random_points(b: BowDatum, n_random: int, seed: int) -> list[SurfacePoint]:
    """Sample points with eta uniform in the doubled spectral disk and xi
    log-uniform in [0.1, 10]; a tube of radius 1e-4 around the chain
    eigenvalues is avoided to keep random and structured diagnostics apart."""
    rng = np.random.default_rng(seed)
    spectrum = b.spectra() + list(b.topo.z)
    center = complex(np.mean(spectrum)) if spectrum else 0.0 + 0.0j
    radius = 2.0 * max((abs(v - center) for v in spectrum), default=0.5)
    radius = max(radius, 0.5)
    pts: list[SurfacePoint] = []
    while len(pts) < n_random:
        rho = radius * np.sqrt(rng.uniform())
        theta = rng.uniform(0, 2 * np.pi)
        eta = center + rho * np.exp(1j * theta)
        if any(abs(eta - v) < 1e-4 for v in spectrum):
            continue
        xi = 10.0 ** rng.uniform(-1.0, 1.0)
        pts.append(SurfacePoint.from_xi_eta(b.topo.z, xi, eta))
    return pts


def scan_local_freeness(
    b: BowDatum, config: ScanConfig = ScanConfig(), tol: float = SURFACE_TOL
) -> ScanReport:
    """Evaluate fiber rank and the local-freeness criterion over a sample.

    Indeterminate rank decisions are collected separately, never coerced
    into pass or fail.
    """
    batches = [(pt, "random") for pt in random_points(b, config.n_random, config.seed)]
    if config.include_structured:
        batches += [(pt, "structured") for pt in structured_points(b)]
    reports: list[PointReport] = []
    for pt, kind in batches:
        try:
            basis = fiber_at(b, pt, tol)
            free = is_locally_free_at(b, pt, tol)
            status = "ok" if free.passed else "fail"
            reports.append(
                PointReport(pt, kind, basis.shape[1], free.passed, status)
            )
        except RankIndeterminate:
            reports.append(PointReport(pt, kind, None, None, "indeterminate"))
    return ScanReport(points=tuple(reports), expected_rank=b.topo.n)
