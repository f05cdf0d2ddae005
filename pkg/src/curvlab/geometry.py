"""Per-point differential geometry of an immersion, computed through jets.

From order-4 jets of the ambient components this module produces the induced
metric, Christoffel symbols, orthonormal tangent/normal frames, the second
fundamental form h_{a,ij} and its covariant derivative h_{a,ijk}, mean
curvature, Gauss-map rank, the canonical rank-2 frame (mu1, mu2), the
alignment function of the tangent plane against a fixed reference plane
(with its gradient and Laplace-Beltrami identities), a complex pack for
surfaces in isothermal coordinates, and intrinsic/extrinsic Gauss curvature.

Conventions
-----------
* Latin indices i,j,k run over tangent directions, Greek (written a/alpha
  in code) over normal directions.
* `h[a, i, j]` is the second fundamental form against orthonormal frames:
  h_{a,ij} = <B(e_i, e_j), nu_a>.
* `h3[a, i, j, k]` = <(grad_{e_k} B)(e_i, e_j), nu_a>; by the Codazzi
  equations it is symmetric in all three tangent slots (tested, not
  assumed).
* Anything that is later differentiated is computed by smooth frame-free
  formulas (projectors, determinants); Gram-Schmidt frames are used only
  for point values, where smoothness is not needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expressions import ExpressionDomainError
from .immersions import Immersion, evaluate_immersion
from .jets import Jet, JetDomainError, jet_constant, jet_elementary

RANK_TOL = 1e-8

SCALAR_FIELDS = ("volume", "alignment", "log-alignment", "normB2", "normB")


class GeometryError(RuntimeError):
    """Base class for geometric pipeline failures."""


class ImmersionRankError(GeometryError):
    """The differential of F fails to have full rank at the point."""


class GaussRankError(GeometryError):
    """An operation assuming Gauss-map rank <= 2 met a higher rank."""


# -- small jet linear algebra -------------------------------------------------

def _jet_dot(u, v):
    acc = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        acc = acc + a * b
    return acc


def _jet_det(mat):
    n = len(mat)
    if n == 1:
        return mat[0][0]
    if n == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    if n == 3:
        return (
            mat[0][0] * (mat[1][1] * mat[2][2] - mat[1][2] * mat[2][1])
            - mat[0][1] * (mat[1][0] * mat[2][2] - mat[1][2] * mat[2][0])
            + mat[0][2] * (mat[1][0] * mat[2][1] - mat[1][1] * mat[2][0])
        )
    raise ValueError("jet determinants implemented for n <= 3")


def _jet_inverse(mat, det):
    n = len(mat)
    inv_det = jet_elementary("recip", det)
    if n == 2:
        adj = [[mat[1][1], -mat[0][1]], [-mat[1][0], mat[0][0]]]
    elif n == 3:
        def cof(r, c):
            rows = [i for i in range(3) if i != r]
            cols = [j for j in range(3) if j != c]
            minor = (
                mat[rows[0]][cols[0]] * mat[rows[1]][cols[1]]
                - mat[rows[0]][cols[1]] * mat[rows[1]][cols[0]]
            )
            return minor if (r + c) % 2 == 0 else -minor

        adj = [[cof(c, r) for c in range(3)] for r in range(3)]
    else:
        raise ValueError("jet inverses implemented for n <= 3")
    return [[adj[r][c] * inv_det for c in range(n)] for r in range(n)]


def _unit_coefficient(jet: Jet, axis: int) -> float:
    """Value of d_axis f, read off the degree-1 coefficient."""
    return jet.coefficient(tuple(1 if a == axis else 0 for a in range(jet.dim)))


# -- point geometry -------------------------------------------------------------

@dataclass
class PointGeometry:
    """Full geometric state of an immersion at one parameter point."""

    point: tuple[float, ...]
    n: int
    m: int
    g: list  # n x n nested list of order-2 jets
    g0: np.ndarray  # (n, n) metric values
    g_inv: np.ndarray  # (n, n)
    christoffel: np.ndarray  # (n, n, n): christoffel[l, k, i] = Gamma^l_{ki}
    dF: np.ndarray  # (n, n+m) Jacobian values
    tangent_frame: np.ndarray  # (n, n+m) orthonormal e_i
    frame_coeffs: np.ndarray  # (n, n) T with e = T @ dF
    normal_frame: np.ndarray  # (m, n+m) orthonormal nu_a
    second_partials: np.ndarray  # (n, n, n+m) values of d_i d_j F
    B_coord: np.ndarray  # (n, n, n+m) normal projections of d_i d_j F
    nablaB_coord: np.ndarray  # (n, n, n, n+m): [k, i, j] = (grad_{d_k} B)(d_i, d_j)
    h: np.ndarray  # (m, n, n)
    h3: np.ndarray  # (m, n, n, n)
    mean_curvature: np.ndarray  # (n+m,)
    normB2: float
    nablaB2: float
    # jet-valued fields reused by scalar_field_jet and the packs
    dF_jets: list  # [i][A] order-2 jets of d_i F
    detg_jet: Jet
    ginv_jets: list
    B_jets: list  # [i][j][A] order-2 jets of the normal-projected Hessian
    normB2_jet: Jet


def point_geometry_at(imm: Immersion, point) -> PointGeometry:
    """Evaluate the full per-point geometric bundle at `point`.

    Raises ImmersionRankError when det g degenerates, and propagates
    expression/jet domain errors from component evaluation.
    """
    n, m, N = imm.n, imm.m, imm.n + imm.m
    comps = evaluate_immersion(imm, point, 4)

    # first partials as order-2 jets (order-3 tails are never consumed)
    dF_jets = [[comps[A].derivative(i).truncate(2) for A in range(N)] for i in range(n)]
    dF = np.array([[j.value for j in row] for row in dF_jets])

    g_jets = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            entry = _jet_dot(dF_jets[i], dF_jets[j])
            g_jets[i][j] = entry
            g_jets[j][i] = entry
    g0 = np.array([[g_jets[i][j].value for j in range(n)] for i in range(n)])

    detg_jet = _jet_det(g_jets)
    detg = detg_jet.value
    scale = float(np.prod(np.diag(g0))) or 1.0
    if not detg > 1e-13 * scale:
        raise ImmersionRankError(
            f"Jacobian rank-deficient at {tuple(point)}: det g = {detg:.3e}"
        )
    try:
        L = np.linalg.cholesky(g0)
    except np.linalg.LinAlgError as exc:
        raise ImmersionRankError(f"metric not positive definite at {tuple(point)}") from exc

    # oriented Gram-Schmidt: T = L^-1 is lower triangular with positive diagonal
    T = np.linalg.solve(L, np.eye(n))
    e = T @ dF
    ginv_jets = _jet_inverse(g_jets, detg_jet)
    g_inv = np.array([[ginv_jets[i][j].value for j in range(n)] for i in range(n)])

    # normal frame: ambient basis projected to the normal space, pivoted
    # Gram-Schmidt with first-maximum tie-break for reproducibility
    PT0 = dF.T @ g_inv @ dF
    candidates = np.eye(N) - PT0
    nu_rows = []
    for _ in range(m):
        norms = np.linalg.norm(candidates, axis=0)
        pick = int(np.argmax(norms))
        if norms[pick] <= 1e-10:
            raise ImmersionRankError(f"normal space degenerate at {tuple(point)}")
        vec = candidates[:, pick] / norms[pick]
        nu_rows.append(vec)
        candidates -= np.outer(vec, vec @ candidates)
    nu = np.array(nu_rows)

    # Christoffels from the degree-1 metric coefficients:
    # Gamma^l_{ki} = g^{lr} (d_k g_{ir} + d_i g_{kr} - d_r g_{ki}) / 2
    dg = np.array(
        [[[_unit_coefficient(g_jets[i][j], k) for j in range(n)] for i in range(n)]
         for k in range(n)]
    )  # dg[k, i, j] = d_k g_ij
    term = dg + dg.transpose(1, 0, 2) - dg.transpose(2, 1, 0)
    christoffel = 0.5 * np.einsum("lr,kir->lki", g_inv, term)

    # normal projector as jets: P^N = I - dF^T g^{-1} dF
    Q = [[_jet_dot([ginv_jets[i][j] for j in range(n)],
                   [dF_jets[j][B] for j in range(n)]) for B in range(N)]
         for i in range(n)]
    PT_jets = [[_jet_dot([dF_jets[i][A] for i in range(n)],
                         [Q[i][B] for i in range(n)]) for B in range(N)]
               for A in range(N)]

    F2_jets = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            entry = [comps[A].derivative(i).derivative(j) for A in range(N)]
            F2_jets[i][j] = entry
            F2_jets[j][i] = entry
    second_partials = np.array(
        [[[jet.value for jet in F2_jets[i][j]] for j in range(n)] for i in range(n)]
    )

    B_jets = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            row = []
            for A in range(N):
                proj = _jet_dot(PT_jets[A], F2_jets[i][j])
                row.append(F2_jets[i][j][A] - proj)
            B_jets[i][j] = row
            B_jets[j][i] = row
    B_coord = np.array([[[jet.value for jet in B_jets[i][j]] for j in range(n)] for i in range(n)])

    # |B|^2 as an order-2 jet: g^{ik} g^{jl} <B_ij, B_kl>
    pair_ids = [(i, j) for i in range(n) for j in range(i, n)]
    S = {}
    for idx, (i, j) in enumerate(pair_ids):
        for (k, l) in pair_ids[idx:]:
            s = _jet_dot(B_jets[i][j], B_jets[k][l])
            S[(i, j, k, l)] = s
            S[(k, l, i, j)] = s

    def inner(i, j, k, l):
        return S[(min(i, j), max(i, j), min(k, l), max(k, l))]

    normB2_jet = jet_constant(0.0, n, 2)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    normB2_jet = normB2_jet + ginv_jets[i][k] * (
                        ginv_jets[j][l] * inner(i, j, k, l)
                    )

    # covariant derivative of B in coordinates:
    # (grad_k B)_ij = P^N(d_k of the B_ij field) - Gamma^l_{ki} B_lj - Gamma^l_{kj} B_il
    PN0 = np.eye(N) - PT0
    dB = np.array(
        [[[[_unit_coefficient(jet, k) for jet in B_jets[i][j]] for j in range(n)]
          for i in range(n)] for k in range(n)]
    )  # dB[k, i, j, A]
    nablaB_coord = np.einsum("AB,kijB->kijA", PN0, dB)
    nablaB_coord -= np.einsum("lki,ljA->kijA", christoffel, B_coord)
    nablaB_coord -= np.einsum("lkj,ilA->kijA", christoffel, B_coord)

    h = np.einsum("ik,jl,klA,aA->aij", T, T, B_coord, nu)
    h3 = np.einsum("kc,ia,jb,cabA,mA->mijk", T, T, T, nablaB_coord, nu)
    mean_curvature = np.einsum("ij,ijA->A", g_inv, B_coord)

    return PointGeometry(
        point=tuple(float(p) for p in point),
        n=n,
        m=m,
        g=g_jets,
        g0=g0,
        g_inv=g_inv,
        christoffel=christoffel,
        dF=dF,
        tangent_frame=e,
        frame_coeffs=T,
        normal_frame=nu,
        second_partials=second_partials,
        B_coord=B_coord,
        nablaB_coord=nablaB_coord,
        h=h,
        h3=h3,
        mean_curvature=mean_curvature,
        normB2=float(np.sum(h * h)),
        nablaB2=float(np.sum(h3 * h3)),
        dF_jets=dF_jets,
        detg_jet=detg_jet,
        ginv_jets=ginv_jets,
        B_jets=B_jets,
        normB2_jet=normB2_jet,
    )


# -- Gauss-map rank and the canonical frame -------------------------------------

def _gauss_matrix(pg: PointGeometry) -> np.ndarray:
    # row i of the Gauss-map differential in the orthonormal bases: (j, a) -> h_{a,ij}
    return np.transpose(pg.h, (1, 2, 0)).reshape(pg.n, pg.n * pg.m)


def gauss_rank_at(pg: PointGeometry, tol: float = RANK_TOL):
    """Numerical rank of the Gauss-map differential and its singular values."""
    sv = np.linalg.svd(_gauss_matrix(pg), compute_uv=False)
    base = sv[0] if sv[0] > 0 else 1.0
    rank = int(np.sum(sv > tol * base))
    return rank, sv


@dataclass
class CanonicalFrame:
    """Rank-2 normal form of the shape operators.

    In the rotated frames the only nonzero shape operators restrict to the
    2-plane orthogonal to the kernel as A^1 = diag(mu1, -mu1) and
    A^2 = antidiag(mu2, mu2), mu1 >= mu2 >= 0.
    """

    kernel_basis: np.ndarray  # (n-2, n+m) ambient kernel directions
    e1: np.ndarray
    e2: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray | None
    mu1: float
    mu2: float
    theta: float
    shape1: np.ndarray  # 2x2 block of A^1
    shape2: np.ndarray | None  # 2x2 block of A^2 (None when m == 1)
    residual: float
    tangent_frame: np.ndarray  # (n, n+m): e1, e2, kernel...
    normal_frame: np.ndarray  # (m, n+m): nu1, nu2, completion...


def canonical_frame_at(pg: PointGeometry, tol: float = RANK_TOL) -> CanonicalFrame:
    """Rotate frames so the shape operators take their rank-2 normal form.

    Requires Gauss-map rank <= 2; raises GaussRankError otherwise (the
    hypothesis is reported, never silently clamped).
    """
    n, m, N = pg.n, pg.m, pg.n + pg.m
    rank, sv = gauss_rank_at(pg, tol)
    if rank > 2:
        raise GaussRankError(
            f"Gauss-map rank {rank} > 2 at {pg.point} (singular values {sv})"
        )

    if n == 2:
        U = np.eye(2)
    else:
        U, _, _ = np.linalg.svd(_gauss_matrix(pg))

    # frame-valued second fundamental form
    Bf = np.einsum("ik,jl,klA->ijA", pg.frame_coeffs, pg.frame_coeffs, pg.B_coord)
    Bhat = np.einsum("ia,jb,abA->ijA", U.T, U.T, Bf)

    B11, B12 = Bhat[0, 0], Bhat[0, 1]
    G = np.array(
        [[B11 @ B11, B11 @ B12],
         [B12 @ B11, B12 @ B12]]
    )

    # rotation angle in (-pi/4, pi/4]; order of mu1, mu2 fixed by post-swap
    if abs(G[0, 0] - G[1, 1]) <= 1e-300 and abs(G[0, 1]) <= 1e-300:
        theta = 0.0
    elif abs(G[0, 0] - G[1, 1]) < abs(G[0, 1]) * 1e-14:
        theta = math.pi / 4
    else:
        theta = 0.5 * math.atan(2.0 * G[0, 1] / (G[0, 0] - G[1, 1]))

    def rotated(alpha):
        c, s = math.cos(alpha), math.sin(alpha)
        f1 = c * U.T[0] - s * U.T[1]  # coefficients in the e-frame
        f2 = s * U.T[0] + c * U.T[1]
        return f1, f2

    alpha = -theta / 2.0
    f1c, f2c = rotated(alpha)

    def block(f1c, f2c):
        b11 = np.einsum("i,j,ijA->A", f1c, f1c, Bf)
        b12 = np.einsum("i,j,ijA->A", f1c, f2c, Bf)
        return b11, b12

    b11, b12 = block(f1c, f2c)
    if b11 @ b11 < b12 @ b12:
        alpha += math.pi / 4.0  # swap so that mu1 >= mu2
        f1c, f2c = rotated(alpha)
        b11, b12 = block(f1c, f2c)

    mu1 = math.sqrt(max(b11 @ b11, 0.0))
    mu2 = math.sqrt(max(b12 @ b12, 0.0))

    e1 = f1c @ pg.tangent_frame
    e2 = f2c @ pg.tangent_frame
    kernel = U.T[2:] @ pg.tangent_frame if n > 2 else np.zeros((0, N))
    tangent_frame = np.vstack([e1[None, :], e2[None, :], kernel])

    # normal rotation: align nu1 with B(e1,e1), nu2 with B(e1,e2); complete by
    # pivoted Gram-Schmidt over the original normal frame
    frame_rows = []
    if mu1 > tol:
        frame_rows.append(b11 / mu1)
        if mu2 > tol:
            frame_rows.append(b12 / mu2)
    remaining = np.array(pg.normal_frame)
    for vec in frame_rows:
        remaining = remaining - np.outer(remaining @ vec, vec)
    while len(frame_rows) < m:
        norms = np.linalg.norm(remaining, axis=1)
        pick = int(np.argmax(norms))
        vec = remaining[pick] / norms[pick]
        frame_rows.append(vec)
        remaining = remaining - np.outer(remaining @ vec, vec)
    normal_frame = np.array(frame_rows)

    # residual of the normal form, over the full n x n blocks: express the
    # canonical tangent rows in the coordinate basis (e = T dF) and contract
    in_e = np.vstack([f1c[None, :], f2c[None, :], U.T[2:]])
    coeffs = in_e @ pg.frame_coeffs
    B_can = np.einsum("ik,jl,klA->ijA", coeffs, coeffs, pg.B_coord)
    h_can = np.einsum("aA,ijA->aij", normal_frame, B_can)

    target = np.zeros_like(h_can)
    target[0, 0, 0] = mu1
    target[0, 1, 1] = -mu1
    if m >= 2:
        target[1, 0, 1] = mu2
        target[1, 1, 0] = mu2
    residual = float(np.max(np.abs(h_can - target)))

    return CanonicalFrame(
        kernel_basis=kernel,
        e1=e1,
        e2=e2,
        nu1=normal_frame[0],
        nu2=normal_frame[1] if m >= 2 else None,
        mu1=mu1,
        mu2=mu2,
        theta=theta,
        shape1=h_can[0, :2, :2].copy(),
        shape2=h_can[1, :2, :2].copy() if m >= 2 else None,
        residual=residual,
        tangent_frame=tangent_frame,
        normal_frame=normal_frame,
    )


# -- scalar fields and the Laplace-Beltrami operator ----------------------------

def _alignment_jet(pg: PointGeometry, reference_frame: np.ndarray) -> Jet:
    """Jet of the frame-free alignment det(<d_j F, a_k>) / sqrt(det g).

    This differentiable route avoids Gram-Schmidt, whose pivoting is not
    smooth; it agrees with det(<e_i, a_k>) for the oriented frame.
    """
    n = pg.n
    a = np.asarray(reference_frame, dtype=float)
    M = [[sum((pg.dF_jets[j][A] * a[k][A] for A in range(pg.n + pg.m)),
              jet_constant(0.0, n, 2)) for k in range(n)] for j in range(n)]
    det = _jet_det(M)
    return det * jet_elementary("pow-const", pg.detg_jet, param=-0.5)


def scalar_field_jet(
    imm: Immersion,
    point,
    field: str,
    order: int = 2,
    reference_frame=None,
    pg: PointGeometry | None = None,
) -> Jet:
    """Order-<=2 jet of a derived scalar field of the immersion.

    Fields: 'volume' (sqrt det g), 'alignment' (needs reference_frame),
    'log-alignment', 'normB2', 'normB'.  The whole geometric pipeline is
    re-run in jet arithmetic, so the returned jet carries exact first and
    second derivatives of the field.
    """
    if field not in SCALAR_FIELDS:
        raise ValueError(f"unknown scalar field {field!r} (known: {SCALAR_FIELDS})")
    if order > 2:
        raise ValueError("scalar fields are available to order 2")
    if pg is None:
        pg = point_geometry_at(imm, point)
    if field == "volume":
        jet = jet_elementary("sqrt", pg.detg_jet)
    elif field == "normB2":
        jet = pg.normB2_jet
    elif field == "normB":
        if pg.normB2_jet.value <= 0.0:
            raise JetDomainError("|B| is singular at a zero of the second fundamental form")
        jet = jet_elementary("sqrt", pg.normB2_jet)
    else:
        if reference_frame is None:
            raise ValueError(f"field {field!r} requires a reference frame")
        jet = _alignment_jet(pg, reference_frame)
        if field == "log-alignment":
            jet = jet_elementary("log", jet)
    return jet.truncate(order) if order < 2 else jet


def laplace_beltrami_of_jet(pg: PointGeometry, field_jet: Jet) -> float:
    """Lap phi = g^{ij} (d_i d_j phi - Gamma^k_{ij} d_k phi) from an order-2 jet."""
    n = pg.n
    grad = np.array([_unit_coefficient(field_jet, k) for k in range(n)])
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            c = field_jet.coefficient(tuple(alpha))
            hess[i, j] = c * (2.0 if i == j else 1.0)
    corrected = hess - np.einsum("kij,k->ij", pg.christoffel, grad)
    return float(np.einsum("ij,ij->", pg.g_inv, corrected))


def gradient_norm2_of_jet(pg: PointGeometry, field_jet: Jet) -> float:
    """|grad phi|^2 = g^{ij} d_i phi d_j phi."""
    grad = np.array([_unit_coefficient(field_jet, k) for k in range(pg.n)])
    return float(grad @ pg.g_inv @ grad)


def laplace_beltrami(
    imm: Immersion,
    point,
    field: str,
    reference_frame=None,
    pg: PointGeometry | None = None,
) -> float:
    """Laplace-Beltrami of a derived scalar field at a point."""
    if pg is None:
        pg = point_geometry_at(imm, point)
    jet = scalar_field_jet(imm, point, field, 2, reference_frame, pg)
    return laplace_beltrami_of_jet(pg, jet)


# -- plane pairings and the alignment pack ---------------------------------------

def frame_pairing(rows: np.ndarray, reference: np.ndarray) -> float:
    """<b_1 ^ ... ^ b_n, a_1 ^ ... ^ a_n> = det(<b_i, a_j>)."""
    return float(np.linalg.det(np.asarray(rows) @ np.asarray(reference).T))


def replaced_pairing(e_rows: np.ndarray, reference: np.ndarray, replacements: dict) -> float:
    """Pairing after substituting normal vectors into tangent slots.

    `replacements` maps slot index j to the vector standing in for e_j.
    """
    rows = np.array(e_rows, dtype=float)
    for slot, vec in replacements.items():
        rows[slot] = vec
    return frame_pairing(rows, reference)


@dataclass
class AlignmentPack:
    """Alignment of the tangent plane with a reference plane, both routes.

    The gradient identity grad_{e_i} a = h_{a,ij} <e_{j a}, A> and the rank-2
    Laplacian identity Lap a = -|B|^2 a + 4 mu1 mu2 <e_{11,22}, A> are each
    evaluated against exact jet differentiation of the alignment scalar.
    """

    reference_frame: np.ndarray
    value: float
    value_from_frames: float
    grad_frame: np.ndarray  # grad_{e_i} a by jet differentiation
    grad_formula: np.ndarray
    laplacian_numeric: float
    laplacian_formula: float | None
    single_pairings: np.ndarray  # (n, m): <e_{j a}, A>
    double_pairings: np.ndarray  # (n, m, n, m): <e_{j a, k b}, A>
    formula_applicable: bool
    reason: str | None


def alignment_pack_at(
    imm: Immersion,
    point,
    reference_frame,
    pg: PointGeometry | None = None,
    canon: CanonicalFrame | None = None,
    minimality_tol: float = 1e-8,
) -> AlignmentPack:
    """Evaluate the alignment function and its structural identities."""
    if pg is None:
        pg = point_geometry_at(imm, point)
    a = np.asarray(reference_frame, dtype=float)
    n, m = pg.n, pg.m
    e, nu = pg.tangent_frame, pg.normal_frame

    jet = _alignment_jet(pg, a)
    value = jet.value
    value_from_frames = frame_pairing(e, a)

    grad_coord = np.array([_unit_coefficient(jet, k) for k in range(n)])
    grad_frame = pg.frame_coeffs @ grad_coord

    single = np.empty((n, m))
    for j in range(n):
        for al in range(m):
            single[j, al] = replaced_pairing(e, a, {j: nu[al]})
    double = np.zeros((n, m, n, m))
    for j in range(n):
        for k in range(n):
            if j == k:
                continue
            for al in range(m):
                for be in range(m):
                    double[j, al, k, be] = replaced_pairing(
                        e, a, {j: nu[al], k: nu[be]}
                    )

    grad_formula = np.einsum("aij,ja->i", pg.h, single)

    lap_numeric = laplace_beltrami_of_jet(pg, jet)

    lap_formula = None
    applicable = True
    reason = None
    if float(np.linalg.norm(pg.mean_curvature)) > minimality_tol:
        applicable, reason = False, "mean curvature does not vanish"
    else:
        try:
            if canon is None:
                canon = canonical_frame_at(pg)
        except GaussRankError as exc:
            applicable, reason = False, str(exc)
    if applicable:
        if m == 1:
            pair_canon = 0.0  # mu2 = 0 in codimension one; the term drops
        else:
            rows = np.vstack([canon.normal_frame[:2], canon.tangent_frame[2:]])
            pair_canon = frame_pairing(rows, a)
        lap_formula = -pg.normB2 * value + 4.0 * canon.mu1 * canon.mu2 * pair_canon

    return AlignmentPack(
        reference_frame=a,
        value=value,
        value_from_frames=value_from_frames,
        grad_frame=grad_frame,
        grad_formula=grad_formula,
        laplacian_numeric=lap_numeric,
        laplacian_formula=lap_formula,
        single_pairings=single,
        double_pairings=double,
        formula_applicable=applicable,
        reason=reason,
    )


# -- complex pack for surfaces ----------------------------------------------------

@dataclass
class ComplexPack:
    """Complex derivatives of a surface immersion in its given chart.

    Uses d/dw = (d/du - i d/dv)/2.  Meaningful when the chart is isothermal,
    i.e. conformality_residual is small; `isothermal` records that flag.
    """

    Fw: np.ndarray  # complex (n+m,)
    Fww: np.ndarray
    conformality_residual: float
    isothermal: bool
    omega_coeff: complex  # <F_ww, F_ww> complex-bilinear
    B_ww: np.ndarray
    nablaB_www: np.ndarray
    zeta: complex | None
    zeta_residual: float | None
    xi1: float | None
    xi2: float | None


def complex_pack_at(
    imm: Immersion, point, pg: PointGeometry | None = None, tol: float = 1e-8
) -> ComplexPack:
    """Complex second-order data of a surface: conformality, omega, zeta."""
    if imm.n != 2:
        raise GeometryError("complex pack requires a 2-dimensional domain")
    if pg is None:
        pg = point_geometry_at(imm, point)

    Fu, Fv = pg.dF[0], pg.dF[1]
    Fuu, Fuv, Fvv = pg.second_partials[0, 0], pg.second_partials[0, 1], pg.second_partials[1, 1]
    Fw = 0.5 * (Fu - 1j * Fv)
    Fww = 0.25 * (Fuu - Fvv) - 0.5j * Fuv

    conf = complex(np.sum(Fw * Fw))
    scale = float(np.sum(np.abs(Fw) ** 2))
    isothermal = abs(conf) <= tol * (scale + tol)

    omega = complex(np.sum(Fww * Fww))

    B_ww = 0.5 * pg.B_coord[0, 0] - 0.5j * pg.B_coord[0, 1]
    nablaB_www = 0.5 * pg.nablaB_coord[0, 0, 0] - 0.5j * pg.nablaB_coord[1, 0, 0]

    denom = float(np.sum(np.abs(B_ww) ** 2))
    if denom > tol * tol:
        zeta = complex(np.sum(nablaB_www * np.conj(B_ww))) / denom
        zres = float(np.linalg.norm(nablaB_www - zeta * B_ww))
        xi1, xi2 = zeta.real, -zeta.imag
    else:
        zeta, zres, xi1, xi2 = None, None, None, None

    return ComplexPack(
        Fw=Fw,
        Fww=Fww,
        conformality_residual=abs(conf),
        isothermal=isothermal,
        omega_coeff=omega,
        B_ww=B_ww,
        nablaB_www=nablaB_www,
        zeta=zeta,
        zeta_residual=zres,
        xi1=xi1,
        xi2=xi2,
    )


# -- Gauss curvature ---------------------------------------------------------------

@dataclass
class CurvaturePack:
    K_intrinsic: float
    K_extrinsic: float
    conformal_factor: float | None


def curvature_pack_at(imm: Immersion, point, pg: PointGeometry | None = None) -> CurvaturePack:
    """Gauss curvature by two routes: Brioschi (metric only) and det B."""
    if imm.n != 2:
        raise GeometryError("curvature pack requires a 2-dimensional domain")
    if pg is None:
        pg = point_geometry_at(imm, point)

    Bf = np.einsum("ik,jl,klA->ijA", pg.frame_coeffs, pg.frame_coeffs, pg.B_coord)
    K_ext = float(Bf[0, 0] @ Bf[1, 1] - Bf[0, 1] @ Bf[0, 1])

    def d(jet, *axes):
        alpha = [0, 0]
        for ax in axes:
            alpha[ax] += 1
        fact = math.prod(math.factorial(c) for c in alpha)
        return jet.coefficient(tuple(alpha)) * fact

    E, F, G = pg.g[0][0], pg.g[0][1], pg.g[1][1]
    m1 = np.array(
        [
            [-0.5 * d(E, 1, 1) + d(F, 0, 1) - 0.5 * d(G, 0, 0), 0.5 * d(E, 0), d(F, 0) - 0.5 * d(E, 1)],
            [d(F, 1) - 0.5 * d(G, 0), E.value, F.value],
            [0.5 * d(G, 1), F.value, G.value],
        ]
    )
    m2 = np.array(
        [
            [0.0, 0.5 * d(E, 1), 0.5 * d(G, 0)],
            [0.5 * d(E, 1), E.value, F.value],
            [0.5 * d(G, 0), F.value, G.value],
        ]
    )
    denom = (E.value * G.value - F.value**2) ** 2
    K_int = float((np.linalg.det(m1) - np.linalg.det(m2)) / denom)

    lam = None
    if abs(E.value - G.value) <= 1e-8 * (abs(E.value) + 1) and abs(F.value) <= 1e-8 * (abs(E.value) + 1):
        lam = E.value

    return CurvaturePack(K_intrinsic=K_int, K_extrinsic=K_ext, conformal_factor=lam)
