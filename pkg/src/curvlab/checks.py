"""Identity, inequality and equality-characterization checks.

Every check evaluates a residual per grid point and aggregates a verdict:
pass iff the worst signed residual stays within tolerance (positive means
violation for inequalities), not-applicable when a documented hypothesis
fails everywhere (Gauss-map rank above 2, vanishing second fundamental
form, wrong immersion kind).

Grid checks share one :class:`PointContext` per point, so a scenario that
runs ten checks still evaluates the geometric pipeline once per point.
Growth tables and the estimate probes integrate over extrinsic balls with
a masked tensor-product midpoint rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .expressions import (
    BinOp,
    Const,
    ExpressionDomainError,
    Var,
    differentiate,
    evaluate_expression,
    substitute,
)
from .geometry import (
    GaussRankError,
    GeometryError,
    PointGeometry,
    alignment_pack_at,
    canonical_frame_at,
    complex_pack_at,
    curvature_pack_at,
    frame_pairing,
    gauss_rank_at,
    gradient_norm2_of_jet,
    laplace_beltrami_of_jet,
    point_geometry_at,
    replaced_pairing,
    scalar_field_jet,
)
from .immersions import GridSpec, Immersion
from .jets import JetDomainError, jet_elementary

RANK_TOL = 1e-8
EQUALITY_THRESHOLD = 1e-4  # looser than identity tolerances by design
IDENTITY_DEEP_TOL = 1e-4  # fourth-order two-route identities
MINIMALITY_TOL = 1e-8  # hypothesis probe, not the minimality check itself

DEFAULT_TOLERANCES = {
    "minimality": 1e-10,
    "minimal-system": 1e-9,
    "pluecker": 1e-12,
    "alignment-identities": 1e-6,
    "log-alignment": 1e-5,
    "simons": 1e-5,
    "kato": 1e-5,
    "refined-simons": 1e-8,
    "gauss-conformal": 1e-6,
    "jacobian": 1e-10,
    "isothermal": 1e-10,
    "subharmonicity": 1e-6,
    "growth": 1e-2,
    "probe": 1e-6,
}

GRID_CHECKS = (
    "minimality",
    "minimal-system",
    "pluecker",
    "alignment-identities",
    "log-alignment",
    "simons",
    "kato",
    "refined-simons",
    "gauss-conformal",
    "jacobian",
    "isothermal",
    "subharmonicity",
)
GLOBAL_CHECKS = ("growth", "probe")

CHECK_DESCRIPTIONS = {
    "minimality": "mean curvature vanishes on the grid",
    "minimal-system": "graph components solve the minimal-surface system (graphs, n=2)",
    "pluecker": "replacement-determinant identity of the plane pairings",
    "alignment-identities": "gradient and Laplacian identities of the alignment function",
    "log-alignment": "Lap log(alignment) <= -|B|^2, equality for 2d minimal graphs",
    "simons": "Bochner inequality for |B|^2, trace identity and curvature ratio bounds",
    "kato": "|grad B|^2 >= 2 |grad |B||^2 under rank <= 2, equality structure",
    "refined-simons": "combined inequality Lap|B|^2 >= 4|grad|B||^2 - 3|B|^4",
    "gauss-conformal": "agreement of the conformal-point criteria (mu, B_ww, omega)",
    "jacobian": "singular-value identities of the graph Jacobian (graphs, n=2)",
    "isothermal": "sheared coordinates (a,b) are isothermal (graphs, n=2)",
    "subharmonicity": "Lap(|B|^(2s) v^q) >= (q-3s) |B|^(2s+2) v^q pointwise",
    "growth": "extrinsic-ball volume and slope growth table (graphs)",
    "probe": "integral curvature-estimate probes with implied constants (graphs)",
}


class CheckConfigError(ValueError):
    """A check was configured outside its documented parameter domain."""


@dataclass
class CheckResult:
    """Aggregated verdict of one check over a grid."""

    name: str
    tolerance: float
    worst_residual: float | None
    verdict: str  # 'pass' | 'fail' | 'not-applicable'
    n_points: int
    n_skipped: int
    extras: dict = field(default_factory=dict)
    details: list = field(default_factory=list)
    reason: str | None = None


@dataclass
class SimonsReport:
    point: tuple
    lapB2: float
    nablaB2: float
    inner_term_numeric: float
    inner_term_formula: float | None
    ratio: float | None
    tilde_term: float
    under_term: float


@dataclass
class KatoReport:
    point: tuple
    nablaB2: float
    grad_normB2: float
    gap: float
    zeta: complex | None
    zeta_residual: float | None
    xi1: float | None
    xi2: float | None


class PointContext:
    """Lazy per-point cache shared by all grid checks."""

    def __init__(self, imm: Immersion, point, reference_frame):
        self.imm = imm
        self.point = tuple(float(p) for p in point)
        self.reference_frame = reference_frame

    @cached_property
    def pg(self) -> PointGeometry:
        return point_geometry_at(self.imm, self.point)

    @cached_property
    def rank(self):
        return gauss_rank_at(self.pg)

    @cached_property
    def canon(self):
        try:
            return canonical_frame_at(self.pg)
        except GaussRankError as exc:
            self.canon_error = str(exc)
            return None

    @cached_property
    def apack(self):
        if self.reference_frame is None:
            raise GeometryError("check requires a reference frame")
        return alignment_pack_at(
            self.imm, self.point, self.reference_frame, pg=self.pg, canon=self.canon
        )

    @cached_property
    def cpack(self):
        return complex_pack_at(self.imm, self.point, pg=self.pg)

    @cached_property
    def curvpack(self):
        return curvature_pack_at(self.imm, self.point, pg=self.pg)

    @cached_property
    def volume_jet(self):
        return scalar_field_jet(self.imm, self.point, "volume", pg=self.pg)

    @cached_property
    def lap_normB2(self):
        return laplace_beltrami_of_jet(self.pg, self.pg.normB2_jet)

    @cached_property
    def grad_normB_sq(self):
        # |grad |B||^2 = |grad |B|^2|^2 / (4 |B|^2); defined where |B| > 0
        return gradient_norm2_of_jet(self.pg, self.pg.normB2_jet) / (4.0 * self.pg.normB2)

    @cached_property
    def minimal(self) -> bool:
        return float(np.linalg.norm(self.pg.mean_curvature)) <= MINIMALITY_TOL


def _record(residual=None, skipped=False, reason=None, **detail):
    return {"residual": residual, "skipped": skipped, "reason": reason, "detail": detail}


def _skip(reason):
    return _record(skipped=True, reason=reason)


# -- individual check evaluators -------------------------------------------------
# Each check has a setup(imm, frame, options) -> state (validated once) and an
# eval(ctx, state) -> record.  States must be picklable for the parallel runner.

def _need_graph(imm, name):
    if imm.kind != "graph":
        raise CheckConfigError(f"check {name!r} requires a graph immersion")


def _need_surface(imm, name):
    if imm.n != 2:
        raise CheckConfigError(f"check {name!r} requires a 2-dimensional domain")


def _setup_minimality(imm, frame, options):
    return {}


def _eval_minimality(ctx, state):
    return _record(residual=float(np.linalg.norm(ctx.pg.mean_curvature)))


def _setup_minimal_system(imm, frame, options):
    _need_graph(imm, "minimal-system")
    _need_surface(imm, "minimal-system")
    return {}


def _eval_minimal_system(ctx, state):
    pg = ctx.pg
    n = pg.n
    fx = pg.dF[0, n:]
    fy = pg.dF[1, n:]
    fxx = pg.second_partials[0, 0, n:]
    fxy = pg.second_partials[0, 1, n:]
    fyy = pg.second_partials[1, 1, n:]
    vec = (1 + fy @ fy) * fxx - 2 * (fx @ fy) * fxy + (1 + fx @ fx) * fyy
    return _record(residual=float(np.linalg.norm(vec)))


def _setup_pluecker(imm, frame, options):
    if frame is None:
        raise CheckConfigError("check 'pluecker' requires a reference frame")
    return {}


def _eval_pluecker(ctx, state):
    pg = ctx.pg
    e, nu, a = pg.tangent_frame, pg.normal_frame, ctx.reference_frame
    nu1 = nu[0]
    nu2 = nu[1] if pg.m > 1 else nu[0]
    base = frame_pairing(e, a)
    both = replaced_pairing(e, a, {0: nu1, 1: nu2})
    r1 = replaced_pairing(e, a, {0: nu1})
    r2 = replaced_pairing(e, a, {1: nu2})
    r12 = replaced_pairing(e, a, {0: nu2})
    r21 = replaced_pairing(e, a, {1: nu1})
    return _record(residual=abs(base * both - r1 * r2 + r12 * r21))


def _setup_alignment_identities(imm, frame, options):
    if frame is None:
        raise CheckConfigError("check 'alignment-identities' requires a reference frame")
    return {}


def _eval_alignment_identities(ctx, state):
    ap = ctx.apack
    grad_scale = 1.0 + float(np.abs(ap.grad_frame).max())
    grad_res = float(np.abs(ap.grad_frame - ap.grad_formula).max()) / grad_scale
    detail = {"grad_residual": grad_res, "alignment": ap.value}
    if not ap.formula_applicable:
        # the gradient identity holds for any immersion; only the rank-2
        # Laplacian identity needs the hypotheses
        detail["laplacian_residual"] = None
        return _record(residual=grad_res, reason=ap.reason, **detail)
    lap_scale = 1.0 + abs(ap.laplacian_numeric)
    lap_res = abs(ap.laplacian_numeric - ap.laplacian_formula) / lap_scale
    detail["laplacian_residual"] = lap_res
    return _record(residual=max(grad_res, lap_res), **detail)


def _setup_log_alignment(imm, frame, options):
    if frame is None:
        raise CheckConfigError("check 'log-alignment' requires a reference frame")
    return {"equality": imm.kind == "graph" and imm.n == 2}


def _eval_log_alignment(ctx, state):
    if not ctx.minimal:
        return _skip("mean curvature does not vanish")
    ap = ctx.apack
    if ap.value <= 0.0:
        return _skip("alignment function not positive")
    jet = jet_elementary("log", scalar_field_jet(
        ctx.imm, ctx.point, "alignment", reference_frame=ctx.reference_frame, pg=ctx.pg
    ))
    lap = laplace_beltrami_of_jet(ctx.pg, jet)
    scale = 1.0 + ctx.pg.normB2
    signed = (lap + ctx.pg.normB2) / scale  # positive = inequality violated
    equality = abs(lap + ctx.pg.normB2) / scale
    residual = equality if state["equality"] else signed
    return _record(residual=residual, signed_violation=signed, equality_residual=equality)


def _shape_operator_terms(h):
    # tilde = sum_ab [tr(A^a A^b)]^2, under = -sum_ab tr([A^a, A^b]^2)
    traces = np.einsum("aij,bij->ab", h, h)
    tilde = float(np.sum(traces**2))
    under = 0.0
    m = h.shape[0]
    for a in range(m):
        for b in range(m):
            comm = h[a] @ h[b] - h[b] @ h[a]
            under -= float(np.trace(comm @ comm))
    return tilde, under


def _setup_simons(imm, frame, options):
    return {}


def _eval_simons(ctx, state):
    if not ctx.minimal:
        return _skip("mean curvature does not vanish")
    pg = ctx.pg
    lapB2 = ctx.lap_normB2
    nablaB2 = pg.nablaB2
    inner_numeric = 0.5 * (lapB2 - 2.0 * nablaB2)
    tilde, under = _shape_operator_terms(pg.h)
    scale = 1.0 + pg.normB2**2

    # (i) the inequality itself (valid in any codimension)
    violation = (2.0 * nablaB2 - 3.0 * pg.normB2**2 - lapB2) / scale
    # (ii) two independent routes to <grad^2 B, B>
    identity_res = abs(inner_numeric + tilde + under) / scale

    canon = ctx.canon
    inner_formula = None
    mu_residual = None
    if canon is not None:
        inner_formula = -(4 * canon.mu1**4 + 4 * canon.mu2**4 + 16 * canon.mu1**2 * canon.mu2**2)
        mu_residual = abs((tilde + under) + inner_formula) / scale

    ratio = None
    bound_violation = 0.0
    conformal = None
    coupling = 0.0
    if pg.normB2 > RANK_TOL:
        ratio = -inner_numeric / pg.normB2**2
        bound_violation = max(1.0 - ratio, ratio - 1.5)
        if canon is not None:
            conformal = abs(canon.mu1 - canon.mu2) <= EQUALITY_THRESHOLD * (
                canon.mu1 + canon.mu2 + EQUALITY_THRESHOLD
            )
            if conformal:
                coupling = abs(ratio - 1.5)  # ratio pinned at the equality case
    residual = max(violation, bound_violation, coupling)
    return _record(
        residual=residual,
        lapB2=lapB2,
        nablaB2=nablaB2,
        inner_numeric=inner_numeric,
        inner_formula=inner_formula,
        tilde_term=tilde,
        under_term=under,
        identity_residual=identity_res,
        mu_residual=mu_residual,
        ratio=ratio,
        conformal=conformal,
    )


def _aggregate_simons(records, tol):
    worst_identity = max(
        (r["detail"]["identity_residual"] for r in records if not r["skipped"]), default=0.0
    )
    mu_res = [
        r["detail"]["mu_residual"]
        for r in records
        if not r["skipped"] and r["detail"].get("mu_residual") is not None
    ]
    extras = {
        "worst_identity_residual": worst_identity,
        "identity_tolerance": IDENTITY_DEEP_TOL,
        "worst_mu_residual": max(mu_res, default=None),
        "conformal_points": sum(
            1 for r in records if not r["skipped"] and r["detail"].get("conformal")
        ),
    }
    ok = worst_identity <= IDENTITY_DEEP_TOL and (
        max(mu_res, default=0.0) <= IDENTITY_DEEP_TOL
    )
    return extras, ok


def _setup_kato(imm, frame, options):
    return {"zeta_tol": float(options.get("zeta_tol", 1e-6))}


def _eval_kato(ctx, state):
    if not ctx.minimal:
        return _skip("mean curvature does not vanish")
    pg = ctx.pg
    if ctx.canon is None:
        return _skip(getattr(ctx, "canon_error", "Gauss-map rank above 2"))
    if pg.normB2 <= RANK_TOL:
        return _skip("second fundamental form vanishes")
    grad_nb_sq = ctx.grad_normB_sq
    gap = pg.nablaB2 - 2.0 * grad_nb_sq
    violation = -gap
    detail = {"gap": gap, "nablaB2": pg.nablaB2, "grad_normB_sq": grad_nb_sq}
    equality = abs(gap) <= EQUALITY_THRESHOLD * (1.0 + pg.nablaB2)
    detail["equality"] = equality
    residual = violation
    if pg.n == 2:
        cp = ctx.cpack
        detail.update(zeta_re=None if cp.zeta is None else cp.zeta.real,
                      zeta_im=None if cp.zeta is None else cp.zeta.imag,
                      zeta_residual=cp.zeta_residual,
                      xi1=cp.xi1, xi2=cp.xi2)
        if equality and cp.zeta_residual is not None:
            # equality forces the cubic derivative to be proportional to B_ww
            residual = max(residual, cp.zeta_residual)
            detail["zeta_asserted"] = True
    return _record(residual=residual, **detail)


def _aggregate_kato(records, tol):
    live = [r for r in records if not r["skipped"]]
    eq = sum(1 for r in live if r["detail"].get("equality"))
    # recorded, not asserted: near-proportional points without gap equality
    converse = sum(
        1
        for r in live
        if not r["detail"].get("equality")
        and r["detail"].get("zeta_residual") is not None
        and r["detail"]["zeta_residual"] <= tol
    )
    zeta_at_eq = [
        r["detail"]["zeta_residual"]
        for r in live
        if r["detail"].get("zeta_asserted") and r["detail"].get("zeta_residual") is not None
    ]
    extras = {
        "equality_points": eq,
        "evaluated_points": len(live),
        "zeta_without_equality": converse,
        "worst_zeta_residual_at_equality": max(zeta_at_eq, default=None),
        "worst_gap": max((abs(r["detail"]["gap"]) for r in live), default=None),
    }
    return extras, True


def _setup_refined_simons(imm, frame, options):
    return {}


def _eval_refined_simons(ctx, state):
    if not ctx.minimal:
        return _skip("mean curvature does not vanish")
    pg = ctx.pg
    if pg.normB2 <= RANK_TOL:
        return _skip("second fundamental form vanishes")
    lhs = ctx.lap_normB2
    rhs = 4.0 * ctx.grad_normB_sq - 3.0 * pg.normB2**2
    scale = 1.0 + pg.normB2**2
    return _record(residual=(rhs - lhs) / scale, margin=lhs - rhs)


def _setup_gauss_conformal(imm, frame, options):
    return {}


def _eval_gauss_conformal(ctx, state):
    pg = ctx.pg
    tol = state["tol"]
    if pg.normB2 <= RANK_TOL:
        return _record(residual=0.0, conformal=True, criteria="convention")
    criteria = {}
    if ctx.canon is None:
        return _skip(getattr(ctx, "canon_error", "Gauss-map rank above 2"))
    canon = ctx.canon
    criteria["mu"] = abs(canon.mu1 - canon.mu2) <= tol * (canon.mu1 + canon.mu2 + tol)
    omega = None
    if pg.n == 2:
        cp = ctx.cpack
        if cp.isothermal:
            bww2 = float(np.sum(np.abs(cp.B_ww) ** 2))
            criteria["bww"] = abs(complex(np.sum(cp.B_ww * cp.B_ww))) <= tol * (bww2 + tol)
            criteria["omega"] = abs(cp.omega_coeff) <= tol
            omega = abs(cp.omega_coeff)
    values = list(criteria.values())
    agree = all(v == values[0] for v in values)
    return _record(
        residual=0.0 if agree else 1.0,
        conformal=values[0],
        agree=agree,
        omega=omega,
        **{f"criterion_{k}": v for k, v in criteria.items()},
    )


def _aggregate_gauss_conformal(records, tol):
    live = [r for r in records if not r["skipped"]]
    conformal = [bool(r["detail"].get("conformal")) for r in live]
    omegas = [r["detail"]["omega"] for r in live if r["detail"].get("omega") is not None]
    extras = {
        "conformal_points": sum(conformal),
        "evaluated_points": len(live),
        "all_conformal": bool(conformal) and all(conformal),
    }
    if omegas:
        extras["omega_max"] = max(omegas)
        # the holomorphic coefficient vanishes on the grid iff every point is conformal
        extras["omega_coupling_ok"] = (max(omegas) <= tol) == extras["all_conformal"]
    return extras, extras.get("omega_coupling_ok", True)


def _setup_jacobian(imm, frame, options):
    _need_graph(imm, "jacobian")
    _need_surface(imm, "jacobian")
    return {}


def _eval_jacobian(ctx, state):
    pg = ctx.pg
    n = pg.n
    Df = pg.dF[:, n:].T  # (m, n)
    sv = np.linalg.svd(Df, compute_uv=False)
    s1 = sv[0] if sv.size > 0 else 0.0
    s2 = sv[1] if sv.size > 1 else 0.0
    minors = 0.0
    m = Df.shape[0]
    for a in range(m):
        for b in range(a + 1, m):
            minors += (Df[a, 0] * Df[b, 1] - Df[a, 1] * Df[b, 0]) ** 2
    v = math.sqrt(float(np.linalg.det(pg.g0)))
    res1 = abs(s1**2 * s2**2 - minors) / (1.0 + s1**2 * s2**2)
    res2 = abs(v**2 - (1 + s1**2) * (1 + s2**2)) / (1.0 + v**2)
    detail = {"sigma1": s1, "sigma2": s2, "minor_sum": minors, "volume_factor": v}
    residual = max(res1, res2)
    if m == 2:
        jac = abs(float(np.linalg.det(Df)))
        residual = max(residual, abs(s1 * s2 - jac) / (1.0 + jac))
        detail["abs_jacobian"] = jac
    return _record(residual=residual, **detail)


def _setup_isothermal(imm, frame, options):
    _need_graph(imm, "isothermal")
    _need_surface(imm, "isothermal")
    a = float(options.get("a", 0.0))
    b = float(options.get("b", 1.0))
    if b <= 0:
        raise CheckConfigError("isothermal shear requires b > 0")
    # u1 = x1, u2 = a x1 + b x2  =>  x1 = u1, x2 = (u2 - a u1) / b
    x2 = BinOp("-", BinOp("/", Var(1), Const(b)), BinOp("*", Const(a / b), Var(0)))
    mapping = {0: Var(0), 1: x2}
    sheared = Immersion(
        imm.n,
        imm.m,
        tuple(substitute(c, mapping) for c in imm.components),
        "parametric",
        f"{imm.name}-sheared",
    )
    lam12 = b  # product of the shear eigenvalues: det [[1+a^2, ab],[ab, b^2]] = b^2
    return {"a": a, "b": b, "sheared": sheared, "lam12": lam12}


def _eval_isothermal(ctx, state):
    a, b = state["a"], state["b"]
    x = ctx.point
    u = (x[0], a * x[0] + b * x[1])
    pg_u = point_geometry_at(state["sheared"], u)
    g = pg_u.g0
    scale = 1.0 + abs(g[0, 0])
    residual = max(abs(g[0, 0] - g[1, 1]), abs(g[0, 1])) / scale
    lam_sq = g[0, 0]
    v = math.sqrt(float(np.linalg.det(ctx.pg.g0)))
    decomposition_residual = abs(v - lam_sq * state["lam12"]) / (1.0 + v)
    return _record(
        residual=residual,
        conformal_factor=lam_sq,
        volume_factor=v,
        decomposition_residual=decomposition_residual,
    )


def _setup_subharmonicity(imm, frame, options):
    s = float(options.get("s", 1.0))
    q = float(options.get("q", 1.0))
    if s < 1.0:
        raise CheckConfigError(f"subharmonicity requires s >= 1, got s={s}")
    if q < 1.0:
        raise CheckConfigError(f"subharmonicity requires q >= 1, got q={q}")
    return {"s": s, "q": q}


def _power_jet(jet, p: float):
    if p == int(p) and p >= 0:
        return jet ** int(p)
    return jet_elementary("pow-const", jet, param=p)


def _eval_subharmonicity(ctx, state):
    if not ctx.minimal:
        return _skip("mean curvature does not vanish")
    s, q = state["s"], state["q"]
    pg = ctx.pg
    if pg.normB2 <= RANK_TOL:
        # the function touches its minimum 0: both sides vanish
        return _record(residual=0.0, margin=0.0, lap=0.0, rhs=0.0)
    phi = _power_jet(pg.normB2_jet, s) * _power_jet(ctx.volume_jet, q)
    lap = laplace_beltrami_of_jet(pg, phi)
    rhs = (q - 3.0 * s) * pg.normB2 ** (s + 1.0) * ctx.volume_jet.value**q
    scale = 1.0 + abs(rhs)
    return _record(residual=(rhs - lap) / scale, margin=lap - rhs, lap=lap, rhs=rhs)


_CHECK_TABLE = {
    "minimality": (_setup_minimality, _eval_minimality, None),
    "minimal-system": (_setup_minimal_system, _eval_minimal_system, None),
    "pluecker": (_setup_pluecker, _eval_pluecker, None),
    "alignment-identities": (_setup_alignment_identities, _eval_alignment_identities, None),
    "log-alignment": (_setup_log_alignment, _eval_log_alignment, None),
    "simons": (_setup_simons, _eval_simons, _aggregate_simons),
    "kato": (_setup_kato, _eval_kato, _aggregate_kato),
    "refined-simons": (_setup_refined_simons, _eval_refined_simons, None),
    "gauss-conformal": (_setup_gauss_conformal, _eval_gauss_conformal, _aggregate_gauss_conformal),
    "jacobian": (_setup_jacobian, _eval_jacobian, None),
    "isothermal": (_setup_isothermal, _eval_isothermal, None),
    "subharmonicity": (_setup_subharmonicity, _eval_subharmonicity, None),
}


def make_check_state(name: str, imm: Immersion, frame, options: dict, tol: float):
    """Validate a grid check's options once; the state is passed to workers."""
    if name not in _CHECK_TABLE:
        raise CheckConfigError(f"unknown check {name!r}")
    setup, _, _ = _CHECK_TABLE[name]
    state = setup(imm, frame, options or {})
    state["tol"] = tol
    return state


def evaluate_point(imm: Immersion, frame, specs, point) -> dict:
    """Evaluate all requested grid checks at one point; shares one context.

    `specs` is a list of (name, state) pairs.  Evaluation errors are
    collected per point, never fatal here.
    """
    ctx = PointContext(imm, point, frame)
    out = {}
    for name, state in specs:
        _, evaluator, _ = _CHECK_TABLE[name]
        try:
            rec = evaluator(ctx, state)
        except (GeometryError, ExpressionDomainError, JetDomainError, ArithmeticError) as exc:
            rec = _skip(f"evaluation error: {exc}")
        rec["point"] = ctx.point
        out[name] = rec
    return out


def aggregate_check(name: str, tol: float, records: list, keep_details: bool = True) -> CheckResult:
    """Fold per-point records into a CheckResult."""
    _, _, aggregator = _CHECK_TABLE[name]
    live = [r for r in records if not r["skipped"]]
    skipped = [r for r in records if r["skipped"]]
    extras, extra_ok = (aggregator(records, tol) if aggregator else ({}, True))
    if not live:
        reason = skipped[0]["reason"] if skipped else "no points evaluated"
        return CheckResult(
            name=name, tolerance=tol, worst_residual=None, verdict="not-applicable",
            n_points=len(records), n_skipped=len(skipped), extras=extras,
            details=records if keep_details else [], reason=reason,
        )
    worst = max(r["residual"] for r in live)
    verdict = "pass" if (worst <= tol and extra_ok) else "fail"
    return CheckResult(
        name=name, tolerance=tol, worst_residual=worst, verdict=verdict,
        n_points=len(records), n_skipped=len(skipped), extras=extras,
        details=records if keep_details else [],
    )


def _run_grid_check(imm, grid: GridSpec, name, frame=None, tol=None, **options):
    tol = DEFAULT_TOLERANCES[name] if tol is None else tol
    state = make_check_state(name, imm, frame, options, tol)
    records = []
    for point in grid.points():
        records.append(evaluate_point(imm, frame, [(name, state)], point)[name])
    return aggregate_check(name, tol, records)


# -- public per-check entry points ------------------------------------------------

def check_minimality(imm, grid, tol=None):
    return _run_grid_check(imm, grid, "minimality", tol=tol)


def check_minimal_system(imm, grid, tol=None):
    return _run_grid_check(imm, grid, "minimal-system", tol=tol)


def check_pluecker(imm, grid, reference_frame, tol=None):
    return _run_grid_check(imm, grid, "pluecker", frame=reference_frame, tol=tol)


def check_alignment_identities(imm, grid, reference_frame, tol=None):
    return _run_grid_check(imm, grid, "alignment-identities", frame=reference_frame, tol=tol)


def check_log_alignment(imm, grid, reference_frame, tol=None):
    return _run_grid_check(imm, grid, "log-alignment", frame=reference_frame, tol=tol)


def check_simons(imm, grid, tol=None):
    result = _run_grid_check(imm, grid, "simons", tol=tol)
    reports = [
        SimonsReport(
            point=r["point"],
            lapB2=r["detail"]["lapB2"],
            nablaB2=r["detail"]["nablaB2"],
            inner_term_numeric=r["detail"]["inner_numeric"],
            inner_term_formula=r["detail"]["inner_formula"],
            ratio=r["detail"]["ratio"],
            tilde_term=r["detail"]["tilde_term"],
            under_term=r["detail"]["under_term"],
        )
        for r in result.details
        if not r["skipped"]
    ]
    return result, reports


def check_kato(imm, grid, tol=None):
    result = _run_grid_check(imm, grid, "kato", tol=tol)
    reports = [
        KatoReport(
            point=r["point"],
            nablaB2=r["detail"]["nablaB2"],
            grad_normB2=r["detail"]["grad_normB_sq"],
            gap=r["detail"]["gap"],
            zeta=(
                complex(r["detail"]["zeta_re"], r["detail"]["zeta_im"])
                if r["detail"].get("zeta_re") is not None
                else None
            ),
            zeta_residual=r["detail"].get("zeta_residual"),
            xi1=r["detail"].get("xi1"),
            xi2=r["detail"].get("xi2"),
        )
        for r in result.details
        if not r["skipped"]
    ]
    return result, reports


def check_refined_simons(imm, grid, tol=None):
    return _run_grid_check(imm, grid, "refined-simons", tol=tol)


def check_gauss_conformal(imm, grid, tol=None):
    return _run_grid_check(imm, grid, "gauss-conformal", tol=tol)


def check_jacobian_identities(imm, grid, tol=None):
    return _run_grid_check(imm, grid, "jacobian", tol=tol)


def verify_isothermal(imm, a, b, grid, tol=None):
    return _run_grid_check(imm, grid, "isothermal", tol=tol, a=a, b=b)


def check_subharmonicity(imm, grid, s=1.0, q=1.0, tol=None):
    return _run_grid_check(imm, grid, "subharmonicity", tol=tol, s=s, q=q)


# -- quadrature over graphs ---------------------------------------------------------

_UNIT_BALL_VOLUME = {2: math.pi, 3: 4.0 * math.pi / 3.0}


class _GraphFields:
    """Vectorized v, |B|^2 and extrinsic distance for a graph immersion.

    Uses symbolic derivatives of the graph components, so the quadrature
    path is independent of the jet pipeline (and cross-checked against it).
    """

    def __init__(self, imm: Immersion):
        if imm.kind != "graph":
            raise CheckConfigError("quadrature fields require a graph immersion")
        self.imm = imm
        self.n, self.m = imm.n, imm.m
        comps = imm.graph_components()
        self.d1 = [[differentiate(c, i) for i in range(imm.n)] for c in comps]
        self.d2 = [
            [[differentiate(self.d1[a][i], j) for j in range(imm.n)] for i in range(imm.n)]
            for a in range(imm.m)
        ]
        self.f0 = np.array(
            [evaluate_expression(c, [0.0] * imm.n) for c in comps], dtype=float
        )
        self.comps = comps

    def _eval(self, node, axes):
        val = evaluate_expression(node, axes)
        if not isinstance(val, np.ndarray):
            val = np.full_like(axes[0], float(val))
        return val

    def fields(self, axes, want_normB2=False):
        """Per-point v, squared extrinsic distance to F(0), optionally |B|^2."""
        n, m = self.n, self.m
        P = axes[0].size
        D1 = np.empty((P, m, n))
        for a in range(m):
            for i in range(n):
                D1[:, a, i] = self._eval(self.d1[a][i], axes)
        g = np.eye(n)[None, :, :] + np.einsum("pai,paj->pij", D1, D1)
        v = np.sqrt(np.linalg.det(g))
        f = np.stack([self._eval(c, axes) for c in self.comps], axis=1)
        dist2 = sum(ax**2 for ax in axes) + np.sum((f - self.f0[None, :]) ** 2, axis=1)
        out = {"v": v, "dist2": dist2}
        if want_normB2:
            D2 = np.empty((P, m, n, n))
            for a in range(m):
                for i in range(n):
                    for j in range(n):
                        D2[:, a, i, j] = self._eval(self.d2[a][i][j], axes)
            ginv = np.linalg.inv(g)
            S = np.einsum("paij,pakl->pijkl", D2, D2)
            c = np.einsum("paij,pak->pijk", D2, D1)
            N = S - np.einsum("pijr,prs,pkls->pijkl", c, ginv, c)
            out["normB2"] = np.einsum("pik,pjl,pijkl->p", ginv, ginv, N)
        return out

    def at_origin(self):
        zero = [np.zeros(1) for _ in range(self.n)]
        f = self.fields(zero, want_normB2=True)
        return float(f["v"][0]), float(f["normB2"][0])


def _midpoint_axes(radius: float, n: int, cells: int):
    h = 2.0 * radius / cells
    centers = -radius + h * (np.arange(cells) + 0.5)
    mesh = np.meshgrid(*([centers] * n), indexing="ij")
    return [m.ravel() for m in mesh], h**n


@dataclass
class GrowthTable:
    """Extrinsic-ball statistics for probing polynomial-growth hypotheses."""

    radii: list
    volumes: list
    max_v: list
    delta_f: list  # max slope over the ball; equals max_v for graphs
    half_volumes: list
    volume_ratios: list  # V(R) / V(R/2)
    volume_exponent: float | None
    slope_exponent: float | None
    v_over_R23: list  # max_v(R) / R^(2/3)
    flags: dict
    cells: int


def growth_table(imm: Immersion, radii, cells: int = 256) -> GrowthTable:
    """Quadrature of the volume element over extrinsic balls Omega_R.

    Omega_R = {x : |x|^2 + |f(x) - f(0)|^2 <= R^2} is covered by the box
    [-R, R]^n; a masked midpoint rule integrates v.  Fails when fewer than 8
    cells land inside Omega_R.
    """
    radii = [float(r) for r in radii]
    if any(r2 <= r1 for r1, r2 in zip(radii, radii[1:])):
        raise CheckConfigError("growth radii must be strictly increasing")
    gf = _GraphFields(imm)

    def ball_volume(R):
        axes, weight = _midpoint_axes(R, gf.n, cells)
        fields = gf.fields(axes)
        inside = fields["dist2"] <= R * R
        if int(np.sum(inside)) < 8:
            raise CheckConfigError(
                f"quadrature too coarse: {int(np.sum(inside))} cells inside radius {R}"
            )
        vol = float(np.sum(fields["v"][inside]) * weight)
        vmax = float(np.max(fields["v"][inside]))
        return vol, vmax

    volumes, max_v, half_volumes = [], [], []
    for R in radii:
        vol, vmax = ball_volume(R)
        volumes.append(vol)
        max_v.append(vmax)
        half_volumes.append(ball_volume(R / 2.0)[0])

    ratios = [v / h for v, h in zip(volumes, half_volumes)]
    v_over = [mv / R ** (2.0 / 3.0) for mv, R in zip(max_v, radii)]

    def fit_exponent(values):
        if len(radii) < 2:
            return None
        return float(np.polyfit(np.log(radii), np.log(values), 1)[0])

    omega_n = _UNIT_BALL_VOLUME[gf.n]
    bound_ok = all(
        vol <= mv * omega_n * R**gf.n * (1.0 + 1e-9) + 1e-12
        for vol, mv, R in zip(volumes, max_v, radii)
    )
    slope_exponent = fit_exponent(max_v)
    flags = {
        "volume_monotone": all(b >= a * (1.0 - 1e-12) for a, b in zip(volumes, volumes[1:])),
        "volume_bound_ok": bound_ok,
        "v_ratio_strictly_increasing": all(b > a for a, b in zip(v_over, v_over[1:])),
        # empirical stand-ins for the rigidity hypotheses: max v = o(R^(2/3))
        # and slope growth strictly below linear
        "v_subcritical": all(b <= a for a, b in zip(v_over, v_over[1:])),
        "slope_below_linear": slope_exponent is not None and slope_exponent < 1.0 - 1e-6,
    }
    return GrowthTable(
        radii=radii,
        volumes=volumes,
        max_v=max_v,
        delta_f=list(max_v),
        half_volumes=half_volumes,
        volume_ratios=ratios,
        volume_exponent=fit_exponent(volumes),
        slope_exponent=slope_exponent,
        v_over_R23=v_over,
        flags=flags,
        cells=cells,
    )


def growth_check_result(imm, radii, cells=256, tol=None) -> tuple[CheckResult, GrowthTable]:
    """Wrap the growth table as a check: volume monotonicity and the box bound."""
    tol = DEFAULT_TOLERANCES["growth"] if tol is None else tol
    table = growth_table(imm, radii, cells)
    ok = table.flags["volume_monotone"] and table.flags["volume_bound_ok"]
    extras = {
        "radii": table.radii,
        "volumes": table.volumes,
        "max_v": table.max_v,
        "volume_ratios": table.volume_ratios,
        "volume_exponent": table.volume_exponent,
        "slope_exponent": table.slope_exponent,
        "v_over_R23": table.v_over_R23,
        "flags": table.flags,
    }
    return (
        CheckResult(
            name="growth", tolerance=tol, worst_residual=0.0 if ok else 1.0,
            verdict="pass" if ok else "fail", n_points=len(table.radii),
            n_skipped=0, extras=extras,
        ),
        table,
    )


# -- estimate probes -----------------------------------------------------------------

@dataclass(frozen=True)
class ProbeParams:
    """Exponents and radii for the integral curvature-estimate probes.

    The integral probes need t >= 3 and q > (3t-3)/2; the pointwise
    subharmonicity probe uses its own (s, q) pair via the dedicated check.
    """

    t: float = 3.0
    q: float = 4.0
    s: float = 1.0
    R: float = 1.0
    R0: float = 0.5
    cells: int = 256

    def validate(self):
        if self.t < 3.0:
            raise CheckConfigError(f"probe requires t >= 3, got t={self.t}")
        if self.q <= (3.0 * self.t - 3.0) / 2.0:
            raise CheckConfigError(
                f"probe requires q > (3t-3)/2 = {(3 * self.t - 3) / 2}, got q={self.q}"
            )
        if self.s < 1.0:
            raise CheckConfigError(f"probe requires s >= 1, got s={self.s}")
        if not (0.0 < self.R0 < self.R):
            raise CheckConfigError(f"probe requires 0 < R0 < R, got R0={self.R0}, R={self.R}")
        if self.cells < 8:
            raise CheckConfigError("probe quadrature needs at least 8 cells per axis")


@dataclass
class ProbeRecord:
    params: ProbeParams
    applicable: bool
    reason: str | None
    lp_lhs: float | None  # || |B|^2 v^(2q/t) ||_{L^t(B_R0)}
    lp_rhs: float | None  # || v^(2q/t) ||_{L^t(B_R)}
    implied_c3: float | None  # lhs (R - R0)^2 / rhs
    pointwise_lhs: float | None  # (|B|^2 v^3)(0)
    max_v: float | None
    volume_R: float | None
    volume_half_R: float | None
    implied_c4: float | None  # lhs R^2 (max v)^-3 (V(R)/V(R/2))^(-1/t)
    subharmonicity_worst: float | None  # worst signed violation of the (s, q) bound
    subharmonicity_points: int


def estimate_probe(
    imm: Immersion,
    reference_frame,
    params: ProbeParams,
    grid: GridSpec | None = None,
) -> ProbeRecord:
    """Evaluate both sides of the integral estimates and report implied constants.

    The probes are reported, never asserted: the constants in the estimates
    are non-constructive, so only the measured quotients are meaningful.
    The subharmonicity part is a signed pointwise check over `grid`.
    """
    params.validate()
    t, q = params.t, params.q

    reason = None
    if imm.kind != "graph":
        reason = "integral probes require a graph immersion"
    else:
        probe_pts = [tuple(0.1 * k for _ in range(imm.n)) for k in (0, 1, 3)]
        for pt in probe_pts:
            ctx = PointContext(imm, pt, reference_frame)
            if not ctx.minimal:
                reason = "mean curvature does not vanish"
                break
            if ctx.canon is None:
                reason = "Gauss-map rank above 2"
                break
            if reference_frame is not None and ctx.apack.value <= 0.0:
                reason = "alignment function not positive on the sampled region"
                break

    sub_worst = None
    sub_points = 0
    if grid is not None and imm.kind == "graph":
        state = {"s": params.s, "q": q, "tol": None}
        for point in grid.points():
            ctx = PointContext(imm, point, reference_frame)
            rec = _eval_subharmonicity(ctx, state)
            if not rec["skipped"]:
                sub_points += 1
                r = rec["residual"]
                sub_worst = r if sub_worst is None else max(sub_worst, r)

    if reason is not None:
        return ProbeRecord(
            params=params, applicable=False, reason=reason,
            lp_lhs=None, lp_rhs=None, implied_c3=None, pointwise_lhs=None,
            max_v=None, volume_R=None, volume_half_R=None, implied_c4=None,
            subharmonicity_worst=sub_worst, subharmonicity_points=sub_points,
        )

    gf = _GraphFields(imm)
    axes, weight = _midpoint_axes(params.R, gf.n, params.cells)
    fields = gf.fields(axes, want_normB2=True)
    v, nb2, dist2 = fields["v"], fields["normB2"], fields["dist2"]
    inside_R = dist2 <= params.R**2
    inside_R0 = dist2 <= params.R0**2
    inside_half = dist2 <= (params.R / 2.0) ** 2

    # the volume element is v dx: L^t norms carry one extra factor of v
    lhs_t = float(np.sum((nb2[inside_R0] ** t) * (v[inside_R0] ** (2 * q + 1))) * weight)
    rhs_t = float(np.sum(v[inside_R] ** (2 * q + 1)) * weight)
    lp_lhs = lhs_t ** (1.0 / t)
    lp_rhs = rhs_t ** (1.0 / t)
    implied_c3 = lp_lhs * (params.R - params.R0) ** 2 / lp_rhs if lp_rhs > 0 else None

    v0, nb0 = gf.at_origin()
    pointwise_lhs = nb0 * v0**3
    max_v = float(np.max(v[inside_R]))
    volume_R = float(np.sum(v[inside_R]) * weight)
    volume_half = float(np.sum(v[inside_half]) * weight)
    implied_c4 = None
    if volume_half > 0 and max_v > 0:
        implied_c4 = (
            pointwise_lhs
            * params.R**2
            * max_v**-3
            * (volume_R / volume_half) ** (-1.0 / t)
        )

    return ProbeRecord(
        params=params, applicable=True, reason=None,
        lp_lhs=lp_lhs, lp_rhs=lp_rhs, implied_c3=implied_c3,
        pointwise_lhs=pointwise_lhs, max_v=max_v, volume_R=volume_R,
        volume_half_R=volume_half, implied_c4=implied_c4,
        subharmonicity_worst=sub_worst, subharmonicity_points=sub_points,
    )


def probe_check_result(imm, reference_frame, params, grid=None, tol=None):
    """Wrap a probe as a check: only the subharmonicity part is asserted."""
    tol = DEFAULT_TOLERANCES["probe"] if tol is None else tol
    record = estimate_probe(imm, reference_frame, params, grid)
    extras = {
        "applicable": record.applicable,
        "implied_c3": record.implied_c3,
        "implied_c4": record.implied_c4,
        "lp_lhs": record.lp_lhs,
        "lp_rhs": record.lp_rhs,
        "pointwise_lhs": record.pointwise_lhs,
        "max_v": record.max_v,
        "volume_R": record.volume_R,
        "volume_half_R": record.volume_half_R,
        "subharmonicity_points": record.subharmonicity_points,
    }
    if not record.applicable:
        return (
            CheckResult(
                name="probe", tolerance=tol, worst_residual=None,
                verdict="not-applicable", n_points=0, n_skipped=0,
                extras=extras, reason=record.reason,
            ),
            record,
        )
    worst = record.subharmonicity_worst if record.subharmonicity_worst is not None else 0.0
    return (
        CheckResult(
            name="probe", tolerance=tol, worst_residual=worst,
            verdict="pass" if worst <= tol else "fail",
            n_points=record.subharmonicity_points, n_skipped=0, extras=extras,
        ),
        record,
    )
