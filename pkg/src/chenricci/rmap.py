"""Riemannian maps of nonmaximal rank: range splitting, second fundamental form, Ricci bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, FrameError, GeometryError, RankError, SpaceFormError
from .inequalities import CLOSED_FORM_TOL, EQUALITY_TOL, SPACE_FORM_TOL, InequalityVerdict, _gap_sqrt, _verdict, diagnose_slices
from .manifold import (
    SignConvention,
    complex_space_form_model,
    connection_at,
    holomorphic_split,
    metric_jet,
    real_space_form_model,
    riemann_components,
)
from .submersion import SmoothMap, map_jet

RANK_MIN_SINGULAR = 1e-6
RANK_NULL_REL = 1e-9
ISOMETRY_TOL = 1e-8
CONTAINMENT_TOL = 1e-6
FRAME_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RiemannianMapSpec(SmoothMap):
    """A constant-rank map that is isometric on the complement of its kernel."""

    rank: int = 0

    def __post_init__(self):
        super().__post_init__()
        if not 1 <= self.rank < min(self.m1, self.m2):
            raise GeometryError(f"rank must satisfy 1 <= r < min(m1, m2) = {min(self.m1, self.m2)}, got {self.rank}")

    @property
    def r(self) -> int:
        return self.rank

    @property
    def s(self) -> int:
        return self.m2 - self.rank


@dataclass(frozen=True)
class RangeSplit:
    point: np.ndarray
    image: np.ndarray
    H: np.ndarray  # domain horizontal frame (m1, r)
    FH: np.ndarray  # pushed frame (m2, r)
    N: np.ndarray  # normal frame of the range (m2, s)
    jac: np.ndarray
    isometry_residual: float

    @property
    def r(self) -> int:
        return self.H.shape[1]

    @property
    def s(self) -> int:
        return self.N.shape[1]

    @property
    def target_frame(self) -> np.ndarray:
        return np.hstack([self.FH, self.N])


@dataclass(frozen=True)
class SecondFundamentalData:
    B: np.ndarray  # B[i, j, α] = g₂((∇F*)(h_i, h_j), V_α), shape (r, r, s)
    traces: np.ndarray  # per α: Σ_j B_jj^α
    trace_norm2: float
    norm2: float
    containment_residual: float
    symmetry_residual: float


def _weighted_gram_schmidt(cands, g, count, start=None, tol=1e-8):
    """Orthonormalize against ``start`` picking the candidate with the largest residual each step."""
    basis = [] if start is None else [start[:, k] for k in range(start.shape[1])]
    out = []
    pool = [np.asarray(c, dtype=float) for c in cands]
    while len(out) < count:
        best, best_norm, best_idx = None, -1.0, -1
        for idx, c in enumerate(pool):
            w = c.copy()
            for _ in range(2):
                for b in basis:
                    w = w - (b @ g @ w) * b
            nrm = math.sqrt(max(float(w @ g @ w), 0.0))
            if nrm > best_norm + 1e-12:
                best, best_norm, best_idx = w, nrm, idx
        if best is None or best_norm <= tol:
            raise FrameError("could not complete an orthonormal frame")
        v = best / best_norm
        basis.append(v)
        out.append(v)
        pool.pop(best_idx)
    return np.column_stack(out)


def _horizontal_frame(jac, g1, r, seed):
    m1 = jac.shape[1]
    _, sv, vt = np.linalg.svd(jac)
    K = vt[r:].T  # coordinate kernel basis
    if K.shape[1]:
        P = np.eye(m1) - K @ np.linalg.solve(K.T @ g1 @ K, K.T @ g1)
    else:
        P = np.eye(m1)
    cands = [P[:, k] for k in range(m1)]
    if seed is not None:
        w = P @ np.asarray(seed, dtype=float)
        if float(w @ g1 @ w) < 1e-16:
            raise FrameError("seed vector is orthogonal to the horizontal space")
        w = w / math.sqrt(float(w @ g1 @ w))
        return np.column_stack([w, _weighted_gram_schmidt(cands, g1, r - 1, start=w[:, None])]) if r > 1 else w[:, None]
    return _weighted_gram_schmidt(cands, g1, r)


def range_split_at(F: RiemannianMapSpec, p, seed_horizontal=None, isometry_tol: float = ISOMETRY_TOL) -> RangeSplit:
    """Orthonormal horizontal frame, its pushforward, and a normal frame of the range."""
    p = np.asarray(p, dtype=float)
    mj = map_jet(F, p)
    jac = mj.jac
    r = F.rank
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv[r - 1] < RANK_MIN_SINGULAR or (len(sv) > r and sv[r] > RANK_NULL_REL * max(1.0, sv[0])):
        raise RankError(f"differential does not have rank {r} at {list(p)}", tuple(float(x) for x in sv))
    g1 = metric_jet(F.domain, p).g
    g2 = metric_jet(F.target, mj.value).g
    H = _horizontal_frame(jac, g1, r, seed_horizontal)
    FH = jac @ H
    iso = float(np.max(np.abs(FH.T @ g2 @ FH - np.eye(r))))
    if iso > isometry_tol:
        raise ContractError(f"{F.name or 'map'} is not a Riemannian map at {list(p)} (isometry residual {iso:.3g})")
    # orthonormalize the pushed frame exactly, then complete it with target coordinate vectors
    L = np.linalg.cholesky(FH.T @ g2 @ FH)
    FHo = FH @ np.linalg.inv(L).T
    N = _weighted_gram_schmidt(list(np.eye(F.m2)), g2, F.m2 - r, start=FHo)
    E = np.hstack([FHo, N])
    err = float(np.max(np.abs(E.T @ g2 @ E - np.eye(F.m2))))
    if err > FRAME_TOL:
        raise FrameError(f"target frame Gram matrix deviates from identity by {err:.3g}")
    return RangeSplit(p, mj.value.copy(), H, FH, N, jac, iso)


def second_fundamental_form(F: SmoothMap, p, X, Y) -> np.ndarray:
    """(∇F*)(X, Y) in target coordinates."""
    mj = map_jet(F, p)
    G1 = connection_at(F.domain, p).gamma
    G2 = connection_at(F.target, mj.value).gamma
    M = mj.hess - np.einsum("cab,gc->gab", G1, mj.jac) + np.einsum("gde,da,eb->gab", G2, mj.jac, mj.jac)
    return np.einsum("gab,a,b->g", M, X, Y)


def second_fundamental_at(F: RiemannianMapSpec, split: RangeSplit, containment_tol: float = CONTAINMENT_TOL) -> SecondFundamentalData:
    p = split.point
    mj = map_jet(F, p)
    G1 = connection_at(F.domain, p).gamma
    G2 = connection_at(F.target, mj.value).gamma
    M = mj.hess - np.einsum("cab,gc->gab", G1, mj.jac) + np.einsum("gde,da,eb->gab", G2, mj.jac, mj.jac)
    W = np.einsum("gab,ai,bj->ijg", M, split.H, split.H)  # (r, r, m2)
    g2 = metric_jet(F.target, mj.value).g
    B = np.einsum("ijg,gh,ha->ija", W, g2, split.N)
    tang = np.einsum("ijg,gh,hk->ijk", W, g2, split.FH)
    containment = float(np.max(np.sqrt(np.sum(tang**2, axis=2)))) if tang.size else 0.0
    if containment > containment_tol:
        raise ContractError(f"second fundamental form has a range component of size {containment:.3g}")
    sym = float(np.max(np.abs(B - np.swapaxes(B, 0, 1)))) if B.size else 0.0
    B = 0.5 * (B + np.swapaxes(B, 0, 1))
    traces = np.einsum("jja->a", B)
    return SecondFundamentalData(B, traces, float(traces @ traces), float(np.sum(B * B)), containment, sym)


def _frame(R: np.ndarray, E: np.ndarray) -> np.ndarray:
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", R, E, E, E, E)


def domain_horizontal_curvature(F: RiemannianMapSpec, split: RangeSplit, convention=SignConvention.MODERN) -> np.ndarray:
    sigma = SignConvention.parse(convention).sign
    return sigma * _frame(riemann_components(F.domain, split.point), split.H)


def range_curvature(F: RiemannianMapSpec, split: RangeSplit, convention=SignConvention.MODERN) -> np.ndarray:
    sigma = SignConvention.parse(convention).sign
    return sigma * _frame(riemann_components(F.target, split.image, check_domain=False), split.FH)


def gauss_audit(F: RiemannianMapSpec, split: RangeSplit, convention, sff: SecondFundamentalData | None = None) -> float:
    """max |R₂(F*Z₁..F*Z₄) − R₁(Z₁..Z₄) − g₂(B₁₃, B₂₄) + g₂(B₁₄, B₂₃)| over the horizontal frame."""
    sff = sff or second_fundamental_at(F, split)
    B = sff.B
    R1 = domain_horizontal_curvature(F, split, convention)
    R2 = range_curvature(F, split, convention)
    rhs = R1 + np.einsum("acx,bdx->abcd", B, B) - np.einsum("adx,bcx->abcd", B, B)
    return float(np.max(np.abs(R2 - rhs)))


def ric_horizontal_at(F: RiemannianMapSpec, split: RangeSplit, convention=SignConvention.MODERN) -> float:
    """Σ_j R₁(h₁, h_j, h_j, h₁)."""
    R1 = domain_horizontal_curvature(F, split, convention)
    return float(np.einsum("jj->", R1[0, :, :, 0]))


def ric_range_at(F: RiemannianMapSpec, split: RangeSplit, convention=SignConvention.MODERN) -> float:
    """Σ_j R₂(F*h₁, F*h_j, F*h_j, F*h₁)."""
    R2 = range_curvature(F, split, convention)
    return float(np.einsum("jj->", R2[0, :, :, 0]))


def ricci_identity_residual(F: RiemannianMapSpec, split: RangeSplit, convention, sff: SecondFundamentalData | None = None) -> float:
    """|Ric^H(h₁) − Ric^R(F*h₁) − Σ_α(B₁₁^α Σ_j B_jj^α − Σ_j (B₁ⱼ^α)²)|."""
    sff = sff or second_fundamental_at(F, split)
    B = sff.B
    shape = float(np.sum(B[0, 0, :] * sff.traces - np.sum(B[0, :, :] ** 2, axis=0)))
    return abs(ric_horizontal_at(F, split, convention) - ric_range_at(F, split, convention) - shape)


def map_bracket(r: int, trace_norm2: float, norm2: float) -> float:
    """(r−1)/r² (2‖tr B‖² − r‖B‖² − (r−2)‖tr B‖ √((r‖B‖² − ‖tr B‖²)/(r−1)))."""
    root = _gap_sqrt(r * norm2 - trace_norm2, r * norm2, r - 1)
    return (r - 1) / r**2 * (2 * trace_norm2 - r * norm2 - (r - 2) * math.sqrt(max(trace_norm2, 0.0)) * root)


def map_theorem_verify(
    F: RiemannianMapSpec,
    split: RangeSplit,
    convention,
    tol_equality: float = EQUALITY_TOL,
    ric_range: float | None = None,
    theorem: str = "t62",
) -> InequalityVerdict:
    """Ric^H(h₁) ≥ Ric^R(F*h₁) + (bracket in trace B and ‖B‖)."""
    r = split.r
    if r < 2:
        raise GeometryError("the map bound needs rank >= 2")
    sff = second_fundamental_at(F, split)
    lhs = ric_horizontal_at(F, split, convention)
    rr = ric_range_at(F, split, convention) if ric_range is None else ric_range
    rhs = rr + map_bracket(r, sff.trace_norm2, sff.norm2)
    return _verdict(
        theorem, split.point, lhs, rhs, lhs - rhs, convention, tol_equality,
        diagnose_slices(sff.B, r),
        ricci_identity_residual=ricci_identity_residual(F, split, convention, sff),
        containment_residual=sff.containment_residual,
    )


def _target_space_form_residual(F, split, kind, c) -> float:
    R = riemann_components(F.target, split.image, check_domain=False)
    g = metric_jet(F.target, split.image, check_domain=False).g
    if kind == "real":
        model = real_space_form_model(g, c)
    else:
        if F.target.J is None:
            raise SpaceFormError("complex space-form bound needs a complex structure on the target")
        model = complex_space_form_model(g, F.target.J, c)
    return float(np.max(np.abs(R - model)))


def range_holomorphic_norm(F: RiemannianMapSpec, split: RangeSplit) -> float:
    """‖P F*h₁‖²: the part of J F*h₁ lying in the range."""
    g2 = metric_jet(F.target, split.image, check_domain=False).g
    L = np.linalg.cholesky(split.FH.T @ g2 @ split.FH)
    FHo = split.FH @ np.linalg.inv(L).T
    _, along = holomorphic_split(F.target.J, FHo[:, 0], list(FHo.T), g2)
    return float(along @ g2 @ along)


def map_spaceform_verify(
    F: RiemannianMapSpec, split: RangeSplit, kind: str, c: float, convention, tol_equality: float = EQUALITY_TOL
) -> InequalityVerdict:
    """Map bound with the space-form value of Ric^R(F*h₁) substituted."""
    if kind not in ("real", "complex"):
        raise ValueError("kind must be 'real' or 'complex'")
    res = _target_space_form_residual(F, split, kind, c)
    if res > SPACE_FORM_TOL:
        raise SpaceFormError(f"target is not a {kind} space form with c={c} (residual {res:.3g})")
    r = split.r
    sigma = SignConvention.parse(convention).sign
    if kind == "real":
        p2 = 0.0
        closed = c * (r - 1)
    else:
        p2 = range_holomorphic_norm(F, split)
        closed = c / 4 * (r - 1) + 3 * c / 4 * p2
    closed *= sigma
    mismatch = abs(closed - ric_range_at(F, split, convention))
    if mismatch > CLOSED_FORM_TOL:
        raise SpaceFormError(f"closed-form range Ricci curvature disagrees with the numeric one by {mismatch:.3g}")
    v = map_theorem_verify(F, split, convention, tol_equality, ric_range=closed, theorem="t65" if kind == "real" else "t66")
    v.extra.update({"space_form_residual": res, "closed_form_mismatch": mismatch, "PFh1_sq": p2})
    return v
