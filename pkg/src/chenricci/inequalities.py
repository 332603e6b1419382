"""Pointwise verification of the Ricci-curvature bounds for Riemannian submersions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, SpaceFormError
from .hineva import GAP_ROUNDOFF, eigen_ratio
from .manifold import (
    SignConvention,
    holomorphic_split,
    metric_jet,
    riemann_components,
    complex_space_form_model,
    real_space_form_model,
)
from .submersion import ONeillData, PointGeometry, RiemannianSubmersion, point_geometry

EQUALITY_TOL = 1e-8
STRUCTURE_TOL = 1e-6
CLOSED_FORM_TOL = 1e-5
SPACE_FORM_TOL = 1e-5


@dataclass(frozen=True)
class EqualityDiagnosis:
    """Shape of each slice (T_ij^α) against diag(λ_α, μ_α, …, μ_α)."""

    lambdas: tuple[float, ...]
    mus: tuple[float, ...]
    mu_multiplicity: tuple[int, ...]
    diagonal_residual: tuple[float, ...]
    rho: tuple[float | None, ...]
    rho_spread: float
    cauchy_schwarz_residual: float

    @property
    def max_diagonal_residual(self) -> float:
        return max(self.diagonal_residual, default=0.0)

    def structure_holds(self, tol: float = STRUCTURE_TOL) -> bool:
        return self.max_diagonal_residual <= tol and self.rho_spread <= tol

    def as_dict(self) -> dict:
        return {
            "lambda": list(self.lambdas),
            "mu": list(self.mus),
            "mu_multiplicity": list(self.mu_multiplicity),
            "diagonal_residual": list(self.diagonal_residual),
            "rho": list(self.rho),
            "rho_spread": self.rho_spread,
            "cauchy_schwarz_residual": self.cauchy_schwarz_residual,
        }


@dataclass(frozen=True)
class InequalityVerdict:
    """slack ≥ 0 means the displayed inequality holds."""

    theorem: str
    point: tuple[float, ...]
    lhs: float
    rhs: float
    slack: float
    equality: bool
    convention: str
    diagnostics: EqualityDiagnosis | None = None
    extra: dict = field(default_factory=dict)

    def holds(self, tol: float) -> bool:
        return self.slack >= -tol


def _verdict(theorem, pg_point, lhs, rhs, slack, convention, tol, diagnostics=None, **extra) -> InequalityVerdict:
    return InequalityVerdict(
        theorem,
        tuple(float(x) for x in pg_point),
        float(lhs),
        float(rhs),
        float(slack),
        bool(abs(slack) <= tol),
        SignConvention.parse(convention).value,
        diagnostics,
        dict(extra),
    )


def _sqrt0(x: float) -> float:
    """Square root that absorbs negative roundoff."""
    return math.sqrt(x) if x > 0.0 else 0.0


def _gap_sqrt(gap: float, scale: float, den: float = 1.0) -> float:
    """√(gap/den) with roundoff-level gaps (relative to ``scale``) sent to 0."""
    if gap <= GAP_ROUNDOFF * max(1.0, abs(scale)):
        return 0.0
    return math.sqrt(gap / den)


def slice_structure(S: np.ndarray, n: int) -> tuple[float, float, int, float, float | None, float, float]:
    """(λ, μ, multiplicity of μ, diagonal residual, ρ, |trace|, spread s) for one slice."""
    a = float(np.trace(S))
    b = float(np.sum(S * S))
    s = _gap_sqrt(n * b - a * a, n * b, n - 1)
    options = [(a / n - (n - 1) * s / n, a / n + s / n), (a / n + (n - 1) * s / n, a / n - s / n)]
    lam, mu = min(options, key=lambda lm: abs(lm[0] - S[0, 0]))
    target = np.diag([lam] + [mu] * (n - 1))
    resid = float(np.max(np.abs(S - target)))
    eig = np.linalg.eigvalsh(0.5 * (S + S.T))
    mult = int(np.sum(np.abs(eig - mu) <= STRUCTURE_TOL * max(1.0, abs(mu))))
    if abs(lam - mu) <= 1e-12 * max(1.0, abs(lam)):
        rho = 0.0
    else:
        rho = eigen_ratio(n, lam, mu)
    return lam, mu, mult, resid, rho, abs(a), s


def diagnose_slices(slices: np.ndarray, n: int) -> EqualityDiagnosis:
    """Equality structure for slices[:, :, α] (n × n each)."""
    lams, mus, mults, resids, rhos = [], [], [], [], []
    cs_sum = 0.0
    for al in range(slices.shape[2]):
        lam, mu, mult, resid, rho, abs_a, s = slice_structure(slices[:, :, al], n)
        lams.append(lam)
        mus.append(mu)
        mults.append(mult)
        resids.append(resid)
        rhos.append(rho)
        cs_sum += abs_a * s
    finite = [x for x in rhos if x is not None]
    spread = (max(finite) - min(finite)) if finite else 0.0
    tr2 = float(np.sum(np.einsum("jja->a", slices) ** 2))
    b = float(np.sum(slices * slices))
    bound = math.sqrt(tr2) * _gap_sqrt(n * b - tr2, n * b, n - 1)
    return EqualityDiagnosis(tuple(lams), tuple(mus), tuple(mults), tuple(resids), tuple(rhos), spread, bound - cs_sum)


def umbilicity_diagnose(data: ONeillData) -> EqualityDiagnosis:
    return diagnose_slices(data.T, data.ell)


def vertical_bracket(ell: int, H2: float, TH2: float) -> float:
    """(ℓ−1)/ℓ · (2ℓ‖H‖² − ‖T^H‖² − (ℓ−2)√(ℓ‖H‖²(‖T^H‖² − ℓ‖H‖²)/(ℓ−1)))."""
    root = math.sqrt(ell * H2) * _gap_sqrt(TH2 - ell * H2, TH2, ell - 1) if H2 > 0 else 0.0
    return (ell - 1) / ell * (2 * ell * H2 - TH2 - (ell - 2) * root)


def _pg(F, frame_or_pg) -> PointGeometry:
    if isinstance(frame_or_pg, PointGeometry):
        return frame_or_pg
    return point_geometry(F, frame_or_pg)


def _require_ell(pg: PointGeometry) -> int:
    ell = pg.frame.ell
    if ell < 2:
        raise GeometryError("the vertical bounds need fiber dimension >= 2")
    return ell


def _ric_v(pg: PointGeometry, convention) -> float:
    return float(np.einsum("jj->", pg.vvvv(convention)[0, :, :, 0]))


def _ric_h(pg: PointGeometry, convention) -> float:
    return float(np.einsum("jj->", pg.hhhh(convention)[0, :, :, 0]))


def _mixed(pg: PointGeometry, convention) -> float:
    ell = pg.frame.ell
    R = pg.RN1_in(convention)
    return float(sum(R[ell + i, j, j, ell + i] for i in range(pg.frame.r) for j in range(ell)))


def vertical_ricci_verify(F: RiemannianSubmersion, frame_or_pg, convention, tol_equality: float = EQUALITY_TOL, ric_n1=None, theorem="t31") -> InequalityVerdict:
    """Ric^ker(V₁) ≤ Ric_V^{N₁}(V₁) − (vertical bracket)."""
    pg = _pg(F, frame_or_pg)
    ell = _require_ell(pg)
    d = pg.data
    Rk, independent = pg.fiber(convention)
    lhs = float(np.einsum("jj->", Rk[0, :, :, 0]))
    ricv = _ric_v(pg, convention) if ric_n1 is None else ric_n1
    rhs = ricv - vertical_bracket(ell, d.H2, d.TH2)
    slack = rhs - lhs
    return _verdict(
        theorem, pg.frame.point, lhs, rhs, slack, convention, tol_equality,
        umbilicity_diagnose(d), independent_fiber_curvature=independent,
    )


def combined_ricci_terms(pg: PointGeometry, convention) -> dict[str, float]:
    """The individual pieces of the mixed vertical/horizontal bound."""
    ell = _require_ell(pg)
    d = pg.data
    T, A = d.T, d.A
    Rk, independent = pg.fiber(convention)
    Rh = pg.horizontal(convention)
    quarter = float(np.sum(T[0, 0, :] ** 2 + np.sum(np.einsum("jjt->jt", T)[1:], axis=0) ** 2 + 2 * np.sum(T[0, 1:, :] ** 2, axis=0)))
    exact_half = float(np.sum(T[0, 0, :] * d.traces - np.sum(T[0, :, :] ** 2, axis=0)))
    return {
        "ric_v_n1": _ric_v(pg, convention),
        "ric_h_n1": _ric_h(pg, convention),
        "mixed_n1": _mixed(pg, convention),
        "ric_v_ker": float(np.einsum("jj->", Rk[0, :, :, 0])),
        "ric_h_perp": float(np.einsum("jj->", Rh[0, :, :, 0])),
        "bracket": 0.5 * vertical_bracket(ell, d.H2, d.TH2),
        "exact_half": 0.5 * exact_half,
        "quarter": -0.25 * quarter,
        "a_terms": 3.0 * float(np.sum(A[0, 1:, :] ** 2)),
        "delta": -float(d.delta),
        "norms": d.TV2 - d.AH2 + ell**2 / 4.0 * d.H2,
        "independent": independent,
    }


def combined_ricci_verify(F: RiemannianSubmersion, frame_or_pg, convention, tol_equality: float = EQUALITY_TOL, lhs_override=None, theorem="t41") -> InequalityVerdict:
    """Mixed bound, with the first bracket in ℓ, the quarter term summed over t
    and the mixed curvature summed over all h_i, V_j."""
    pg = _pg(F, frame_or_pg)
    if pg.data.delta is None:
        raise GeometryError("the mixed bound needs δ(N)")
    t = combined_ricci_terms(pg, convention)
    lhs = t["ric_v_n1"] + t["ric_h_n1"] + t["mixed_n1"] if lhs_override is None else lhs_override
    common = t["ric_v_ker"] + t["ric_h_perp"] + t["quarter"] + t["a_terms"] + t["delta"] + t["norms"]
    rhs = common + t["bracket"]
    identity_rhs = common + t["exact_half"]
    ell = pg.frame.ell
    # Cauchy–Schwarz step of the bound, reported but not part of the verdict
    return _verdict(
        theorem, pg.frame.point, lhs, rhs, lhs - rhs, convention, tol_equality,
        umbilicity_diagnose(pg.data),
        identity_residual=abs(t["ric_v_n1"] + t["ric_h_n1"] + t["mixed_n1"] - identity_rhs),
        independent_fiber_curvature=t["independent"],
        fiber_dimension=ell,
    )


def scalar_decomposition_audit(F: RiemannianSubmersion, frame_or_pg, convention) -> float:
    """|2τ^{N₁} − (right-hand side of the O'Neill scalar-curvature decomposition)|."""
    pg = _pg(F, frame_or_pg)
    d = pg.data
    if d.delta is None:
        raise GeometryError("the scalar decomposition needs δ(N)")
    R = pg.RN1_in(convention)
    two_tau = float(np.einsum("abba->", R))
    Rk, _ = pg.fiber(convention)
    Rh = pg.horizontal(convention)
    ell = pg.frame.ell
    rhs = (
        float(np.einsum("ijji->", Rh))
        + float(np.einsum("ijji->", Rk))
        + ell**2 * d.H2
        + 3.0 * d.AV2
        - d.TH2
        - 2.0 * d.delta
        + 2.0 * (d.TV2 - d.AH2)
    )
    return abs(two_tau - rhs)


# --- space forms -------------------------------------------------------------------


def spaceform_ricci_values(kind: str, c: float, ell: int, r: int, Qv1_sq: float = 0.0, Ph1_sq: float = 0.0, mixed_P: float = 0.0) -> tuple[float, float, float]:
    """Closed forms of (Ric_V(v₁), Ric_H(h₁), Σ_i Σ_j R(h_i, v_j, v_j, h_i)), modern convention."""
    if kind == "real":
        return c * (ell - 1), c * (r - 1), c * ell * r
    if kind == "complex":
        return (
            c / 4 * (ell - 1) + 3 * c / 4 * Qv1_sq,
            c / 4 * (r - 1) + 3 * c / 4 * Ph1_sq,
            c / 4 * ell * r + 3 * c / 4 * mixed_P,
        )
    raise ValueError("kind must be 'real' or 'complex'")


def complex_split_norms(J: np.ndarray, g: np.ndarray, V: np.ndarray, H: np.ndarray) -> tuple[float, float, float]:
    """(‖Q v₁‖², ‖P h₁‖², Σ_j ‖P v_j‖²) with Q onto ker F*, P onto its complement."""
    vb, hb = list(V.T), list(H.T)
    _, Qv1 = holomorphic_split(J, V[:, 0], vb, g)
    _, Ph1 = holomorphic_split(J, H[:, 0], hb, g)
    mixed = 0.0
    for j in range(V.shape[1]):
        _, Pvj = holomorphic_split(J, V[:, j], hb, g)
        mixed += float(Pvj @ g @ Pvj)
    return float(Qv1 @ g @ Qv1), float(Ph1 @ g @ Ph1), mixed


def _point_space_form_residual(F, p, kind, c) -> float:
    R = riemann_components(F.domain, p, check_domain=False)
    g = metric_jet(F.domain, p, check_domain=False).g
    model = real_space_form_model(g, c) if kind == "real" else complex_space_form_model(g, F.domain.J, c)
    return float(np.max(np.abs(R - model)))


def _spaceform_verify(F, frame_or_pg, kind, c, convention, tol_equality, tag):
    pg = _pg(F, frame_or_pg)
    ell, r = _require_ell(pg), pg.frame.r
    if kind == "complex" and F.domain.J is None:
        raise SpaceFormError("complex space-form bound needs a complex structure on the domain")
    res = _point_space_form_residual(F, pg.frame.point, kind, c)
    if res > SPACE_FORM_TOL:
        raise SpaceFormError(f"domain is not a {kind} space form with c={c} (residual {res:.3g})")
    sigma = SignConvention.parse(convention).sign
    if kind == "complex":
        g = metric_jet(F.domain, pg.frame.point, check_domain=False).g
        q1, p1, pm = complex_split_norms(F.domain.J, g, pg.frame.V, pg.frame.H)
    else:
        q1 = p1 = pm = 0.0
    rv, rh, mixed = (sigma * x for x in spaceform_ricci_values(kind, c, ell, r, q1, p1, pm))
    mismatch = max(
        abs(rv - _ric_v(pg, convention)),
        abs(rh - _ric_h(pg, convention)),
        abs(mixed - _mixed(pg, convention)),
    )
    if mismatch > CLOSED_FORM_TOL:
        raise SpaceFormError(f"closed-form partial Ricci curvatures disagree with the numeric ones by {mismatch:.3g}")
    v = vertical_ricci_verify(F, pg, convention, tol_equality, ric_n1=rv, theorem=f"{tag}.v")
    hv = combined_ricci_verify(F, pg, convention, tol_equality, lhs_override=rv + rh + mixed, theorem=f"{tag}.hv")
    info = {"space_form_residual": res, "closed_form_mismatch": mismatch, "Qv1_sq": q1, "Ph1_sq": p1, "mixed_P_sq": pm}
    v.extra.update(info)
    hv.extra.update(info)
    return v, hv


def real_spaceform_verify(F: RiemannianSubmersion, frame_or_pg, c: float, convention, tol_equality: float = EQUALITY_TOL):
    """Both bounds with the real-space-form closed forms substituted; returns (v, hv)."""
    return _spaceform_verify(F, frame_or_pg, "real", c, convention, tol_equality, "t53")


def complex_spaceform_verify(F: RiemannianSubmersion, frame_or_pg, c: float, convention, tol_equality: float = EQUALITY_TOL):
    """Both bounds with the complex-space-form closed forms substituted; returns (v, hv)."""
    return _spaceform_verify(F, frame_or_pg, "complex", c, convention, tol_equality, "t54")
