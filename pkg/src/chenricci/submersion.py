"""Riemannian submersions: split frames, O'Neill tensors and curvature identities.

Frames are orthonormal fields built by Gram–Schmidt from g-orthogonal
projections of coordinate vectors. The construction runs on first-order
array jets, so the frame fields come with exact coordinate derivatives and
the connection coefficients ``C[b,a,k] = g(E_b, ∇_{E_a} E_k)`` are exact.
Only covariant derivatives of T and A (third metric derivatives) use
central differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import expr as ex
from .errors import ContractError, ConvergenceError, FrameError, GeometryError, RankError, UnavailableError
from .jets import ArrayJet, Jet
from .manifold import (
    ChartManifold,
    SignConvention,
    connection_at,
    metric_jet,
    riemann_components,
    riemann_from_jet,
)

PIVOT_TOL = 1e-10
KERNEL_TOL = 1e-9
ISOMETRY_TOL = 1e-8
SYMMETRY_CHECK_TOL = 1e-8
FD_REL_STEP = 1e-5
RICHARDSON_TOL = 1e-4


# --- the map -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SmoothMap:
    """Map components F^γ(x1..x_m1) between two chart manifolds."""

    domain: ChartManifold
    target: ChartManifold
    components: tuple[ex.Expr, ...]
    name: str = ""

    def __post_init__(self):
        if len(self.components) != self.target.dim:
            raise GeometryError(f"map has {len(self.components)} components, target dimension is {self.target.dim}")
        allowed = {ex.variable_name(i) for i in range(self.domain.dim)}
        for e in self.components:
            extra = ex.free_variables(e) - allowed
            if extra:
                raise GeometryError(f"map uses variables outside x1..x{self.domain.dim}: {sorted(extra)}")

    @property
    def m1(self) -> int:
        return self.domain.dim

    @property
    def m2(self) -> int:
        return self.target.dim


@dataclass(frozen=True)
class MapJet:
    value: np.ndarray  # (m2,)
    jac: np.ndarray  # (m2, m1)
    hess: np.ndarray  # (m2, m1, m1)


@lru_cache(maxsize=8192)
def _map_jet_cached(F: SmoothMap, key: tuple[float, ...]) -> MapJet:
    n = F.m1
    env: list = [0.0] * ex.MAX_VARIABLES
    for k in range(n):
        env[k] = Jet.variable(key[k], k, n, True)
    val = np.zeros(F.m2)
    jac = np.zeros((F.m2, n))
    hess = np.zeros((F.m2, n, n))
    for c, e in enumerate(F.components):
        out = ex.evaluate_jet(e, env)
        if isinstance(out, Jet):
            val[c], jac[c], hess[c] = out.v, out.g, out.h
        else:
            val[c] = out
    return MapJet(val, jac, hess)


def map_jet(F: SmoothMap, p) -> MapJet:
    return _map_jet_cached(F, tuple(float(x) for x in p))


@dataclass(frozen=True, eq=False)
class RiemannianSubmersion(SmoothMap):
    """A full-rank map whose differential is isometric on horizontal vectors."""

    def __post_init__(self):
        super().__post_init__()
        if self.m1 <= self.m2:
            raise GeometryError("a submersion needs dim(domain) > dim(target)")

    @property
    def ell(self) -> int:
        return self.m1 - self.m2

    @property
    def r(self) -> int:
        return self.m2

    def fiber_coordinates(self) -> tuple[int, ...] | None:
        """Coordinates spanning the fibers when the map is a coordinate projection."""
        idx = []
        for e in self.components:
            if not isinstance(e, ex.Var):
                return None
            idx.append(e.index)
        if len(set(idx)) != len(idx):
            return None
        return tuple(k for k in range(self.m1) if k not in idx)


def differential_at(F: SmoothMap, p) -> np.ndarray:
    """Jacobian of the map at ``p``; raises when the rank is below dim(target)."""
    jac = map_jet(F, p).jac.copy()
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.size < F.m2 or sv[-1] <= KERNEL_TOL * max(1.0, sv[0]):
        raise RankError(f"differential has rank < {F.m2} at {list(p)}", sv)
    return jac


# --- frames ------------------------------------------------------------------


@dataclass(frozen=True)
class FramePlan:
    """Deterministic recipe reproducing a frame at nearby points."""

    vertical: tuple  # sequence of pivots: int coordinate index or "seed"
    horizontal: tuple
    seed_vertical: tuple[float, ...] | None = None
    seed_horizontal: tuple[float, ...] | None = None


@dataclass(frozen=True, eq=False)
class SplitFrame:
    """Orthonormal vertical / horizontal frame at ``point``.

    ``V`` (m1×ℓ) and ``H`` (m1×r) hold the frame vectors as columns, in
    chart coordinates; ``dV[c,j,k] = ∂_k V_j^c`` (likewise ``dH``).
    """

    point: np.ndarray
    V: np.ndarray
    H: np.ndarray
    jac: np.ndarray
    dV: np.ndarray
    dH: np.ndarray
    plan: FramePlan

    @property
    def E(self) -> np.ndarray:
        return np.hstack([self.V, self.H])

    @property
    def dE(self) -> np.ndarray:
        return np.concatenate([self.dV, self.dH], axis=1)

    @property
    def ell(self) -> int:
        return self.V.shape[1]

    @property
    def r(self) -> int:
        return self.H.shape[1]


def _inner(u: ArrayJet, G: ArrayJet, v: ArrayJet) -> ArrayJet:
    return (u @ G) @ v


def _gram_schmidt(
    candidates, G: ArrayJet, need: int, fixed: Sequence | None
) -> tuple[list[ArrayJet], tuple]:
    """Orthonormalize candidates (label, jet) in order, keeping ``need`` of them."""
    basis: list[ArrayJet] = []
    used = []
    lookup = dict(candidates)
    order = fixed if fixed is not None else [label for label, _ in candidates]
    for label in order:
        if len(basis) == need:
            break
        w = lookup[label]
        for u in basis:
            w = w - u.scale(_inner(u, G, w))
        norm2 = float(_inner(w, G, w).val)
        if fixed is None and norm2 < PIVOT_TOL**2:
            continue
        if norm2 <= 1e-24:
            raise FrameError(f"frame pivot {label!r} degenerates at a nearby point")
        basis.append(w.scale(_inner(w, G, w).rsqrt()))
        used.append(label)
    if len(basis) < need:
        raise FrameError(f"only {len(basis)} of {need} independent frame vectors found")
    return basis, tuple(used)


def _projectors(F: SmoothMap, p) -> tuple[ArrayJet, ArrayJet, ArrayJet, np.ndarray]:
    """Jets of the horizontal/vertical projectors and of the metric at ``p``."""
    n = F.m1
    mj = metric_jet(F.domain, p, check_domain=False)
    G = ArrayJet(mj.g, mj.dg)
    mp = map_jet(F, p)
    Jm = ArrayJet(mp.jac, mp.hess)
    Gi = G.inv()
    GiJt = Gi @ Jm.T
    K = (Jm @ GiJt).inv()
    Ph = (GiJt @ K) @ Jm
    Pv = ArrayJet.constant(np.eye(n), n) - Ph
    return Ph, Pv, G, mp.jac


def split_frame_at(
    F: RiemannianSubmersion,
    p,
    seed_vertical=None,
    seed_horizontal=None,
    plan: FramePlan | None = None,
) -> SplitFrame:
    """Orthonormal split frame with exact first derivatives of the frame fields.

    A seed vector, when given, is projected onto its subspace and becomes V₁
    (or h₁). With ``plan`` the pivots chosen at another point are reused, so
    the frame is a smooth field around that point.
    """
    p = np.asarray(p, dtype=float)
    n = F.m1
    if plan is not None:
        seed_vertical, seed_horizontal = plan.seed_vertical, plan.seed_horizontal
    else:
        differential_at(F, p)
    Ph, Pv, G, jac = _projectors(F, p)

    def candidates(P: ArrayJet, seed):
        out = []
        if seed is not None:
            s = ArrayJet.constant(np.asarray(seed, dtype=float), n)
            w = P @ s
            if plan is None and float(_inner(w, G, w).val) < PIVOT_TOL**2:
                raise FrameError("seed vector is orthogonal to the requested subspace")
            out.append(("seed", w))
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            out.append((k, P @ ArrayJet.constant(e, n)))
        return out

    vs, vpiv = _gram_schmidt(candidates(Pv, seed_vertical), G, F.ell, plan.vertical if plan else None)
    hs, hpiv = _gram_schmidt(candidates(Ph, seed_horizontal), G, F.r, plan.horizontal if plan else None)
    V = np.column_stack([v.val for v in vs])
    H = np.column_stack([h.val for h in hs])
    dV = np.stack([v.der for v in vs], axis=1)
    dH = np.stack([h.der for h in hs], axis=1)
    if plan is None:
        plan = FramePlan(
            vpiv,
            hpiv,
            None if seed_vertical is None else tuple(map(float, seed_vertical)),
            None if seed_horizontal is None else tuple(map(float, seed_horizontal)),
        )
        _check_frame(F, p, V, H, G.val, jac)
    return SplitFrame(p, V, H, jac, dV, dH, plan)


def _check_frame(F: SmoothMap, p, V, H, g, jac) -> None:
    E = np.hstack([V, H])
    gram_err = float(np.max(np.abs(E.T @ g @ E - np.eye(E.shape[1]))))
    if gram_err > 1e-10:
        raise FrameError(f"frame Gram matrix deviates from identity by {gram_err:.3g}")
    scale = max(1.0, float(np.max(np.abs(jac))))
    if V.size and float(np.max(np.abs(jac @ V))) > KERNEL_TOL * scale:
        raise FrameError("vertical frame is not in the kernel of the differential")


def isometry_residual(F: SmoothMap, frame: SplitFrame) -> float:
    """max |g₂(F*h_i, F*h_j) − δ_ij| over the horizontal frame."""
    g2 = metric_jet(F.target, map_jet(F, frame.point).value, check_domain=False).g
    Fh = frame.jac @ frame.H
    return float(np.max(np.abs(Fh.T @ g2 @ Fh - np.eye(Fh.shape[1]))))


def check_submersion(F: RiemannianSubmersion, frame: SplitFrame, tol: float = ISOMETRY_TOL) -> float:
    res = isometry_residual(F, frame)
    if res > tol:
        raise ContractError(f"{F.name or 'map'} is not a Riemannian submersion at {list(frame.point)} (isometry residual {res:.3g})")
    return res


# --- connection coefficients in the frame --------------------------------------


def frame_connection(F: SmoothMap, frame: SplitFrame) -> np.ndarray:
    """``C[b,a,k] = g(E_b, ∇_{E_a} Ẽ_k)`` with E = (V₁..V_ℓ, h₁..h_r)."""
    E, dE = frame.E, frame.dE
    g = metric_jet(F.domain, frame.point, check_domain=False).g
    gam = connection_at(F.domain, frame.point, check_domain=False).gamma
    nab = np.einsum("ckx,xa->cak", dE, E) + np.einsum("cxy,xa,yk->cak", gam, E, E)
    return np.einsum("cb,cd,dak->bak", E, g, nab)


def _T_apply(C: np.ndarray, ell: int, e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """T_E F in frame components (tensorial formula in terms of the frame fields)."""
    v, h = slice(0, ell), slice(ell, None)
    out = np.zeros(C.shape[0])
    out[h] = np.einsum("bak,a,k->b", C[h, v, v], e[v], f[v])
    out[v] = np.einsum("bak,a,k->b", C[v, v, h], e[v], f[h])
    return out


def _A_apply(C: np.ndarray, ell: int, e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """A_E F in frame components."""
    v, h = slice(0, ell), slice(ell, None)
    out = np.zeros(C.shape[0])
    out[v] = np.einsum("bak,a,k->b", C[v, h, h], e[h], f[h])
    out[h] = np.einsum("bak,a,k->b", C[h, h, v], e[h], f[v])
    return out


def _symmetrize(X: np.ndarray, sign: float, what: str) -> np.ndarray:
    """(X + sign·Xᵀ)/2 over the first two axes after checking the defect."""
    Xt = X.transpose(1, 0, 2)
    defect = float(np.max(np.abs(X - sign * Xt))) if X.size else 0.0
    if defect > SYMMETRY_CHECK_TOL * max(1.0, float(np.max(np.abs(X)))):
        raise FrameError(f"{what} fails its (anti)symmetry check by {defect:.3g}")
    return 0.5 * (X + sign * Xt)


def tensor_T_at(F: RiemannianSubmersion, frame: SplitFrame) -> np.ndarray:
    """``T[i,j,α] = g(T_{V_i} V_j, h_α)``, shape (ℓ, ℓ, r)."""
    C = frame_connection(F, frame)
    ell = frame.ell
    return _symmetrize(C[ell:, :ell, :ell].transpose(1, 2, 0), 1.0, "T")


def tensor_A_at(F: RiemannianSubmersion, frame: SplitFrame) -> np.ndarray:
    """``A[i,j,α] = g(A_{h_i} h_j, V_α)``, shape (r, r, ℓ)."""
    C = frame_connection(F, frame)
    ell = frame.ell
    return _symmetrize(C[:ell, ell:, ell:].transpose(1, 2, 0), -1.0, "A")


# --- O'Neill data ----------------------------------------------------------------


@dataclass(frozen=True)
class ONeillData:
    T: np.ndarray  # (ℓ, ℓ, r)
    A: np.ndarray  # (r, r, ℓ)
    H: np.ndarray  # (r,) mean curvature components
    H2: float
    TV2: float
    TH2: float
    AH2: float
    AV2: float
    traces: np.ndarray  # per α: Σ_j T_jj^α
    squared_traces: np.ndarray  # per α: Σ_ij (T_ij^α)²
    delta: float | None = None

    @property
    def ell(self) -> int:
        return self.T.shape[0]

    @property
    def r(self) -> int:
        return self.T.shape[2]


def mean_curvature_at(data: ONeillData) -> tuple[np.ndarray, float]:
    H = np.einsum("jja->a", data.T) / data.ell
    return H, float(H @ H)


def oneill_data_at(F: RiemannianSubmersion, frame: SplitFrame, with_delta: bool = True) -> ONeillData:
    C = frame_connection(F, frame)
    ell = frame.ell
    T = _symmetrize(C[ell:, :ell, :ell].transpose(1, 2, 0), 1.0, "T")
    A = _symmetrize(C[:ell, ell:, ell:].transpose(1, 2, 0), -1.0, "A")
    traces = np.einsum("jja->a", T)
    sq = np.einsum("ija,ija->a", T, T)
    H = traces / ell
    # ‖T^V‖² from g(T_{V_j} h_i, T_{V_j} h_i): T_{V_j} h_i = V∇_{V_j} h̃_i
    TV2 = float(np.sum(C[:ell, :ell, ell:] ** 2))
    # ‖A^H‖² from g(A_{h_i} V_j, A_{h_i} V_j): A_{h_i} V_j = H∇_{h_i} Ṽ_j
    AH2 = float(np.sum(C[ell:, ell:, :ell] ** 2))
    delta = delta_N_at(F, frame) if with_delta else None
    return ONeillData(
        T=T,
        A=A,
        H=H,
        H2=float(H @ H),
        TV2=TV2,
        TH2=float(np.sum(T * T)),
        AH2=AH2,
        AV2=float(np.sum(A * A)),
        traces=traces,
        squared_traces=sq,
        delta=delta,
    )


def norm_consistency(data: ONeillData) -> dict[str, float]:
    """Residuals of the definition-level identities among the O'Neill norms."""
    ell = data.ell
    return {
        "TV_vs_components": abs(data.TV2 - float(np.sum(data.T**2))),
        "AH_vs_components": abs(data.AH2 - float(np.sum(data.A**2))),
        "mean_curvature": abs(ell**2 * data.H2 - float(np.sum(data.traces**2))),
        "TH_vs_components": abs(data.TH2 - float(np.sum(data.squared_traces))),
    }


# --- covariant derivatives of T and A by central differences --------------------


def _fd_step(p: np.ndarray) -> float:
    return FD_REL_STEP * (1.0 + float(np.max(np.abs(p))))


def _tensor_field(F: SmoothMap, frame: SplitFrame, tensor: str, pairs) -> np.ndarray:
    """Coordinates of Φ(Ẽ_a, Ẽ_b) for each (a, b) in ``pairs``; shape (len, m1)."""
    C = frame_connection(F, frame)
    ell, m = frame.ell, frame.E.shape[1]
    apply = _T_apply if tensor == "T" else _A_apply
    eye = np.eye(m)
    return np.array([frame.E @ apply(C, ell, eye[a], eye[b]) for a, b in pairs])


def covariant_derivative_fd(
    F: RiemannianSubmersion, frame: SplitFrame, tensor: str, direction: int, pairs
) -> np.ndarray:
    """Frame components of (∇_{E_x} Φ)(E_a, E_b), Φ ∈ {T, A}, x = ``direction``.

    (∇_X Φ)(Ẽa, Ẽb) = ∇_X(Φ(Ẽa, Ẽb)) − Φ(∇_X Ẽa, Ẽb) − Φ(Ẽa, ∇_X Ẽb); the
    first term differentiates the coordinate field Φ(Ẽa, Ẽb) along X by
    Richardson-extrapolated central differences, the rest is exact.
    """
    p = frame.point
    X = frame.E[:, direction]
    eps = _fd_step(p)

    def field(q):
        fq = split_frame_at(F, q, plan=frame.plan)
        return _tensor_field(F, fq, tensor, pairs)

    def central(h):
        return (field(p + h * X) - field(p - h * X)) / (2.0 * h)

    d1, d2 = central(eps), central(0.5 * eps)
    rich = (4.0 * d2 - d1) / 3.0
    err = float(np.max(np.abs(rich - d2)))
    if err > RICHARDSON_TOL * max(1.0, float(np.max(np.abs(rich)))):
        raise ConvergenceError(f"finite-difference derivative of {tensor} did not converge (estimate gap {err:.3g})")
    C = frame_connection(F, frame)
    ell = frame.ell
    gam = connection_at(F.domain, p, check_domain=False).gamma
    W0 = _tensor_field(F, frame, tensor, pairs)
    nabla_W = rich + np.einsum("cxy,x,py->pc", gam, X, W0)
    g = metric_jet(F.domain, p, check_domain=False).g
    comps = nabla_W @ g @ frame.E  # frame components (E orthonormal)
    apply = _T_apply if tensor == "T" else _A_apply
    m = frame.E.shape[1]
    eye = np.eye(m)
    out = np.empty((len(pairs), m))
    for n_, (a, b) in enumerate(pairs):
        out[n_] = comps[n_] - apply(C, ell, C[:, direction, a], eye[b]) - apply(C, ell, eye[a], C[:, direction, b])
    return out


def delta_N_at(F: RiemannianSubmersion, frame: SplitFrame) -> float:
    """Σ_i Σ_j g((∇_{h_i} T)(V_j, V_j), h_i)."""
    ell, r = frame.ell, frame.r
    pairs = [(j, j) for j in range(ell)]
    total = 0.0
    for i in range(r):
        D = covariant_derivative_fd(F, frame, "T", ell + i, pairs)
        total += float(np.sum(D[:, ell + i]))
    return total


# --- curvature pieces -----------------------------------------------------------------


def domain_curvature_frame(F: SmoothMap, frame: SplitFrame) -> np.ndarray:
    """Modern R^{N₁} against the frame E, shape (m, m, m, m)."""
    R = riemann_components(F.domain, frame.point, check_domain=False)
    E = frame.E
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", R, E, E, E, E)


def fiber_curvature_frame(F: RiemannianSubmersion, frame: SplitFrame) -> np.ndarray:
    """Modern intrinsic curvature of the fiber against V, from the restricted metric.

    Requires the map to be a coordinate projection so the fiber through p is
    a coordinate slice; raises :class:`UnavailableError` otherwise.
    """
    idx = F.fiber_coordinates()
    if idx is None:
        raise UnavailableError(f"{F.name or 'map'} has no fiber chart (map is not a coordinate projection)")
    ix = np.array(idx)
    mj = metric_jet(F.domain, frame.point, check_domain=False)
    g = mj.g[np.ix_(ix, ix)]
    dg = mj.dg[np.ix_(ix, ix, ix)]
    d2g = mj.d2g[np.ix_(ix, ix, ix, ix)]
    Rf = riemann_from_jet(g, dg, d2g)
    Vf = frame.V[ix, :]
    if frame.V.shape[0] > len(ix):
        other = np.setdiff1d(np.arange(frame.V.shape[0]), ix)
        if float(np.max(np.abs(frame.V[other, :]))) > 1e-10:
            raise FrameError("vertical frame leaves the fiber coordinate slice")
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", Rf, Vf, Vf, Vf, Vf)


def target_curvature_frame(F: SmoothMap, frame: SplitFrame) -> np.ndarray:
    """Modern R^{N₂} at F(p) against F*h₁..F*h_r."""
    q = map_jet(F, frame.point).value
    R = riemann_components(F.target, q, check_domain=False)
    Fh = frame.jac @ frame.H
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", R, Fh, Fh, Fh, Fh)


def _TT(T: np.ndarray) -> np.ndarray:
    """P[a,b,c,d] = g(T_{V_a}V_b, T_{V_c}V_d)."""
    return np.einsum("abt,cdt->abcd", T, T)


def _gauss_terms(T: np.ndarray) -> np.ndarray:
    """g(T_{U1}U4, T_{U2}U3) − g(T_{U2}U4, T_{U1}U3) as an (i,j,k,l) array."""
    P = _TT(T)
    return np.einsum("iljk->ijkl", P) - np.einsum("jlik->ijkl", P)


def _AA(A: np.ndarray) -> np.ndarray:
    """Q[a,b,c,d] = g(A_{h_a}h_b, A_{h_c}h_d)."""
    return np.einsum("abt,cdt->abcd", A, A)


def fiber_curvature_from_identity(RN1_vvvv: np.ndarray, T: np.ndarray) -> np.ndarray:
    """R^ker obtained by solving the vertical Gauss-type relation (not independent)."""
    return RN1_vvvv - _gauss_terms(T)


def horizontal_curvature(RN1_hhhh: np.ndarray, A: np.ndarray) -> np.ndarray:
    """R^{(ker F*)⊥} obtained from the horizontal relation:
    R^⊥ = R^{N₁} + 2g(A12,A34) − g(A23,A14) + g(A13,A24)."""
    Q = _AA(A)
    return RN1_hhhh + 2.0 * Q - np.einsum("bcad->abcd", Q) + np.einsum("acbd->abcd", Q)


@dataclass(frozen=True)
class PointGeometry:
    """Everything the submersion theorems need at one point (modern convention)."""

    frame: SplitFrame
    data: ONeillData
    RN1: np.ndarray  # m⁴ frame components
    Rker: np.ndarray | None  # ℓ⁴ from the fiber chart, None when unavailable
    RN2: np.ndarray  # r⁴ on the pushed horizontal frame

    def RN1_in(self, convention) -> np.ndarray:
        return SignConvention.parse(convention).sign * self.RN1

    def vvvv(self, convention) -> np.ndarray:
        ell = self.frame.ell
        return self.RN1_in(convention)[:ell, :ell, :ell, :ell]

    def hhhh(self, convention) -> np.ndarray:
        ell = self.frame.ell
        return self.RN1_in(convention)[ell:, ell:, ell:, ell:]

    def fiber(self, convention) -> tuple[np.ndarray, bool]:
        """(R^ker, independent?) in ``convention``."""
        if self.Rker is not None:
            return SignConvention.parse(convention).sign * self.Rker, True
        return fiber_curvature_from_identity(self.vvvv(convention), self.data.T), False

    def horizontal(self, convention) -> np.ndarray:
        return horizontal_curvature(self.hhhh(convention), self.data.A)


def point_geometry(F: RiemannianSubmersion, p, seed_vertical=None, seed_horizontal=None, with_delta=True) -> PointGeometry:
    frame = split_frame_at(F, p, seed_vertical, seed_horizontal)
    check_submersion(F, frame)
    data = oneill_data_at(F, frame, with_delta)
    try:
        Rker = fiber_curvature_frame(F, frame)
    except UnavailableError:
        Rker = None
    return PointGeometry(frame, data, domain_curvature_frame(F, frame), Rker, target_curvature_frame(F, frame))


# --- identities ------------------------------------------------------------------------


def vertical_gauss_audit(pg: PointGeometry, convention) -> float:
    """max |R^{N₁}(U1..U4) − R^ker − g(T_{U1}U4, T_{U2}U3) + g(T_{U2}U4, T_{U1}U3)|."""
    if pg.Rker is None:
        raise UnavailableError("no independent fiber curvature for the vertical identity")
    rhs = pg.fiber(convention)[0] + _gauss_terms(pg.data.T)
    return float(np.max(np.abs(pg.vvvv(convention) - rhs)))


def horizontal_curvature_audit(pg: PointGeometry, convention) -> float:
    """Horizontal relation with R^⊥ taken as the target curvature R^{N₂}(F*·)."""
    sign = SignConvention.parse(convention).sign
    Q = _AA(pg.data.A)
    rhs = sign * pg.RN2 - 2.0 * Q + np.einsum("bcad->abcd", Q) - np.einsum("acbd->abcd", Q)
    return float(np.max(np.abs(pg.hhhh(convention) - rhs)))


def mixed_curvature_audit(F: RiemannianSubmersion, pg: PointGeometry, convention) -> float:
    """Mixed relation R(Y1,U1,Y2,U2) with both covariant-derivative terms."""
    frame, C = pg.frame, frame_connection(F, pg.frame)
    ell, r = frame.ell, frame.r
    R = pg.RN1_in(convention)
    m = ell + r
    eye = np.eye(m)
    vpairs = [(a, b) for a in range(ell) for b in range(ell)]
    hpairs = [(ell + i, ell + k) for i in range(r) for k in range(r)]
    dT = {i: covariant_derivative_fd(F, frame, "T", ell + i, vpairs) for i in range(r)}
    dA = {a: covariant_derivative_fd(F, frame, "A", a, hpairs) for a in range(ell)}
    worst = 0.0
    for i1 in range(r):
        for i2 in range(r):
            y1, y2 = ell + i1, ell + i2
            for u1 in range(ell):
                for u2 in range(ell):
                    term_t = dT[i1][vpairs.index((u1, u2))][y2]
                    term_a = dA[u1][hpairs.index((y1, y2))][u2]
                    t1 = _T_apply(C, ell, eye[u1], eye[y1])
                    t2 = _T_apply(C, ell, eye[u2], eye[y2])
                    a2 = _A_apply(C, ell, eye[y2], eye[u2])
                    a1 = _A_apply(C, ell, eye[y1], eye[u1])
                    rhs = term_t + term_a - t1 @ t2 + a2 @ a1
                    worst = max(worst, abs(R[y1, u1, y2, u2] - rhs))
    return float(worst)


def identity_audit(F: RiemannianSubmersion, frame_or_pg, which: str, convention) -> float:
    pg = frame_or_pg if isinstance(frame_or_pg, PointGeometry) else _geometry_from_frame(F, frame_or_pg)
    which = str(which)
    if which == "vertical":
        return vertical_gauss_audit(pg, convention)
    if which == "horizontal":
        return horizontal_curvature_audit(pg, convention)
    if which == "mixed":
        return mixed_curvature_audit(F, pg, convention)
    raise ValueError(f"unknown identity {which!r}")


def _geometry_from_frame(F: RiemannianSubmersion, frame: SplitFrame) -> PointGeometry:
    data = oneill_data_at(F, frame, with_delta=False)
    try:
        Rker = fiber_curvature_frame(F, frame)
    except UnavailableError:
        Rker = None
    return PointGeometry(frame, data, domain_curvature_frame(F, frame), Rker, target_curvature_frame(F, frame))


def vertical_ricci_identity(pg: PointGeometry, convention) -> float:
    """|Ric^ker(V₁) − Ric_V^{N₁}(V₁) + Σ_α(T₁₁^α Σ_j T_jj^α − Σ_j (T₁ⱼ^α)²)|."""
    Rk, _ = pg.fiber(convention)
    T = pg.data.T
    ric_ker = float(np.sum(Rk[0, :, :, 0].diagonal()))
    ric_n1 = float(np.sum(pg.vvvv(convention)[0, :, :, 0].diagonal()))
    corr = float(np.sum(T[0, 0, :] * pg.data.traces - np.sum(T[0, :, :] ** 2, axis=0)))
    return abs(ric_ker - (ric_n1 - corr))


def squared_norm_expansion_residual(T) -> float:
    """Residual of the expansion of Σ_t Σ_ij (T_ij^t)² in terms of ℓ²‖H‖² and T₁ⱼ."""
    T = np.asarray(T, dtype=float)
    ell = T.shape[0]
    lhs = float(np.sum(T * T))
    traces = np.einsum("jjt->t", T)
    d = np.einsum("jjt->jt", T)
    rhs = 0.5 * float(np.sum(traces**2))
    rhs += 0.5 * float(np.sum((d[0] - np.sum(d[1:], axis=0)) ** 2))
    rhs += 2.0 * float(np.sum(T[0, 1:, :] ** 2))
    pair = 0.0
    for i in range(1, ell):
        for j in range(i + 1, ell):
            pair += float(np.sum(d[i] * d[j] - T[i, j, :] ** 2))
    rhs -= 2.0 * pair
    return abs(lhs - rhs)
