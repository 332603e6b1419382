"""Single-chart Riemannian manifolds and their curvature.

Everything is computed in the modern convention

    R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z,   R(A,B,C,D) = g(R(A,B)C, D),

so a round sphere has R(X,Y,Y,X) = +1 for orthonormal X, Y. The ``oneill``
convention is the global negation, applied only when a tensor is requested
in that convention.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from .errors import ContractError, GeometryError, MetricError, OutsideDomainError
from .jets import Jet
from .sampling import halton_points

PD_THRESHOLD = 1e-10
ORTHONORMAL_TOL = 1e-10
J_COMPAT_TOL = 1e-10


class SignConvention(str, enum.Enum):
    MODERN = "modern"
    ONEILL = "oneill"

    @property
    def sign(self) -> float:
        return 1.0 if self is SignConvention.MODERN else -1.0

    def flipped(self) -> "SignConvention":
        return SignConvention.ONEILL if self is SignConvention.MODERN else SignConvention.MODERN

    @classmethod
    def parse(cls, value) -> "SignConvention":
        return value if isinstance(value, cls) else cls(str(value).lower())


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise GeometryError("box bounds have different lengths")
        for a, b in zip(self.lo, self.hi):
            if not a <= b:
                raise GeometryError(f"empty box interval [{a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, p, tol: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return bool(np.all(p >= lo - tol) and np.all(p <= hi + tol))

    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def corners(self) -> np.ndarray:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        d = self.dim
        idx = (np.arange(2**d)[:, None] >> np.arange(d)) & 1
        return np.where(idx == 1, hi, lo)

    def sample(self, count: int, seed: int) -> np.ndarray:
        return halton_points(self.lo, self.hi, count, seed)


@dataclass(frozen=True, eq=False)
class ChartManifold:
    """A coordinate box with a metric given by expressions in x1..x_dim.

    ``metric[i][j]`` holds the full symmetric matrix of expressions. Build
    with :meth:`from_entries`, which stores the i <= j entries once.
    """

    dim: int
    metric: tuple[tuple[ex.Expr, ...], ...]
    box: Box
    J: np.ndarray | None = None
    name: str = ""
    sample_box: Box | None = None

    def __post_init__(self):
        if self.dim < 1 or self.dim > ex.MAX_VARIABLES:
            raise GeometryError(f"dimension must be in 1..{ex.MAX_VARIABLES}")
        if len(self.metric) != self.dim or any(len(row) != self.dim for row in self.metric):
            raise GeometryError("metric matrix shape does not match dimension")
        if self.box.dim != self.dim:
            raise GeometryError("coordinate box dimension does not match manifold")
        allowed = {ex.variable_name(i) for i in range(self.dim)}
        for row in self.metric:
            for e in row:
                extra = ex.free_variables(e) - allowed
                if extra:
                    raise GeometryError(f"metric uses variables outside x1..x{self.dim}: {sorted(extra)}")
        if self.J is not None:
            J = np.asarray(self.J, dtype=float)
            if J.shape != (self.dim, self.dim) or self.dim % 2:
                raise ContractError("complex structure needs an even-dimensional square matrix")
            if not np.array_equal(J @ J, -np.eye(self.dim)):
                raise ContractError("complex structure does not satisfy J^2 = -I exactly")
            object.__setattr__(self, "J", J)

    @classmethod
    def from_entries(
        cls,
        dim: int,
        entries: Mapping[tuple[int, int], str | ex.Expr],
        box: Box,
        J=None,
        name: str = "",
        sample_box: Box | None = None,
    ) -> "ChartManifold":
        """``entries`` maps zero-based (i, j) with i <= j to an expression; missing entries are 0."""
        zero = ex.Num(0.0)
        rows = [[zero] * dim for _ in range(dim)]
        for (i, j), value in entries.items():
            if not (0 <= i <= j < dim):
                raise GeometryError(f"metric entry ({i + 1},{j + 1}) must satisfy 1 <= i <= j <= {dim}")
            e = ex.parse(value) if isinstance(value, str) else value
            rows[i][j] = rows[j][i] = e
        return cls(dim, tuple(tuple(r) for r in rows), box, J, name, sample_box)

    @classmethod
    def euclidean(cls, dim: int, box: Box, J=None, name: str = "euclidean") -> "ChartManifold":
        return cls.from_entries(dim, {(i, i): "1" for i in range(dim)}, box, J, name)

    @property
    def sampling_box(self) -> Box:
        return self.sample_box or self.box

    def unique_entries(self) -> list[tuple[int, int, ex.Expr]]:
        return [(i, j, self.metric[i][j]) for i in range(self.dim) for j in range(i, self.dim)]


# --- metric and derivatives -------------------------------------------------


@dataclass(frozen=True)
class MetricJet:
    """g, ∂g and ∂²g at a point: ``dg[a,b,c] = ∂_c g_ab``, ``d2g[a,b,c,d] = ∂_c∂_d g_ab``."""

    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray


def _check_pd(g: np.ndarray, p) -> None:
    w = np.linalg.eigvalsh(g)
    if not np.all(np.isfinite(w)) or w[0] <= PD_THRESHOLD:
        raise MetricError(f"metric is not positive definite at {list(np.round(p, 12))}: smallest eigenvalue {w[0]:.6g}", float(w[0]))


def _point_key(p) -> tuple[float, ...]:
    return tuple(float(x) for x in p)


@lru_cache(maxsize=8192)
def _metric_jet_cached(M: ChartManifold, key: tuple[float, ...]) -> MetricJet:
    n = M.dim
    env: list = [0.0] * ex.MAX_VARIABLES
    for k in range(n):
        env[k] = Jet.variable(key[k], k, n, True)
    g = np.zeros((n, n))
    dg = np.zeros((n, n, n))
    d2g = np.zeros((n, n, n, n))
    for i, j, e in M.unique_entries():
        out = ex.evaluate_jet(e, env)
        if isinstance(out, Jet):
            g[i, j], dg[i, j], d2g[i, j] = out.v, out.g, out.h
        else:
            g[i, j] = out
        g[j, i], dg[j, i], d2g[j, i] = g[i, j], dg[i, j], d2g[i, j]
    _check_pd(g, key)
    return MetricJet(g, dg, d2g)


def _require_domain(M: ChartManifold, p) -> None:
    if len(p) != M.dim:
        raise GeometryError(f"point has {len(p)} coordinates, manifold has dimension {M.dim}")
    if not M.box.contains(p):
        raise OutsideDomainError(f"point {list(p)} lies outside the coordinate box of {M.name or 'manifold'}")


def metric_jet(M: ChartManifold, p, check_domain: bool = True) -> MetricJet:
    p = np.asarray(p, dtype=float)
    if check_domain:
        _require_domain(M, p)
    return _metric_jet_cached(M, _point_key(p))


def metric_at(M: ChartManifold, p) -> np.ndarray:
    """Positive-definite metric matrix at ``p``."""
    return metric_jet(M, p).g.copy()


@dataclass(frozen=True)
class Connection:
    """Christoffel symbols ``gamma[k,i,j] = Γ^k_ij`` and ``dgamma[k,i,j,l] = ∂_l Γ^k_ij``."""

    ginv: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray


@lru_cache(maxsize=8192)
def _connection_cached(M: ChartManifold, key: tuple[float, ...]) -> Connection:
    mj = _metric_jet_cached(M, key)
    ginv = np.linalg.inv(mj.g)
    dg, d2g = mj.dg, mj.d2g
    # first kind: Γ_{m,ij} = ½(∂_i g_jm + ∂_j g_im − ∂_m g_ij)
    first = 0.5 * (
        np.einsum("jmi->mij", dg) + np.einsum("imj->mij", dg) - np.einsum("ijm->mij", dg)
    )
    dfirst = 0.5 * (
        np.einsum("jmil->mijl", d2g) + np.einsum("imjl->mijl", d2g) - np.einsum("ijml->mijl", d2g)
    )
    gamma = np.einsum("km,mij->kij", ginv, first)
    dginv = -np.einsum("ka,abl,bm->kml", ginv, dg, ginv)
    dgamma = np.einsum("kml,mij->kijl", dginv, first) + np.einsum("km,mijl->kijl", ginv, dfirst)
    return Connection(ginv, gamma, dgamma)


def connection_at(M: ChartManifold, p, check_domain: bool = True) -> Connection:
    p = np.asarray(p, dtype=float)
    if check_domain:
        _require_domain(M, p)
    return _connection_cached(M, _point_key(p))


def christoffel_at(M: ChartManifold, p) -> np.ndarray:
    """``Γ[k,i,j] = Γ^k_ij``, symmetric in (i, j)."""
    return connection_at(M, p).gamma.copy()


# --- curvature ---------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureTensor:
    """``components[i,j,k,l] = R(∂_i, ∂_j, ∂_k, ∂_l)`` in the stated convention."""

    point: np.ndarray
    components: np.ndarray
    convention: SignConvention = SignConvention.MODERN

    def in_convention(self, convention) -> "CurvatureTensor":
        convention = SignConvention.parse(convention)
        if convention is self.convention:
            return self
        return CurvatureTensor(self.point, -self.components, convention)

    def value(self, a, b, c, d) -> float:
        return float(np.einsum("ijkl,i,j,k,l->", self.components, a, b, c, d))

    def frame_components(self, E: np.ndarray) -> np.ndarray:
        """Components against the columns of ``E`` (shape dim × m)."""
        return np.einsum("ijkl,ia,jb,kc,ld->abcd", self.components, E, E, E, E)

    def symmetry_residual(self) -> float:
        """Worst violation of the algebraic symmetries, relative to the largest component."""
        R = self.components
        scale = max(1.0, float(np.max(np.abs(R))))
        res = max(
            np.max(np.abs(R + R.transpose(1, 0, 2, 3))),
            np.max(np.abs(R + R.transpose(0, 1, 3, 2))),
            np.max(np.abs(R - R.transpose(2, 3, 0, 1))),
            np.max(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3))),
        )
        return float(res) / scale


def riemann_from_jet(g: np.ndarray, dg: np.ndarray, d2g: np.ndarray) -> np.ndarray:
    """Modern-convention ``R_ijkl`` from a metric and its first two derivatives."""
    ginv = np.linalg.inv(g)
    first = 0.5 * (np.einsum("jmi->mij", dg) + np.einsum("imj->mij", dg) - np.einsum("ijm->mij", dg))
    dfirst = 0.5 * (
        np.einsum("jmil->mijl", d2g) + np.einsum("imjl->mijl", d2g) - np.einsum("ijml->mijl", d2g)
    )
    G = np.einsum("km,mij->kij", ginv, first)
    dginv = -np.einsum("ka,abl,bm->kml", ginv, dg, ginv)
    dG = np.einsum("kml,mij->kijl", dginv, first) + np.einsum("km,mijl->kijl", ginv, dfirst)
    return _riemann(g, G, dG)


def _riemann(g: np.ndarray, G: np.ndarray, dG: np.ndarray) -> np.ndarray:
    # R^l_{kij} = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    Rup = (
        np.einsum("ljki->lkij", dG)
        - np.einsum("likj->lkij", dG)
        + np.einsum("lim,mjk->lkij", G, G)
        - np.einsum("ljm,mik->lkij", G, G)
    )
    return np.einsum("lm,mkij->ijkl", g, Rup)


def riemann_components(M: ChartManifold, p, check_domain: bool = True) -> np.ndarray:
    """Modern-convention ``R_ijkl`` at ``p``."""
    p = np.asarray(p, dtype=float)
    con = connection_at(M, p, check_domain)
    return _riemann(metric_jet(M, p, False).g, con.gamma, con.dgamma)


def riemann_at(M: ChartManifold, p, convention=SignConvention.MODERN) -> CurvatureTensor:
    convention = SignConvention.parse(convention)
    p = np.asarray(p, dtype=float)
    R = riemann_components(M, p)
    if convention is SignConvention.ONEILL:
        R = -R
    return CurvatureTensor(p.copy(), R, convention)


def check_orthonormal(g: np.ndarray, basis: Sequence, tol: float = ORTHONORMAL_TOL) -> np.ndarray:
    E = np.column_stack([np.asarray(b, dtype=float) for b in basis]) if len(basis) else np.zeros((g.shape[0], 0))
    gram = E.T @ g @ E
    err = float(np.max(np.abs(gram - np.eye(E.shape[1])))) if E.size else 0.0
    if err > tol:
        raise GeometryError(f"basis is not orthonormal (Gram error {err:.3g})")
    return E


def partial_ricci(R: CurvatureTensor, g: np.ndarray, x, basis: Sequence) -> float:
    """Σ_j R(x, b_j, b_j, x) over the supplied orthonormal ``basis``."""
    E = check_orthonormal(g, basis)
    x = np.asarray(x, dtype=float)
    if abs(float(x @ g @ x) - 1.0) > ORTHONORMAL_TOL:
        raise GeometryError("test vector is not a unit vector")
    return float(sum(R.value(x, E[:, j], E[:, j], x) for j in range(E.shape[1])))


def real_space_form_model(g: np.ndarray, c: float) -> np.ndarray:
    """c (g_jk g_il − g_ik g_jl)."""
    return c * (np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g))


def complex_space_form_model(g: np.ndarray, J: np.ndarray, c: float) -> np.ndarray:
    """Closed-form curvature of constant holomorphic sectional curvature c; Ω = g J."""
    W = g @ J  # W[a,b] = g(∂_a, J ∂_b)
    R = np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g)
    R += np.einsum("ik,lj->ijkl", W, W) - np.einsum("jk,li->ijkl", W, W) + 2.0 * np.einsum("ij,lk->ijkl", W, W)
    return 0.25 * c * R


def _points(M: ChartManifold, samples, seed: int) -> np.ndarray:
    if isinstance(samples, (int, np.integer)):
        return M.sampling_box.sample(int(samples), seed)
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    return pts


def validate_real_space_form(M: ChartManifold, c: float, samples=25, seed: int = 0) -> float:
    """Max |R_ijkl − c(g_jk g_il − g_ik g_jl)| over the sample points."""
    worst = 0.0
    for p in _points(M, samples, seed):
        R = riemann_components(M, p)
        worst = max(worst, float(np.max(np.abs(R - real_space_form_model(metric_jet(M, p).g, c)))))
    return worst


def validate_complex_space_form(M: ChartManifold, c: float, samples=25, seed: int = 0) -> float:
    if M.J is None:
        raise ContractError(f"{M.name or 'manifold'} has no complex structure")
    worst = 0.0
    for p in _points(M, samples, seed):
        R = riemann_components(M, p)
        model = complex_space_form_model(metric_jet(M, p).g, M.J, c)
        worst = max(worst, float(np.max(np.abs(R - model))))
    return worst


def check_complex_compatibility(M: ChartManifold, samples=8, seed: int = 0) -> float:
    """Max |Jᵀ g J − g| (relative to |g|); raises when above tolerance."""
    if M.J is None:
        return 0.0
    worst = 0.0
    for p in _points(M, samples, seed):
        g = metric_jet(M, p).g
        worst = max(worst, float(np.max(np.abs(M.J.T @ g @ M.J - g))) / max(1.0, float(np.max(np.abs(g)))))
    if worst > J_COMPAT_TOL:
        raise ContractError(f"metric is not J-invariant (residual {worst:.3g})")
    return worst


def holomorphic_split(J: np.ndarray, v, subspace_basis: Sequence, g: np.ndarray | None = None):
    """Split J v into the part along ``subspace_basis`` (Q v) and the rest (P v)."""
    J = np.asarray(J, dtype=float)
    g = np.eye(J.shape[0]) if g is None else np.asarray(g, dtype=float)
    E = check_orthonormal(g, list(subspace_basis))
    Jv = J @ np.asarray(v, dtype=float)
    Qv = E @ (E.T @ g @ Jv) if E.size else np.zeros_like(Jv)
    return Jv - Qv, Qv


def nabla_J(M: ChartManifold, p) -> np.ndarray:
    """``K[c,b,a] = (∇_a J)^c_b`` for the constant matrix J."""
    gam = connection_at(M, p).gamma
    J = M.J
    return np.einsum("cad,db->cba", gam, J) - np.einsum("cd,dab->cba", J, gam)


def kaehler_audit(M: ChartManifold, samples=25, seed: int = 0) -> float:
    """Max g-norm of ∇J over the sample points (0 for a Kähler manifold)."""
    if M.J is None:
        raise ContractError(f"{M.name or 'manifold'} has no complex structure")
    worst = 0.0
    for p in _points(M, samples, seed):
        g = metric_jet(M, p).g
        ginv = np.linalg.inv(g)
        K = nabla_J(M, p)
        sq = np.einsum("cba,CBA,cC,bB,aA->", K, K, g, ginv, ginv)
        worst = max(worst, float(np.sqrt(max(sq, 0.0))))
    return worst
