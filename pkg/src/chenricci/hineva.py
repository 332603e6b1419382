"""Sharp lower bound for a₁₁·tr(A) − Σᵢ a₁ᵢ² over symmetric matrices.

For a symmetric n×n matrix with trace ``a`` and squared Frobenius norm ``b``,

    a₁₁ a − Σᵢ a₁ᵢ²  ≥  (n−1)/n² · (2a² − n b − (n−2)|a| s),   s = √((n b − a²)/(n−1)).

Equality is attained by diag(a₁, a₂, …, a₂) on the branch whose sign
matches ``a``; for n = 2 the inequality is an identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

FEASIBILITY_TOL = 1e-12
SYMMETRY_TOL = 1e-12
EQUALITY_TOL = 1e-9
GAP_ROUNDOFF = 64 * np.finfo(float).eps


class InfeasibleError(GeometryError, ValueError):
    """(a, b) violates b ≥ a²/n."""


def _spread(n: int, a: float, b: float, tol: float = FEASIBILITY_TOL) -> float:
    """The square-root term s, clamping roundoff-level infeasibility to 0."""
    if n < 2:
        raise ValueError("n must be >= 2")
    gap = n * b - a * a
    scale = max(1.0, n * abs(b), a * a)
    if gap < -tol * scale:
        raise InfeasibleError(f"infeasible pair: n*b - a^2 = {gap:.6g} < 0")
    # the square root amplifies roundoff near the scalar-matrix boundary
    if gap <= GAP_ROUNDOFF * scale:
        gap = 0.0
    return math.sqrt(gap / (n - 1))


def hineva_bound(n: int, a: float, b: float) -> float:
    """Right-hand side of the bound; ``b`` is the squared Frobenius norm."""
    s = _spread(n, a, b)
    return (n - 1) / n**2 * (2.0 * a * a - n * b - (n - 2) * abs(a) * s)


@dataclass(frozen=True)
class HinevaCertificate:
    n: int
    a: float
    b: float
    lhs: float
    rhs: float
    slack: float
    equality: bool
    diagonal_form_residual: float


def equality_tolerance(b: float) -> float:
    return EQUALITY_TOL * max(1.0, b)


def _diagonal_form_residual(A: np.ndarray, a: float, b: float) -> float:
    """Distance of A from the nearest equality-case matrix diag(a₁, a₂, …, a₂)."""
    n = A.shape[0]
    s = _spread(n, a, b, tol=1e-9)
    best = math.inf
    for sign in (1.0, -1.0):
        a1 = a / n - sign * (n - 1) / n * s
        a2 = a / n + sign * s / n
        target = np.diag([a1] + [a2] * (n - 1))
        best = min(best, float(np.max(np.abs(A - target))))
    return best


def hineva_slack(A) -> HinevaCertificate:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
        raise ValueError("need a square matrix of size >= 2")
    if np.max(np.abs(A - A.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(A)))):
        raise ValueError("matrix is not symmetric")
    n = A.shape[0]
    a = float(np.trace(A))
    b = float(np.sum(A * A))
    lhs = float(A[0, 0] * a - np.sum(A[0] ** 2))
    rhs = hineva_bound(n, a, b)
    slack = lhs - rhs
    return HinevaCertificate(
        n, a, b, lhs, rhs, slack, abs(slack) <= equality_tolerance(b), _diagonal_form_residual(A, a, b)
    )


def branch_values(n: int, a: float, b: float, branch: str = "auto") -> tuple[float, float]:
    """(a₁, a₂) of the equality matrix.

    ``branch`` '-' gives a₁ = a/n − (n−1)s/n, '+' gives a₁ = a/n + (n−1)s/n
    (a₂ always carries the opposite sign so the trace is ``a``). ``auto``
    picks the branch attaining the bound: '-' for a ≥ 0, '+' for a < 0.
    """
    s = _spread(n, a, b)
    if branch == "auto":
        branch = "-" if a >= 0 else "+"
    if branch not in ("+", "-"):
        raise ValueError("branch must be '+', '-' or 'auto'")
    sign = 1.0 if branch == "-" else -1.0
    return a / n - sign * (n - 1) / n * s, a / n + sign * s / n


def equality_model(n: int, a: float, b: float, branch: str = "auto") -> np.ndarray:
    """diag(a₁, a₂, …, a₂) with trace ``a`` and squared Frobenius norm ``b``."""
    a1, a2 = branch_values(n, a, b, branch)
    A = np.diag([a1] + [a2] * (n - 1))
    if abs(np.trace(A) - a) > 1e-10 * max(1.0, abs(a)) or abs(np.sum(A * A) - b) > 1e-10 * max(1.0, b):
        raise InfeasibleError("trace/norm reconstruction failed")
    return A


def eigen_ratio(n: int, lam: float, mu: float) -> float | None:
    """|λ − μ| / (λ + (n−1)μ); None when the trace vanishes."""
    den = lam + (n - 1) * mu
    if abs(den) <= 1e-12 * max(1.0, abs(lam), abs(mu)):
        return None
    return abs(lam - mu) / den


def random_symmetric(rng: np.random.Generator, n: int, count: int, scale: float = 5.0) -> np.ndarray:
    M = rng.uniform(-scale, scale, size=(count, n, n))
    return np.triu(M) + np.swapaxes(np.triu(M, 1), 1, 2)


def batch_slack(As: np.ndarray) -> np.ndarray:
    """Vectorized slack for a stack of symmetric matrices (count, n, n)."""
    n = As.shape[-1]
    a = np.trace(As, axis1=1, axis2=2)
    b = np.sum(As * As, axis=(1, 2))
    lhs = As[:, 0, 0] * a - np.sum(As[:, 0, :] ** 2, axis=1)
    gap = n * b - a * a
    gap = np.where(gap <= GAP_ROUNDOFF * np.maximum(1.0, np.maximum(n * b, a * a)), 0.0, gap)
    s = np.sqrt(gap / (n - 1))
    rhs = (n - 1) / n**2 * (2.0 * a * a - n * b - (n - 2) * np.abs(a) * s)
    return lhs - rhs


def oracle_min_slack(n: int, trials: int, seed: int = 0) -> float:
    """Minimum slack over ``trials`` random symmetric matrices with entries in [−5, 5]."""
    rng = np.random.default_rng([seed, n])
    worst = math.inf
    for start in range(0, trials, 4096):
        As = random_symmetric(rng, n, min(4096, trials - start))
        worst = min(worst, float(np.min(batch_slack(As))))
    return worst
