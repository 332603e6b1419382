"""Truncated Taylor jets for forward-mode differentiation.

``Jet`` is a scalar carrying its gradient and (optionally) its Hessian with
respect to a fixed list of coordinates. ``ArrayJet`` is an array-valued
first-order jet, used to push derivatives through frame construction
(projectors, Gram–Schmidt) without finite differences.
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    """Scalar second-order (or first-order, when ``h is None``) jet."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v: float, g: np.ndarray, h: np.ndarray | None = None):
        self.v = v
        self.g = g
        self.h = h

    @classmethod
    def variable(cls, value: float, index: int, n: int, second_order: bool) -> "Jet":
        g = np.zeros(n)
        g[index] = 1.0
        return cls(float(value), g, np.zeros((n, n)) if second_order else None)

    def __repr__(self) -> str:
        return f"Jet({self.v!r}, g={self.g!r})"

    # chain rule for a unary function with derivatives f1, f2 at self.v
    def chain(self, f0: float, f1: float, f2: float) -> "Jet":
        g = f1 * self.g
        if self.h is None:
            return Jet(f0, g)
        return Jet(f0, g, f1 * self.h + f2 * np.outer(self.g, self.g))

    def __neg__(self) -> "Jet":
        return Jet(-self.v, -self.g, None if self.h is None else -self.h)

    def __add__(self, other):
        if isinstance(other, Jet):
            h = None if self.h is None else self.h + other.h
            return Jet(self.v + other.v, self.g + other.g, h)
        return Jet(self.v + other, self.g, self.h)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            h = None if self.h is None else self.h - other.h
            return Jet(self.v - other.v, self.g - other.g, h)
        return Jet(self.v - other, self.g, self.h)

    def __rsub__(self, other):
        return Jet(other - self.v, -self.g, None if self.h is None else -self.h)

    def __mul__(self, other):
        if isinstance(other, Jet):
            g = self.v * other.g + other.v * self.g
            if self.h is None:
                return Jet(self.v * other.v, g)
            cross = np.outer(self.g, other.g)
            h = self.v * other.h + other.v * self.h + cross + cross.T
            return Jet(self.v * other.v, g, h)
        return Jet(self.v * other, self.g * other, None if self.h is None else self.h * other)

    __rmul__ = __mul__


class ArrayJet:
    """First-order jet of an array: ``val`` plus ``der[..., k] = d val / d x_k``."""

    __slots__ = ("val", "der")

    def __init__(self, val: np.ndarray, der: np.ndarray):
        self.val = np.asarray(val, dtype=float)
        self.der = np.asarray(der, dtype=float)

    @classmethod
    def constant(cls, val: np.ndarray, n: int) -> "ArrayJet":
        val = np.asarray(val, dtype=float)
        return cls(val, np.zeros(val.shape + (n,)))

    @property
    def n(self) -> int:
        return self.der.shape[-1]

    @property
    def T(self) -> "ArrayJet":
        axes = tuple(range(self.val.ndim))[::-1] + (self.val.ndim,)
        return ArrayJet(self.val.T, self.der.transpose(axes))

    def __getitem__(self, key) -> "ArrayJet":
        if not isinstance(key, tuple):
            key = (key,)
        return ArrayJet(self.val[key], self.der[key + (slice(None),)])

    def __add__(self, other: "ArrayJet") -> "ArrayJet":
        return ArrayJet(self.val + other.val, self.der + other.der)

    def __sub__(self, other: "ArrayJet") -> "ArrayJet":
        return ArrayJet(self.val - other.val, self.der - other.der)

    def __neg__(self) -> "ArrayJet":
        return ArrayJet(-self.val, -self.der)

    def __matmul__(self, other: "ArrayJet") -> "ArrayJet":
        a, b = self, other
        val = a.val @ b.val
        if a.val.ndim == 1 and b.val.ndim == 1:
            der = np.einsum("i,ik->k", a.val, b.der) + np.einsum("ik,i->k", a.der, b.val)
        elif a.val.ndim == 2 and b.val.ndim == 1:
            der = np.einsum("ij,jk->ik", a.val, b.der) + np.einsum("ijk,j->ik", a.der, b.val)
        elif a.val.ndim == 1 and b.val.ndim == 2:
            der = np.einsum("i,ijk->jk", a.val, b.der) + np.einsum("ik,ij->jk", a.der, b.val)
        else:
            der = np.einsum("ij,jlk->ilk", a.val, b.der) + np.einsum("ijk,jl->ilk", a.der, b.val)
        return ArrayJet(val, der)

    def scale(self, s: "ArrayJet") -> "ArrayJet":
        """Multiply by a scalar jet ``s`` (``s.val`` has shape ())."""
        val = self.val * s.val
        der = self.der * s.val + np.multiply.outer(self.val, s.der)
        return ArrayJet(val, der)

    def inv(self) -> "ArrayJet":
        """Matrix inverse; d(M⁻¹) = −M⁻¹ dM M⁻¹."""
        inv = np.linalg.inv(self.val)
        der = -np.einsum("ij,jlk,lm->imk", inv, self.der, inv)
        return ArrayJet(inv, der)

    def rsqrt(self) -> "ArrayJet":
        """1/sqrt of a positive scalar jet."""
        v = float(self.val)
        r = 1.0 / math.sqrt(v)
        return ArrayJet(np.array(r), -0.5 * r / v * self.der)


def stack(jets: list[ArrayJet]) -> ArrayJet:
    """Stack equal-shape jets along a new leading axis."""
    return ArrayJet(np.stack([j.val for j in jets]), np.stack([j.der for j in jets]))
