"""Deterministic low-discrepancy sampling inside coordinate boxes."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc


def halton_points(lo, hi, count: int, seed: int) -> np.ndarray:
    """``count`` scrambled-Halton points in the box ``[lo, hi]``, shape (count, d)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if count < 1:
        raise ValueError("count must be >= 1")
    sampler = qmc.Halton(d=lo.size, scramble=True, seed=np.random.default_rng(seed))
    unit = sampler.random(count)
    return lo + unit * (hi - lo)
