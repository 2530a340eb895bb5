"""The pseudo-Euclidean ambient, the product Q^n_eps x R inside it, and the
product-space curvature tensor.

Points live in E^{n+2} with the flat R factor always in the LAST coordinate;
for eps = -1 coordinate 0 is timelike and the quadric is the upper sheet
(p_0 > 0).  Gallery generators permute into this canonical layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProductSpace",
    "inner",
    "membership_residual",
    "inclusion_sff",
    "curvature",
]


@dataclass(frozen=True)
class ProductSpace:
    """Q^n_eps x R realized as a quadric cross a line in E^{n+2}."""

    epsilon: int
    n: int

    def __post_init__(self):
        if self.epsilon not in (1, -1):
            raise ValueError("epsilon must be +1 or -1")
        if self.n < 2:
            raise ValueError("n must be >= 2")

    @property
    def ambient_dim(self) -> int:
        return self.n + 2

    @property
    def t_index(self) -> int:
        return self.n + 1

    @property
    def signature(self) -> np.ndarray:
        s = np.ones(self.ambient_dim)
        if self.epsilon == -1:
            s[0] = -1.0
        return s

    def q_part(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[: self.n + 1]

    def q_padded(self, p: np.ndarray) -> np.ndarray:
        """Position vector of the quadric factor, zero in the t slot."""
        out = np.array(p, dtype=float)
        out[self.t_index] = 0.0
        return out

    def t_axis(self) -> np.ndarray:
        v = np.zeros(self.ambient_dim)
        v[self.t_index] = 1.0
        return v


def inner(space: ProductSpace, x: np.ndarray, y: np.ndarray) -> float:
    """Signature-aware inner product on E^{n+2}."""
    if space.epsilon == -1:
        return float(-x[0] * y[0] + np.dot(x[1:], y[1:]))
    return float(np.dot(x, y))


def membership_residual(space: ProductSpace, p: np.ndarray) -> float:
    """|<p_Q, p_Q> - eps|, +inf when eps = -1 and p is not on the upper sheet."""
    pq = space.q_part(p)
    if space.epsilon == -1:
        if p[0] <= 0.0:
            return math.inf
        val = -pq[0] * pq[0] + float(np.dot(pq[1:], pq[1:]))
    else:
        val = float(np.dot(pq, pq))
    return abs(val - space.epsilon)


def inclusion_sff(
    space: ProductSpace,
    p: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    tol: float = 1e-8,
) -> np.ndarray:
    """Second fundamental form of the totally umbilic inclusion of the
    product into E^{n+2}: -eps <X_Q, Y_Q> p_Q (t slot zero)."""
    phat = space.q_padded(p)
    for v, name in ((x, "X"), (y, "Y")):
        if abs(inner(space, v, phat)) > tol:
            raise ValueError(f"{name} is not tangent to the product at p")
    xq = np.array(x, dtype=float)
    yq = np.array(y, dtype=float)
    xq[space.t_index] = 0.0
    yq[space.t_index] = 0.0
    return -space.epsilon * inner(space, xq, yq) * phat


def curvature(
    space: ProductSpace, x: np.ndarray, y: np.ndarray, z: np.ndarray
) -> np.ndarray:
    """Curvature tensor of Q^n_eps x R:

        R(X, Y)Z = eps (<Y^, Z^> X^ - <X^, Z^> Y^)

    where the hat drops the t component.  For eps = +1 and orthonormal
    spacelike X, Y this gives <R(X,Y)Y, X> = +1.
    """
    t = space.t_index
    xh = np.array(x, dtype=float)
    yh = np.array(y, dtype=float)
    zh = np.array(z, dtype=float)
    xh[t] = 0.0
    yh[t] = 0.0
    zh[t] = 0.0
    return space.epsilon * (inner(space, yh, zh) * xh - inner(space, xh, zh) * yh)
