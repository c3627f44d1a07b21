"""Weighted Lipschitz operators wf̂ on the free space of a finite pointed metric space.

In the basis (δ(x))_{x != 0} the operator is the matrix whose column for x is
w(x) e_{f(x)}, or zero when f(x) is the base point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AdmissibilityError, ParameterError, StructuralError
from .free import (
    FreeVector,
    real_proportional,
    two_point_lower,
    two_point_norms,
)
from .metric import PointedMetricSpace, SelfMap, Weight

__all__ = [
    "WeightedLipOperator",
    "BoundednessConstants",
    "build",
    "boundedness_constants",
    "apply",
    "power",
    "operator_norm",
    "adjoint_apply",
    "cutoff_weight",
    "cutoff_operator",
]


@dataclass(frozen=True)
class BoundednessConstants:
    A: float
    B: float
    A_witness: Optional[tuple]
    B_witness: Optional[tuple]


@dataclass(frozen=True, eq=False)
class WeightedLipOperator:
    space: PointedMetricSpace
    f: SelfMap
    w: Weight
    matrix: np.ndarray = field(repr=False)
    constants: BoundednessConstants = field(repr=False)

    @property
    def dim(self) -> int:
        return self.space.n - 1

    @property
    def unweighted(self) -> bool:
        return bool(np.all(self.w.values == 1))

    def norm(self):
        return operator_norm(self)


def _delta_matrix(space: PointedMetricSpace, f: SelfMap, w: Weight) -> np.ndarray:
    nb = space.nonbase
    pos = np.full(space.n, -1)
    pos[nb] = np.arange(nb.size)
    M = np.zeros((nb.size, nb.size), dtype=complex)
    rows = pos[f.image[nb]]
    keep = rows >= 0
    cols = np.arange(nb.size)[keep]
    M[rows[keep], cols] = w.values[nb][keep]
    M.setflags(write=False)
    return M


def build(space: PointedMetricSpace, f, w=None) -> WeightedLipOperator:
    """Construct wf̂; requires f(0) = 0 or w(0) = 0."""
    f = f if isinstance(f, SelfMap) else SelfMap(f)
    if w is None:
        w = Weight.ones(space.n)
    w = w if isinstance(w, Weight) else Weight(w)
    if len(f) != space.n or len(w) != space.n:
        raise StructuralError("map and weight must be defined on every point")
    b = space.base_index
    if f.image[b] != b and not w.is_zero(b):
        raise AdmissibilityError(
            f"f(0) = {space.label(int(f.image[b]))} and w(0) = {w.values[b]} are both nonzero"
        )
    M = _delta_matrix(space, f, w)
    consts = _boundedness(space, f, w)
    return WeightedLipOperator(space, f, w, M, consts)


def _boundedness(space, f, w) -> BoundednessConstants:
    n = space.n
    if n < 2:
        return BoundednessConstants(0.0, 0.0, None, None)
    d = space.dist
    wv = w.values
    r_img = space.radii[f.image]  # d(f(x), 0)
    wr = wv * r_img
    i, j = np.triu_indices(n, 1)
    A_all = np.abs(wr[i] - wr[j]) / d[i, j]
    ka = int(np.argmax(A_all))
    # B is asymmetric in (x, y): scan ordered pairs
    x, y = np.nonzero(~np.eye(n, dtype=bool))
    dff = d[f.image[x], f.image[y]]
    B_all = np.abs(wr[x] - wv[y] * (r_img[x] - dff)) / d[x, y]
    kb = int(np.argmax(B_all))
    return BoundednessConstants(
        float(A_all[ka]), float(B_all[kb]), (int(i[ka]), int(j[ka])), (int(x[kb]), int(y[kb]))
    )


def boundedness_constants(op: WeightedLipOperator) -> BoundednessConstants:
    return op.constants


def apply(op: WeightedLipOperator, gamma: FreeVector) -> FreeVector:
    """wf̂(Σ a_i δ(x_i)) = Σ a_i w(x_i) δ(f(x_i)); collisions are summed first."""
    if gamma.space is not op.space:
        raise StructuralError("operator and vector live on different spaces")
    acc = {}
    for i, a in gamma:
        j = int(op.f.image[i])
        acc[j] = acc.get(j, 0) + a * op.w.values[i]
    return FreeVector(op.space, acc)


def power(op: WeightedLipOperator, n: int) -> WeightedLipOperator:
    """(wf̂)^n as the weighted operator with map f^n and weight Π_{k<n} w(f^k(x))."""
    if n < 1:
        raise ParameterError("power needs n >= 1")
    if n == 1:
        return op
    img = np.arange(op.space.n)
    wn = np.ones(op.space.n, dtype=complex)
    for _ in range(n):
        wn = wn * op.w.values[img]
        img = op.f.image[img]
    return build(op.space, SelfMap(img), Weight(wn, op.w.atol))


def adjoint_apply(op: WeightedLipOperator, g) -> np.ndarray:
    """wC_f(g)(x) = w(x) g(f(x))."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (op.space.n,):
        raise StructuralError("function must be given on every point")
    return op.w.values * g[op.f.image]


def _phi_pair_norms(op: WeightedLipOperator, x: np.ndarray, y: np.ndarray, K: int):
    """Bounds for ||φ(x) - φ(y)|| with φ(x) = w(x) δ(f(x)), vectorised over pairs.

    Returns (lower, upper); the two agree whenever the molecule has
    real-proportional coefficients.
    """
    sp = op.space
    b = sp.base_index
    d = sp.dist
    r = sp.radii
    fx, fy = op.f.image[x], op.f.image[y]
    wx, wy = op.w.values[x].copy(), op.w.values[y].copy()
    # δ(0) = 0
    wx[fx == b] = 0
    wy[fy == b] = 0
    lo = np.zeros(x.shape)
    hi = np.zeros(x.shape)

    same = fx == fy
    val = np.abs(wx - wy) * r[fx]
    lo[same] = hi[same] = val[same]

    one = ~same & ((wx == 0) | (wy == 0))
    val = np.abs(wx) * r[fx] + np.abs(wy) * r[fy]
    lo[one] = hi[one] = val[one]

    two = ~same & ~one
    if two.any():
        u, v = fx[two], fy[two]
        a, bb = wx[two], -wy[two]
        args = (d[u, v], r[u], r[v])
        up = two_point_norms(a, bb, *args)
        low = two_point_lower(a, bb, *args, K=K)
        exact = real_proportional(a, bb)
        low = np.where(exact, up, np.minimum(low, up))
        lo[two] = low
        hi[two] = up
    return lo, hi


def operator_norm(op: WeightedLipOperator, K: int = 16):
    """Interval [lo, hi] containing ||wf̂|| = Lip(φ), scanning all pairs including the base.

    ``hi`` comes from explicit feasible decompositions, so it is always an
    upper bound; ``lo`` from explicit 1-Lipschitz test functions.
    """
    n = op.space.n
    if n < 2:
        return 0.0, 0.0
    x, y = np.triu_indices(n, 1)
    lo, hi = _phi_pair_norms(op, x, y, K)
    dxy = op.space.dist[x, y]
    return float((lo / dxy).max()), float((hi / dxy).max())


def cutoff_weight(radii, n: int) -> np.ndarray:
    """Radial cutoff: 0 below 2^n, 2^{-n} d(x,0) - 1 on [2^n, 2^{n+1}], 1 above."""
    r = np.asarray(radii, dtype=float)
    lo, hi = 2.0 ** n, 2.0 ** (n + 1)
    return np.where(r < lo, 0.0, np.where(r > hi, 1.0, r / lo - 1.0))


def cutoff_operator(space: PointedMetricSpace, n: int) -> WeightedLipOperator:
    """T_n = w_n Îd with the radial cutoff weight w_n."""
    w = cutoff_weight(space.radii, n)
    return build(space, SelfMap.identity(space.n), Weight(w))
