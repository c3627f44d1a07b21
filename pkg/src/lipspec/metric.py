"""Finite pointed metric spaces, self-maps, weights and Lipschitz quantities.

Points are addressed by integer index internally; string identifiers are
kept only for I/O.  The base point is always reported as ``"0"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ParameterError, StructuralError

__all__ = [
    "PointedMetricSpace",
    "SelfMap",
    "Weight",
    "Violation",
    "ValidationReport",
    "validate_metric",
    "lipschitz_constant",
    "map_lipschitz",
    "is_r_eps_flat",
    "radial_flat_threshold",
    "make_space",
    "explicit",
    "sum_radial",
    "geometric",
    "shift",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointedMetricSpace:
    """A finite point set with a distinguished base point and a distance matrix.

    ``descriptor`` records the generator that produced the space, e.g.
    ``{"kind": "shift", "n": 5}``; it is ``{"kind": "explicit"}`` for
    hand-written matrices.
    """

    points: tuple
    base_index: int
    dist: np.ndarray
    descriptor: dict = field(default_factory=lambda: {"kind": "explicit"})

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        n = len(self.points)
        if d.ndim != 2 or d.shape != (n, n):
            raise StructuralError(
                f"distance matrix has shape {d.shape}, expected ({n}, {n})"
            )
        if not 0 <= self.base_index < n:
            raise StructuralError(f"base index {self.base_index} out of range")
        if len(set(self.points)) != n:
            raise StructuralError("point identifiers must be unique")
        object.__setattr__(self, "points", tuple(str(p) for p in self.points))
        object.__setattr__(self, "dist", _frozen(d))

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def radii(self) -> np.ndarray:
        """Distances d(x, 0) for every point."""
        return self.dist[:, self.base_index]

    @property
    def nonbase(self) -> np.ndarray:
        """Indices of the non-base points, in order; this is the matrix basis."""
        idx = np.arange(self.n)
        return idx[idx != self.base_index]

    def index_of(self, point_id) -> int:
        try:
            return self.points.index(str(point_id))
        except ValueError:
            raise StructuralError(f"unknown point {point_id!r}") from None

    def label(self, i: int) -> str:
        return "0" if i == self.base_index else self.points[i]

    def __repr__(self):
        return f"PointedMetricSpace(n={self.n}, descriptor={self.descriptor})"


@dataclass(frozen=True, eq=False)
class SelfMap:
    """A total map f on point indices."""

    image: np.ndarray

    def __post_init__(self):
        img = np.array(self.image, dtype=np.intp).ravel()
        if img.size and (img.min() < 0 or img.max() >= img.size):
            raise StructuralError("self-map image contains an index out of range")
        object.__setattr__(self, "image", _frozen(img))

    @classmethod
    def identity(cls, n: int) -> "SelfMap":
        return cls(np.arange(n))

    @classmethod
    def constant(cls, n: int, value: int) -> "SelfMap":
        return cls(np.full(n, value))

    def __len__(self):
        return self.image.size

    def __call__(self, i):
        return self.image[i]

    def compose(self, other: "SelfMap") -> "SelfMap":
        """Return self ∘ other."""
        return SelfMap(self.image[other.image])

    def power(self, n: int) -> "SelfMap":
        if n < 0:
            raise ParameterError("map powers need n >= 0")
        img = np.arange(self.image.size)
        for _ in range(n):
            img = self.image[img]
        return SelfMap(img)


@dataclass(frozen=True, eq=False)
class Weight:
    """Complex weight w indexed by point.

    ``atol`` is the absolute tolerance of the zero test behind ``coz``; the
    default 0 means bit-exact zeros only.
    """

    values: np.ndarray
    atol: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).ravel()
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def ones(cls, n: int) -> "Weight":
        return cls(np.ones(n))

    def __len__(self):
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]

    @property
    def coz(self) -> np.ndarray:
        """Boolean mask of the cozero set {x : w(x) != 0}."""
        return np.abs(self.values) > self.atol

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def is_zero(self, i) -> bool:
        return not bool(abs(self.values[i]) > self.atol)


# --------------------------------------------------------------------------
# validation


class Violation(NamedTuple):
    axiom: str
    witness: tuple


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            "valid": self.ok,
            "violations": [
                {"axiom": v.axiom, "witness": [int(i) for i in v.witness]}
                for v in self.violations
            ],
        }


def validate_metric(
    space: PointedMetricSpace, atol: float = 0.0, rtol: float = 1e-12, limit: int = 1000
) -> ValidationReport:
    """Check the metric axioms exhaustively.

    Triangle violations are reported as ``(i, k, j)`` with ``i < j`` and ``k``
    the intermediate point.  ``rtol`` absorbs one-ulp rounding in sums of
    distances; ``atol`` is the zero test for distinct points.
    """
    d = space.dist
    n = space.n
    out = []
    if not np.all(np.isfinite(d)):
        bad = np.argwhere(~np.isfinite(d))[0]
        out.append(Violation("finite", tuple(int(i) for i in bad)))
        return ValidationReport(out)
    for i in np.flatnonzero(np.diag(d) != 0):
        out.append(Violation("zero_diagonal", (int(i),)))
    iu, ju = np.triu_indices(n, 1)
    for i, j in zip(iu, ju):
        if d[i, j] != d[j, i]:
            out.append(Violation("symmetry", (int(i), int(j))))
        elif not d[i, j] > atol:
            out.append(Violation("positivity", (int(i), int(j))))
    # d[i, j] <= d[i, k] + d[k, j] for all k, vectorised over (i, j)
    for k in range(n):
        through = d[:, k][:, None] + d[k, :][None, :]
        bad = np.argwhere(np.triu(d > through * (1.0 + rtol), 1))
        for i, j in bad:
            if k in (i, j):
                continue
            out.append(Violation("triangle", (int(i), int(k), int(j))))
            if len(out) >= limit:
                return ValidationReport(out)
    desc = space.descriptor or {}
    if desc.get("kind") in ("sum_radial", "geometric", "shift"):
        rho = space.radii
        expected = rho[:, None] + rho[None, :]
        np.fill_diagonal(expected, 0.0)
        b = space.base_index
        expected[b, :] = rho
        expected[:, b] = rho
        bad = np.argwhere(np.triu(~np.isclose(d, expected, rtol=1e-12, atol=0.0), 1))
        for i, j in bad[:limit]:
            out.append(Violation("sum_radial", (int(i), int(j))))
    return ValidationReport(out)


# --------------------------------------------------------------------------
# Lipschitz quantities


def _pair_ratios(space: PointedMetricSpace, numer: np.ndarray):
    iu, ju = np.triu_indices(space.n, 1)
    return iu, ju, numer[iu, ju] / space.dist[iu, ju]


def lipschitz_constant(space: PointedMetricSpace, g) -> float:
    """sup over x != y of |g(x) - g(y)| / d(x, y), computed exactly over all pairs."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (space.n,):
        raise StructuralError(f"function has {g.size} values for {space.n} points")
    if space.n < 2:
        return 0.0
    _, _, r = _pair_ratios(space, np.abs(g[:, None] - g[None, :]))
    return float(r.max())


def map_lipschitz(space: PointedMetricSpace, f) -> float:
    """Lip(f) for a self-map, with the same metric on both sides."""
    img = f.image if isinstance(f, SelfMap) else np.asarray(f, dtype=np.intp)
    if img.shape != (space.n,):
        raise StructuralError("self-map size does not match the space")
    if space.n < 2:
        return 0.0
    _, _, r = _pair_ratios(space, space.dist[np.ix_(img, img)])
    return float(r.max())


def is_r_eps_flat(space: PointedMetricSpace, f, r: float, eps: float):
    """Test the (r, eps)-flatness of f.

    Returns ``(flat, witness)``; ``witness`` is ``(i, j, ratio)`` for the pair
    with the largest ratio among pairs at distance <= r, or ``None`` when no
    pair qualifies (then the condition holds vacuously).
    """
    if r <= 0 or eps <= 0:
        raise ParameterError("r and eps must be positive")
    img = f.image if isinstance(f, SelfMap) else np.asarray(f, dtype=np.intp)
    iu, ju, ratio = _pair_ratios(space, space.dist[np.ix_(img, img)])
    close = space.dist[iu, ju] <= r
    if not close.any():
        return True, None
    k = np.flatnonzero(close)[np.argmax(ratio[close])]
    worst = float(ratio[k])
    return worst <= eps, (int(iu[k]), int(ju[k]), worst)


def radial_flat_threshold(space: PointedMetricSpace, f) -> Optional[float]:
    """Smallest point radius R0 with f(B(0,R)) ⊂ B(0,R/2) for every radius R >= R0.

    Only radii realised by non-base points are candidates.  Returns ``None``
    when even the largest radius fails.
    """
    img = f.image if isinstance(f, SelfMap) else np.asarray(f, dtype=np.intp)
    rho = space.radii
    nb = space.nonbase
    candidates = np.unique(rho[nb])
    if candidates.size == 0:
        return None
    ok = np.array([rho[img[rho <= R]].max() <= R / 2 for R in candidates])
    if not ok[-1]:
        return None
    # first index from which every candidate passes
    failing = np.flatnonzero(~ok)
    start = failing[-1] + 1 if failing.size else 0
    return float(candidates[start])


# --------------------------------------------------------------------------
# generators


def _ids(n: int):
    return tuple(str(i) for i in range(n + 1))


def _sum_metric(rho: np.ndarray) -> np.ndarray:
    r = np.concatenate([[0.0], rho])
    d = r[:, None] + r[None, :]
    np.fill_diagonal(d, 0.0)
    return d


def explicit(d, points: Optional[Sequence] = None, base_index: int = 0) -> PointedMetricSpace:
    d = np.asarray(d, dtype=float)
    if points is None:
        points = tuple(str(i) for i in range(d.shape[0]))
    return PointedMetricSpace(tuple(points), base_index, d, {"kind": "explicit"})


def sum_radial(rho) -> PointedMetricSpace:
    """d(i, j) = rho(i) + rho(j) for distinct non-base points, d(i, 0) = rho(i)."""
    rho = np.asarray(rho, dtype=float).ravel()
    if rho.size < 1 or not np.all(rho > 0) or not np.all(np.isfinite(rho)):
        raise ParameterError("sum_radial needs at least one radius, all positive")
    return PointedMetricSpace(
        _ids(rho.size), 0, _sum_metric(rho), {"kind": "sum_radial", "rho": rho.tolist()}
    )


def geometric(lambda_abs: float, n: int) -> PointedMetricSpace:
    """Truncated d_λ space: d(k, 0) = (2|λ|)^(-k), k = 1..n, sum metric otherwise."""
    if not lambda_abs > 0 or int(n) != n or n < 1:
        raise ParameterError("geometric needs |lambda| > 0 and n >= 1")
    k = np.arange(1, n + 1)
    rho = (2.0 * lambda_abs) ** (-k.astype(float))
    return PointedMetricSpace(
        _ids(n), 0, _sum_metric(rho), {"kind": "geometric", "lambda_abs": float(lambda_abs), "n": int(n)}
    )


def shift(n: int) -> PointedMetricSpace:
    """d(0, k) = 2^k and d(k, m) = 2^k + 2^m, k, m = 1..n."""
    if int(n) != n or n < 1:
        raise ParameterError("shift needs n >= 1")
    rho = 2.0 ** np.arange(1, n + 1, dtype=float)
    return PointedMetricSpace(_ids(n), 0, _sum_metric(rho), {"kind": "shift", "n": int(n)})


def make_space(descriptor: dict) -> PointedMetricSpace:
    """Build a space from a descriptor dict (``kind`` plus parameters)."""
    kind = descriptor.get("kind")
    if kind in ("explicit", "matrix"):
        return explicit(descriptor["d"], descriptor.get("points"), descriptor.get("base_index", 0))
    if kind == "sum_radial":
        return sum_radial(descriptor["rho"])
    if kind == "geometric":
        return geometric(descriptor["lambda_abs"], descriptor["n"])
    if kind == "shift":
        return shift(descriptor["n"])
    raise ParameterError(f"unknown space kind {kind!r}")
