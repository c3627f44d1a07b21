"""Random finite instances for property tests and the ``gen random`` command."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .metric import PointedMetricSpace, SelfMap, Weight, explicit
from .operator import WeightedLipOperator, build

MAP_KINDS = ("random", "permutation", "perturbed_permutation", "cycles")


def random_space(rng: np.random.Generator, n_points: int, spread: float = 0.5) -> PointedMetricSpace:
    """Sum metric with random radii, edges scaled by factors in [1-spread, 1+spread], then path-closed.

    The shortest-path closure restores the triangle inequality, so the result
    is a metric that is typically not a sum metric.
    """
    rho = rng.uniform(0.5, 2.0, n_points - 1)
    r = np.concatenate([[0.0], rho])
    d = r[:, None] + r[None, :]
    f = rng.uniform(1 - spread, 1 + spread, d.shape)
    d = d * np.triu(f, 1)
    d = d + d.T
    d = shortest_path(d, method="FW", directed=False)
    np.fill_diagonal(d, 0.0)
    return explicit(d)


def random_map(rng: np.random.Generator, n: int, kind: str = "random") -> np.ndarray:
    """A self-map of {0..n-1} fixing 0 (the base)."""
    img = np.zeros(n, dtype=np.intp)
    if kind == "random":
        img[1:] = rng.integers(0, n, n - 1)
    elif kind in ("permutation", "perturbed_permutation"):
        img[1:] = 1 + rng.permutation(n - 1)
        if kind == "perturbed_permutation" and n > 2:
            k = rng.integers(1, max(2, n // 4) + 1)
            img[rng.integers(1, n, k)] = rng.integers(0, n, k)
    elif kind == "cycles":
        # disjoint cycles with long tails feeding into them
        rest = 1 + rng.permutation(n - 1)
        on = rest[: max(1, (n - 1) // 2)]
        cuts = np.sort(rng.choice(np.arange(1, on.size), size=min(on.size - 1, rng.integers(0, 4)), replace=False)) if on.size > 1 else []
        for block in np.split(on, cuts):
            img[block] = np.roll(block, -1)
        for x in rest[on.size:]:
            img[x] = rng.choice(np.concatenate([on, [0]]))
    else:
        raise ValueError(f"unknown map kind {kind!r}")
    return img


def random_weight(rng: np.random.Generator, n: int, zero_frac: float = 0.2) -> np.ndarray:
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    w[rng.random(n) < zero_frac] = 0
    return w


@dataclass
class Instance:
    space: PointedMetricSpace
    f: np.ndarray
    w: np.ndarray
    seed: Optional[int] = None

    def operator(self) -> WeightedLipOperator:
        return build(self.space, SelfMap(self.f), Weight(self.w))


def random_instance(
    seed: int,
    max_points: int = 40,
    min_points: int = 2,
    unweighted: bool = False,
    zero_frac: float = 0.2,
    map_kind: Optional[str] = None,
    moved_base_prob: float = 0.2,
) -> Instance:
    """Reproducible random instance.

    With probability ``moved_base_prob`` (weighted case only) f moves the
    base point and w(0) is set to 0, which keeps the operator admissible.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(min_points, max_points + 1))
    space = random_space(rng, n)
    kind = map_kind or MAP_KINDS[int(rng.integers(len(MAP_KINDS)))]
    f = random_map(rng, n, kind)
    w = np.ones(n, dtype=complex) if unweighted else random_weight(rng, n, zero_frac)
    if not unweighted and n > 1 and rng.random() < moved_base_prob:
        f[0] = rng.integers(1, n)
        w[0] = 0
    return Instance(space, f, w, seed)
