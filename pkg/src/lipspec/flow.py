"""Uncapacitated min-cost flow on a complete graph by successive shortest paths.

This is the transport engine behind the real Kantorovich-Rubinstein norm.
Node supplies are real, arcs i -> j exist for every ordered pair with cost
``cost[i, j]`` and unbounded capacity.  Dijkstra runs on reduced costs, so the
final potentials are an optimal dual solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, StructuralError


@dataclass
class FlowResult:
    flow: np.ndarray  # flow[i, j] >= 0 on arc i -> j
    potential: np.ndarray  # dual y with y[i] - y[j] <= cost[i, j]
    cost: float  # primal objective sum(flow * cost)
    dual: float  # dual objective sum(supply * potential)
    augmentations: int


def _dijkstra(arc: np.ndarray, sources: np.ndarray):
    """Dense multi-source Dijkstra; ``arc`` holds nonnegative arc lengths."""
    k = arc.shape[0]
    dist = np.full(k, np.inf)
    dist[sources] = 0.0
    pred = np.full(k, -1, dtype=np.intp)
    done = np.zeros(k, dtype=bool)
    for _ in range(k):
        cand = np.where(done, np.inf, dist)
        u = int(np.argmin(cand))
        if not np.isfinite(cand[u]):
            break
        done[u] = True
        alt = dist[u] + arc[u]
        better = (alt < dist) & ~done
        dist[better] = alt[better]
        pred[better] = u
    return dist, pred


def min_cost_flow(cost, supply, rtol: float = 1e-13, max_augment: int | None = None) -> FlowResult:
    """Solve min sum c_ij x_ij  s.t.  out(i) - in(i) = supply[i], x >= 0.

    ``supply`` must sum to zero (up to rounding).  Excess below
    ``rtol * max|supply|`` is treated as zero.
    """
    c = np.asarray(cost, dtype=float)
    b = np.asarray(supply, dtype=float).ravel()
    k = b.size
    if c.shape != (k, k):
        raise StructuralError("cost matrix and supply vector disagree in size")
    flow = np.zeros((k, k))
    pot = np.zeros(k)  # Dijkstra potentials pi; optimal dual is -pi
    scale = float(np.abs(b).max()) if k else 0.0
    if scale == 0.0:
        return FlowResult(flow, np.zeros(k), 0.0, 0.0, 0)
    tol = rtol * scale
    excess = b.copy()
    if abs(excess.sum()) > 1e3 * tol * k:
        raise StructuralError("supplies do not balance")
    cap = max_augment if max_augment is not None else 4 * k * k + 16
    n_aug = 0
    offdiag = ~np.eye(k, dtype=bool)
    while True:
        src = np.flatnonzero(excess > tol)
        if src.size == 0:
            break
        if n_aug >= cap:
            raise NumericalError(
                "min-cost flow did not terminate",
                {"augmentations": n_aug, "excess": excess.tolist()},
            )
        reduced = c + pot[:, None] - pot[None, :]
        np.maximum(reduced, 0.0, out=reduced)
        # residual reverse arc u -> v exists when flow[v, u] > 0; its reduced
        # cost is zero by complementary slackness
        arc = np.where(flow.T > 0, 0.0, reduced)
        arc[~offdiag] = np.inf
        dist, pred = _dijkstra(arc, src)
        sinks = np.flatnonzero(excess < -tol)
        if sinks.size == 0:
            break
        t = int(sinks[np.argmin(dist[sinks])])
        path = [t]
        while pred[path[-1]] >= 0:
            path.append(int(pred[path[-1]]))
        path.reverse()
        s = path[0]
        delta = min(excess[s], -excess[t])
        arcs = list(zip(path[:-1], path[1:]))
        for u, v in arcs:
            if flow[v, u] > 0:
                delta = min(delta, flow[v, u])
        for u, v in arcs:
            if flow[v, u] > 0:
                flow[v, u] -= delta
                if flow[v, u] <= tol:
                    flow[v, u] = 0.0
            else:
                flow[u, v] += delta
        excess[s] -= delta
        excess[t] += delta
        pot += np.where(np.isfinite(dist), dist, dist[np.isfinite(dist)].max())
        n_aug += 1
    y = -pot
    primal = float((flow * c).sum())
    dual = float(b @ y)
    return FlowResult(flow, y, primal, dual, n_aug)
