"""Point spectrum of wf̂ from periodic orbits, checked against a dense eigensolver.

For a finite space every nonzero eigenvalue comes from a cycle x -> f(x) ->
... -> x of f avoiding the base point: if the cycle has length n and weight
product p = Π w(f^k(x)) != 0, its contribution is the n distinct n-th roots
of p.  The zero eigenvalue is decided from the combinatorics of f and w and
confirmed by matrix rank.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .eigen import canonical_order, dense_eigenvalues, group_multiset
from .errors import OracleMismatch, ParameterError, PreconditionError
from .free import FreeVector
from .metric import PointedMetricSpace, SelfMap, Weight
from .operator import WeightedLipOperator, operator_norm, power

MATCH_TOL = 1e-7
RANK_RTOL = 1e-10

CAVEAT_TRUNCATION = (
    "finite-space result; whether it persists for the unbounded limit of a "
    "truncation family is an open question and is not decided numerically"
)


@dataclass(frozen=True)
class Cycle:
    points: tuple  # orbit order: points[k+1] = f(points[k])
    weight_product: complex
    all_weights_nonzero: bool
    contains_base: bool

    @property
    def length(self) -> int:
        return len(self.points)


@dataclass
class CycleDecomposition:
    cycles: List[Cycle]
    tails: dict  # point -> number of steps until the orbit enters a cycle
    base_cycle_excluded: bool

    def periodic_points(self, n: int, include_base: bool = False) -> set:
        """Per_n(f): points on cycles of length exactly n."""
        return {
            x
            for c in self.cycles
            if c.length == n and (include_base or not c.contains_base)
            for x in c.points
        }

    @property
    def cycle_lengths(self) -> set:
        """The set A of orders of non-base periodic points."""
        return {c.length for c in self.cycles if not c.contains_base}


def decompose(space: PointedMetricSpace, f, w=None) -> CycleDecomposition:
    """Split the functional graph of f into cycles and tails."""
    f = f if isinstance(f, SelfMap) else SelfMap(f)
    w = w if isinstance(w, Weight) else Weight(np.ones(space.n) if w is None else w)
    img = f.image
    n = space.n
    state = np.zeros(n, dtype=np.int8)  # 0 new, 1 on current walk, 2 finished
    on_cycle = np.zeros(n, dtype=bool)
    cycles = []
    for start in range(n):
        if state[start]:
            continue
        walk = []
        x = start
        while state[x] == 0:
            state[x] = 1
            walk.append(x)
            x = int(img[x])
        if state[x] == 1:  # closed a new cycle at x
            k = walk.index(x)
            orbit = walk[k:]
            r = orbit.index(min(orbit))
            orbit = orbit[r:] + orbit[:r]
            vals = w.values[orbit]
            cycles.append(
                Cycle(
                    tuple(int(p) for p in orbit),
                    complex(np.prod(vals)),
                    bool(np.all(np.abs(vals) > w.atol)),
                    space.base_index in orbit,
                )
            )
            on_cycle[orbit] = True
        for p in walk:
            state[p] = 2
    depth = {}
    for x in range(n):
        path = []
        while not on_cycle[x] and x not in depth:
            path.append(x)
            x = int(img[x])
        d0 = depth.get(x, 0)
        for k, p in enumerate(reversed(path)):
            depth[p] = d0 + k + 1
    cycles.sort(key=lambda c: c.points[0])
    return CycleDecomposition(cycles, dict(sorted(depth.items())), any(c.contains_base for c in cycles))


@dataclass(frozen=True)
class CycleEigenvalue:
    value: complex
    cycle: int  # index into CycleDecomposition.cycles


def roots(p: complex, n: int) -> np.ndarray:
    """The n distinct n-th roots of p (principal root times U_n)."""
    r0 = cmath.rect(abs(p) ** (1.0 / n), cmath.phase(p) / n)
    z = r0 * np.exp(2j * np.pi * np.arange(n) / n)
    # exact zeros instead of 1e-16 residue keep the canonical order stable
    tiny = 8 * np.finfo(float).eps * np.abs(z)
    return np.where(np.abs(z.real) <= tiny, 0, z.real) + 1j * np.where(np.abs(z.imag) <= tiny, 0, z.imag)


def cycle_eigenvalues(decomp: CycleDecomposition) -> List[CycleEigenvalue]:
    out = []
    for k, c in enumerate(decomp.cycles):
        if c.contains_base or not c.all_weights_nonzero:
            continue
        out.extend(CycleEigenvalue(complex(v), k) for v in roots(c.weight_product, c.length))
    order = {complex(v): i for i, v in enumerate(canonical_order([e.value for e in out]))}
    return sorted(out, key=lambda e: (order[e.value], e.cycle))


def eigenvector_for(op: WeightedLipOperator, cycle: Cycle, lam: complex, tol: float = 1e-9) -> FreeVector:
    """Finitely supported eigenvector Σ a_i δ(f^i(x)) with a_0 = 1, a_{i+1} = w(x_i) a_i / λ."""
    if lam == 0:
        raise PreconditionError("eigenvectors are built for nonzero λ only")
    p = cycle.weight_product
    if cycle.contains_base or abs(lam ** cycle.length - p) > tol * max(1.0, abs(p)):
        raise PreconditionError(f"λ = {lam} is not an n-th root of the cycle weight product {p}")
    a = 1.0 + 0j
    coeffs = {}
    for x in cycle.points:
        coeffs[x] = a
        a = op.w.values[x] * a / lam
    return FreeVector(op.space, coeffs)


def matrix_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int((s > rtol * np.abs(M).max()).sum())


def is_singular(M: np.ndarray, rtol: float = RANK_RTOL) -> bool:
    return M.shape[0] > 0 and matrix_rank(M, rtol) < M.shape[0]


# --------------------------------------------------------------------------
# discrete (uniformly discrete, finite) predicates


@dataclass
class DiscretePredicates:
    zero_in_point_spectrum: bool
    zero_reason: str
    zero_witness: Optional[FreeVector]
    surjective: bool
    surjectivity_constant: float
    isomorphism: bool

    def to_dict(self):
        return {
            "zero_in_point_spectrum": self.zero_in_point_spectrum,
            "zero_reason": self.zero_reason,
            "surjective": self.surjective,
            "surjectivity_constant": self.surjectivity_constant,
            "isomorphism": self.isomorphism,
        }


def discrete_predicates(op: WeightedLipOperator) -> DiscretePredicates:
    """Injectivity, surjectivity and invertibility of wf̂ from f and w alone.

    Only non-base points enter: δ(0) = 0, so a collision f(0) = f(x) with
    w(0) = 0 does not produce a kernel vector.
    """
    space, img, w = op.space, op.f.image, op.w
    b = space.base_index
    nb = space.nonbase.tolist()
    reason, witness = "", None
    for x in nb:
        if img[x] == b:
            reason, witness = f"f({space.label(x)}) = 0", FreeVector.delta(space, x)
            break
        if w.is_zero(x):
            reason, witness = f"w({space.label(x)}) = 0", FreeVector.delta(space, x)
            break
    if not reason:
        seen = {}
        for x in nb:
            y = int(img[x])
            if y in seen:
                x0 = seen[y]
                reason = f"f not injective: f({space.label(x0)}) = f({space.label(x)})"
                witness = FreeVector(space, {x: w.values[x0] / w.values[x], x0: -1.0})
                break
            seen[y] = x
    zero_in = bool(reason)
    best = {}
    for x in range(space.n):
        y = int(img[x])
        best[y] = max(best.get(y, 0.0), abs(w.values[x]))
    c = min((best.get(y, 0.0) for y in nb), default=math.inf)
    surjective = c > w.atol
    iso = not zero_in and surjective
    return DiscretePredicates(zero_in, reason or "none", witness, bool(surjective), float(c), bool(iso))


# --------------------------------------------------------------------------
# reports


@dataclass
class Check:
    name: str
    passed: bool
    witness: Optional[object] = None

    def to_dict(self):
        d = {"name": self.name, "passed": self.passed}
        if not self.passed:
            d["witness"] = self.witness
        return d


@dataclass
class SpectrumReport:
    decomposition: CycleDecomposition
    cycle_eigenvalues: List[CycleEigenvalue]
    zero_in_point_spectrum: bool
    zero_reason: str
    dim: int
    oracle_eigenvalues: Optional[np.ndarray] = None
    localization: List[Check] = field(default_factory=list)
    roots_of_unity: Optional[List[complex]] = None
    caveats: List[str] = field(default_factory=list)

    @property
    def nonzero_values(self) -> np.ndarray:
        return np.array([e.value for e in self.cycle_eigenvalues], dtype=complex)


def point_spectrum(op: WeightedLipOperator) -> SpectrumReport:
    """Cycle part of the point spectrum plus the rank-based verdict on 0."""
    dec = decompose(op.space, op.f, op.w)
    eigs = cycle_eigenvalues(dec)
    singular = is_singular(op.matrix)
    if singular:
        reason = discrete_predicates(op).zero_reason
        if reason == "none":
            reason = "singular matrix"
    else:
        reason = "matrix nonsingular"
    rou = None
    if op.unweighted:
        lengths = sorted(dec.cycle_lengths)
        pts = np.concatenate([roots(1.0, n) for n in lengths]) if lengths else np.zeros(0)
        rou = [v for v, _ in group_multiset(pts, 1e-12)]
    rep = SpectrumReport(dec, eigs, singular, reason, op.dim, roots_of_unity=rou)
    if op.space.descriptor.get("kind") in ("geometric", "shift"):
        rep.caveats.append(CAVEAT_TRUNCATION)
    rep.localization = localization_check(rep, op.w)
    return rep


def localization_check(report: SpectrumReport, w: Weight, tol: float = MATCH_TOL) -> List[Check]:
    """|λ| <= ||w||_∞ for all nonzero eigenvalues; cycle eigenvalues within the cycle's |w| range."""
    w = w if isinstance(w, Weight) else Weight(w)
    sup = w.sup_norm
    vals = list(report.nonzero_values)
    if report.oracle_eigenvalues is not None:
        vals += [v for v in report.oracle_eigenvalues if abs(v) > zero_tolerance(report.oracle_eigenvalues)]
    bad = [v for v in vals if abs(v) > sup + tol]
    checks = [Check("sup_norm_disk", not bad, [complex(v) for v in bad[:5]] or None)]
    band_bad = []
    for e in report.cycle_eigenvalues:
        c = report.decomposition.cycles[e.cycle]
        mods = np.abs(w.values[list(c.points)])
        if not (mods.min() - tol <= abs(e.value) <= mods.max() + tol):
            band_bad.append((complex(e.value), e.cycle))
    checks.append(Check("cycle_weight_band", not band_bad, band_bad[:5] or None))
    return checks


def zero_tolerance(values) -> float:
    v = np.abs(np.asarray(values))
    return 1e-9 * max(1.0, float(v.max()) if v.size else 1.0)


@dataclass
class OracleReport:
    matched: bool
    max_distance: float
    cycle_values: np.ndarray
    oracle_values: np.ndarray
    oracle_nonzero: np.ndarray
    zero_algebraic: int
    zero_oracle_count: int
    zero_geometric: int

    def to_dict(self):
        return {
            "matched": self.matched,
            "max_distance": self.max_distance,
            "zero_algebraic_multiplicity": self.zero_algebraic,
            "zero_oracle_count": self.zero_oracle_count,
            "zero_geometric_multiplicity": self.zero_geometric,
        }


def match_multisets(a, b):
    """Optimal assignment between two equal-size multisets; returns the max pair distance."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    D = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(D)
    return float(D[i, j].max())


def oracle_compare(op: WeightedLipOperator, tol: float = MATCH_TOL, raise_on_mismatch: bool = False) -> OracleReport:
    """Compare cycle-formula eigenvalues with the dense eigensolver.

    On mismatch (when ``raise_on_mismatch``) raises ``OracleMismatch`` whose
    ``dump`` is a replayable problem file.
    """
    dec = decompose(op.space, op.f, op.w)
    cyc = np.array([e.value for e in cycle_eigenvalues(dec)], dtype=complex)
    ev = dense_eigenvalues(op.matrix)
    nz = ev[np.abs(ev) > zero_tolerance(ev)]
    dist = match_multisets(nz, cyc)
    alg = op.dim - cyc.size
    geo = op.dim - matrix_rank(op.matrix)
    zeros_ok = (alg == op.dim - nz.size) and (geo <= alg) and ((geo > 0) == (alg > 0))
    ok = dist <= tol and zeros_ok
    rep = OracleReport(bool(ok), dist, cyc, ev, nz, alg, int(op.dim - nz.size), geo)
    if not ok and raise_on_mismatch:
        from .problem import problem_from_operator

        raise OracleMismatch(
            f"cycle spectrum and dense eigenvalues disagree (max distance {dist:.3g})",
            dump=problem_from_operator(op),
            details=rep.to_dict(),
        )
    return rep


def eigenspace_dimension(op: WeightedLipOperator, lam: complex, tol: float = 1e-9) -> int:
    """Number of non-base cycles with λ^n equal to the cycle weight product."""
    if lam == 0:
        raise ParameterError("eigenspace_dimension is defined for λ != 0")
    dec = decompose(op.space, op.f, op.w)
    count = 0
    for c in dec.cycles:
        if c.contains_base or not c.all_weights_nonzero:
            continue
        p = c.weight_product
        if abs(lam ** c.length - p) <= tol * max(1.0, abs(p)):
            count += 1
    return count


def eigenspace_dimension_rank(op: WeightedLipOperator, lam: complex, rtol: float = 1e-8) -> int:
    """Rank-deficiency of (M - λI), the independent check of ``eigenspace_dimension``."""
    M = op.matrix - lam * np.eye(op.dim)
    s = np.linalg.svd(M, compute_uv=False)
    scale = max(1.0, np.abs(op.matrix).max(), abs(lam))
    return int((s <= rtol * scale).sum())


def oracle_eigenvectors(M: np.ndarray, lam: complex, k: int = 1, iters: int = 50, seed: int = 0) -> np.ndarray:
    """Block inverse iteration near λ with re-orthonormalisation; columns span the eigenspace."""
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    shift = lam + 1e-10 * max(1.0, abs(lam)) * cmath.exp(0.7j)
    lu = scipy.linalg.lu_factor(M - shift * np.eye(n))
    X = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    X, _ = np.linalg.qr(X)
    for _ in range(iters):
        X = scipy.linalg.lu_solve(lu, X)
        X, _ = np.linalg.qr(X)
    return X


@dataclass
class GelfandResult:
    terms: List[tuple]  # (n, ||(wf̂)^n||^(1/n) upper bound)
    spectral_radius: float

    @property
    def minimum(self) -> float:
        return min(t for _, t in self.terms)

    def to_dict(self):
        return {
            "terms": [{"n": n, "term": t} for n, t in self.terms],
            "spectral_radius": self.spectral_radius,
        }


def gelfand_sequence(op: WeightedLipOperator, n_max: int) -> GelfandResult:
    """Upper bounds ||(wf̂)^n||^{1/n}, n = 1..n_max, and r = max |eigenvalue|.

    Each term uses the certified upper end of ``operator_norm``; for w ≡ 1
    it equals Lip(f^n)^{1/n}.
    """
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    terms = []
    for n in range(1, n_max + 1):
        _, hi = operator_norm(power(op, n))
        terms.append((n, hi ** (1.0 / n)))
    ev = dense_eigenvalues(op.matrix)
    r = float(np.abs(ev).max()) if ev.size else 0.0
    return GelfandResult(terms, r)


def root_of_unity_order(lam: complex, max_order: int, tol: float = 1e-6) -> Optional[int]:
    for n in range(1, max_order + 1):
        if abs(lam ** n - 1) <= tol:
            return n
    return None


def cycle_lengths_from_spectrum(values, max_order: int, tol: float = 1e-6) -> Optional[List[int]]:
    """Recover the multiset of cycle lengths from an unweighted nonzero spectrum.

    The spectrum is a disjoint union of full sets U_n, one per cycle.  The
    largest order L present must be a cycle length; remove one copy of U_L and
    repeat.  Returns ``None`` when the multiset is not such a union.
    """
    rest = [complex(v) for v in values]
    lengths = []
    while rest:
        orders = [root_of_unity_order(v, max_order, tol) for v in rest]
        if any(o is None for o in orders):
            return None
        L = max(orders)
        for z in roots(1.0, L):
            k = min(range(len(rest)), key=lambda i: abs(rest[i] - z))
            if abs(rest[k] - z) > tol:
                return None
            rest.pop(k)
        lengths.append(L)
    return sorted(lengths)
