"""Backward-shift models: f(n) = n - 1 on sum-metric spaces {0, 1, ..., N}.

On a sum metric the map e_n -> δ(n)/r_n (r_n = d(n, 0)) is an isometry from
weighted-free ℓ₁ onto F(M), so wf̂ is conjugate to a weighted shift
T e_n = w(n) (r_{n-1}/r_n) e_{n-1}.  All pseudospectral work is done on T in
the Euclidean norm of coefficient space.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalError, ParameterError
from .free import FreeVector, sum_metric_norm
from .metric import PointedMetricSpace, SelfMap, Weight, make_space, sum_radial
from .operator import WeightedLipOperator, apply, build
from .spectral import SpectrumReport, point_spectrum
from .eigen import dense_eigenvalues

TRUNCATION_CAVEAT = (
    "truncated shifts are nilpotent, so the truncation spectrum is {0}; it does "
    "not converge to the spectrum of the infinite shift, use resolvent_scan instead"
)
EPS_LINES = (1e-2, 1e-4, 1e-8)


@dataclass(frozen=True, eq=False)
class ShiftModel:
    op: WeightedLipOperator
    radii: np.ndarray  # r_1..r_N (plus any appended fixed points)
    shift_weights: np.ndarray  # T[k-1, k] for k = 1..N-1 (0-based columns)
    conjugated: np.ndarray = field(repr=False)  # T = diag(r) A diag(1/r)
    direction: str = "backward"

    @property
    def delta_matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def N(self) -> int:
        return self.op.dim

    def similarity_defect(self) -> float:
        r = self.radii
        back = (self.conjugated / r[:, None]) * r[None, :]
        return float(np.abs(back - self.delta_matrix).max()) if r.size else 0.0


def _conjugate(op: WeightedLipOperator) -> tuple:
    r = op.space.radii[op.space.nonbase]
    T = (r[:, None] * op.matrix) / r[None, :]
    return r, T


def _model(op: WeightedLipOperator) -> ShiftModel:
    r, T = _conjugate(op)
    w = np.real_if_close(np.diag(T, 1)).copy()
    return ShiftModel(op, r, w, T)


def build_shift(descriptor, weight=None) -> ShiftModel:
    """Backward shift f(n) = n - 1 (f(1) = 0) on a ``shift``, ``geometric`` or ``sum_radial`` space.

    ``descriptor`` is a descriptor dict or an already built space.  For
    ``shift(N)`` all conjugated weights are 1/2; for ``geometric(|λ|, N)``
    they are r_{n-1}/r_n = 2|λ|.
    """
    space = descriptor if isinstance(descriptor, PointedMetricSpace) else make_space(dict(descriptor))
    kind = space.descriptor.get("kind")
    if kind not in ("shift", "geometric", "sum_radial"):
        raise ParameterError(f"no shift model for a {kind!r} space")
    if space.n - 1 < 2:
        raise ParameterError("shift models need N >= 2")
    img = np.arange(space.n) - 1
    img[0] = 0
    w = Weight.ones(space.n) if weight is None else Weight(weight)
    return _model(build(space, SelfMap(img), w))


def add_fixed_point(model: ShiftModel, weight: complex = 1.0) -> ShiftModel:
    """Append a point far from the rest, fixed by f, carrying ``weight``.

    The result lives on a ``sum_radial`` space; its matrix is the old one plus
    a 1x1 diagonal block, so ``weight`` joins the spectrum.
    """
    sp = model.op.space
    rho = sp.radii[sp.nonbase]
    new = sum_radial(np.concatenate([rho, [2.0 * rho.max()]]))
    img = np.concatenate([model.op.f.image, [new.n - 1]])
    w = np.concatenate([model.op.w.values, [weight]])
    return _model(build(new, SelfMap(img), Weight(w)))


def truncation_eigen_report(model: ShiftModel) -> SpectrumReport:
    rep = point_spectrum(model.op)
    rep.oracle_eigenvalues = dense_eigenvalues(model.delta_matrix)
    rep.caveats.append(TRUNCATION_CAVEAT)
    return rep


# --------------------------------------------------------------------------
# resolvent scan


@dataclass(frozen=True)
class Grid:
    re0: float = -0.8
    re1: float = 0.8
    im0: float = -0.8
    im1: float = 0.8
    res: int = 81

    def __post_init__(self):
        vals = (self.re0, self.re1, self.im0, self.im1)
        if not all(np.isfinite(vals)) or self.re0 > self.re1 or self.im0 > self.im1:
            raise ParameterError("grid needs finite bounds with re0 <= re1 and im0 <= im1")
        if int(self.res) != self.res or self.res < 1:
            raise ParameterError("grid resolution must be a positive integer")

    def axes(self):
        return np.linspace(self.re0, self.re1, self.res), np.linspace(self.im0, self.im1, self.res)

    def points(self) -> np.ndarray:
        """Grid points, real part varying slowest."""
        re, im = self.axes()
        R, I = np.meshgrid(re, im, indexing="ij")
        return (R + 1j * I).ravel()


@dataclass
class GridScan:
    grid: Grid
    points: np.ndarray
    values: np.ndarray  # smallest singular value of T - λI
    norm: str = "euclidean"

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            self.write_rows(fh)

    def write_rows(self, fh):
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["re", "im", "sigma_min"])
        for z, s in zip(self.points, self.values):
            wr.writerow([format(z.real, ".17g"), format(z.imag, ".17g"), format(s, ".17g")])

    def below(self, eps: float) -> np.ndarray:
        return self.points[self.values <= eps]


def sigma_min(T: np.ndarray, lams) -> np.ndarray:
    """Smallest singular value of T - λI for each λ (exactly 0 on a zero row or column)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = T.shape[0]
    out = np.empty(lams.size)
    idx = np.arange(n)
    chunk = max(1, 4_000_000 // max(1, n * n))
    for s in range(0, lams.size, chunk):
        lam = lams[s:s + chunk]
        B = np.broadcast_to(T.astype(complex), (lam.size, n, n)).copy()
        B[:, idx, idx] -= lam[:, None]
        degenerate = np.any(np.all(B == 0, axis=1), axis=1) | np.any(np.all(B == 0, axis=2), axis=1)
        try:
            sv = np.linalg.svd(B, compute_uv=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("SVD did not converge", {"lambdas": lam.tolist()}) from exc
        vals = sv[:, -1] if n else np.zeros(lam.size)
        vals[degenerate] = 0.0
        out[s:s + chunk] = vals
    return out


def resolvent_scan(model, grid: Optional[Grid] = None) -> GridScan:
    """σ_min(T_N - λI) over a rectangular grid (default 81x81 over [-0.8, 0.8]²)."""
    grid = grid or Grid()
    T = model.conjugated if isinstance(model, ShiftModel) else np.asarray(model)
    pts = grid.points()
    return GridScan(grid, pts, sigma_min(T, pts))


# --------------------------------------------------------------------------
# approximate eigenvectors on d_λ spaces


@dataclass(frozen=True)
class ResidualReport:
    lam: complex
    N: int
    residual_norm: float
    vector_norm: float
    relative: float
    bound: float  # |λ| 2^-N / (1 - 2^-N)


def approx_eigenvector_residual(lam: complex, N: int) -> ResidualReport:
    """Relative residual of γ_N = Σ_{k<=N} λ^k δ(k) for the backward shift on geometric(|λ|, N).

    Coefficients are built by repeated multiplication, so every term except
    -λ^{N+1} δ(N) cancels exactly and the result is the closed form up to
    rounding in the norm sums.
    """
    lam = complex(lam)
    if lam == 0:
        raise ParameterError("λ = 0 has no approximate eigenvector here")
    if int(N) != N or N < 1:
        raise ParameterError("N must be a positive integer")
    model = build_shift({"kind": "geometric", "lambda_abs": abs(lam), "n": int(N)})
    sp = model.op.space
    c = np.empty(N, dtype=complex)
    c[0] = lam
    for k in range(1, N):
        c[k] = lam * c[k - 1]
    gamma = FreeVector(sp, {k + 1: c[k] for k in range(N)})
    res = apply(model.op, gamma) - gamma * lam
    rn = sum_metric_norm(res)
    gn = sum_metric_norm(gamma)
    bound = abs(lam) * 2.0 ** -N / (1 - 2.0 ** -N)
    return ResidualReport(lam, int(N), rn, gn, rn / gn, bound)
