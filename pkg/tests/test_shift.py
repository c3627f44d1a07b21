import io

import numpy as np
import pytest

from lipspec.errors import ParameterError
from lipspec.spectral import match_multisets
from lipspec.eigen import dense_eigenvalues
from lipspec.shift import (
    Grid,
    add_fixed_point,
    approx_eigenvector_residual,
    build_shift,
    resolvent_scan,
    sigma_min,
    truncation_eigen_report,
)


def test_shift3_is_half_backward_shift():
    m = build_shift({"kind": "shift", "n": 3})
    S = np.diag(np.ones(2), 1)
    assert np.array_equal(m.conjugated, 0.5 * S)
    assert m.similarity_defect() <= 1e-10


def test_geometric_weights():
    # r_k = (2|λ|)^-k, so r_{k-1}/r_k = 2|λ|
    m = build_shift({"kind": "geometric", "lambda_abs": 0.75, "n": 6})
    assert np.allclose(m.shift_weights, 1.5, rtol=1e-12)
    assert m.similarity_defect() <= 1e-10


def test_minimal_and_unsupported():
    m = build_shift({"kind": "shift", "n": 2})
    assert np.array_equal(dense_eigenvalues(m.conjugated), [0, 0])
    with pytest.raises(ParameterError):
        build_shift({"kind": "shift", "n": 1})
    with pytest.raises(ParameterError):
        build_shift({"kind": "explicit", "d": [[0, 1], [1, 0]]})


def test_truncation_reports():
    for desc in ({"kind": "shift", "n": 100}, {"kind": "geometric", "lambda_abs": 1, "n": 50}):
        rep = truncation_eigen_report(build_shift(desc))
        assert not rep.oracle_eigenvalues.any()
        assert any("nilpotent" in c for c in rep.caveats)
    rep = truncation_eigen_report(add_fixed_point(build_shift({"kind": "shift", "n": 10})))
    assert match_multisets(rep.nonzero_values, [1]) == 0
    assert np.count_nonzero(rep.oracle_eigenvalues) == 1


def test_similarity_preserves_spectrum():
    m = add_fixed_point(build_shift({"kind": "sum_radial", "rho": [1, 3, 4, 9]}, weight=[1, 2, 1j, 3, 1]), 0.5j)
    assert match_multisets(dense_eigenvalues(m.conjugated), dense_eigenvalues(m.delta_matrix)) <= 1e-9


def test_resolvent_probes():
    T = build_shift({"kind": "shift", "n": 100}).conjugated
    s = sigma_min(T, [0.4, 0.6, 0.0])
    assert s[0] <= 1e-8 and s[1] >= 0.05 and s[2] == 0.0


def test_resolvent_monotone_inside():
    for lam in (0.1, 0.25, 0.4):
        vals = [sigma_min(build_shift({"kind": "shift", "n": n}).conjugated, lam)[0] for n in (10, 20, 40, 80)]
        # non-increasing until the rounding floor
        assert all(b <= a * (1 + 1e-6) + 1e-15 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("lam", [
    pytest.param(0.6, marks=pytest.mark.xfail(strict=True, reason="0.1148 at N=25 vs 0.1013 at N=100: 13% spread at the boundary radius")),
    0.65, 0.7j, -0.7 + 0.3j, 0.8,
])
def test_resolvent_uniform_outside(lam):
    vals = [sigma_min(build_shift({"kind": "shift", "n": n}).conjugated, lam)[0] for n in (25, 50, 100)]
    assert max(vals) <= 1.1 * min(vals)


def test_grid_scan_csv_and_symmetry():
    m = build_shift({"kind": "shift", "n": 12})
    scan = resolvent_scan(m, Grid(-0.5, 0.5, -0.5, 0.5, 5))
    assert np.all(scan.values >= 0)
    grid = scan.values.reshape(5, 5)
    assert np.allclose(grid, grid[:, ::-1], rtol=1e-10, atol=1e-15)
    buf = io.StringIO()
    scan.write_rows(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "re,im,sigma_min" and len(lines) == 26
    re, im, s = (float(x) for x in lines[1].split(","))
    assert (re, im) == (-0.5, -0.5) and s == scan.values[0]
    with pytest.raises(ParameterError):
        Grid(1, 0, 0, 1, 3)


def test_approx_residual_examples():
    r = approx_eigenvector_residual(2, 20)
    assert r.relative <= 2 * 2.0 ** -20 * 1.01
    r = approx_eigenvector_residual(1, 10)
    assert r.relative == pytest.approx(2.0 ** -10 / (1 - 2.0 ** -10), rel=1e-12)
    with pytest.raises(ParameterError):
        approx_eigenvector_residual(0, 10)


@pytest.mark.parametrize("lam", [2, 0.3, 1j, -0.8 + 0.4j])
def test_residual_closed_form_law(lam):
    for N in (4, 9, 20, 33):
        r = approx_eigenvector_residual(lam, N)
        assert abs(r.relative / r.bound - 1) <= 1e-6
