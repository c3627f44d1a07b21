import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import lp_transport_norm
from lipspec.errors import ParameterError
from lipspec.flow import min_cost_flow
from lipspec.free import (
    FreeVector,
    norm_bounds,
    norm_lower,
    norm_real,
    norm_upper,
    pair,
    sum_metric_norm,
    support,
    two_point_norm,
)
from lipspec.instances import random_space
from lipspec.metric import explicit, lipschitz_constant, sum_radial


def rand_real_vector(rng, space, k):
    idx = rng.choice(space.nonbase, size=min(k, space.n - 1), replace=False)
    return FreeVector(space, {int(i): rng.normal() for i in idx})


def test_support_and_zero_dropping():
    sp = sum_radial([1, 2, 3])
    assert support(FreeVector.delta(sp, 1)) == {1}
    assert support(FreeVector.delta(sp, 1) - FreeVector.delta(sp, 1)) == frozenset()
    assert support(FreeVector(sp, {1: 2.0, 2: 0.0})) == {1}
    assert support(FreeVector(sp, {0: 5.0})) == frozenset()


def test_pairing_examples():
    sp = sum_radial([1, 2, 3])
    rho = sp.radii
    assert pair(rho, FreeVector.delta(sp, 2)) == 2
    assert pair(rho, FreeVector(sp)) == 0
    assert pair(rho, FreeVector.delta(sp, 3) - FreeVector.delta(sp, 1)) == 2


def test_norm_real_examples():
    sp = explicit([[0, 1, 1.5], [1, 0, 1], [1.5, 1, 0]])
    assert norm_real(FreeVector.delta(sp, 2)).upper == 1.5
    c = norm_real(FreeVector.delta(sp, 1) - FreeVector.delta(sp, 2))
    assert c.exact and np.isclose(c.upper, 1.0)
    sp = sum_radial([1, 2])
    c = norm_real(FreeVector(sp, {1: 3, 2: -5}))
    assert np.isclose(c.lower, 13) and np.isclose(c.upper, 13)
    with pytest.raises(ParameterError):
        norm_real(FreeVector(sp, {1: 1j}))


def test_min_cost_flow_small():
    cost = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    res = min_cost_flow(cost, [2, 0, -2])
    assert np.isclose(res.cost, 4) and np.isclose(res.dual, 4)
    # dual feasibility y_i - y_j <= c_ij
    y = res.potential
    assert np.all(y[:, None] - y[None, :] <= cost + 1e-12)


def test_norm_bounds_real_and_rotated():
    sp = sum_radial([1, 2, 3])
    g = FreeVector(sp, {1: 1.0, 3: -2.0})
    c = norm_bounds(g, 4)
    assert np.isclose(c.lower, norm_real(g).upper) and np.isclose(c.upper, c.lower)
    c = norm_bounds(FreeVector(sp, {2: 1j}), 8)
    assert np.isclose(c.lower, 2) and np.isclose(c.upper, 2)


def test_norm_bounds_nest_with_k():
    rng = np.random.default_rng(3)
    sp = random_space(rng, 6)
    g = FreeVector(sp, {1: 1.0, 2: 1j, 4: 0.3 - 0.7j})
    c4, c32 = norm_bounds(g, 4), norm_bounds(g, 32)
    assert c4.lower <= c32.lower + 1e-12 and c32.upper <= c4.upper + 1e-12
    assert c32.upper - c32.lower <= c4.upper - c4.lower + 1e-12
    assert c32.upper <= c32.lower / np.cos(np.pi / 32) * (1 + 1e-9)


def test_complex_sum_metric_exact():
    sp = sum_radial([1, 2])
    c = norm_bounds(FreeVector(sp, {1: 1, 2: 1j}), 8)
    assert np.isclose(c.lower, 3) and np.isclose(c.upper, 3)


def test_two_point_examples():
    sp = explicit([[0, 1, 1.5], [1, 0, 1], [1.5, 1, 0]])
    oracle = lp_transport_norm(sp, {1: 1.0, 2: -1.0})
    assert np.isclose(two_point_norm(sp, 1, 1, -1, 2), oracle)
    assert np.isclose(two_point_norm(sp, 2 + 1j, 1, 0, 2), abs(2 + 1j) * 1.0)
    sp = explicit([[0, 1, 1], [1, 0, 2], [1, 2, 0]])
    assert np.isclose(two_point_norm(sp, 1, 1, 1, 2), 2.0)
    with pytest.raises(ParameterError):
        two_point_norm(sp, 1, 1, 1, 1)


def test_grid_order_checked():
    sp = sum_radial([1, 2])
    with pytest.raises(ParameterError):
        norm_bounds(FreeVector(sp, {1: 1j, 2: 1}), 5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 12), st.integers(1, 8))
def test_norm_real_matches_lp_oracle(seed, n, k):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, n)
    g = rand_real_vector(rng, sp, k)
    c = norm_real(g)
    ref = lp_transport_norm(sp, dict(iter(g)))
    assert abs(c.upper - ref) <= 1e-9 * (1 + ref)
    assert abs(c.upper - c.lower) <= 1e-9 * (1 + c.upper)
    dual = c.dual_function
    assert dual[sp.base_index] == 0
    assert lipschitz_constant(sp, dual) <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 8),
       st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_homogeneity_and_sandwich(seed, n, c):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, n)
    idx = rng.choice(sp.nonbase, size=min(3, n - 1), replace=False)
    g = FreeVector(sp, {int(i): complex(rng.normal(), rng.normal()) for i in idx})
    b1, b2 = norm_bounds(g), norm_bounds(g * c)
    assert b1.lower <= b1.upper
    assert b2.lower <= abs(c) * b1.upper * (1 + 1e-9)
    assert abs(c) * b1.lower <= b2.upper * (1 + 1e-9)
    lo, w = norm_lower(g)
    assert np.isclose(abs(pair(w, g)), lo) and lipschitz_constant(sp, w) <= 1 + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, 6)
    g1 = FreeVector(sp, {1: complex(rng.normal(), rng.normal()), 2: rng.normal()})
    g2 = FreeVector(sp, {2: 1j * rng.normal(), 4: complex(rng.normal(), rng.normal())})
    assert norm_bounds(g1 + g2).lower <= norm_bounds(g1).upper + norm_bounds(g2).upper + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_sum_metric_closed_form(seed):
    rng = np.random.default_rng(seed)
    sp = sum_radial(rng.uniform(0.1, 5, 8))
    g = FreeVector(sp, {int(i): complex(rng.normal(), rng.normal()) for i in rng.choice(sp.nonbase, 4, replace=False)})
    ref = sum_metric_norm(g)
    c = norm_bounds(g)
    assert c.lower <= ref * (1 + 1e-9) and ref <= c.upper * (1 + 1e-9)
    real = FreeVector(sp, {i: a.real for i, a in g})
    assert abs(norm_real(real).upper - sum_metric_norm(real)) <= 1e-9 * sum_metric_norm(real)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_pairing_bound(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, 7)
    f = rng.normal(size=7) + 1j * rng.normal(size=7)
    f -= f[sp.base_index]
    f /= lipschitz_constant(sp, f)
    g = FreeVector(sp, {1: complex(rng.normal(), rng.normal()), 3: rng.normal(), 5: 1j})
    assert abs(pair(f, g)) <= norm_upper(g)[0] * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 9))
def test_two_point_within_bounds(seed, n):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, n)
    u, v = (int(x) for x in rng.choice(sp.nonbase, 2, replace=False))
    a, b = complex(rng.normal(), rng.normal()), complex(rng.normal(), rng.normal())
    c = norm_bounds(FreeVector(sp, {u: a, v: b}))
    val = two_point_norm(sp, a, u, b, v)
    assert c.lower - 1e-12 <= val <= c.upper + 1e-12
    # real-proportional molecules are exact against the LP oracle
    t = rng.normal()
    val = two_point_norm(sp, 1.0, u, t, v, check=False)
    assert abs(val - lp_transport_norm(sp, {u: 1.0, v: t})) <= 1e-9 * (1 + val)


def test_three_edge_value_not_exact_for_complex_molecules():
    # a fourth point gives a cheaper complex decomposition than the three edges
    rng = np.random.default_rng(114)
    sp = random_space(rng, int(rng.integers(4, 9)))
    u, v = (int(x) for x in rng.choice(sp.nonbase, 2, replace=False))
    a, b = complex(rng.normal(), rng.normal()), complex(rng.normal(), rng.normal())
    three_edge = two_point_norm(sp, a, u, b, v, check=False)
    cert = norm_bounds(FreeVector(sp, {u: a, v: b}), 64)
    assert sp.n == 4 and three_edge > cert.upper * (1 + 1e-6)
    assert two_point_norm(sp, a, u, b, v, K=64) == cert.upper
