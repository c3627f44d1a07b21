import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lipspec.errors import OracleMismatch, ParameterError, PreconditionError
from lipspec.free import FreeVector, norm_bounds, norm_upper
from lipspec.instances import random_instance
from lipspec.metric import SelfMap, sum_radial
from lipspec.operator import apply, build
from lipspec.spectral import (
    cycle_eigenvalues,
    cycle_lengths_from_spectrum,
    decompose,
    discrete_predicates,
    eigenspace_dimension,
    eigenspace_dimension_rank,
    eigenvector_for,
    gelfand_sequence,
    is_singular,
    localization_check,
    match_multisets,
    oracle_compare,
    oracle_eigenvectors,
    point_spectrum,
)

SP = sum_radial([1, 2, 3, 4, 5])


def values(dec):
    return np.array([e.value for e in cycle_eigenvalues(dec)])


def test_decompose_examples():
    sp = sum_radial([1, 2])
    dec = decompose(sp, SelfMap.identity(3))
    assert [c.points for c in dec.cycles] == [(0,), (1,), (2,)]
    assert dec.cycles[0].contains_base and dec.base_cycle_excluded
    assert values(dec).size == 2

    dec = decompose(SP, [0, 2, 3, 1, 0, 0])
    assert [c.points for c in dec.cycles if not c.contains_base] == [(1, 2, 3)]
    assert dec.tails == {4: 1, 5: 1}
    assert dec.periodic_points(3) == {1, 2, 3} and dec.cycle_lengths == {3}

    dec = decompose(sum_radial([1, 2]), [0, 2, 1], [1, 2, 3])
    assert dec.cycles[1].weight_product == 6


def test_tail_depths():
    dec = decompose(SP, [0, 1, 1, 2, 3, 4])
    assert dec.tails == {2: 1, 3: 2, 4: 3, 5: 4}


def test_cycle_eigenvalue_examples():
    assert match_multisets(values(decompose(SP, [0, 2, 3, 1, 0, 0])), np.exp(2j * np.pi * np.arange(3) / 3)) <= 1e-15
    sp = sum_radial([1, 2])
    assert match_multisets(values(decompose(sp, [0, 2, 1], [1, 2, 3])), [6 ** 0.5, -(6 ** 0.5)]) <= 1e-14
    assert values(decompose(sp, [0, 1, 0], [1, 0, 1])).size == 0


def test_eigenvector_examples():
    sp = sum_radial([1, 2])
    op = build(sp, [0, 2, 1])
    cyc = decompose(sp, op.f).cycles[1]
    g = eigenvector_for(op, cyc, -1)
    assert g == FreeVector(sp, {1: 1, 2: -1})
    assert apply(op, g) == g * -1

    op = build(sp, [0, 1, 0], [1, 0.7, 1])
    assert eigenvector_for(op, decompose(sp, op.f, op.w).cycles[1], 0.7) == FreeVector.delta(sp, 1)

    op = build(sp, [0, 2, 1], [1, 2, 3])
    cyc = decompose(sp, op.f, op.w).cycles[1]
    lam = 6 ** 0.5
    g = eigenvector_for(op, cyc, lam)
    assert np.allclose(g.to_array(), [1, 2 / lam])
    assert np.allclose(op.matrix @ g.to_array(), lam * g.to_array())
    with pytest.raises(PreconditionError):
        eigenvector_for(op, cyc, 2.0)
    with pytest.raises(PreconditionError):
        eigenvector_for(op, cyc, 0)


def test_point_spectrum_examples():
    op = build(SP, [0, 1, 3, 2, 0, 0])
    rep = point_spectrum(op)
    assert match_multisets(rep.nonzero_values, [1, 1, -1]) <= 1e-15
    assert match_multisets(rep.roots_of_unity, [1, -1]) == 0
    assert rep.zero_in_point_spectrum  # f(4) = 0

    rep = point_spectrum(build(SP, [0, 2, 2, 4, 5, 3]))
    assert rep.zero_in_point_spectrum and rep.zero_reason.startswith("f not injective")

    rng = np.random.default_rng(1)
    perm = np.concatenate([[0], 1 + rng.permutation(5)])
    rep = point_spectrum(build(SP, perm, np.concatenate([[1], rng.uniform(0.5, 2, 5)])))
    assert not rep.zero_in_point_spectrum


def test_oracle_compare_examples():
    rep = oracle_compare(build(SP, [0, 0, 1, 2, 3, 4]))
    assert rep.matched and rep.cycle_values.size == 0 and not rep.oracle_values.any()
    op = random_instance(7, max_points=20, min_points=20).operator()
    assert oracle_compare(op, raise_on_mismatch=True).matched


def test_oracle_mismatch_dump():
    op = build(SP, [0, 2, 1, 3, 4, 5], [1, 2, 3, 1, 1, 1])
    with pytest.raises(OracleMismatch) as exc:
        oracle_compare(op, tol=-1.0, raise_on_mismatch=True)
    dump = exc.value.dump
    assert dump["map"]["1"] == "2" and dump["weight"]["2"] == [3.0, 0.0]


def test_eigenspace_dimension_examples():
    sp = sum_radial([1, 2, 3, 4])
    op = build(sp, [0, 2, 1, 4, 3])
    assert eigenspace_dimension(op, -1) == 2 == eigenspace_dimension_rank(op, -1)
    assert eigenspace_dimension(op, 2) == 0 == eigenspace_dimension_rank(op, 2)
    op = build(sp, [0, 1, 0, 0, 0], [1, 5, 1, 1, 1])
    assert eigenspace_dimension(op, 5) == 1
    with pytest.raises(ParameterError):
        eigenspace_dimension(op, 0)


def test_gelfand_examples():
    sp = sum_radial([1, 2])
    res = gelfand_sequence(build(sp, SelfMap.constant(3, 0)), 3)
    assert res.terms[0][1] == 0 and res.spectral_radius == 0
    res = gelfand_sequence(build(SP, [0, 2, 3, 4, 5, 1]), 6)
    assert abs(res.spectral_radius - 1) <= 1e-9 and all(t >= 1 - 1e-12 for _, t in res.terms)
    # cycle weights 0.5 give r < 1 and the spectrum sits inside the disk
    op = build(SP, [0, 2, 3, 1, 0, 0], [1, 0.5, 0.5, 0.5, 1, 1])
    res = gelfand_sequence(op, 6)
    assert res.spectral_radius == pytest.approx(0.5)
    assert res.minimum >= res.spectral_radius - 1e-7
    with pytest.raises(ParameterError):
        gelfand_sequence(op, 0)


def test_unweighted_r_below_one_has_only_zero():
    # f with Lip(f^n) -> 0: backward shift on shift(N) halves radii
    sp = sum_radial(2.0 ** np.arange(1, 7))
    op = build(sp, [0, 0, 1, 2, 3, 4, 5])
    res = gelfand_sequence(op, 6)
    assert res.minimum < 1 and point_spectrum(op).nonzero_values.size == 0


def test_discrete_predicate_examples():
    rng = np.random.default_rng(2)
    perm = np.concatenate([[0], 1 + rng.permutation(5)])
    w = np.array([1, 0.3, 1, 2, 0.7, 5])
    p = discrete_predicates(build(SP, perm, w))
    assert p.isomorphism and p.surjective and p.surjectivity_constant == pytest.approx(0.3)

    op = build(SP, [0, 3, 3, 1, 2, 4], [1, 2, 5, 1, 1, 1])
    p = discrete_predicates(op)
    assert p.zero_in_point_spectrum
    g = p.zero_witness
    assert g == FreeVector(SP, {2: 2 / 5, 1: -1})
    assert len(apply(op, g)) == 0

    op = build(SP, [0, 1, 1, 2, 3, 4])  # 5 has no preimage
    p = discrete_predicates(op)
    assert not p.surjective and is_singular(op.matrix)
    assert np.all(op.matrix[4] == 0)


def test_base_moved_with_zero_weight():
    # f(0) = f(1) but w(0) = 0: no kernel vector from the collision
    sp = sum_radial([1, 2])
    op = build(sp, [1, 2, 1], [0, 1, 1])
    p = discrete_predicates(op)
    assert not p.zero_in_point_spectrum and p.isomorphism
    assert not is_singular(op.matrix)


def test_localization_examples():
    rep = point_spectrum(build(SP, [0, 2, 3, 1, 5, 4]))
    assert all(c.passed for c in rep.localization)
    assert all(abs(abs(v) - 1) <= 1e-7 for v in rep.nonzero_values)
    sp = sum_radial([1, 2])
    op = build(sp, [0, 2, 1], [1, 2, 3])
    rep = point_spectrum(op)
    assert all(2 <= abs(v) <= 3 for v in rep.nonzero_values)
    assert all(c.passed for c in localization_check(rep, op.w))
    rep = point_spectrum(build(sp, [0, 0, 0]))
    assert all(c.passed for c in rep.localization)


def test_cycle_lengths_from_spectrum():
    ev = np.concatenate([np.exp(2j * np.pi * np.arange(n) / n) for n in (1, 2, 4, 4)])
    assert cycle_lengths_from_spectrum(ev, 10) == [1, 2, 4, 4]
    assert cycle_lengths_from_spectrum([1j], 10) is None
    assert cycle_lengths_from_spectrum([2.0], 10) is None


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_oracle_equivalence_property(seed):
    op = random_instance(seed).operator()
    rep = oracle_compare(op)
    assert rep.matched, rep.to_dict()
    assert rep.oracle_values.size == op.dim


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_eigen_residual_property(seed):
    op = random_instance(seed, max_points=15).operator()
    rep = point_spectrum(op)
    for e in rep.cycle_eigenvalues:
        g = eigenvector_for(op, rep.decomposition.cycles[e.cycle], e.value)
        res = apply(op, g) - g * e.value
        up = norm_upper(res)[0] if len(res) else 0.0
        assert up <= 1e-8 * norm_bounds(g).lower


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_singularity_equivalence(seed):
    op = random_instance(seed, zero_frac=0.05 * (seed % 3)).operator()
    p = discrete_predicates(op)
    assert p.zero_in_point_spectrum == is_singular(op.matrix)
    assert p.isomorphism == (not is_singular(op.matrix)) == p.surjective


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_gelfand_property(seed):
    op = random_instance(seed, max_points=10).operator()
    res = gelfand_sequence(op, 4)
    assert all(res.spectral_radius <= t + 1e-7 for _, t in res.terms)
    if op.unweighted:
        t = dict(res.terms)
        assert t[4] <= t[2] * (1 + 1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_oracle_eigenvectors_live_on_cycles(seed):
    op = random_instance(seed, max_points=15, zero_frac=0.0, map_kind="cycles").operator()
    rep = point_spectrum(op)
    nb = op.space.nonbase
    for e in rep.cycle_eigenvalues:
        k = eigenspace_dimension(op, e.value)
        X = oracle_eigenvectors(op.matrix, e.value, k)
        cyc_pts = set()
        for c in rep.decomposition.cycles:
            if not c.contains_base and abs(e.value ** c.length - c.weight_product) <= 1e-9 * max(1, abs(c.weight_product)):
                cyc_pts |= set(c.points)
        for col in X.T:
            supp = {int(nb[i]) for i in np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())}
            assert supp <= cyc_pts


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_eigenspace_dimension_matches_rank(seed):
    op = random_instance(seed, max_points=15).operator()
    for e in point_spectrum(op).cycle_eigenvalues:
        assert eigenspace_dimension(op, e.value) == eigenspace_dimension_rank(op, e.value)
