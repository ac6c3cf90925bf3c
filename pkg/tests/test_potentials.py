import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitherm.errors import InvalidSpecError, NotClosedGeodesicError
from orbitherm.geometry import HPoint, TangentVector, flip, translation_length
from orbitherm.potentials import (
    Bump,
    ClosedOrbit,
    Constant,
    Flipped,
    Sampler,
    Scaled,
    SubgroupCore,
    Tail,
    Union,
    WeightedSum,
    birkhoff_integral,
    closed_geodesic_from_word,
    dist_to_invariant_set,
    eval_potential,
    lipschitz_bound,
    orbit_length,
    potential_from_json,
    sample_invariant_set,
    set_spec_from_json,
    sup_bound,
)
from orbitherm.words import parse_word

vectors = st.builds(TangentVector, st.builds(HPoint, st.floats(-4, 4), st.floats(0.1, 5)),
                    st.floats(0, 2 * math.pi, exclude_max=True))


def test_orbit_length_matches_trace(demo_group):
    for s in ("a", "ab", "aB", "aabAB", "abbaB"):
        w = parse_word(s)
        tr_len = translation_length(demo_group.matrix_of(w), det1=True)
        assert orbit_length(w, demo_group) == pytest.approx(tr_len, rel=1e-10)


def test_closed_geodesic_samples(demo_group):
    o = closed_geodesic_from_word("ab", demo_group, step=0.05)
    assert o.n_orbits == 1
    assert math.fsum(o.qweights) == pytest.approx(o.periods[0], rel=1e-12)
    assert len(o) == math.ceil(o.periods[0] / 0.05)
    # rotations give the same samples; proper powers tile their root
    r = closed_geodesic_from_word("ba", demo_group, step=0.05)
    np.testing.assert_allclose(r.z0, o.z0)
    p = closed_geodesic_from_word("abab", demo_group, step=0.05)
    assert len(p) == 2 * len(o) and p.periods[0] == pytest.approx(2 * o.periods[0])


def test_not_closed(demo_group):
    with pytest.raises(NotClosedGeodesicError):
        closed_geodesic_from_word("aA", demo_group)


def test_subgroup_core_sample_count(demo_group):
    core = SubgroupCore(("a", "b"), sample_depth=2)
    s = sample_invariant_set(core, demo_group, 0.1)
    ws = core.ambient_words()
    assert len(ws) == 12
    expect = sum(len(closed_geodesic_from_word(w, demo_group, 0.1)) for w in ws)
    assert len(s) == expect


def test_bump_and_tail_on_the_orbit(demo_group):
    o = closed_geodesic_from_word("ab", demo_group, 0.05)
    sampler = Sampler(demo_group, step=0.05)
    target = ClosedOrbit("ab")
    assert birkhoff_integral(Bump(target), o, demo_group, sampler).average == pytest.approx(1.0, abs=1e-6)
    assert birkhoff_integral(Tail(target), o, demo_group, sampler).average == pytest.approx(0.0, abs=1e-6)
    c = birkhoff_integral(Constant(0.7), o, demo_group, sampler)
    assert c.integral == pytest.approx(0.7 * o.periods[0], rel=1e-12)


def test_reverse_orbit_shares_samples(demo_group):
    ab = closed_geodesic_from_word("ab", demo_group, 0.05)
    rev = closed_geodesic_from_word("BA", demo_group, 0.05)
    fl = ab.flipped(demo_group)
    np.testing.assert_allclose(rev.z0, fl.z0, atol=1e-12)
    np.testing.assert_allclose(rev.z1, fl.z1, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(vectors)
def test_bump_plus_tail_is_one(demo_group, v):
    sampler = Sampler(demo_group)
    t = ClosedOrbit("aB")
    assert eval_potential(Bump(t), v, demo_group, sampler) + eval_potential(Tail(t), v, demo_group, sampler) \
        == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(vectors)
def test_flip_symmetry_of_distances(demo_group, v):
    k = sample_invariant_set(ClosedOrbit("ab"), demo_group)
    fk = sample_invariant_set(Flipped(ClosedOrbit("ab")), demo_group)
    a = dist_to_invariant_set(v, k, demo_group)
    b = dist_to_invariant_set(flip(v), fk, demo_group)
    assert a == pytest.approx(b, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(vectors)
def test_flip_invariance_of_symmetric_bump(demo_group, v):
    sampler = Sampler(demo_group)
    phi = Bump(Union((ClosedOrbit("ab"), Flipped(ClosedOrbit("ab")))))
    assert eval_potential(phi, flip(v), demo_group, sampler) == pytest.approx(
        eval_potential(phi, v, demo_group, sampler), abs=1e-9)


def test_refinement_is_monotone(demo_group, rng):
    coarse = sample_invariant_set(ClosedOrbit("aab"), demo_group, 0.1)
    fine = sample_invariant_set(ClosedOrbit("aab"), demo_group, 0.05)
    for _ in range(20):
        v = TangentVector(HPoint(rng.uniform(-2, 2), rng.uniform(0.3, 3)), rng.uniform(0, 6.28))
        assert dist_to_invariant_set(v, fine, demo_group) <= dist_to_invariant_set(v, coarse, demo_group) + 1e-12


def test_sample_vectors_are_at_distance_zero(demo_group):
    s = sample_invariant_set(ClosedOrbit("aB"), demo_group, 0.1)
    for v in s.vectors()[::7]:
        assert dist_to_invariant_set(v, s, demo_group) < 1e-6


def test_bounds():
    b = Bump(ClosedOrbit("a"))
    assert lipschitz_bound(b) == 2.0
    assert lipschitz_bound(WeightedSum(((1.0, b), (0.5, b)))) <= 3.0
    assert lipschitz_bound(Scaled(-3.0, b)) == 6.0
    assert sup_bound(WeightedSum(((1.0, b), (0.5, b), (0.25, b)))) == pytest.approx(1.75)


def test_weighted_sum_requires_halving():
    b = Bump(ClosedOrbit("a"))
    with pytest.raises(InvalidSpecError):
        WeightedSum(((1.0, b), (0.6, b)))


def test_json_roundtrip():
    spec = WeightedSum(((1.0, Bump(Union((ClosedOrbit("ab"), Flipped(ClosedOrbit("ab")))))),
                        (0.25, Tail(SubgroupCore(("a", "bb"), 3, ambient_len=5)))))
    assert potential_from_json(spec.to_json()) == spec
    assert set_spec_from_json({"type": "ClosedOrbit", "word": "aB"}) == ClosedOrbit("aB")
