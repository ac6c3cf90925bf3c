import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitherm.errors import InvalidConfigError
from orbitherm.geometry import HPoint, Isometry, hyp_dist
from orbitherm.groups import (
    CyclicGroup,
    SchottkyGroup,
    check_ping_pong,
    critical_exponent_estimate,
    hyperbolic_from_axis,
    isometric_disks,
    nested_subgroup,
    poincare_shell_sums,
    quotient_point_dist,
    reduce_array,
    reduce_to_fundamental_domain,
)
from orbitherm.words import shell_count

DEMO_DELTA = 0.293981


def test_ping_pong_demo(demo_group):
    assert check_ping_pong(demo_group).ok


def test_ping_pong_rejects_overlap():
    g = SchottkyGroup([hyperbolic_from_axis(-3, -1, 0.5), hyperbolic_from_axis(-2.5, 3, 0.5)])
    rep = check_ping_pong(g)
    assert not rep.ok and rep.violations


def test_isometric_disks_are_exchanged():
    g = hyperbolic_from_axis(-3, -1, 3.0)
    dm, dp = isometric_disks(g)
    # g maps the boundary circle of D^- onto that of D^+
    for u in np.linspace(0.1, 3.0, 7):
        xi = dm.center + dm.radius * math.cos(u)
        yi = dm.radius * math.sin(u)
        im = g(HPoint(xi, yi))
        assert math.hypot(im.x - dp.center, im.y) == pytest.approx(dp.radius, rel=1e-9)


def test_parabolic_needs_extended():
    with pytest.raises(InvalidConfigError):
        SchottkyGroup([Isometry(1, 0, 2, 1), hyperbolic_from_axis(3, 7, 3.0)])


def test_shell_sizes(demo_group):
    mats = demo_group.shell_matrices(3)
    assert [len(m) for _, m in mats] == [shell_count(2, m) for m in range(4)]


def test_poincare_sums_decrease_in_s(demo_group):
    a = poincare_shell_sums(demo_group, 0.2, 6).partial
    b = poincare_shell_sums(demo_group, 0.4, 6).partial
    assert b < a


def test_demo_exponent(demo_group):
    est = critical_exponent_estimate(demo_group)
    assert est.delta_hat == pytest.approx(DEMO_DELTA, abs=5e-5)
    assert est.uncertainty < 1e-4
    assert est.regime == "exponential"


def test_exponent_grows_with_shorter_generators():
    long = SchottkyGroup([hyperbolic_from_axis(-3, -1, 5.0), hyperbolic_from_axis(1, 3, 5.0)])
    short = SchottkyGroup([hyperbolic_from_axis(-3, -1, 3.0), hyperbolic_from_axis(1, 3, 3.0)])
    assert critical_exponent_estimate(long).delta_hat < critical_exponent_estimate(short).delta_hat


def test_elementary_oracles():
    hyp = critical_exponent_estimate(CyclicGroup(hyperbolic_from_axis(-1, 1, 1.0)))
    assert hyp.delta_hat < 0.05
    par = critical_exponent_estimate(CyclicGroup(Isometry(1.0, 1.0, 0.0, 1.0)))
    assert 0.45 <= par.delta_hat <= 0.55


def test_nested_subgroup_exponents_decrease(demo_group):
    h1, h2 = demo_group.generators
    ds = [critical_exponent_estimate(nested_subgroup(h1, h2, n)).delta_hat for n in range(4)]
    assert ds[0] == pytest.approx(DEMO_DELTA, abs=5e-5)
    assert all(b < a for a, b in zip(ds, ds[1:]))


def test_nested_subgroup_high_power_is_stable():
    # ad - bc cancels completely for h^(2^4) with entries near 1e20
    h1, h2 = hyperbolic_from_axis(7.5, 8.5, 6.0), hyperbolic_from_axis(8.6, 9.5, 6.0)
    g = nested_subgroup(h1, h2, 4)
    assert check_ping_pong(g).ok


@settings(max_examples=60, deadline=None)
@given(st.floats(-6, 6), st.floats(0.01, 5))
def test_reduction_lands_outside_domain_disks(demo_group, x, y):
    z, w = reduce_to_fundamental_domain(HPoint(x, y), demo_group)
    for d in demo_group.domain_disks().values():
        assert (z.x - d.center) ** 2 + z.y ** 2 >= d.radius ** 2 * (1 - 1e-6)
    # w maps the input to the reduced point
    back = demo_group.matrix_of(w)(HPoint(x, y))
    assert hyp_dist(back, z) < 1e-7


def test_batch_reduction_matches_scalar(demo_group, rng):
    z = rng.uniform(-5, 5, 200) + 1j * rng.uniform(0.02, 3, 200)
    zr, _, steps = reduce_array(z, demo_group)
    assert (steps >= 0).all()
    for k in range(0, 200, 17):
        p, _ = reduce_to_fundamental_domain(HPoint(z[k].real, z[k].imag), demo_group)
        assert abs(p.z - zr[k]) < 1e-8


def test_quotient_distance_is_invariant(demo_group):
    a, b = HPoint(0.3, 1.7), HPoint(-0.4, 2.2)
    g = demo_group.matrix_of((1, -2))
    assert quotient_point_dist(a, g(b), demo_group) == pytest.approx(
        quotient_point_dist(a, b, demo_group), abs=1e-9)
    assert quotient_point_dist(a, b, demo_group) <= hyp_dist(a, b) + 1e-12
