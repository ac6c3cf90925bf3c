import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitherm import thermo
from orbitherm.groups import critical_exponent_estimate
from orbitherm.potentials import Bump, ClosedOrbit, Constant, Scaled
from orbitherm.thermo import (
    ReferenceConstants,
    Region,
    equilibrium_stats,
    flow_pressure,
    gibbs_average,
    gibbs_weights,
    partition_sum,
    t_phi_report,
)
from orbitherm.words import cyclic_count

ts = st.floats(-2, 6, allow_nan=False)


def test_class_multiplicities_count_words(small_table):
    for n in range(small_table.n_min, small_table.n_max + 1):
        assert small_table.mult[n].sum() == cyclic_count(2, n)


def test_pressure_at_zero_is_critical_exponent(small_table):
    # two independent routes: orbit sums and Poincare shells
    p0 = flow_pressure(small_table, Constant(0.0), 0.0).c_star
    d = critical_exponent_estimate(small_table.group).delta_hat
    assert abs(p0 - d) < 0.02


def test_constant_potential_shifts_pressure(small_table):
    p0 = flow_pressure(small_table, Constant(0.0), 0.0).c_star
    assert flow_pressure(small_table, Constant(0.3), 2.0).c_star == pytest.approx(p0 + 0.6, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(ts)
def test_partition_normalized_at_root(small_table, small_cfg, t):
    phi = small_cfg.phi
    pid = small_table.populate(phi)
    c = flow_pressure(small_table, phi, t).c_star
    assert partition_sum(small_table, small_table.n_max, t, c, pid) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(ts, st.floats(0.05, 2))
def test_pressure_convex_and_derivative(small_table, small_cfg, t, h):
    phi = small_cfg.phi
    P = lambda s: flow_pressure(small_table, phi, s).c_star
    assert P(t) <= 0.5 * (P(t - h) + P(t + h)) + 1e-9
    d = (P(t + 1e-5) - P(t - 1e-5)) / 2e-5
    assert equilibrium_stats(small_table, phi, t).phi_mean == pytest.approx(d, abs=1e-5)


@settings(max_examples=25, deadline=None)
@given(ts)
def test_entropy_identity(small_table, small_cfg, t):
    st_ = equilibrium_stats(small_table, small_cfg.phi, t)
    assert st_.entropy == pytest.approx(st_.pressure - t * st_.phi_mean, abs=1e-12)
    assert st_.entropy >= -1e-6 and not st_.entropy_clipped


def test_gibbs_average_of_constant(small_table, small_cfg):
    assert gibbs_average(small_table, small_cfg.phi, 1.5, Constant(1.0)).value == pytest.approx(1.0, abs=1e-12)
    a = gibbs_average(small_table, small_cfg.phi, 1.5, small_cfg.phi).value
    b = gibbs_average(small_table, small_cfg.phi, 1.5, Scaled(2.0, small_cfg.phi)).value
    assert b == pytest.approx(2 * a, rel=1e-12)


def test_gibbs_weights_positive(small_table, small_cfg):
    w, c = gibbs_weights(small_table, small_cfg.phi, 3.0)
    assert (w > 0).all() and w.max() == 1.0


def test_region_masses(small_table, small_cfg):
    everything = Region("all", ClosedOrbit("a"), math.inf)
    near = Region("near", ClosedOrbit("a"), 0.3)
    for t in (0.0, 5.0, 20.0):
        s = equilibrium_stats(small_table, small_cfg.phi, t, [everything, near])
        assert s.region_masses["all"] == pytest.approx(1.0, abs=1e-12)
        assert 0 <= s.region_masses["near"] <= 1
    lo = equilibrium_stats(small_table, small_cfg.phi, 0.0, [near]).region_masses["near"]
    hi = equilibrium_stats(small_table, small_cfg.phi, 20.0, [near]).region_masses["near"]
    assert hi > lo


def test_richardson_method(small_table):
    r = flow_pressure(small_table, Constant(0.0), 0.0, method="richardson")
    assert len(r.per_n_roots) == small_table.n_max - small_table.n_min + 1
    with pytest.raises(ValueError):
        flow_pressure(small_table, Constant(0.0), 0.0, method="bogus")


def test_t_phi_report(small_table, small_cfg):
    none = t_phi_report(small_table, small_cfg.phi, ReferenceConstants(None), [0, 1, 2])
    assert not none.applicable and none.estimate is None
    rep = t_phi_report(small_table, small_cfg.phi, ReferenceConstants(0.1), [-2, -1, 0, 1, 2])
    assert rep.applicable and rep.monotone_excess
    p = dict(rep.curve)
    assert all(p[t] > 0.1 for t in p if t >= rep.estimate)


def test_table_json_roundtrip(small_table, small_cfg, tmp_path):
    from orbitherm import outputs
    path = tmp_path / "t.json"
    outputs.save_table(small_table, path)
    fresh2 = thermo.PeriodicOrbitTable(small_table.group, small_table.n_max, small_table.sampler)
    ids = outputs.load_table(fresh2, path)
    pid = small_table.populate(small_cfg.phi)
    assert pid in ids
    for n in small_table.classes:
        np.testing.assert_array_equal(fresh2.birkhoff[pid][n], small_table.birkhoff[pid][n])
