"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The experiment runs go through the command line in subprocesses, once with
``--threads 1`` (shared by criteria 3-11) and once with ``--threads 4``
(criterion 12 compares the CSV bytes of the two runs).  The heavy runs are
cached per session, so the whole file costs two passes over the configs.
"""
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from orbitherm.geometry import (
    HPoint,
    Isometry,
    TangentVector,
    apply_isometry,
    flip,
    geodesic_flow_step,
    hyp_dist,
    isometry_on_vector,
)
from orbitherm.groups import CyclicGroup, critical_exponent_estimate, hyperbolic_from_axis

from conftest import CONFIGS

pytestmark = pytest.mark.slow

# (tag, subcommand, config, extra args)
JOBS = [
    ("demo_exp", "exponents", "demo_pressure", []),
    ("demo2_exp", "exponents", "demo2_pressure", []),
    ("demo_pc", "pressure-curve", "demo_pressure", []),
    ("demo2_pc", "pressure-curve", "demo2_pressure", []),
    ("nested", "exponents", "nested_decay", []),
    ("zero_temp", "zero-temp", "demo_zero_temp", []),
    ("intermediate", "intermediate", "demo_intermediate", []),
    ("nonergodic", "nonergodic", "demo_nonergodic", []),
    ("divergence", "divergence", "divergence", []),
    ("escape", "no-maximizer", "extended_escape", []),
    ("tilt_cc", "no-maximizer", "tilt_cc", []),
    ("density", "density", "demo_density", []),
]


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def run_suite(root, threads):
    env = dict(os.environ)
    env.pop("ORBITHERM_CACHE", None)
    env["NUMBA_NUM_THREADS"] = str(max(threads, 1))
    out = {}
    for tag, cmd, cfg, args in JOBS:
        d = root / tag
        t0 = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "orbitherm", "--config", str(CONFIGS / f"{cfg}.json"),
             "--out", str(d), "--threads", str(threads), cmd, *args],
            capture_output=True, text=True, env=env)
        out[tag] = {"code": proc.returncode, "stdout": proc.stdout, "stderr": proc.stderr,
                    "dir": d, "seconds": time.perf_counter() - t0}
    return out


@pytest.fixture(scope="session")
def suite1(tmp_path_factory):
    return run_suite(tmp_path_factory.mktemp("threads1"), 1)


def envelope(run, tag):
    r = run[tag]
    files = sorted(r["dir"].glob("*.json"))
    assert files, f"{tag}: no output (exit {r['code']}): {r['stderr'][-400:]}"
    return json.loads(files[0].read_text())


def verdicts(env):
    return {v["name"]: v for v in env["verdicts"]}


def column(env, name):
    j = env["header"].index(name)
    return [row[j] for row in env["rows"]]


# ---------------------------------------------------------------------------


def test_criterion_01_geometry_suite(capsys):
    rng = np.random.default_rng(20260101)
    n_cases = 10_000
    worst = {"sym": 0.0, "tri": 0.0, "inv": 0.0, "speed": 0.0, "flip": 0.0}
    t0 = time.perf_counter()
    for _ in range(n_cases):
        z, w, u = (HPoint(rng.uniform(-5, 5), math.exp(rng.uniform(-3, 3))) for _ in range(3))
        # random det-1 map: translation, dilation, rotation about i
        a, s, r = rng.uniform(-3, 3), rng.uniform(-2, 2), rng.uniform(0, math.pi)
        K = Isometry(math.cos(r), math.sin(r), -math.sin(r), math.cos(r))
        g = Isometry(1, a, 0, 1) @ Isometry(math.exp(s / 2), 0, 0, math.exp(-s / 2)) @ K
        d = hyp_dist(z, w)
        worst["sym"] = max(worst["sym"], abs(d - hyp_dist(w, z)), hyp_dist(z, z))
        worst["tri"] = max(worst["tri"], hyp_dist(z, u) - d - hyp_dist(w, u))
        dg = hyp_dist(apply_isometry(g, z), apply_isometry(g, w))
        worst["inv"] = max(worst["inv"], abs(dg - d) / max(1.0, d))

        v = TangentVector(z, rng.uniform(0, 2 * math.pi))
        t = rng.uniform(-3, 3)
        vt = geodesic_flow_step(v, t)
        worst["speed"] = max(worst["speed"], abs(hyp_dist(v.base, vt.base) - abs(t)))
        # flip(g_t v) = g_{-t}(flip v), and the flow commutes with isometries
        lhs, rhs = flip(vt), geodesic_flow_step(flip(v), -t)
        gv = geodesic_flow_step(isometry_on_vector(g, v), t)
        vg = isometry_on_vector(g, vt)
        ang = lambda p, q: abs(math.remainder(p.angle - q.angle, 2 * math.pi))
        worst["flip"] = max(worst["flip"], hyp_dist(lhs.base, rhs.base), ang(lhs, rhs),
                            hyp_dist(gv.base, vg.base), ang(gv, vg))
    elapsed = time.perf_counter() - t0
    ok = (worst["sym"] <= 1e-10 and worst["tri"] <= 1e-9 and worst["inv"] <= 1e-10
          and worst["speed"] <= 1e-9 and worst["flip"] <= 1e-8 and elapsed < 30)
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    report(capsys, 1, ok, f"{n_cases} cases in {elapsed:.1f}s ({detail})")


def test_criterion_02_delta_sanity(capsys, demo_group):
    hyp = critical_exponent_estimate(CyclicGroup(hyperbolic_from_axis(-1, 1, 1.0))).delta_hat
    par = critical_exponent_estimate(CyclicGroup(Isometry(1.0, 1.0, 0.0, 1.0))).delta_hat
    demo = critical_exponent_estimate(demo_group).delta_hat
    ok = hyp < 0.05 and 0.45 <= par <= 0.55 and demo > 0.1
    report(capsys, 2, ok, f"hyperbolic {hyp:.4f}, parabolic {par:.4f}, demo {demo:.4f}")


def test_criterion_03_pressure_vs_exponent(capsys, suite1):
    parts, ok = [], True
    for name in ("demo", "demo2"):
        delta = envelope(suite1, f"{name}_exp")["extra"]["delta_hat"]
        pc = envelope(suite1, f"{name}_pc")
        p0 = column(pc, "P")[column(pc, "t").index(0.0)]
        ok &= abs(p0 - delta) <= 0.02
        parts.append(f"{name}: P(0)={p0:.4f} delta={delta:.4f}")
    report(capsys, 3, ok, "; ".join(parts))


def test_criterion_04_nested_decay(capsys, suite1):
    env = envelope(suite1, "nested")
    parts, ok = [], True
    for fam in ("plus", "minus"):
        col = column(env, f"delta_{fam}")
        ok &= len(col) == 4 and all(b < a for a, b in zip(col, col[1:])) and col[-1] < 0.5 * col[0]
        parts.append(f"{fam} " + " ".join(f"{x:.4f}" for x in col))
    report(capsys, 4, ok, "; ".join(parts))


def test_criterion_05_thermo_identities(capsys, suite1):
    env = envelope(suite1, "demo_pc")
    v = verdicts(env)
    ts = column(env, "t")
    names = ("normalization", "derivative", "convexity", "entropy_nonneg", "variational_bound")
    ok = len(ts) >= 8 and all(v[k]["passed"] for k in names)
    report(capsys, 5, ok, f"{len(ts)} t-points; " + "; ".join(v[k]["detail"] for k in names))


def test_criterion_06_zero_temperature(capsys, suite1):
    env = envelope(suite1, "zero_temp")
    last = env["rows"][-1]
    h = dict(zip(env["header"], last))
    ok = (h["t"] == 40 and h["mass_target"] > 0.95 and h["phi_mean"] > 0.98
          and h["entropy"] < 0.05)
    report(capsys, 6, ok, f"t={h['t']}: mass={h['mass_target']:.4f} "
                          f"phi={h['phi_mean']:.4f} h={h['entropy']:.4f}")


def test_criterion_07_intermediate_entropy(capsys, suite1):
    env = envelope(suite1, "intermediate")
    delta = env["extra"]["delta_hat"]
    targets = column(env, "target_c")
    hs, evals = column(env, "entropy"), column(env, "evaluations")
    want = [f * delta for f in (0.25, 0.5, 0.75)]
    ok = (len(targets) == 3 and all(abs(a - b) < 1e-12 for a, b in zip(targets, want))
          and all(abs(h - c) < 0.01 and k <= 30 for c, h, k in zip(targets, hs, evals)))
    report(capsys, 7, ok, "; ".join(f"c={c:.4f} h={h:.4f} evals={k}"
                                    for c, h, k in zip(targets, hs, evals)))


def test_criterion_08_nonergodic_split(capsys, suite1):
    env = envelope(suite1, "nonergodic")
    v = verdicts(env)
    last = dict(zip(env["header"], env["rows"][-1]))
    mk, ms = last["mass_K"], last["mass_SK"]
    ok = abs(mk - 0.5) <= 0.05 and abs(ms - 0.5) <= 0.05 and mk + ms > 0.95 \
        and v["flip_invariance"]["passed"]
    report(capsys, 8, ok, f"K={mk:.4f} SK={ms:.4f} total={mk + ms:.4f}")


def test_criterion_09_divergence(capsys, suite1):
    env = envelope(suite1, "divergence")
    v = verdicts(env)
    h = env["header"]
    rows = [dict(zip(h, r)) for r in env["rows"]]
    masses = [r["mass_final_phi"] for r in rows]
    ok = (len(rows) == 2 and [r["sign"] for r in rows] == ["+", "-"]
          and all(m > 0.9 for m in masses)
          and v["delta_halving"]["passed"] and v["t_spacing"]["passed"])
    report(capsys, 9, ok, "; ".join(f"level {r['k']} U{r['sign']} t={r['t']:g} "
                                    f"mass={r['mass_final_phi']:.4f}" for r in rows)
           + f"; runtime {suite1['divergence']['seconds']:.0f}s")


def test_criterion_10_escape(capsys, suite1):
    env = envelope(suite1, "escape")
    v = verdicts(env)
    rep = env["extra"]["report"]
    ok = (v["escape_above_0.9"]["passed"] and v["orbit_averages_below_1"]["passed"]
          and rep["verdict"] == "FullEscapeExpected")
    report(capsys, 10, ok, f"{v['escape_above_0.9']['detail']}; "
                           f"{v['orbit_averages_below_1']['detail']}; verdict {rep['verdict']}")


def test_criterion_11_tilt_trend(capsys, suite1):
    parts, ok = [], True
    for tag, key in (("escape", "plateau_matches_escape"), ("tilt_cc", "flat_at_beta")):
        v = verdicts(envelope(suite1, tag))
        ok &= v["tilt_nonincreasing"]["passed"] and v[key]["passed"]
        parts.append(f"{tag}: {v[key]['detail']}")
    report(capsys, 11, ok, "; ".join(parts))


def test_criterion_12_thread_determinism(capsys, suite1, tmp_path_factory):
    suite4 = run_suite(tmp_path_factory.mktemp("threads4"), 4)
    diffs, n_files = [], 0
    for tag, *_ in JOBS:
        a = sorted(p.name for p in suite1[tag]["dir"].glob("*.csv"))
        b = sorted(p.name for p in suite4[tag]["dir"].glob("*.csv"))
        if a != b or not a:
            diffs.append(f"{tag}: files {a} vs {b}")
            continue
        for name in a:
            n_files += 1
            if (suite1[tag]["dir"] / name).read_bytes() != (suite4[tag]["dir"] / name).read_bytes():
                diffs.append(f"{tag}/{name}")
    ok = not diffs
    report(capsys, 12, ok, f"{n_files} CSVs identical" if ok else "differ: " + ", ".join(diffs))
