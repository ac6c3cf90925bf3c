"""Experiment drivers.  Each returns a DriverResult (CSV rows plus verdicts);
emission and exit codes live in ``outputs``."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import ergopt, thermo
from .config import knob
from .errors import (
    BisectionFailureError,
    EstimationFailureError,
    InvalidConfigError,
    NumericOverflowError,
    InvalidSpecError,
    InvalidTargetError,
    ScheduleFailureError,
)
from .groups import (
    SchottkyGroup,
    check_ping_pong,
    critical_exponent_estimate,
    nested_subgroup,
)
from .potentials import (
    Bump,
    ClosedOrbit,
    Constant,
    Flipped,
    Sampler,
    SubgroupCore,
    Union,
    WeightedSum,
    closed_geodesic_from_word,
    eval_on_samples,
    sample_invariant_set,
    sup_bound,
)
from .thermo import PeriodicOrbitTable, Region, equilibrium_stats, flow_pressure, gibbs_average
from .words import parse_word, word_str

log = logging.getLogger("orbitherm")


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str = ""

    def to_json(self):
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class DriverResult:
    name: str
    header: list
    rows: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(v.passed for v in self.verdicts)

    def check(self, name, passed, detail=""):
        self.verdicts.append(Verdict(name, bool(passed), detail))
        return passed


# ---------------------------------------------------------------------------
# shared plumbing


def make_sampler(cfg, group=None):
    return Sampler(group or cfg.group, step=knob(cfg, "step", 0.05),
                   neighbor_depth=knob(cfg, "neighbor_depth", 2),
                   cap=knob(cfg, "reduction_cap", 64))


def make_table(cfg, sampler=None, n_min=None):
    sampler = sampler or make_sampler(cfg)
    lo, hi = cfg.n_range
    return PeriodicOrbitTable(cfg.group, hi, sampler, n_min=lo if n_min is None else n_min)


def _need(cfg, name):
    p = cfg.potentials.get(name)
    if p is None:
        raise InvalidSpecError(f"this experiment needs potentials.{name}")
    return p


def _subgroup_matrices(group, gens):
    return [group.matrix_of(g) for g in gens]


def target_entropy(group, target, shell_len=10):
    """h_top of the flow restricted to a target set: 0 for a closed orbit,
    delta-hat of the subgroup for a subgroup core."""
    if isinstance(target, ClosedOrbit):
        return 0.0
    if isinstance(target, SubgroupCore):
        mats = _subgroup_matrices(group, target.generators)
        if len(mats) == 1:
            return 0.0
        sub = SchottkyGroup(mats, basepoint=group.basepoint)
        return critical_exponent_estimate(sub, shell_len).delta_hat
    return None


# ---------------------------------------------------------------------------
# check / exponents / pressure curve


def run_check(cfg):
    rep = check_ping_pong(cfg.group)
    res = DriverResult("check", ["item", "value"])
    res.rows.append(["generators", cfg.group.k])
    res.rows.append(["extended", int(cfg.group.extended)])
    res.rows.append(["group_hash", cfg.group.hash()])
    res.rows.append(["violations", len(rep.violations)])
    res.check("ping_pong", rep.ok, "; ".join(map(str, rep.violations[:5])))
    return res


def run_exponents(cfg):
    est = critical_exponent_estimate(cfg.group, knob(cfg, "shell_len", 10))
    res = DriverResult("exponents", ["m", "count", "s_root", "log_S_at_root"])
    for d in est.shell_data:
        res.rows.append([d["m"], d["count"], d["root"], d["log_S_at_root"]])
    res.extra["delta_hat"] = est.delta_hat
    res.extra["uncertainty"] = est.uncertainty
    res.extra["regime"] = est.regime
    res.check("delta_positive", est.delta_hat > 0, f"delta_hat={est.delta_hat:.6f}")
    return res


def _fd_derivative(table, phi, t, h=1e-4):
    a = flow_pressure(table, phi, t + h).c_star
    b = flow_pressure(table, phi, t - h).c_star
    return (a - b) / (2 * h)


def run_pressure_curve(cfg, table=None):
    """P(t phi), the Gibbs average and entropy over t_grid, with the
    thermodynamic identities checked at every grid point."""
    phi = _need(cfg, "phi")
    table = table or make_table(cfg)
    beta = ergopt.beta_lower(table, phi).value
    res = DriverResult("pressure-curve", ["t", "P", "phi_mean", "dP_dt", "entropy", "partition_sum"])
    worst = {"norm": 0.0, "deriv": 0.0, "h": math.inf, "bound": math.inf, "clipped": 0}
    pid = table.populate(phi)
    for t in cfg.t_grid:
        st = equilibrium_stats(table, phi, t, [])
        # Gibbs weights at the pressure root sum to one
        Z = thermo.partition_sum(table, table.n_max, t, st.pressure, pid)
        d = _fd_derivative(table, phi, t)
        res.rows.append([t, st.pressure, st.phi_mean, d, st.entropy, Z])
        worst["norm"] = max(worst["norm"], abs(Z - 1))
        worst["deriv"] = max(worst["deriv"], abs(st.phi_mean - d))
        worst["h"] = min(worst["h"], st.entropy)
        worst["clipped"] += int(st.entropy_clipped)
        worst["bound"] = min(worst["bound"], st.pressure - t * beta)
    ts = sorted(cfg.t_grid)
    conv = 0.0
    for a, b in zip(ts, ts[1:]):
        pa = flow_pressure(table, phi, a).c_star
        pb = flow_pressure(table, phi, b).c_star
        pm = flow_pressure(table, phi, 0.5 * (a + b)).c_star
        conv = max(conv, pm - 0.5 * (pa + pb))
    res.extra.update(worst=worst, convexity_excess=conv, beta_lower=beta)
    res.check("normalization", worst["norm"] <= 1e-6, f"max |Z-1| = {worst['norm']:.2e}")
    res.check("derivative", worst["deriv"] <= 1e-3, f"max |phi_mean - P'| = {worst['deriv']:.2e}")
    res.check("convexity", conv <= 1e-6, f"max midpoint excess = {conv:.2e}")
    res.check("entropy_nonneg", worst["h"] >= -1e-6 and not worst["clipped"],
              f"min h = {worst['h']:.2e}, clipped rows = {worst['clipped']}")
    res.check("variational_bound", worst["bound"] >= -1e-6, f"min P - t beta = {worst['bound']:.2e}")
    return res


# ---------------------------------------------------------------------------
# zero temperature


def _target_of(phi):
    if isinstance(phi, Bump):
        return phi.target
    raise InvalidSpecError("expected a Bump potential")


def run_zero_temp(cfg, table=None):
    phi = _need(cfg, "phi")
    target = _target_of(phi)
    if not isinstance(target, (ClosedOrbit, SubgroupCore)):
        raise InvalidSpecError("zero-temp target must be a closed orbit or a subgroup core")
    table = table or make_table(cfg)
    r = cfg.regions[0].r if cfg.regions else 0.3
    region = Region("target", target, r)
    res = DriverResult("zero-temp", ["t", "P", "phi_mean", "entropy", "mass_target"])
    stats = []
    for t in sorted(cfg.t_grid):
        st = equilibrium_stats(table, phi, t, [region])
        stats.append(st)
        res.rows.append([t, st.pressure, st.phi_mean, st.entropy, st.region_masses["target"]])
    if not stats:
        return res
    last = stats[-1]
    eps = knob(cfg, "mass_eps", 0.05)
    tol = knob(cfg, "entropy_tol", 0.05)
    h_target = target_entropy(cfg.group, target, knob(cfg, "shell_len", 10))
    res.extra.update(h_target=h_target, t_max=last.t)
    res.check("mass_at_t_max", last.region_masses["target"] > 1 - eps,
              f"mass={last.region_masses['target']:.6f}")
    res.check("phi_mean_at_t_max", last.phi_mean > 0.98, f"phi_mean={last.phi_mean:.6f}")
    res.check("entropy_matches_target", abs(last.entropy - h_target) < tol,
              f"h={last.entropy:.6f} target={h_target:.6f}")
    if stats[0].t == 0.0:
        d = critical_exponent_estimate(cfg.group, knob(cfg, "shell_len", 10)).delta_hat
        res.check("t0_entropy_is_delta", abs(stats[0].entropy - d) <= 0.02,
                  f"h(0)={stats[0].entropy:.6f} delta_hat={d:.6f}")
    return res


# ---------------------------------------------------------------------------
# intermediate entropy


@dataclass
class EntropyHit:
    target_c: float
    t_star: float
    entropy: float
    evaluations: int
    history: list


def entropy_bisection(table, phi, target_c, tol=0.01, max_evals=30, t_hi=1.0):
    """Bisection in t on h(m_{t phi}), which decreases from h_top to the
    target-set entropy.  Every evaluation is one pressure solve."""
    hist = []

    def h(t):
        st = equilibrium_stats(table, phi, t)
        hist.append((t, st.entropy))
        return st.entropy

    h0 = h(0.0)
    if not 0 < target_c < h0:
        raise InvalidTargetError(f"target entropy {target_c} outside (0, h_top={h0})")
    if abs(h0 - target_c) < tol:
        return EntropyHit(target_c, 0.0, h0, len(hist), hist)
    lo, hlo = 0.0, h0
    hi, hhi = t_hi, h(t_hi)
    while hhi > target_c and len(hist) < max_evals:
        lo, hlo = hi, hhi
        hi *= 2
        hhi = h(hi)
    if hhi > target_c:
        raise BisectionFailureError("no upper bracket within the evaluation budget",
                                    {"history": hist})
    while len(hist) < max_evals:
        if abs(hlo - target_c) < tol:
            return EntropyHit(target_c, lo, hlo, len(hist), hist)
        if abs(hhi - target_c) < tol:
            return EntropyHit(target_c, hi, hhi, len(hist), hist)
        mid = 0.5 * (lo + hi)
        hm = h(mid)
        if not (hhi - 1e-9 <= hm <= hlo + 1e-9):
            raise BisectionFailureError("entropy not monotone inside the bracket",
                                        {"history": hist, "bracket": [lo, hi]})
        if hm > target_c:
            lo, hlo = mid, hm
        else:
            hi, hhi = mid, hm
    best = min(hist, key=lambda p: abs(p[1] - target_c))
    if abs(best[1] - target_c) < tol:
        return EntropyHit(target_c, best[0], best[1], len(hist), hist)
    raise BisectionFailureError("evaluation budget exhausted", {"history": hist})


def run_intermediate_entropy(cfg, target_c=None, table=None):
    phi = _need(cfg, "phi")
    table = table or make_table(cfg)
    h_top = flow_pressure(table, Constant(0.0), 0.0).c_star
    targets = list(target_c if target_c is not None else cfg.experiment.get("target_c", []))
    fracs = cfg.experiment.get("target_c_frac", [])
    delta = critical_exponent_estimate(cfg.group, knob(cfg, "shell_len", 10)).delta_hat if fracs else None
    targets += [f * delta for f in fracs]
    res = DriverResult("intermediate", ["target_c", "t_star", "entropy", "evaluations"])
    res.extra.update(h_top=h_top, delta_hat=delta)
    tol = knob(cfg, "entropy_tol", 0.01)
    budget = knob(cfg, "max_evals", 30)
    for c in targets:
        if not 0 < c < h_top:
            raise InvalidTargetError(f"target entropy {c} outside (0, {h_top})")
        hit = entropy_bisection(table, phi, c, tol, budget)
        res.rows.append([c, hit.t_star, hit.entropy, hit.evaluations])
        res.check(f"entropy_{c:.6f}", abs(hit.entropy - c) < tol and hit.evaluations <= budget,
                  f"h={hit.entropy:.6f} after {hit.evaluations} evaluations")
    return res


# ---------------------------------------------------------------------------
# flip-symmetric non-ergodic limit


def _components(phi):
    tgt = _target_of(phi)
    if not (isinstance(tgt, Union) and len(tgt.parts) == 2 and isinstance(tgt.parts[1], Flipped)
            and tgt.parts[1].inner == tgt.parts[0] and isinstance(tgt.parts[0], ClosedOrbit)):
        raise InvalidSpecError("non-ergodic run needs Bump over Union(K, Flipped(K)), K a closed orbit")
    return tgt.parts[0], tgt.parts[1]


def run_nonergodic(cfg, table=None):
    phi = _need(cfg, "phi")
    K, SK = _components(phi)
    table = table or make_table(cfg)
    sampler = table.sampler
    sk = sampler.sampled(K)
    gap = float(sampler.distances(SK, sk.z0, sk.z1).min())
    if not gap > 0:
        raise InvalidTargetError("K and its flip intersect in the unit tangent bundle")
    # phi o flip = phi on the table samples
    s = table.samples()
    fl = s.flipped(cfg.group)
    a = eval_on_samples(phi, sampler, s.z0, s.z1, s.orbit_ptr, token=table._token)
    b = eval_on_samples(phi, sampler, fl.z0, fl.z1)
    flip_dev = float(np.max(np.abs(a - b)))
    r = cfg.regions[0].r if cfg.regions else 0.3
    r = min(r, 0.45 * gap)
    regions = [Region("K", K, r), Region("SK", SK, r)]
    res = DriverResult("nonergodic", ["t", "P", "phi_mean", "entropy", "mass_K", "mass_SK"])
    last = None
    for t in sorted(cfg.t_grid):
        st = equilibrium_stats(table, phi, t, regions)
        res.rows.append([t, st.pressure, st.phi_mean, st.entropy, st.region_masses["K"],
                         st.region_masses["SK"]])
        last = st
    res.extra.update(component_gap=gap, flip_deviation=flip_dev, radius=r)
    res.check("components_disjoint", gap > 0, f"min sampled distance {gap:.4f}")
    res.check("flip_invariance", flip_dev < 1e-9, f"max |phi(Sv)-phi(v)| = {flip_dev:.2e}")
    if last is not None:
        mk, ms = last.region_masses["K"], last.region_masses["SK"]
        res.check("split_K", abs(mk - 0.5) <= 0.05, f"mass_K={mk:.6f}")
        res.check("split_SK", abs(ms - 0.5) <= 0.05, f"mass_SK={ms:.6f}")
        res.check("combined_mass", mk + ms > 0.95, f"total={mk + ms:.6f}")
    return res


# ---------------------------------------------------------------------------
# nested families and the divergence schedule


def _family_gens(cfg, sign):
    fam = cfg.experiment.get("families", {})
    return tuple(fam.get("plus" if sign > 0 else "minus", (1, 2) if sign > 0 else (3, 4)))


def family_core(cfg, sign, n, depth=None, ambient=None):
    a, b = _family_gens(cfg, sign)
    depth = depth or cfg.n_range[1]
    ambient = ambient or cfg.n_range[1]
    return SubgroupCore(((a,), (b,) * 2 ** n), depth, ambient)


def family_deltas(cfg, sign, n_list):
    a, b = _family_gens(cfg, sign)
    g = cfg.group
    h1, h2 = g.generators[a - 1], g.generators[b - 1]
    disks = [g.disks[a - 1], g.disks[b - 1]]
    out = []
    for n in n_list:
        sub = nested_subgroup(h1, h2, n, disks, g.basepoint)
        out.append(critical_exponent_estimate(sub, knob(cfg, "shell_len", 10)).delta_hat)
    return out


def _probe_deltas(cfg, sign, n_hi=6):
    """Exponents of the family for n = 0, 1, ... until the estimate breaks
    down (high powers overflow the shell products)."""
    out = []
    for n in range(n_hi):
        try:
            out += family_deltas(cfg, sign, [n])
        except (EstimationFailureError, InvalidConfigError, NumericOverflowError, OverflowError):
            break
    return out


def reindex(dplus, dminus, length):
    """Strictly increasing index sequences P, M (P[0] = M[0] = 0) with
    dminus[M[j+1]] < dplus[P[j]] and dplus[P[j+1]] < dminus[M[j]]."""
    P, M = [0], [0]
    for j in range(length - 1):
        p = next((i for i in range(P[-1] + 1, len(dplus)) if dplus[i] < dminus[M[j]]), None)
        m = next((i for i in range(M[-1] + 1, len(dminus)) if dminus[i] < dplus[P[j]]), None)
        if p is None or m is None:
            return None
        P.append(p)
        M.append(m)
    return P, M


def run_exponent_decay(cfg, n_list=None):
    n_list = list(n_list if n_list is not None else cfg.experiment.get("n_list", [0, 1, 2, 3]))
    dp = family_deltas(cfg, +1, n_list)
    dm = family_deltas(cfg, -1, n_list)
    res = DriverResult("exponents-decay", ["n", "delta_plus", "delta_minus"])
    for n, a, b in zip(n_list, dp, dm):
        res.rows.append([n, a, b])
    for name, col in (("plus", dp), ("minus", dm)):
        res.check(f"{name}_strictly_decreasing", all(y < x for x, y in zip(col, col[1:])),
                  " > ".join(f"{v:.5f}" for v in col))
        res.check(f"{name}_halves", col[-1] < 0.5 * col[0], f"{col[-1]:.5f} vs {col[0]:.5f}")
        res.check(f"{name}_positive_at_start", col[0] > 0)
    # disjoint cores
    sampler = make_sampler(cfg)
    kp = sampler.sampled(family_core(cfg, +1, 0, 2, 4))
    gap = float(sampler.distances(family_core(cfg, -1, 0, 2, 4), kp.z0, kp.z1).min())
    res.check("cores_disjoint", gap > 0, f"min sampled distance {gap:.4f}")
    ri = reindex(dp, dm, max(2, len(n_list) // 2))
    res.extra.update(delta_plus=dp, delta_minus=dm, core_gap=gap,
                     reindex=None if ri is None else {"plus": [n_list[i] for i in ri[0]],
                                                     "minus": [n_list[i] for i in ri[1]]})
    res.check("alternation_after_reindexing", ri is not None, str(res.extra["reindex"]))
    return res


@dataclass
class Level:
    k: int
    sign: int
    delta: float
    t: float
    eps: float
    mass: float
    final_mass: float = float("nan")

    def row(self):
        return [self.k, "+" if self.sign > 0 else "-", self.delta, self.t, self.eps, self.mass,
                self.final_mass]


def _phi(terms):
    return WeightedSum(tuple(terms))


def run_divergence(cfg, levels=None, eps_list=None, table=None):
    """Alternating ground-state schedule.

    phi_n = sum_k delta_k Bump(Y_k^{s(k)}) with Y_{j+1}^+ = K_j^+ u K_{j+1}^-
    and Y_{j+1}^- = K_{j+1}^+ u K_j^-, for re-indexed cores K_j^+- of the
    nested families.  t_k doubles until m_{t_k phi_k}(U^{s(k)}) > 1 - eps_k/3;
    delta_{k+1} halves until switching on the next term moves that mass by
    less than eps_k/3."""
    ex = cfg.experiment
    levels = int(levels or ex.get("levels", 2))
    eps = list(eps_list or ex.get("eps", [0.1] * levels))
    if len(eps) < levels:
        raise InvalidSpecError("need one eps per level")
    if any(b > a for a, b in zip(eps, eps[1:])):
        raise InvalidSpecError("eps must be non-increasing")
    t_cap = knob(cfg, "t_cap", 1e6)
    sig_floor = knob(cfg, "sigma_floor", 1e-9)
    if "plus_index" in ex and "minus_index" in ex:
        P, M = list(ex["plus_index"]), list(ex["minus_index"])
    else:
        ri = reindex(_probe_deltas(cfg, +1), _probe_deltas(cfg, -1), levels + 1)
        if ri is None:
            raise ScheduleFailureError("no alternating re-indexing found", {})
        P, M = ri
    if len(P) < levels + 1 or len(M) < levels + 1:
        raise InvalidSpecError("plus_index/minus_index need levels + 1 entries")
    Kp = [family_core(cfg, +1, n) for n in P]
    Km = [family_core(cfg, -1, n) for n in M]
    r = cfg.regions[0].r if cfg.regions else 0.3
    U = {+1: Region("U+", Kp[0], r), -1: Region("U-", Km[0], r)}
    table = table or make_table(cfg, n_min=cfg.n_range[1])

    def Y(k, sign):
        j = k - 1
        return Union((Kp[j], Km[j + 1])) if sign > 0 else Union((Kp[j + 1], Km[j]))

    def mass(phi, t, sign):
        return equilibrium_stats(table, phi, t, [U[sign]]).region_masses[U[sign].rid]

    terms, sched = [], []
    delta = 1.0
    t_prev = None
    partial = lambda: {"levels": [lv.row() for lv in sched], "plus_index": P, "minus_index": M}
    for k in range(1, levels + 1):
        s = +1 if k % 2 else -1
        term = Bump(Y(k, s))
        if k > 1:
            # stability of the previous level under the new term
            prev = sched[-1]
            base = mass(_phi(terms), prev.t, prev.sign)
            sigma = delta / 2
            while True:
                dev = abs(mass(_phi(terms + [(sigma, term)]), prev.t, prev.sign) - base)
                log.info("level %d sigma %.3g deviation %.3g", k, sigma, dev)
                if dev < prev.eps / 3:
                    break
                sigma /= 2
                if sigma < sig_floor:
                    raise ScheduleFailureError(f"sigma search hit floor at level {k}", partial())
            delta = min(delta / 2, sigma)
        terms.append((delta, term))
        phi_k = _phi(terms)
        t = knob(cfg, "t_start", 1.0) if t_prev is None else t_prev + (k - 1)
        while True:
            m = mass(phi_k, t, s)
            log.info("level %d t %.6g mass %.6f", k, t, m)
            if m > 1 - eps[k - 1] / 3:
                break
            t *= 2
            if t > t_cap:
                raise ScheduleFailureError(f"t search exceeded cap at level {k}", partial())
        sched.append(Level(k, s, delta, t, eps[k - 1], m))
        t_prev = t
    phi = _phi(terms)
    for lv in sched:
        lv.final_mass = mass(phi, lv.t, lv.sign)
    res = DriverResult("divergence", ["k", "sign", "delta", "t", "eps", "mass_at_level", "mass_final_phi"])
    res.rows = [lv.row() for lv in sched]
    for lv in sched:
        res.check(f"level_{lv.k}_mass", lv.final_mass > 1 - lv.eps,
                  f"m_t{lv.k}(U{'+' if lv.sign > 0 else '-'}) = {lv.final_mass:.6f}")
    res.check("delta_halving", all(b.delta <= a.delta / 2 for a, b in zip(sched, sched[1:])),
              str([lv.delta for lv in sched]))
    res.check("t_spacing", all(b.t >= a.t + a.k for a, b in zip(sched, sched[1:])),
              str([lv.t for lv in sched]))
    res.check("eps_nonincreasing", all(b.eps <= a.eps for a, b in zip(sched, sched[1:])))
    # uniform tail bound of the truncations, from the weighted-sum structure
    tails = []
    for n in range(1, levels):
        tail = math.fsum(d * sup_bound(p) for d, p in terms[n:])
        tails.append(tail)
        # halving gives sum_{k>n} delta_k <= delta_{n+1} (1 + 1/2 + ...)
        res.check(f"tail_bound_{n}", tail <= 2 * terms[n][0] * (1 + 1e-12),
                  f"sup|phi-phi_{n}| <= {tail:.3g}, delta_{n + 1} = {terms[n][0]:.3g}")
    res.extra.update(plus_index=P, minus_index=M, potential=phi.to_json(),
                     note=f"alternation exhibited through level {levels}")
    return res


# ---------------------------------------------------------------------------
# no maximizer / tilt


def run_no_maximizer(cfg, table=None):
    phi = _need(cfg, "phi")
    table = table or make_table(cfg)
    ex = cfg.experiment
    margin = knob(cfg, "margin", 0.05)
    rep = ergopt.gap_test(table, phi, margin=margin, family_n=ex.get("family_n"),
                          p=ex.get("p", 1), h=ex.get("h", 2))
    res = DriverResult("no-maximizer", ["kind", "x", "value"])
    for row in rep.per_length_maxima:
        res.rows.append(["per_length_max", row["n"], row["max"]])
    fam = None
    if cfg.group.extended:
        fam = ergopt.escaping_family_averages(cfg.group, phi, ex.get("family_n", [1, 5, 10, 20, 30]),
                                              ex.get("p", 1), ex.get("h", 2), table.sampler)
        for n, a in zip(fam.n, fam.averages):
            res.rows.append(["escape_average", n, a])
    psi = cfg.potentials.get("psi")
    if psi is not None and cfg.t_grid:
        ens = ergopt.ensemble_from_table(table, phi, psi)
        if fam is not None:
            # the escaping orbits carry the mass that survives a large tilt
            words = [ergopt.escaping_word(ex.get("p", 1), ex.get("h", 2), n) for n in fam.n]
            ens = ergopt.merge_ensembles(ens, ergopt.ensemble_from_words(words, cfg.group, phi, psi,
                                                                         table.sampler))
        curve = ergopt.tilted_beta_curve(ens, cfg.t_grid)
        for t, b in zip(curve.t, curve.beta_tilted):
            res.rows.append(["tilt", t, b])
        res.extra["tilt_argmax"] = curve.argmax
        res.check("tilt_nonincreasing",
                  all(b <= a + 1e-12 for a, b in zip(curve.beta_tilted, curve.beta_tilted[1:])))
        # finite ensembles tilt linearly; the plateau is read on t <= t_small
        tol = knob(cfg, "plateau_tol", 0.05)
        t_small = knob(cfg, "t_small", max(curve.t))
        ref = fam.averages[-1] if fam is not None else rep.beta_lower
        dev = max(abs(b - ref) for t, b in zip(curve.t, curve.beta_tilted) if t <= t_small)
        res.extra["plateau_deviation"] = dev
        res.check("plateau_matches_escape" if fam is not None else "flat_at_beta", dev <= tol,
                  f"max |beta_t - {ref:.6f}| = {dev:.4f} for t <= {t_small:g}")
    res.extra["report"] = rep.to_json()
    res.check("verdict", rep.verdict.value == ex.get("expect", rep.verdict.value), rep.verdict.value)
    if fam is not None:
        res.check("escape_above_0.9", fam.averages[-1] > 0.9, f"{fam.averages[-1]:.6f}")
        res.check("orbit_averages_below_1", rep.beta_lower < 1, f"beta_lower={rep.beta_lower:.6f}")
    return res


# ---------------------------------------------------------------------------
# density of equilibrium states


def run_density_demo(cfg, target_word=None, table=None):
    phi = _need(cfg, "phi")
    ex = cfg.experiment
    w = parse_word(target_word or ex.get("target_word") or word_str(_target_of(phi).word))
    table = table or make_table(cfg)
    sampler = table.sampler
    orbit = closed_geodesic_from_word(w, cfg.group, sampler.step, sampler.cap)
    tests = [Constant(1.0)] + [Bump(ClosedOrbit(parse_word(x))) for x in ex.get("test_words", [])]
    ts = sorted(cfg.t_grid)
    res = DriverResult("density", ["t"] + [f"dev_{i}" for i in range(len(tests))])
    orbit_avg = []
    for psi in tests:
        v = eval_on_samples(psi, sampler, orbit.z0, orbit.z1)
        orbit_avg.append(math.fsum(orbit.qweights * v) / orbit.periods[0])
    devs = []
    for t in ts:
        row = [abs(gibbs_average(table, phi, t, psi).value - a) for psi, a in zip(tests, orbit_avg)]
        devs.append(row)
        res.rows.append([t] + row)
    res.extra["orbit_averages"] = orbit_avg
    if ts:
        t_max = ts[-1]
        quarter = min(range(len(ts)), key=lambda i: abs(ts[i] - t_max / 4))
        for j in range(len(tests)):
            res.check(f"test_{j}_small", devs[-1][j] < 0.02, f"{devs[-1][j]:.2e}")
            if j > 0:
                res.check(f"test_{j}_shrinks", devs[-1][j] < devs[quarter][j] or devs[-1][j] < 1e-12)
    return res


DRIVERS = {
    "check": run_check,
    "exponents": run_exponents,
    "pressure-curve": run_pressure_curve,
    "zero-temp": run_zero_temp,
    "intermediate": run_intermediate_entropy,
    "nonergodic": run_nonergodic,
    "divergence": run_divergence,
    "exponent-decay": run_exponent_decay,
    "no-maximizer": run_no_maximizer,
    "density": run_density_demo,
}
