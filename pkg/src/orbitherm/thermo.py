"""Periodic-orbit thermodynamics.

For cyclic classes O of length n with multiplicity m_O, period l_O and
integral I_O of phi,

    Z_n(t, c) = sum_O m_O exp(t I_O - c l_O).

The pressure P(t phi) is the c at which log Z_n vanishes.  For each fixed n
the root c_n(t) is a convex function of t whose derivative is exactly the
Gibbs average sum w I / sum w l (implicit differentiation), and for Schottky
groups c_n converges geometrically in n.  The default estimate is therefore
c_{n_max}; a Richardson step in 1/n is available as an option.
"""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DegenerateWeightsError, StaleTableError
from .geometry import Kind, classify_isometry
from .potentials import (
    Constant,
    DEFAULT_STEP,
    Sampler,
    SampledSet,
    _canon_json,
    closed_geodesic_from_word,
    eval_on_samples,
    orbit_length,
    primitive_root,
    spec_id,
)
from .words import periodic_classes, word_str

SCHEMA_VERSION = 1
ENTROPY_CLIP = -1e-6


def _lse(x):
    """log sum exp with max shift and correctly rounded summation."""
    mx = float(np.max(x))
    return mx + math.log(math.fsum(np.exp(x - mx)))


@dataclass
class PeriodicClass:
    word: tuple
    multiplicity: int
    length_ell: float


def enumerate_periodic_classes(group, n):
    """Cyclically reduced words of length n up to rotation, hyperbolic ones
    only (parabolic words of an extended group carry no closed geodesic)."""
    out = []
    for w, m in periodic_classes(group.k, n):
        M = group.matrix_of(w)
        if getattr(group, "extended", False):
            if classify_isometry(M, det1=True).kind != Kind.HYPERBOLIC:
                continue
        root, k = primitive_root(w)
        # same period the orbit samples carry, so averages of 1 stay exactly 1
        out.append(PeriodicClass(w, m, k * orbit_length(root, group)))
    return out


class PeriodicOrbitTable:
    """Closed geodesics by word length with cached Birkhoff integrals."""

    def __init__(self, group, n_max, sampler=None, n_min=1):
        self.group = group
        self.n_min = int(n_min)
        self.n_max = int(n_max)
        self.sampler = sampler or Sampler(group)
        self.classes = {}
        self.ell = {}
        self.mult = {}
        for n in range(self.n_min, self.n_max + 1):
            cl = enumerate_periodic_classes(group, n)
            self.classes[n] = cl
            self.ell[n] = np.array([c.length_ell for c in cl])
            self.mult[n] = np.array([c.multiplicity for c in cl], dtype=float)
        self._samples = None
        self._token = ("table", id(self))
        self._orbit_range = {}
        self.birkhoff = {}      # phi id -> {n: integrals}
        self.region_time = {}   # (set id, r) -> {n: time in region}
        self.specs = {}

    @property
    def step(self):
        return self.sampler.step

    def samples(self):
        if self._samples is None:
            sets = []
            k = 0
            for n in range(self.n_min, self.n_max + 1):
                start = k
                for c in self.classes[n]:
                    sets.append(closed_geodesic_from_word(c.word, self.group, self.step,
                                                          self.sampler.cap))
                    k += 1
                self._orbit_range[n] = (start, k)
            self._samples = SampledSet.concat(sets)
        return self._samples

    def _per_n(self, values):
        s = self.samples()
        sums = np.add.reduceat(s.qweights * values, s.orbit_ptr[:-1]) if len(s) else np.zeros(0)
        return {n: sums[a:b] for n, (a, b) in self._orbit_range.items()}

    def populate(self, phi):
        pid = spec_id(phi)
        if pid not in self.birkhoff and isinstance(phi, Constant):
            self.birkhoff[pid] = {n: phi.value * self.ell[n] for n in self.ell}
            self.specs[pid] = phi
        if pid not in self.birkhoff:
            s = self.samples()
            vals = eval_on_samples(phi, self.sampler, s.z0, s.z1, s.orbit_ptr, token=self._token)
            self.birkhoff[pid] = self._per_n(vals)
            self.specs[pid] = phi
        return pid

    def integrals(self, phi, n):
        pid = self.populate(phi)
        return self.birkhoff[pid][n]

    def averages(self, phi, n):
        return self.integrals(phi, n) / self.ell[n]

    def region_times(self, target, r, n):
        key = (_canon_json(target.to_json()), float(r))
        if key not in self.region_time:
            s = self.samples()
            if math.isinf(r):
                ind = np.ones(len(s))
            else:
                cache = self.sampler.query_cache(self._token)
                key0 = _canon_json(target.to_json())
                if key0 in cache:
                    ind = (cache[key0] < r).astype(float)
                else:
                    ind = self.sampler.within(target, s.z0, s.z1, r, s.orbit_ptr).astype(float)
            self.region_time[key] = self._per_n(ind)
        return self.region_time[key][n]

    def header(self):
        return {"schema_version": SCHEMA_VERSION, "group_hash": self.group.hash(),
                "potential_ids": sorted(self.birkhoff), "n_range": [self.n_min, self.n_max],
                "step": self.step}

    def to_json(self):
        rows = []
        for n in range(self.n_min, self.n_max + 1):
            for i, c in enumerate(self.classes[n]):
                rows.append({"n": n, "class": word_str(c.word), "multiplicity": c.multiplicity,
                             "length_ell": c.length_ell,
                             "birkhoff": {pid: float(v[n][i]) for pid, v in self.birkhoff.items()}})
        return {"header": self.header(), "classes": rows}


def partition_sum(table, n, t, c, phi_id):
    if phi_id not in table.birkhoff or n not in table.birkhoff[phi_id]:
        raise StaleTableError(f"table has no integrals for {phi_id} at n={n}")
    x = t * table.birkhoff[phi_id][n] - c * table.ell[n]
    return math.exp(_lse(np.log(table.mult[n]) + x))


def log_partition(table, n, t, c, phi_id):
    x = t * table.birkhoff[phi_id][n] - c * table.ell[n]
    return _lse(np.log(table.mult[n]) + x)


@dataclass
class PressureResult:
    t: float
    c_star: float
    per_n_roots: list
    residual: float
    n_range: tuple
    method: str = "last"

    def to_json(self):
        return {"t": self.t, "c_star": self.c_star, "per_n_roots": self.per_n_roots,
                "residual": self.residual, "n_range": list(self.n_range), "method": self.method}


def _root_n(table, n, t, pid, bracket=None):
    I, L, M = table.birkhoff[pid][n], table.ell[n], table.mult[n]
    if L.size == 0:
        raise DegenerateWeightsError(f"no closed geodesics of word length {n}")
    if bracket is None:
        avg = t * I / L
        lo = float(avg.min()) - 1e-9
        hi = float(avg.max()) + math.log(M.sum()) / float(L.min()) + 1e-9
    else:
        lo, hi = bracket
    f = lambda c: _lse(np.log(M) + t * I - c * L)
    flo, fhi = f(lo), f(hi)
    if flo < 0 or fhi > 0:
        raise BracketError(f"pressure root not bracketed in [{lo}, {hi}] at n={n}, t={t}")
    return brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


def flow_pressure(table, phi, t, n_range=None, method="last", bracket=None):
    """P(t phi) from per-n roots of log Z_n(t, c) = 0.

    ``method="last"`` returns the root at n_max; ``"richardson"`` combines the
    last two roots as n c_n - (n-1) c_{n-1} (removes a 1/n term)."""
    pid = table.populate(phi)
    n_lo, n_hi = n_range or (table.n_min, table.n_max)
    roots = [_root_n(table, n, t, pid, bracket) for n in range(n_lo, n_hi + 1)]
    if method == "richardson" and len(roots) >= 2:
        c = n_hi * roots[-1] - (n_hi - 1) * roots[-2]
    elif method in ("last", "richardson"):
        c = roots[-1]
    else:
        raise ValueError(f"unknown pressure method {method!r}")
    res = abs(log_partition(table, n_hi, t, roots[-1], pid))
    return PressureResult(float(t), float(c), [float(r) for r in roots], float(res), (n_lo, n_hi), method)


def gibbs_weights(table, phi, t, n=None, c=None):
    pid = table.populate(phi)
    n = n or table.n_max
    if c is None:
        c = _root_n(table, n, t, pid)
    x = np.log(table.mult[n]) + t * table.birkhoff[pid][n] - c * table.ell[n]
    mx = float(x.max())
    w = np.exp(x - mx)
    if not np.isfinite(mx) or w.sum() == 0:
        raise DegenerateWeightsError("all orbit weights underflow")
    return w, c


def _weighted_ratio(w, num, den):
    return math.fsum(w * num) / math.fsum(w * den)


@dataclass
class GibbsAverage:
    value: float
    n_stability: float


def gibbs_average(table, phi, t, psi, n_range=None):
    """Integral of psi against the equilibrium state of t phi, with the change
    against the next-shorter word length as stability diagnostic."""
    n_hi = (n_range or (table.n_min, table.n_max))[1]
    vals = []
    for n in (n_hi, n_hi - 1):
        if n < table.n_min:
            break
        w, _ = gibbs_weights(table, phi, t, n)
        vals.append(_weighted_ratio(w, table.integrals(psi, n), table.ell[n]))
    stab = abs(vals[0] - vals[1]) if len(vals) > 1 else float("nan")
    return GibbsAverage(vals[0], stab)


@dataclass
class Region:
    """Distance neighbourhood {x : d(x, target) < r} (r = inf: everything)."""
    rid: str
    target: object
    r: float


@dataclass
class GibbsStats:
    t: float
    pressure: float
    phi_mean: float
    entropy: float
    region_masses: dict = field(default_factory=dict)
    entropy_clipped: bool = False
    n_stability: float = float("nan")

    def row(self, region_ids):
        return [self.t, self.pressure, self.phi_mean, self.entropy] + [self.region_masses[r] for r in region_ids]


def equilibrium_stats(table, phi, t, regions=(), n_range=None):
    n = (n_range or (table.n_min, table.n_max))[1]
    w, c = gibbs_weights(table, phi, t, n)
    L = table.ell[n]
    phi_mean = _weighted_ratio(w, table.integrals(phi, n), L)
    h = c - t * phi_mean
    clipped = h < ENTROPY_CLIP
    if clipped:
        h = ENTROPY_CLIP
    masses = {}
    for reg in regions:
        tin = table.region_times(reg.target, reg.r, n)
        masses[reg.rid] = min(1.0, max(0.0, _weighted_ratio(w, tin, L)))
    stab = float("nan")
    if n - 1 >= table.n_min:
        w1, _ = gibbs_weights(table, phi, t, n - 1)
        stab = abs(_weighted_ratio(w1, table.integrals(phi, n - 1), table.ell[n - 1]) - phi_mean)
    return GibbsStats(float(t), float(c), float(phi_mean), float(h), masses, bool(clipped), stab)


@dataclass
class ReferenceConstants:
    h_inf_reference: float = None

    def validate(self, h_top, tol=1e-6):
        if self.h_inf_reference is None:
            return True
        return 0 <= self.h_inf_reference <= h_top + tol


PARABOLIC_H_INF = 0.5  # entropy at infinity of a single rank-one cusp


@dataclass
class TPhiReport:
    estimate: float
    applicable: bool
    curve: list
    monotone_excess: bool = True
    warning: str = ""


def t_phi_report(table, phi, constants, t_grid):
    """Smallest grid t with P(s phi) > h_inf for every grid s > t."""
    t_grid = sorted(float(t) for t in t_grid)
    curve = [(t, flow_pressure(table, phi, t).c_star) for t in t_grid]
    h = constants.h_inf_reference
    if h is None:
        return TPhiReport(None, False, curve)
    h_top = flow_pressure(table, phi, 0.0).c_star
    if h > h_top + 1e-6:
        return TPhiReport(None, True, curve, warning="reference entropy at infinity exceeds h_top")
    excess = [p - h for _, p in curve]
    mono = all(b >= a - 1e-12 for a, b in zip(excess, excess[1:]))
    est = None
    for i in range(len(curve) - 1, -1, -1):
        if excess[i] > 0:
            est = curve[i][0]
        else:
            break
    if est == t_grid[0] and excess[0] > 0:
        # condition holds on the whole grid; report anything at or below its start
        est = min(0.0, t_grid[0])
    return TPhiReport(est, True, curve, mono)


def stats_csv(stats, region_ids):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t", "P", "phi_mean", "entropy"] + list(region_ids))
    for s in stats:
        wr.writerow([repr(float(v)) for v in s.row(region_ids)])
    return buf.getvalue()
