"""Schottky groups: ping-pong disks, word shells, Poincare sums, critical
exponents, nested subgroups and fundamental-domain reduction.

Disk conventions.  For generator g_i the user supplies a repelling disk D_i^-
and an attracting disk D_i^+ (Euclidean disks centred on the real line) with
g_i(ext D_i^-) inside D_i^+.  Reduction works with the *domain disks*
A_{+i} = g_i(ext D_i^-) (a disk inside D_i^+) and A_{-i} = D_i^-, so that
g_i^{-1} maps ext A_{+i} exactly onto A_{-i}.  The common exterior of the
A's is a fundamental region, and a point inside A_j is pulled back by the
letter -j.
"""
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    EstimationFailureError,
    InvalidConfigError,
    ReductionLimitError,
)
from .geometry import (
    INF,
    HPoint,
    Isometry,
    Kind,
    classify_isometry,
    dist_array,
    hyp_dist,
    mobius,
)
from . import words as _words
from .words import MAX_WORD_LEN, alphabet, check_budget, free_reduce, shell_count

DEFAULT_REDUCTION_CAP = 64
DEFAULT_SHELL_LEN = 10
CYCLIC_SHELL_LEN = 256
PING_PONG_TOL = 1e-9


@dataclass(frozen=True)
class Disk:
    center: float
    radius: float

    def contains(self, xi, tol=0.0):
        if xi == INF:
            return False
        return abs(xi - self.center) <= self.radius * (1 + tol) + tol

    def as_list(self):
        return [self.center, self.radius]


def isometric_disks(g, det1=False):
    """(D^-, D^+) from the isometric circles of g and g^{-1}."""
    a, b, c, d = g.normalized(det1).entries
    if c == 0:
        raise InvalidConfigError("isometric circles undefined for c = 0; give disks explicitly")
    r = 1.0 / abs(c)
    return Disk(-d / c, r), Disk(a / c, r)


def hyperbolic_from_axis(xi_minus, xi_plus, ell):
    """Hyperbolic isometry translating by ``ell`` along the axis xi_minus -> xi_plus."""
    p, q = float(xi_minus), float(xi_plus)
    if p == q:
        raise ValueError("axis endpoints coincide")
    # M: 0 -> p, inf -> q
    M = Isometry(q, p, 1.0, 1.0) if q > p else Isometry(p, q, 1.0, 1.0)
    e = math.exp(0.5 * ell)
    D = Isometry(e, 0.0, 0.0, 1.0 / e) if q > p else Isometry(1.0 / e, 0.0, 0.0, e)
    Mn = M.normalized()
    return (Mn @ D @ Mn.inverse()).normalized()


def _image_disk(g, disk):
    """Disk bounded by g(boundary of disk) on the side of g(infinity)."""
    u = g.boundary_image(disk.center - disk.radius)
    v = g.boundary_image(disk.center + disk.radius)
    if u == INF or v == INF:
        raise InvalidConfigError("generator pole lies on its repelling circle")
    return Disk(0.5 * (u + v), 0.5 * abs(v - u))


class SchottkyGroup:
    """Free group generated by ping-pong isometries."""

    def __init__(self, generators, disks=None, basepoint=None, extended=False, unimodular=False):
        # unimodular: trust det = 1 (high powers, where ad - bc cancels)
        gens = [g.normalized(unimodular) for g in generators]
        if len(gens) < 2:
            raise InvalidConfigError("a Schottky group needs at least 2 generators")
        if disks is None:
            disks = [isometric_disks(g, unimodular) for g in gens]
        disks = [(_as_disk(dm), _as_disk(dp)) for dm, dp in disks]
        if len(disks) != len(gens):
            raise InvalidConfigError("one disk pair per generator required")
        for dm, dp in disks:
            if not (dm.radius > 0 and dp.radius > 0):
                raise InvalidConfigError("disk radius must be positive")
        self.generators = gens
        self.disks = disks
        self.basepoint = basepoint if basepoint is not None else HPoint(0.0, 1.0)
        self.extended = bool(extended)
        self.kinds = []
        for g in gens:
            try:
                kind = classify_isometry(g, det1=unimodular).kind
            except ValueError:
                raise InvalidConfigError("identity generator")
            self.kinds.append(kind)
        npar = sum(k == Kind.PARABOLIC for k in self.kinds)
        if any(k == Kind.ELLIPTIC for k in self.kinds):
            raise InvalidConfigError("elliptic generator")
        if npar > (1 if self.extended else 0):
            raise InvalidConfigError("parabolic generators need extended mode (at most one)")
        self._domain = None
        self._shells = {}

    @property
    def k(self):
        return len(self.generators)

    def letter(self, j):
        g = self.generators[abs(j) - 1]
        return g if j > 0 else g.inverse()

    def matrix_of(self, word):
        m = Isometry(1.0, 0.0, 0.0, 1.0)
        for x in word:
            m = m @ self.letter(x)
        return m

    def domain_disks(self):
        """Dict letter -> Disk A_letter (see module docstring)."""
        if self._domain is None:
            out = {}
            for i, (g, (dm, dp)) in enumerate(zip(self.generators, self.disks), start=1):
                out[i] = _image_disk(g, dm)
                out[-i] = dm
            self._domain = out
        return self._domain

    def to_json(self):
        return {
            "generators": [list(g.entries) for g in self.generators],
            "disks": [[dm.as_list(), dp.as_list()] for dm, dp in self.disks],
            "basepoint": [self.basepoint.x, self.basepoint.y],
            "extended": self.extended,
        }

    def hash(self):
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_basepoint(self, o):
        return SchottkyGroup(self.generators, self.disks, o, self.extended)

    # -- word shells -------------------------------------------------------

    def shell_matrices(self, max_len):
        """List over m = 0..max_len of (letters (N, m) int array, matrices (N, 2, 2)).

        Words inside a shell are in lexicographic alphabet order."""
        check_budget(self.k, max_len)
        letters = np.array(alphabet(self.k))
        lm = np.array([self.letter(int(x)).as_array() for x in letters])
        shells = [(np.zeros((1, 0), dtype=np.int64), np.eye(2)[None])]
        for m in range(1, max_len + 1):
            pw, pm = shells[-1]
            n = pw.shape[0]
            if m == 1:
                idx_parent = np.zeros(letters.size, dtype=np.int64)
                idx_letter = np.arange(letters.size)
            else:
                last = pw[:, -1]
                ok = letters[None, :] != -last[:, None]
                idx_parent, idx_letter = np.nonzero(ok)
            words = np.concatenate([pw[idx_parent], letters[idx_letter, None]], axis=1)
            mats = pm[idx_parent] @ lm[idx_letter]
            assert words.shape[0] == shell_count(self.k, m) or n == 0
            shells.append((words, mats))
        return shells

    def shell_displacements(self, max_len):
        """Per shell m, the array d(o, w o) over reduced words of length m."""
        if max_len not in self._shells:
            o = self.basepoint.z
            out = []
            for _, mats in self.shell_matrices(max_len):
                out.append(dist_array(mobius(mats, o, det1=True), o))
            self._shells[max_len] = out
        return self._shells[max_len]

    def c_min(self):
        """Lower bound on d(o, w o) / |w| (shell growth is linear in displacement)."""
        return min(hyp_dist(self.basepoint, self.letter(j)(self.basepoint)) for j in alphabet(self.k))


def _as_disk(d):
    if isinstance(d, Disk):
        return d
    c, r = d
    return Disk(float(c), float(r))


class CyclicGroup:
    """Elementary group generated by one isometry; shell m is {g^m, g^-m}."""

    def __init__(self, generator, basepoint=None):
        self.generator = generator.normalized()
        self.basepoint = basepoint if basepoint is not None else HPoint(0.0, 1.0)
        self.kind = classify_isometry(self.generator).kind
        if self.kind == Kind.ELLIPTIC:
            raise InvalidConfigError("elliptic cyclic group is finite")
        self.k = 1
        self._shells = {}

    def shell_displacements(self, max_len):
        if max_len not in self._shells:
            o = self.basepoint
            out = [np.zeros(1)]
            if self.kind == Kind.PARABOLIC:
                g = self.generator.as_array()
                N = g / np.sign(np.trace(g)) - np.eye(2)
                for m in range(1, max_len + 1):
                    ds = [hyp_dist(o, Isometry.from_array(np.eye(2) + s * m * N)(o)) for s in (1, -1)]
                    out.append(np.array(ds))
            else:
                cls = classify_isometry(self.generator)
                ell = cls.translation_length
                r = _dist_to_axis(o, cls.axis.xi_minus, cls.axis.xi_plus)
                lc = math.log(math.cosh(r))
                for m in range(1, max_len + 1):
                    h = 0.5 * m * ell
                    if h < 300:
                        d = 2.0 * math.asinh(math.cosh(r) * math.sinh(h))
                    else:
                        d = 2.0 * (lc + h)
                    out.append(np.array([d, d]))
            self._shells[max_len] = out
        return self._shells[max_len]


def _dist_to_axis(o, p, q):
    """Distance from o to the geodesic with endpoints p, q."""
    if p == INF or q == INF:
        f = q if p == INF else p
        # vertical line through f: sinh r = |x - f| / y
        return math.asinh(abs(o.x - f) / o.y)
    c = 0.5 * (p + q)
    R = 0.5 * abs(q - p)
    # sinh r = | |z-c|^2 - R^2 | / (2 R y)
    return math.asinh(abs((o.x - c) ** 2 + o.y ** 2 - R * R) / (2 * R * o.y))


# ---------------------------------------------------------------------------
# ping-pong check


@dataclass
class PingPongReport:
    ok: bool
    violations: list = field(default_factory=list)


def check_ping_pong(group, samples=64):
    if len(getattr(group, "generators", [])) < 2:
        raise InvalidConfigError("ping-pong needs at least 2 generators")
    viol = []
    flat = []
    for i, (dm, dp) in enumerate(group.disks, start=1):
        if not (dm.radius > 0 and dp.radius > 0):
            raise InvalidConfigError(f"degenerate disk for generator {i}")
        flat += [(-i, dm), (i, dp)]
    for a in range(len(flat)):
        for b in range(a + 1, len(flat)):
            (la, da), (lb, db) = flat[a], flat[b]
            gap = abs(da.center - db.center) - (da.radius + db.radius)
            tangent_ok = (group.extended and la == -lb
                          and group.kinds[abs(la) - 1] == Kind.PARABOLIC)
            tol = PING_PONG_TOL * max(1.0, da.radius + db.radius)
            if gap < -tol or (gap <= tol and not tangent_ok):
                viol.append({"type": "disjointness", "disks": [la, lb], "gap": gap})
    # boundary samples of ext D^-: c + r/u, u in [-1, 1] \ {0}, plus infinity
    u = np.linspace(-1.0, 1.0, 2 * samples + 1)
    u = u[u != 0]
    for i, (g, (dm, dp)) in enumerate(zip(group.generators, group.disks), start=1):
        pts = [INF] + list(dm.center + dm.radius / u)
        for xi in pts:
            im = g.boundary_image(xi)
            if not dp.contains(im, tol=1e-9):
                viol.append({"type": "mapping", "generator": i, "point": xi, "image": im})
    return PingPongReport(ok=not viol, violations=viol)


# ---------------------------------------------------------------------------
# Poincare sums and critical exponent


def _log_shell_sum(d, s):
    """log sum exp(-s d), shifted for range and summed with fsum."""
    x = -s * np.asarray(d, dtype=float)
    mx = float(x.max())
    return mx + math.log(math.fsum(np.exp(x - mx)))


@dataclass
class ShellSums:
    s: float
    shells: list
    partial: float


def poincare_shell_sums(group, s, max_len):
    if s < 0:
        raise ValueError("s must be >= 0")
    disp = group.shell_displacements(max_len)
    shells = [math.fsum(np.exp(-s * d)) for d in disp]
    return ShellSums(float(s), shells, math.fsum(shells))


@dataclass
class CriticalExponentEstimate:
    delta_hat: float
    shell_data: list
    uncertainty: float
    regime: str = "exponential"

    def to_json(self):
        return {"delta_hat": self.delta_hat, "uncertainty": self.uncertainty,
                "regime": self.regime, "shell_data": self.shell_data}


def _bisect(f, lo, hi, tol=1e-12, maxit=200):
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise EstimationFailureError(f"growth rate does not change sign on [{lo}, {hi}]: {flo}, {fhi}")
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def critical_exponent_estimate(group, max_len=None, s_range=(0.0, 2.0)):
    """Root of the shell growth rate.

    With r_m(s) = (1/m) log S_m(s), the combination m r_m - (m-1) r_{m-1}
    = log S_m - log S_{m-1} removes the O(1/m) term (one Richardson step);
    its root in s is taken per m.  Free groups grow exponentially and the
    root of the growth rate itself is used.  Elementary groups have constant
    shell counts; there the series converges iff the ratio S_m/S_{m-1}
    drops below 1 - 1/m (Raabe), and the root of G_m = -log(m/(m-1)) is
    used instead.
    """
    if max_len is None:
        max_len = CYCLIC_SHELL_LEN if isinstance(group, CyclicGroup) else DEFAULT_SHELL_LEN
    if max_len < 4:
        raise ValueError("need max_len >= 4 for three growth-rate roots")
    disp = group.shell_displacements(max_len)
    regime = "subexponential" if isinstance(group, CyclicGroup) else "exponential"
    roots = []
    rows = []
    top = list(range(max_len - 2, max_len + 1))
    for m in range(2, max_len + 1):
        target = -math.log(m / (m - 1)) if regime == "subexponential" else 0.0

        def G(s, m=m, target=target):
            return _log_shell_sum(disp[m], s) - _log_shell_sum(disp[m - 1], s) - target

        if m in top:
            r = _bisect(G, *s_range)
            roots.append(r)
            rows.append({"m": m, "count": int(disp[m].size), "root": r,
                         "log_S_at_root": _log_shell_sum(disp[m], r)})
    delta = roots[-1]
    unc = max(max(roots) - min(roots), 1e-12)
    return CriticalExponentEstimate(float(delta), rows, float(unc), regime)


# ---------------------------------------------------------------------------
# nested subgroups


def nested_subgroup(h1, h2, n, disks=None, basepoint=None):
    """<h1, h2^(2^n)> with disks for the power shrunk when possible.

    ``disks`` are the disk pairs of the base pair (h1, h2); default isometric
    circles.  The powered generator first tries its own isometric circles
    (valid if they sit inside the base disks and ping-pong holds), otherwise
    it keeps the base disks, which are always valid for positive powers."""
    base = SchottkyGroup([h1, h2], disks, basepoint)
    rep = check_ping_pong(base)
    if not rep.ok:
        raise InvalidConfigError(f"base pair fails ping-pong: {rep.violations[:3]}")
    if n == 0:
        return base
    p = h2.normalized().power(2 ** n).normalized(det1=True)
    (d1m, d1p), (d2m, d2p) = base.disks
    cand = None
    try:
        im, ip = isometric_disks(p, det1=True)
        inside = (abs(im.center - d2m.center) + im.radius <= d2m.radius
                  and abs(ip.center - d2p.center) + ip.radius <= d2p.radius)
        if inside:
            g = SchottkyGroup([h1, p], [(d1m, d1p), (im, ip)], base.basepoint, unimodular=True)
            if check_ping_pong(g).ok:
                cand = g
    except InvalidConfigError:
        pass
    if cand is None:
        cand = SchottkyGroup([h1, p], base.disks, base.basepoint, unimodular=True)
    assert check_ping_pong(cand).ok, "powered generator broke ping-pong"
    return cand


def enumerate_reduced_words(group, max_len):
    """Reduced words of length <= max_len in the group's generators, shell by
    shell, lexicographic inside a shell (lazy; budget-checked up front)."""
    k = group if isinstance(group, int) else group.k
    return _words.enumerate_reduced_words(k, max_len)


# ---------------------------------------------------------------------------
# fundamental domain


def _domain_arrays(group):
    dd = group.domain_disks()
    lets = alphabet(group.k)
    centers = np.array([dd[j].center for j in lets])
    radii = np.array([dd[j].radius for j in lets])
    mats = np.array([group.letter(-j).as_array() for j in lets])
    return lets, centers, radii, mats


def reduce_array(z, group, cap=DEFAULT_REDUCTION_CAP):
    """Batch reduction: returns (reduced points, matrices, steps).

    ``steps == -1`` flags points that hit the cap."""
    lets, centers, radii, mats = _domain_arrays(group)
    m, steps = kernels.reduce_points(z, centers, radii, mats, cap)
    return mobius(m, np.asarray(z, dtype=complex).ravel(), det1=True), m, steps


def reduce_to_fundamental_domain(z, group, cap=DEFAULT_REDUCTION_CAP):
    """(z', w) with z' = w z outside every open domain disk."""
    dd = group.domain_disks()
    lets = alphabet(group.k)
    r2 = {j: (dd[j].radius ** 2) * (1.0 - kernels.DISK_EPS) for j in lets}
    w = []
    cur = z
    while True:
        hit = None
        for j in lets:
            if (cur.x - dd[j].center) ** 2 + cur.y ** 2 < r2[j]:
                hit = j
                break
        if hit is None:
            break
        if len(w) >= cap:
            raise ReductionLimitError(f"reduction exceeded {cap} steps near {cur}")
        cur = group.letter(-hit)(cur)
        w.append(-hit)
    return cur, free_reduce(tuple(reversed(w)))


def quotient_point_dist(z, w, group, neighbor_depth=2, cap=DEFAULT_REDUCTION_CAP):
    zr, _ = reduce_to_fundamental_domain(z, group, cap)
    wr, _ = reduce_to_fundamental_domain(w, group, cap)
    shells = group.shell_matrices(neighbor_depth)
    mats = np.concatenate([m for _, m in shells])
    imgs = mobius(mats, wr.z, det1=True)
    return float(dist_array(zr.z, imgs).min())


__all__ = [
    "Disk", "SchottkyGroup", "CyclicGroup", "PingPongReport", "ShellSums",
    "CriticalExponentEstimate", "check_ping_pong", "poincare_shell_sums",
    "critical_exponent_estimate", "nested_subgroup", "reduce_to_fundamental_domain",
    "reduce_array", "quotient_point_dist", "isometric_disks", "hyperbolic_from_axis",
    "MAX_WORD_LEN",
]
