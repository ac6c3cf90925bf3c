"""Closed geodesics, sampled invariant sets and distance potentials.

A sampled vector is stored as (z0, theta, z1): base point and direction at
time 0 plus the base point at time 1.  Because the distance between two
geodesics is convex in time, the maximum of the base-point distance over
t in [0, 1] is attained at an endpoint, so the bundle distance of two
samples is max(d(z0, w0), d(z1, w1)) exactly.

Distances to an invariant set K are taken in the quotient: queries are
reduced to the fundamental region and compared against the lifts u K for
all reduced words u with |u| <= neighbor_depth.
"""
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    AmbiguousClassificationError,
    InvalidSpecError,
    NotClosedGeodesicError,
    QuadratureResolutionError,
    ReductionLimitError,
)
from .geometry import (
    INF,
    TWO_PI,
    HPoint,
    Isometry,
    TangentVector,
    classify_isometry,
    fixed_points,
    flow_array,
    mobius,
    mobius_angle,
    translation_length,
)
from .groups import DEFAULT_REDUCTION_CAP, reduce_array
from .words import (
    canonical_rotation,
    inverse,
    letter_key,
    free_reduce,
    is_cyclically_reduced,
    parse_word,
    periodic_classes,
    word_str,
)

DEFAULT_STEP = 0.05
DEFAULT_SAMPLE_DEPTH = 3
DEFAULT_NEIGHBOR_DEPTH = 2


def _word(w):
    if isinstance(w, str):
        return parse_word(w)
    return tuple(int(x) for x in w)


def _canon_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def spec_id(spec):
    return hashlib.sha256(_canon_json(spec.to_json()).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# invariant-set specs


@dataclass(frozen=True)
class ClosedOrbit:
    word: tuple

    def __post_init__(self):
        object.__setattr__(self, "word", _word(self.word))
        if not self.word or not is_cyclically_reduced(self.word):
            raise InvalidSpecError(f"orbit word must be cyclically reduced: {self.word}")

    def to_json(self):
        return {"type": "ClosedOrbit", "word": word_str(self.word)}


@dataclass(frozen=True)
class SubgroupCore:
    """Axes of cyclically reduced words (up to rotation) of length
    <= sample_depth in the given subgroup generators (ambient words).
    ``ambient_len`` optionally drops words longer than that in the ambient
    alphabet, which keeps nets of high powers small."""

    generators: tuple
    sample_depth: int = DEFAULT_SAMPLE_DEPTH
    ambient_len: int = None

    def __post_init__(self):
        gens = tuple(_word((g,)) if isinstance(g, int) else _word(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise InvalidSpecError("empty subgroup generator list")
        if int(self.sample_depth) < 1:
            raise InvalidSpecError("sample_depth must be >= 1")

    def to_json(self):
        out = {"type": "SubgroupCore", "generators": [word_str(g) for g in self.generators],
               "sample_depth": int(self.sample_depth)}
        if self.ambient_len is not None:
            out["ambient_len"] = int(self.ambient_len)
        return out

    def ambient_words(self):
        out = []
        seen = set()
        for n in range(1, int(self.sample_depth) + 1):
            for w, _ in periodic_classes(len(self.generators), n):
                amb = ()
                for x in w:
                    g = self.generators[abs(x) - 1]
                    amb += g if x > 0 else tuple(-y for y in reversed(g))
                amb = _cyclic_reduce(free_reduce(amb))
                if not amb or (self.ambient_len is not None and len(amb) > self.ambient_len):
                    continue
                c = canonical_rotation(amb)
                if c not in seen:
                    seen.add(c)
                    out.append(c)
        if not out:
            raise InvalidSpecError("subgroup produced no closed geodesics")
        return out


def _cyclic_reduce(w):
    w = tuple(w)
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return w


@dataclass(frozen=True)
class Flipped:
    inner: object

    def to_json(self):
        return {"type": "Flipped", "inner": self.inner.to_json()}


@dataclass(frozen=True)
class Union:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise InvalidSpecError("empty union")

    def to_json(self):
        return {"type": "Union", "parts": [p.to_json() for p in self.parts]}


def set_spec_from_json(obj):
    t = obj.get("type")
    if t == "ClosedOrbit":
        return ClosedOrbit(obj["word"])
    if t == "SubgroupCore":
        amb = obj.get("ambient_len")
        return SubgroupCore(tuple(obj["generators"]), int(obj.get("sample_depth", DEFAULT_SAMPLE_DEPTH)),
                            None if amb is None else int(amb))
    if t == "Flipped":
        return Flipped(set_spec_from_json(obj["inner"]))
    if t == "Union":
        return Union(tuple(set_spec_from_json(p) for p in obj["parts"]))
    raise InvalidSpecError(f"unknown invariant set type {t!r}")


# ---------------------------------------------------------------------------
# sampled sets


@dataclass
class SampledSet:
    # sample i is the unit geodesic window z0 -> z1 centred on the vector it
    # represents; theta is the direction at z0
    z0: np.ndarray
    theta: np.ndarray
    z1: np.ndarray
    orbit_ptr: np.ndarray          # sample range of orbit i: orbit_ptr[i]:orbit_ptr[i+1]
    periods: list
    words: list
    qweights: np.ndarray           # trapezoid weights, sum over an orbit = its period
    step: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.z0.shape[0]

    @property
    def n_orbits(self):
        return len(self.periods)

    def orbit(self, i):
        s, e = self.orbit_ptr[i], self.orbit_ptr[i + 1]
        return SampledSet(self.z0[s:e], self.theta[s:e], self.z1[s:e], np.array([0, e - s]),
                          [self.periods[i]], [self.words[i]], self.qweights[s:e], self.step,
                          dict(self.meta))

    def vectors(self):
        """Represented vectors: the midpoints of the stored unit windows."""
        zc, tc = flow_array(self.z0, self.theta, 0.5)
        return [TangentVector(HPoint(z.real, z.imag), float(t)) for z, t in zip(zc, tc)]

    def flipped(self, group=None):
        """Flip every window: ends swap, direction reverses.  With the
        centred convention this is exactly the flip of the represented
        vectors, so the window metric is flip-invariant."""
        _, th1 = flow_array(self.z0, self.theta, 1.0)
        z0, th, z1 = self.z1.copy(), np.mod(th1 + math.pi, TWO_PI), self.z0.copy()
        if group is not None:
            z0, mats, steps = reduce_array(z0, group, DEFAULT_REDUCTION_CAP)
            if (steps < 0).any():
                raise ReductionLimitError("flipped sample reduction hit cap")
            th = mobius_angle(mats, self.z1, th)
            z1 = mobius(mats, z1, det1=True)
        return SampledSet(z0, th, z1, self.orbit_ptr.copy(), list(self.periods),
                          [tuple(-x for x in reversed(w)) for w in self.words],
                          self.qweights.copy(), self.step, {**self.meta, "flipped": True})

    @staticmethod
    def concat(sets):
        ptr = [0]
        for s in sets:
            ptr += list(ptr[-1] + s.orbit_ptr[1:])
        return SampledSet(
            np.concatenate([s.z0 for s in sets]), np.concatenate([s.theta for s in sets]),
            np.concatenate([s.z1 for s in sets]), np.array(ptr, dtype=np.int64),
            sum((s.periods for s in sets), []), sum((s.words for s in sets), []),
            np.concatenate([s.qweights for s in sets]), min(s.step for s in sets), {})


def _axis_frame(rep, att):
    """Unimodular F with F(0) = rep, F(inf) = att."""
    if att == INF:
        return Isometry(1.0, rep, 0.0, 1.0)
    if rep == INF:
        return Isometry(att, -1.0, 1.0, 0.0)
    if att > rep:
        return Isometry(att, rep, 1.0, 1.0).normalized()
    return Isometry(att, -rep, 1.0, -1.0).normalized()


def trapezoid_weights(n, h, period):
    """Weights at nodes 0, h, ..., (n-1)h of a periodic trapezoid rule whose
    last interval [(n-1)h, period] is shorter."""
    w = np.full(n, h)
    last = period - (n - 1) * h
    w[0] = 0.5 * h + 0.5 * last
    w[-1] = 0.5 * h + 0.5 * last if n > 1 else period
    if n == 1:
        w[0] = period
    return w


def primitive_root(w):
    """(r, k) with w = r^k and r not a proper power."""
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d], n // d
    return w, 1


def _rotation_frames(w, group):
    """Axis frames F_j of the rotations w_j = P_j^-1 w P_j (P_j = first j
    letters), their parameters c_j closest to the basepoint, and offsets
    tau_j with P_j^-1 F_0(i e^s) = F_j(i e^(s - tau_j)).

    Offsets are chained one generator at a time, x_(j+1)^-1 mapping the axis
    of w_j onto that of w_(j+1), so that every evaluation stays well
    conditioned (no point far out along a long axis is ever formed)."""
    cache = group.__dict__.setdefault("_rotation_cache", {})
    if w in cache:
        return cache[w]
    o = group.basepoint
    n = len(w)
    frames, cs = [], []
    for j in range(n):
        wj = w[j:] + w[:j]
        M = group.matrix_of(wj)
        try:
            cls = classify_isometry(M, require_hyperbolic=True, det1=True)
        except (AmbiguousClassificationError, ValueError) as exc:
            raise NotClosedGeodesicError(f"word {word_str(w)} is not hyperbolic: {exc}")
        F = _axis_frame(cls.axis.xi_minus, cls.axis.xi_plus)
        u = F.inverse()(o)
        frames.append(F)
        cs.append(math.log(abs(complex(u.x, u.y))))
    taus = [0.0]
    for j in range(n):
        q = frames[j](HPoint(0.0, math.exp(cs[j])))
        q2 = group.letter(-w[j])(q)
        u = frames[(j + 1) % n].inverse()(q2)
        sig = math.log(abs(complex(u.x, u.y)))
        taus.append(cs[j] + taus[j] - sig)
    # taus[n] is the period: the chain closes after one turn
    cache[w] = (frames, cs, taus)
    return frames, cs, taus


def orbit_length(w, group):
    """Period of the closed geodesic of a cyclically reduced word, summed
    along the rotation chain (stable where tr(w) loses digits)."""
    return _rotation_frames(tuple(w), group)[2][-1]


def closed_geodesic_from_word(w, group, step=DEFAULT_STEP, cap=DEFAULT_REDUCTION_CAP):
    """Samples of one period of the closed geodesic of ``w``.

    The word is first put in canonical rotation, so rotations of ``w`` give
    identical sample sets.  Samples sit at arc positions k*step from the
    point of the axis closest to the basepoint (halving ``step`` gives a
    superset).  Each sample is evaluated on the axis of the cyclic rotation
    whose lift passes nearest the basepoint at that time.
    """
    w = _word(w)
    if not w or not is_cyclically_reduced(w):
        raise NotClosedGeodesicError(f"word {word_str(w)} is not cyclically reduced")
    w = canonical_rotation(w)
    root, k = primitive_root(w)
    if k > 1:
        # a proper power runs k times around the geodesic of its root
        r = closed_geodesic_from_word(root, group, step, cap)
        m = len(r)
        out = SampledSet(np.tile(r.z0, k), np.tile(r.theta, k), np.tile(r.z1, k),
                         np.array([0, k * m], dtype=np.int64), [k * r.periods[0]], [w],
                         np.tile(r.qweights, k), float(step), {"word": word_str(w)})
        return out
    wi = canonical_rotation(inverse(w))
    if letter_key(wi) < letter_key(w):
        # the reversed geodesic: flip the samples of the inverse class so
        # that a geodesic and its reverse share sample positions exactly
        r = closed_geodesic_from_word(wi, group, step, cap).flipped(group)
        r.words, r.meta = [w], {"word": word_str(w)}
        return r
    M = group.matrix_of(w)
    try:
        classify_isometry(M, require_hyperbolic=True, det1=True)
    except (AmbiguousClassificationError, ValueError) as exc:
        raise NotClosedGeodesicError(f"word {word_str(w)} is not hyperbolic: {exc}")
    frames, cs, taus = _rotation_frames(w, group)
    ell = taus[-1]
    taus = taus[:-1]
    n = max(int(math.ceil(ell / step - 1e-12)), 1)
    s = cs[0] + step * np.arange(n)
    centers = np.array(cs) + np.array(taus)
    # rotation whose closest point is nearest each sample (ties: lowest j)
    j = np.argmin(np.abs(s[:, None] - centers[None, :]), axis=1)
    Fa = np.array([F.as_array() for F in frames])[j]
    wz = 1j * np.exp(s - np.array(taus)[j])
    z0 = mobius(Fa, wz, det1=True)
    th = mobius_angle(Fa, wz, np.full(n, 0.5 * math.pi))
    z0r, mats, steps = reduce_array(z0, group, cap)
    if (steps < 0).any():
        raise ReductionLimitError(f"orbit {word_str(w)}: sample reduction hit cap {cap}")
    thr = mobius_angle(mats, z0, th)
    z1, _ = flow_array(z0r, thr, 1.0)
    return SampledSet(z0r, thr, z1, np.array([0, n], dtype=np.int64), [ell], [w],
                      trapezoid_weights(n, step, ell), float(step), {"word": word_str(w)})


def sample_invariant_set(spec, group, step=DEFAULT_STEP, cap=DEFAULT_REDUCTION_CAP):
    if isinstance(spec, ClosedOrbit):
        out = closed_geodesic_from_word(spec.word, group, step, cap)
    elif isinstance(spec, SubgroupCore):
        out = SampledSet.concat([closed_geodesic_from_word(w, group, step, cap)
                                 for w in spec.ambient_words()])
    elif isinstance(spec, Flipped):
        out = sample_invariant_set(spec.inner, group, step, cap).flipped(group)
    elif isinstance(spec, Union):
        out = SampledSet.concat([sample_invariant_set(p, group, step, cap) for p in spec.parts])
    else:
        raise InvalidSpecError(f"not an invariant set spec: {spec!r}")
    out.meta = {"spec": spec.to_json(), "step": step}
    return out


# ---------------------------------------------------------------------------
# distance engine


class DistanceField:
    """d(x, K) in the quotient for reduced query vectors."""

    def __init__(self, sset, group, neighbor_depth=DEFAULT_NEIGHBOR_DEPTH, force_numpy=False):
        if len(sset) == 0:
            raise InvalidSpecError("empty sampled set")
        mats = np.concatenate([m for _, m in group.shell_matrices(neighbor_depth)])
        c0 = mobius(mats[:, None], sset.z0[None, :], det1=True).ravel()
        c1 = mobius(mats[:, None], sset.z1[None, :], det1=True).ravel()
        self.n_lifts = mats.shape[0]
        self.index = kernels.CandidateIndex(c0, c1)
        self.force_numpy = force_numpy

    def dist(self, z0, z1, chain_ptr=None):
        q, _ = kernels.nearest_q(z0, z1, self.index, chain_ptr, self.force_numpy)
        return kernels.q_to_dist(q)

    def within(self, z0, z1, r, chain_ptr=None):
        """Boolean d(x, K) < r, searching only inside radius r."""
        q, _ = kernels.nearest_q(z0, z1, self.index, chain_ptr, self.force_numpy,
                                 qcap=float(kernels.dist_to_q(r)) * (1 + 1e-9))
        return kernels.q_to_dist(q) < r


def reduce_vectors(z0, theta, group, cap=DEFAULT_REDUCTION_CAP):
    """Unit windows centred on arbitrary vectors, reduced; returns the
    window start (z0', theta') and end z1'."""
    z0 = np.asarray(z0, dtype=complex).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    z0, theta = flow_array(z0, theta, -0.5)
    zr, mats, steps = reduce_array(z0, group, cap)
    if (steps < 0).any():
        raise ReductionLimitError(f"vector reduction hit cap {cap}")
    thr = mobius_angle(mats, z0, theta)
    z1, _ = flow_array(zr, thr, 1.0)
    return zr, thr, z1


class Sampler:
    """Caches sampled sets and distance fields for one group and knob set."""

    def __init__(self, group, step=DEFAULT_STEP, neighbor_depth=DEFAULT_NEIGHBOR_DEPTH,
                 cap=DEFAULT_REDUCTION_CAP, force_numpy=False):
        self.group = group
        self.step = float(step)
        self.neighbor_depth = int(neighbor_depth)
        self.cap = cap
        self.force_numpy = force_numpy
        self._sets = {}
        self._fields = {}
        self._queries = {}

    def query_cache(self, token):
        return self._queries.setdefault(token, {})

    def sampled(self, spec):
        key = _canon_json(spec.to_json())
        if key not in self._sets:
            self._sets[key] = sample_invariant_set(spec, self.group, self.step, self.cap)
        return self._sets[key]

    def field(self, spec):
        key = _canon_json(spec.to_json())
        if key not in self._fields:
            self._fields[key] = DistanceField(self.sampled(spec), self.group,
                                              self.neighbor_depth, self.force_numpy)
        return self._fields[key]

    def distances(self, spec, z0, z1, chain_ptr=None):
        return self.field(spec).dist(z0, z1, chain_ptr)

    def within(self, spec, z0, z1, r, chain_ptr=None):
        if isinstance(spec, Union):
            return np.logical_or.reduce([self.within(p, z0, z1, r, chain_ptr) for p in spec.parts])
        return self.field(spec).within(z0, z1, r, chain_ptr)

    def cached_distances(self, spec, z0, z1, chain_ptr, cache):
        """Distances memoised in ``cache``; unions are the pointwise min of
        their parts, so shared parts are searched once."""
        key = _canon_json(spec.to_json())
        if key not in cache:
            if isinstance(spec, Union):
                parts = [self.cached_distances(p, z0, z1, chain_ptr, cache) for p in spec.parts]
                cache[key] = np.minimum.reduce(parts)
            else:
                cache[key] = self.distances(spec, z0, z1, chain_ptr)
        return cache[key]


def dist_to_invariant_set(v, sset, group, neighbor_depth=DEFAULT_NEIGHBOR_DEPTH, grid_steps=33,
                          force_numpy=False):
    """Quotient bundle distance from vector ``v`` to a sampled set.

    Vectors are compared through the unit windows centred on them, so the
    flip is an isometry.  ``grid_steps`` (>= 2) is accepted for interface
    compatibility: distances along two geodesics are convex in time, so
    every grid containing both window ends gives the same maximum."""
    if grid_steps < 2:
        raise ValueError("grid_steps must be >= 2")
    z0, th, z1 = reduce_vectors([v.base.z], [v.angle], group)
    f = DistanceField(sset, group, neighbor_depth, force_numpy)
    return float(f.dist(z0, z1)[0])


# ---------------------------------------------------------------------------
# potential specs


@dataclass(frozen=True)
class Bump:
    target: object

    def to_json(self):
        return {"type": "Bump", "target": self.target.to_json()}


@dataclass(frozen=True)
class Tail:
    target: object

    def to_json(self):
        return {"type": "Tail", "target": self.target.to_json()}


@dataclass(frozen=True)
class WeightedSum:
    terms: tuple

    def __post_init__(self):
        terms = tuple((float(d), p) for d, p in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise InvalidSpecError("empty weighted sum")
        ds = [d for d, _ in terms]
        if any(not d > 0 for d in ds):
            raise InvalidSpecError("weights must be positive")
        for a, b in zip(ds, ds[1:]):
            if not b <= 0.5 * a:
                raise InvalidSpecError(f"weights must halve: {b} > {a}/2")

    def to_json(self):
        return {"type": "WeightedSum", "terms": [[d, p.to_json()] for d, p in self.terms]}


@dataclass(frozen=True)
class Scaled:
    c: float
    inner: object

    def to_json(self):
        return {"type": "Scaled", "c": float(self.c), "inner": self.inner.to_json()}


@dataclass(frozen=True)
class Constant:
    value: float

    def to_json(self):
        return {"type": "Constant", "value": float(self.value)}


def potential_from_json(obj):
    t = obj.get("type")
    if t == "Bump":
        return Bump(set_spec_from_json(obj["target"]))
    if t == "Tail":
        return Tail(set_spec_from_json(obj["target"]))
    if t == "WeightedSum":
        return WeightedSum(tuple((float(d), potential_from_json(p)) for d, p in obj["terms"]))
    if t == "Scaled":
        return Scaled(float(obj["c"]), potential_from_json(obj["inner"]))
    if t == "Constant":
        return Constant(float(obj["value"]))
    raise InvalidSpecError(f"unknown potential type {t!r}")


def targets_of(spec):
    """Invariant-set specs a potential depends on (in first-use order)."""
    if isinstance(spec, (Bump, Tail)):
        return [spec.target]
    if isinstance(spec, WeightedSum):
        out = []
        for _, p in spec.terms:
            for t in targets_of(p):
                if t not in out:
                    out.append(t)
        return out
    if isinstance(spec, Scaled):
        return targets_of(spec.inner)
    return []


def eval_on_samples(spec, sampler, z0, z1, chain_ptr=None, _cache=None, token=None):
    """Potential values at reduced sample vectors (arrays).

    With a ``token`` naming the query set, distances are memoised on the
    sampler, so later potentials over the same targets reuse them."""
    if _cache is None:
        _cache = sampler.query_cache(token) if token is not None else {}
    cache = _cache
    n = np.asarray(z0).size
    if isinstance(spec, Constant):
        return np.full(n, spec.value)
    if isinstance(spec, (Bump, Tail)):
        d = sampler.cached_distances(spec.target, z0, z1, chain_ptr, cache)
        return 1.0 / (1.0 + d) if isinstance(spec, Bump) else d / (1.0 + d)
    if isinstance(spec, WeightedSum):
        out = np.zeros(n)
        for delta, p in spec.terms:
            out += delta * eval_on_samples(p, sampler, z0, z1, chain_ptr, cache)
        return out
    if isinstance(spec, Scaled):
        return spec.c * eval_on_samples(spec.inner, sampler, z0, z1, chain_ptr, cache)
    raise InvalidSpecError(f"not a potential spec: {spec!r}")


def eval_potential(spec, v, group, sampler=None):
    sampler = sampler or Sampler(group)
    z0, th, z1 = reduce_vectors([v.base.z], [v.angle], group, sampler.cap)
    return float(eval_on_samples(spec, sampler, z0, z1)[0])


@dataclass
class BirkhoffResult:
    integral: float
    average: float


def birkhoff_integral(spec, orbit, group, sampler=None):
    if orbit.n_orbits != 1:
        raise ValueError("expected a single-orbit sampled set")
    if len(orbit) < 4:
        raise QuadratureResolutionError(f"only {len(orbit)} samples on the orbit")
    sampler = sampler or Sampler(group, step=orbit.step)
    f = eval_on_samples(spec, sampler, orbit.z0, orbit.z1)
    integral = math.fsum(orbit.qweights * f)
    ell = orbit.periods[0]
    return BirkhoffResult(integral, integral / ell)


def lipschitz_bound(spec):
    if isinstance(spec, (Bump, Tail)):
        return 2.0
    if isinstance(spec, WeightedSum):
        return math.fsum(d * lipschitz_bound(p) for d, p in spec.terms)
    if isinstance(spec, Scaled):
        return abs(spec.c) * lipschitz_bound(spec.inner)
    if isinstance(spec, Constant):
        return abs(spec.value)
    raise InvalidSpecError(f"not a potential spec: {spec!r}")


def sup_bound(spec):
    """Uniform-norm bound (Bump/Tail take values in [0, 1])."""
    if isinstance(spec, (Bump, Tail)):
        return 1.0
    if isinstance(spec, WeightedSum):
        return math.fsum(d * sup_bound(p) for d, p in spec.terms)
    if isinstance(spec, Scaled):
        return abs(spec.c) * sup_bound(spec.inner)
    if isinstance(spec, Constant):
        return abs(spec.value)
    raise InvalidSpecError(f"not a potential spec: {spec!r}")
