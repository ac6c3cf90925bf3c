"""Upper half-plane geometry (curvature -1).

Points are ``HPoint(x, y)`` with ``y > 0``; boundary points are real floats,
with ``INF`` standing for the point at infinity.  Tangent vectors carry the
Euclidean direction angle of the unit vector at the base point, so that
``angle = pi/2`` points straight up.

Besides the small immutable value types there is an array layer working on
complex numpy arrays, used by the sampling and distance code.
"""
import math
import cmath
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AmbiguousClassificationError, NumericOverflowError

TWO_PI = 2.0 * math.pi
INF = math.inf
TRACE_TOL = 1e-9
DEFAULT_GRID = 33


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")
        if self.y <= 0:
            raise ValueError(f"point below the boundary: y={self.y}")

    @property
    def z(self):
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z):
        return cls(float(z.real), float(z.imag))


def _wrap(theta):
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    # fmod of a value just below 2pi can round up to exactly 2pi
    return 0.0 if t >= TWO_PI else t


@dataclass(frozen=True)
class TangentVector:
    base: HPoint
    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise ValueError("non-finite angle")
        object.__setattr__(self, "angle", _wrap(self.angle))


@dataclass(frozen=True)
class GeodesicLine:
    xi_minus: float
    xi_plus: float

    def __post_init__(self):
        if self.xi_minus == self.xi_plus:
            raise ValueError("degenerate geodesic: equal endpoints")


@dataclass(frozen=True)
class Isometry:
    """Real Moebius map z -> (az+b)/(cz+d); use :meth:`normalized` for det 1."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.c, self.d)):
            raise NumericOverflowError(f"non-finite isometry entries {self.entries}")

    @property
    def entries(self):
        return (self.a, self.b, self.c, self.d)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def trace(self):
        return self.a + self.d

    def normalized(self, det1=False):
        """Scale to det 1 with trace >= 0.  ``det1`` trusts that the matrix is
        already unimodular (long word products, where ad - bc cancels) and
        only fixes the sign."""
        det = 1.0 if det1 else self.det
        if not det > 0:
            raise ValueError(f"orientation-reversing or singular matrix (det={det})")
        s = math.sqrt(det)
        a, b, c, d = self.a / s, self.b / s, self.c / s, self.d / s
        sign = a + d
        if sign == 0:
            sign = c if c != 0 else d
        if sign < 0:
            a, b, c, d = -a, -b, -c, -d
        return Isometry(a, b, c, d)

    def __matmul__(self, other):
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return Isometry(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self):
        return Isometry(self.d, -self.b, -self.c, self.a)

    def power(self, n):
        n = int(n)
        base = self if n >= 0 else self.inverse()
        result = IDENTITY
        for _ in range(abs(n)):
            result = result @ base
        return result

    def boundary_image(self, xi):
        a, b, c, d = self.entries
        if xi == INF:
            return INF if c == 0 else a / c
        den = c * xi + d
        if den == 0:
            return INF
        return (a * xi + b) / den

    def __call__(self, z):
        if isinstance(z, HPoint):
            return apply_isometry(self, z)
        return self.boundary_image(z)

    def as_array(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    @classmethod
    def from_array(cls, m):
        return cls(float(m[0][0]), float(m[0][1]), float(m[1][0]), float(m[1][1]))


IDENTITY = Isometry(1.0, 0.0, 0.0, 1.0)


class Kind(str, Enum):
    HYPERBOLIC = "Hyperbolic"
    PARABOLIC = "Parabolic"
    ELLIPTIC = "Elliptic"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    translation_length: float = None
    axis: GeodesicLine = None


def apply_isometry(g, z):
    a, b, c, d = g.entries
    w = complex(z.x, z.y)
    num = a * w + b
    den = c * w + d
    if den == 0:
        raise NumericOverflowError("Moebius denominator vanished inside H^2")
    r = num / den
    if not (math.isfinite(r.real) and math.isfinite(r.imag)):
        raise NumericOverflowError(f"overflow applying {g} to {z}")
    # Im((az+b)/(cz+d)) = det * y / |cz+d|^2 is exact up to rounding; use it
    # directly so that y stays positive for points very close to the boundary
    y = g.det * z.y / abs(den) ** 2
    if not y > 0:
        raise NumericOverflowError(f"image left the upper half-plane: {g} {z}")
    return HPoint(r.real, y)


def hyp_dist(z, w):
    """Hyperbolic distance, 2 asinh(|z-w| / 2 sqrt(y_z y_w)) (cancellation-free)."""
    dx = z.x - w.x
    dy = z.y - w.y
    return 2.0 * math.asinh(math.hypot(dx, dy) / (2.0 * math.sqrt(z.y * w.y)))


def fixed_points(g, det1=False):
    """Real fixed points of a hyperbolic ``g`` ordered (repelling, attracting)."""
    a, b, c, d = g.normalized(det1).entries
    tr = a + d
    disc = tr * tr - 4.0
    if disc <= 0:
        raise ValueError("not hyperbolic")
    r = math.sqrt(disc)
    if c == 0:
        finite = b / (d - a)
        # g(z) = (a/d) z + b/d: infinity attracts when |a| > |d|
        return (finite, INF) if abs(a) > abs(d) else (INF, finite)
    # roots of c x^2 + (d - a) x - b = 0, computed without cancellation
    q = -0.5 * ((d - a) + math.copysign(r, d - a))
    x1 = q / c
    x2 = -b / q if q != 0 else (a - d) / (2 * c)
    # attracting fixed point has |c x + d| > 1
    if abs(c * x1 + d) > abs(c * x2 + d):
        return x2, x1
    return x1, x2


def classify_isometry(g, tol=TRACE_TOL, require_hyperbolic=False, det1=False):
    g = g.normalized(det1)
    if g.b == 0 and g.c == 0 and abs(g.a - 1) <= tol:
        raise ValueError("identity has no classification")
    tr = abs(g.trace)
    if abs(tr - 2.0) <= tol:
        if require_hyperbolic:
            raise AmbiguousClassificationError(f"|tr| = {tr!r} within {tol} of 2")
        return Classification(Kind.PARABOLIC)
    if tr < 2.0:
        if require_hyperbolic:
            raise AmbiguousClassificationError(f"elliptic element, |tr| = {tr!r}")
        return Classification(Kind.ELLIPTIC)
    ell = 2.0 * math.acosh(tr / 2.0)
    rep, att = fixed_points(g, det1)
    return Classification(Kind.HYPERBOLIC, ell, GeodesicLine(rep, att))


def translation_length(g, det1=False):
    """2 acosh(|tr|/2) of the normalized matrix; ``det1`` skips the determinant
    (long words: ad - bc cancels)."""
    tr = abs(g.trace) if det1 else abs(g.trace) / math.sqrt(g.det)
    return 2.0 * math.acosh(tr / 2.0) if tr > 2.0 else 0.0


def frame(v):
    """Isometry sending (i, up) to ``v``."""
    x, y, th = v.base.x, v.base.y, v.angle
    phi = 0.5 * (th - 0.5 * math.pi)
    c, s = math.cos(phi), math.sin(phi)
    r = math.sqrt(y)
    # T_x A_y K(phi) with K = [[c, s], [-s, c]]
    a, b, cc, d = r * c, r * s, -s / r, c / r
    return Isometry(a + x * cc, b + x * d, cc, d)


def vector_from_frame(g, t=0.0):
    """Image of the vertical vector at i e^t under ``g``."""
    w = complex(0.0, math.exp(t))
    a, b, c, d = g.entries
    den = c * w + d
    z = (a * w + b) / den
    y = g.det * math.exp(t) / abs(den) ** 2
    ang = 0.5 * math.pi - 2.0 * cmath.phase(den)
    return TangentVector(HPoint(z.real, y), ang)


def geodesic_flow_step(v, t):
    if t == 0:
        return v
    return vector_from_frame(frame(v), t)


def flip(v):
    return TangentVector(v.base, v.angle + math.pi)


def bundle_dist(v, w, grid_steps=DEFAULT_GRID):
    """Max over a uniform grid on [0, 1] of base-point distances of the flowed
    vectors.  The grid always contains both endpoints."""
    if grid_steps < 2:
        raise ValueError("grid_steps must be >= 2")
    fv, fw = frame(v), frame(w)
    best = 0.0
    for j in range(grid_steps):
        t = j / (grid_steps - 1)
        best = max(best, hyp_dist(vector_from_frame(fv, t).base, vector_from_frame(fw, t).base))
    return best


def isometry_on_vector(g, v):
    a, b, c, d = g.normalized().entries
    z = apply_isometry(Isometry(a, b, c, d), v.base)
    den = complex(c * v.base.x + d, c * v.base.y)
    return TangentVector(z, v.angle - 2.0 * cmath.phase(den))


# ---------------------------------------------------------------------------
# array layer: points as complex arrays, vectors as (complex, angle) arrays


def mobius(m, z, det1=False):
    """Apply a stack of matrices (..., 2, 2) or a single one to complex ``z``.

    With ``det1`` the matrices are known to be unimodular (long products of
    normalized generators), and the determinant is not recomputed: for large
    entries ad - bc cancels catastrophically."""
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    den = c * z + d
    w = (a * z + b) / den
    # recompute the imaginary part from det*y/|den|^2 to stay inside H^2
    det = 1.0 if det1 else (a * d - b * c)
    y = det * np.imag(z) / (den.real ** 2 + den.imag ** 2)
    return np.real(w) + 1j * y


def mobius_angle(m, z, theta):
    m = np.asarray(m, dtype=float)
    c, d = m[..., 1, 0], m[..., 1, 1]
    return np.mod(theta - 2.0 * np.angle(c * z + d), TWO_PI)


def dist_array(z, w):
    num = np.abs(z - w)
    return 2.0 * np.arcsinh(num / (2.0 * np.sqrt(np.imag(z) * np.imag(w))))


def frames_array(z, theta):
    """Stack of frame matrices (n, 2, 2) for vectors (z, theta)."""
    z = np.asarray(z, dtype=complex)
    phi = 0.5 * (np.asarray(theta, dtype=float) - 0.5 * np.pi)
    c, s = np.cos(phi), np.sin(phi)
    r = np.sqrt(z.imag)
    x = z.real
    out = np.empty(z.shape + (2, 2))
    cc, d = -s / r, c / r
    out[..., 0, 0] = r * c + x * cc
    out[..., 0, 1] = r * s + x * d
    out[..., 1, 0] = cc
    out[..., 1, 1] = d
    return out


def flow_array(z, theta, t):
    """Flow vectors (z, theta) by times ``t`` (broadcasting)."""
    m = frames_array(z, theta)
    t = np.asarray(t, dtype=float)
    w = 1j * np.exp(t)
    return mobius(m, w), mobius_angle(m, w, np.full(np.broadcast(w, z).shape, 0.5 * np.pi))
