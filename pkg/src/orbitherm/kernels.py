"""Hot numeric kernels.

Two kernels dominate runtime: ping-pong reduction of large batches of points
into the Schottky fundamental region, and the nearest-neighbour search in the
bundle metric between orbit samples and lifted invariant-set samples.  Each
has a jitted loop (used when numba is available) and a vectorised numpy twin
(``ORBITHERM_NO_NUMBA=1``).  Both twins return identical values; the search
kernels differ only in which of several tied candidates they report.

Distances are handled in "Q-space": for base points z, w of the upper
half-plane ``Q = |z - w|^2 / (Im z Im w) = 2 (cosh d - 1)``, monotone in d.
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, njit, prange

# points closer than this (relative) to a disk circle count as outside it,
# which keeps rounding from bouncing a point between paired circles
DISK_EPS = 1e-12


def q_to_dist(q):
    """Hyperbolic distance from Q = 2(cosh d - 1), cancellation free."""
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(q, 0.0)) * 0.5)


def dist_to_q(d):
    return 4.0 * np.sinh(0.5 * np.asarray(d, dtype=float)) ** 2


# ---------------------------------------------------------------------------
# fundamental-domain reduction


@njit
def _reduce_nb(x, y, centers, radii2, mats, cap, out_m, out_steps):
    n = x.shape[0]
    nd = centers.shape[0]
    for i in range(n):
        xi = x[i]
        yi = y[i]
        m00 = 1.0
        m01 = 0.0
        m10 = 0.0
        m11 = 1.0
        steps = 0
        while True:
            hit = -1
            for j in range(nd):
                dx = xi - centers[j]
                if dx * dx + yi * yi < radii2[j]:
                    hit = j
                    break
            if hit < 0:
                break
            if steps >= cap:
                steps = -1
                break
            a = mats[hit, 0, 0]
            b = mats[hit, 0, 1]
            c = mats[hit, 1, 0]
            d = mats[hit, 1, 1]
            # apply to the point
            dr = c * xi + d
            di = c * yi
            den = dr * dr + di * di
            nr = a * xi + b
            ni = a * yi
            xn = (nr * dr + ni * di) / den
            yn = (a * d - b * c) * yi / den
            xi = xn
            yi = yn
            # accumulate M <- A @ M
            t00 = a * m00 + b * m10
            t01 = a * m01 + b * m11
            t10 = c * m00 + d * m10
            t11 = c * m01 + d * m11
            m00 = t00
            m01 = t01
            m10 = t10
            m11 = t11
            steps += 1
        out_m[i, 0, 0] = m00
        out_m[i, 0, 1] = m01
        out_m[i, 1, 0] = m10
        out_m[i, 1, 1] = m11
        out_steps[i] = steps


def _reduce_np(x, y, centers, radii2, mats, cap, out_m, out_steps):
    xi = x.copy()
    yi = y.copy()
    out_m[:] = np.eye(2)
    out_steps[:] = 0
    active = np.ones(x.shape[0], dtype=bool)
    while active.any():
        idx = np.nonzero(active)[0]
        dx = xi[idx, None] - centers[None, :]
        inside = dx * dx + (yi[idx, None] ** 2) < radii2[None, :]
        anyin = inside.any(axis=1)
        done = idx[~anyin]
        active[done] = False
        idx = idx[anyin]
        if idx.size == 0:
            break
        hit = np.argmax(inside[anyin], axis=1)
        over = out_steps[idx] >= cap
        if over.any():
            out_steps[idx[over]] = -1
            active[idx[over]] = False
            idx = idx[~over]
            hit = hit[~over]
        A = mats[hit]
        a, b, c, d = A[:, 0, 0], A[:, 0, 1], A[:, 1, 0], A[:, 1, 1]
        px, py = xi[idx], yi[idx]
        dr = c * px + d
        di = c * py
        den = dr * dr + di * di
        nr = a * px + b
        ni = a * py
        xi[idx] = (nr * dr + ni * di) / den
        yi[idx] = (a * d - b * c) * py / den
        out_m[idx] = A @ out_m[idx]
        out_steps[idx] += 1


def reduce_points(z, centers, radii, mats, cap):
    """Reduce complex points ``z`` out of a family of open disks.

    ``mats[j]`` is the isometry applied to a point found inside disk ``j``.
    Returns ``(matrices, steps)``; ``steps == -1`` marks points that hit
    ``cap`` (they sit on the limit set to working precision).
    """
    z = np.ascontiguousarray(np.asarray(z, dtype=complex).ravel())
    x = np.ascontiguousarray(z.real)
    y = np.ascontiguousarray(z.imag)
    centers = np.ascontiguousarray(centers, dtype=float)
    radii2 = np.ascontiguousarray((np.asarray(radii, dtype=float) ** 2) * (1.0 - DISK_EPS))
    mats = np.ascontiguousarray(mats, dtype=float)
    out_m = np.empty((z.shape[0], 2, 2))
    out_steps = np.empty(z.shape[0], dtype=np.int64)
    if HAVE_NUMBA:
        _reduce_nb(x, y, centers, radii2, mats, int(cap), out_m, out_steps)
    else:
        _reduce_np(x, y, centers, radii2, mats, int(cap), out_m, out_steps)
    return out_m, out_steps


# ---------------------------------------------------------------------------
# nearest neighbour in the bundle metric


class CandidateIndex:
    """Candidate tangent vectors (base at time 0 and time 1) binned in bands of
    ``log Im z0`` and sorted by ``Re z0`` inside each band."""

    def __init__(self, c0, c1, band_width=0.25):
        c0 = np.asarray(c0, dtype=complex).ravel()
        c1 = np.asarray(c1, dtype=complex).ravel()
        if c0.size == 0:
            raise ValueError("empty candidate set")
        self.band_width = float(band_width)
        logy = np.log(c0.imag)
        band = np.floor(logy / self.band_width).astype(np.int64)
        self.band_min = int(band.min())
        band -= self.band_min
        order = np.lexsort((c0.real, band))
        self.order = order
        self.band = band[order]
        nb = int(self.band.max()) + 1
        self.band_ptr = np.searchsorted(self.band, np.arange(nb + 1)).astype(np.int64)
        self.x0 = np.ascontiguousarray(c0.real[order])
        self.y0 = np.ascontiguousarray(c0.imag[order])
        self.x1 = np.ascontiguousarray(c1.real[order])
        self.y1 = np.ascontiguousarray(c1.imag[order])
        ymax = np.zeros(nb)
        np.maximum.at(ymax, self.band, self.y0)
        self.band_ymax = ymax
        ymin = np.full(nb, np.inf)
        np.minimum.at(ymin, self.band, self.y0)
        # empty bands get an empty log-height interval placed at their slot
        slot = (np.arange(nb) + self.band_min) * self.band_width
        self.band_logylo = np.where(np.isfinite(ymin), np.log(np.where(np.isfinite(ymin), ymin, 1.0)), slot)
        self.band_logyhi = np.where(ymax > 0, np.log(np.where(ymax > 0, ymax, 1.0)), slot)

    def __len__(self):
        return self.x0.shape[0]


@njit
def _lower(arr, lo, hi, v):
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit
def _scan(qx0, qy0, qx1, qy1, x0, y0, x1, y1, lo, hi, best, arg):
    for j in range(lo, hi):
        dx = qx0 - x0[j]
        dy = qy0 - y0[j]
        q0 = (dx * dx + dy * dy) / (qy0 * y0[j])
        if q0 >= best:
            continue
        dx = qx1 - x1[j]
        dy = qy1 - y1[j]
        q1 = (dx * dx + dy * dy) / (qy1 * y1[j])
        q = q0 if q0 > q1 else q1
        if q < best:
            best = q
            arg = j
    return best, arg


@njit(parallel=True)
def _nearest_nb(qx0, qy0, qx1, qy1, chain_ptr, x0, y0, x1, y1, band_ptr, band_ymax,
                band_logylo, band_logyhi, band_min, width, qcap, out_q, out_arg):
    nchain = chain_ptr.shape[0] - 1
    nb = band_ptr.shape[0] - 1
    for ch in prange(nchain):
        hint = -1
        for i in range(chain_ptr[ch], chain_ptr[ch + 1]):
            a0 = qx0[i]
            b0 = qy0[i]
            a1 = qx1[i]
            b1 = qy1[i]
            best = qcap
            arg = -1
            if hint >= 0:
                best, arg = _scan(a0, b0, a1, b1, x0, y0, x1, y1, hint, hint + 1, best, arg)
            own = int(math.floor(math.log(b0) / width)) - band_min
            if own >= 0 and own < nb:
                lo = band_ptr[own]
                hi = band_ptr[own + 1]
                p = _lower(x0, lo, hi, a0)
                s = p - 4 if p - 4 > lo else lo
                e = p + 4 if p + 4 < hi else hi
                best, arg = _scan(a0, b0, a1, b1, x0, y0, x1, y1, s, e, best, arg)
            lb0 = math.log(b0)
            # bands above the query's own band, then below; stop a direction
            # once its bands are farther than the current best in log-height
            for direction in range(2):
                if direction == 0:
                    b = own if own > 0 else 0
                else:
                    b = own - 1 if own - 1 < nb - 1 else nb - 1
                while 0 <= b < nb:
                    lo = band_ptr[b]
                    hi = band_ptr[b + 1]
                    if best < np.inf:
                        # d0 >= |log(y/y')| and (x - x')^2 <= Q y y'
                        beta = 2.0 * math.asinh(math.sqrt(best) * 0.5) * (1.0 + 1e-12) + 1e-12
                        if direction == 0 and band_logylo[b] - lb0 > beta:
                            break
                        if direction == 1 and lb0 - band_logyhi[b] > beta:
                            break
                    if lo < hi:
                        if best < np.inf:
                            half = math.sqrt(best * b0 * band_ymax[b]) * (1.0 + 1e-12)
                            s = _lower(x0, lo, hi, a0 - half)
                            e = _lower(x0, s, hi, a0 + half)
                            while e < hi and x0[e] <= a0 + half:
                                e += 1
                        else:
                            s = lo
                            e = hi
                        best, arg = _scan(a0, b0, a1, b1, x0, y0, x1, y1, s, e, best, arg)
                    b = b + 1 if direction == 0 else b - 1
            out_q[i] = best if arg >= 0 else np.inf
            out_arg[i] = arg
            hint = arg


def _nearest_np(qx0, qy0, qx1, qy1, x0, y0, x1, y1, out_q, out_arg, chunk_elems=4_000_000):
    m = x0.shape[0]
    step = max(1, chunk_elems // max(m, 1))
    for s in range(0, qx0.shape[0], step):
        e = min(s + step, qx0.shape[0])
        dx = qx0[s:e, None] - x0[None, :]
        dy = qy0[s:e, None] - y0[None, :]
        q0 = (dx * dx + dy * dy) / (qy0[s:e, None] * y0[None, :])
        dx = qx1[s:e, None] - x1[None, :]
        dy = qy1[s:e, None] - y1[None, :]
        q1 = (dx * dx + dy * dy) / (qy1[s:e, None] * y1[None, :])
        q = np.maximum(q0, q1)
        arg = np.argmin(q, axis=1)
        out_arg[s:e] = arg
        out_q[s:e] = q[np.arange(e - s), arg]


def nearest_q(q0, q1, index, chain_ptr=None, force_numpy=False, qcap=np.inf):
    """Minimum over candidates of max(Q(q0, c0), Q(q1, c1)) for every query.

    With a finite ``qcap`` only values below it are resolved; queries with
    nothing closer get q = inf and argmin -1 (cheap threshold tests).

    ``chain_ptr`` groups consecutive queries that are flow-neighbours (the
    previous answer seeds the next search).  Returns (qmin, argmin) with
    argmin indexing the caller's original candidate order.
    """
    q0 = np.asarray(q0, dtype=complex).ravel()
    q1 = np.asarray(q1, dtype=complex).ravel()
    n = q0.shape[0]
    out_q = np.empty(n)
    out_arg = np.empty(n, dtype=np.int64)
    if n == 0:
        return out_q, out_arg
    args = [np.ascontiguousarray(v) for v in (q0.real, q0.imag, q1.real, q1.imag)]
    if HAVE_NUMBA and not force_numpy:
        if chain_ptr is None:
            chain_ptr = np.array([0, n], dtype=np.int64)
        _nearest_nb(*args, np.asarray(chain_ptr, dtype=np.int64), index.x0, index.y0,
                    index.x1, index.y1, index.band_ptr, index.band_ymax,
                    index.band_logylo, index.band_logyhi, index.band_min, index.band_width,
                    float(qcap), out_q, out_arg)
    else:
        _nearest_np(*args, index.x0, index.y0, index.x1, index.y1, out_q, out_arg)
        miss = out_q >= qcap
        out_q[miss] = np.inf
        out_arg[miss] = -1
    return out_q, np.where(out_arg >= 0, index.order[np.maximum(out_arg, 0)], -1)


def brute_nearest_q(q0, q1, c0, c1):
    """Reference implementation (test oracle): plain double loop in numpy."""
    q0 = np.asarray(q0, dtype=complex).ravel()
    q1 = np.asarray(q1, dtype=complex).ravel()
    c0 = np.asarray(c0, dtype=complex).ravel()
    c1 = np.asarray(c1, dtype=complex).ravel()
    a = np.abs(q0[:, None] - c0[None, :]) ** 2 / (q0.imag[:, None] * c0.imag[None, :])
    b = np.abs(q1[:, None] - c1[None, :]) ** 2 / (q1.imag[:, None] * c1.imag[None, :])
    return np.maximum(a, b).min(axis=1)
