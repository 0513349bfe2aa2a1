"""Compiled twins of the loops in ``_numpy``; same signatures and layout."""

import math

import numpy as np
from numba import njit

_BIG = 2.0**512
_SMALL = 2.0**-512

_opts = dict(cache=True, nogil=True)


@njit(**_opts)
def _is_sorted(lo):
    for i in range(1, lo.shape[0]):
        if lo[i] < lo[i - 1]:
            return False
    return True


@njit(**_opts)
def _row_range(lo, width, first, last, mono):
    """Rows that can be nonzero when the input lives on ``[first, last]``."""
    rows = lo.shape[0]
    if not mono:
        return 0, rows
    a, b = 0, rows
    while a < b:  # first row with lo >= first - width + 1
        mid = (a + b) // 2
        if lo[mid] < first - width + 1:
            a = mid + 1
        else:
            b = mid
    r0 = a
    a, b = r0, rows
    while a < b:  # first row with lo > last
        mid = (a + b) // 2
        if lo[mid] <= last:
            a = mid + 1
        else:
            b = mid
    return r0, a


@njit(**_opts)
def _apply_rows(lo, band, x, agg, y, r0, r1):
    n = x.shape[0]
    width = band.shape[1]
    for i in range(r0, r1):
        acc = 0.0
        base = lo[i]
        for w in range(width):
            j = base + w
            if j >= n:
                break
            p = band[i, w] * x[j]
            if agg == 0:
                if p > acc:
                    acc = p
            else:
                acc += p
        y[i] = acc


@njit(**_opts)
def _support(v, r0, r1):
    first = -1
    last = -1
    for i in range(r0, r1):
        if v[i] != 0.0:
            if first < 0:
                first = i
            last = i
    return first, last


@njit(**_opts)
def _range_norm(v, r0, r1, normkind):
    if normkind == 0:
        m = 0.0
        for i in range(r0, r1):
            a = abs(v[i])
            if a > m:
                m = a
        return m
    s = 0.0
    for i in range(r0, r1):
        s += v[i] * v[i]
    return math.sqrt(s)


@njit(**_opts)
def band_apply(lo, band, x, agg):
    y = np.empty(lo.shape[0])
    _apply_rows(lo, band, x, agg, y, 0, lo.shape[0])
    return y


@njit(**_opts)
def vec_norm(v, normkind):
    if normkind == 0:
        m = 0.0
        for i in range(v.shape[0]):
            a = abs(v[i])
            if a > m:
                m = a
        return m
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i] * v[i]
    return math.sqrt(s)


@njit(**_opts)
def power_norms(lo, band, H, agg):
    mant = np.zeros(H + 1)
    exp2 = np.zeros(H + 1, dtype=np.int64)
    rows = lo.shape[0]
    v = np.ones(rows)
    w = np.empty(rows)
    e = 0
    mant[0] = 1.0
    for n in range(1, H + 1):
        _apply_rows(lo, band, v, agg, w, 0, rows)
        top = 0.0
        for i in range(rows):
            if w[i] > top:
                top = w[i]
        if top == 0.0:
            break
        if top > _BIG or top < _SMALL:
            k = math.frexp(top)[1]
            for i in range(rows):
                w[i] = math.ldexp(w[i], -k)
            e += k
            top = math.ldexp(top, -k)
        mant[n] = top
        exp2[n] = e
        v, w = w, v
    return mant, exp2


@njit(**_opts)
def _scaled_l2(v, top):
    # overflow-safe Euclidean norm, used once the running sum has overflowed
    if top == 0.0:
        return 0.0
    s = 0.0
    for i in range(v.shape[0]):
        q = v[i] / top
        s += q * q
    return top * math.sqrt(s)


@njit(**_opts)
def orbit_lognorms(lo, band, x, H, agg, normkind):
    out = np.full(H + 1, -np.inf)
    n = x.shape[0]
    nrm = vec_norm(x, normkind)
    if nrm == 0.0:
        return out
    mono = _is_sorted(lo)
    width = band.shape[1]
    v = x / nrm
    w = np.zeros(n)
    first, last = _support(v, 0, n)
    v0, v1 = 0, n  # written range of v
    w0, w1 = 0, 0
    acc = math.log(nrm)
    out[0] = acc
    for k in range(1, H + 1):
        r0, r1 = _row_range(lo, width, first, last, mono)
        for i in range(w0, w1):
            w[i] = 0.0
        _apply_rows(lo, band, v, agg, w, r0, r1)
        w0, w1 = r0, r1
        first, last = _support(w, r0, r1)
        if first < 0:
            break
        nrm = _range_norm(w, first, last + 1, normkind)
        for i in range(first, last + 1):
            w[i] = w[i] / nrm
        acc += math.log(nrm)
        out[k] = acc
        v, w = w, v
        v0, v1, w0, w1 = w0, w1, v0, v1
    return out


@njit(**_opts)
def envelope(lo, band, x, logc, agg, normkind):
    R = logc.shape[0]
    n = x.shape[0]
    out = np.zeros(n)
    partial = np.zeros(R)
    nrm = vec_norm(x, normkind)
    if nrm == 0.0:
        return out, partial
    mono = _is_sorted(lo)
    width = band.shape[1]
    v = x / nrm
    w = np.zeros(n)
    first, last = _support(v, 0, n)
    v0, v1 = 0, n
    w0, w1 = 0, 0
    top = 0.0  # running sup norm of out (out only grows)
    sq = 0.0  # running sum of squares of out
    alive = True
    for k in range(R):
        if k > 0 and alive:
            r0, r1 = _row_range(lo, width, first, last, mono)
            for i in range(w0, w1):
                w[i] = 0.0
            _apply_rows(lo, band, v, agg, w, r0, r1)
            w0, w1 = r0, r1
            first, last = _support(w, r0, r1)
            if first < 0:
                alive = False
            else:
                nrm = _range_norm(w, first, last + 1, normkind)
                for i in range(first, last + 1):
                    w[i] = w[i] / nrm
                v, w = w, v
                v0, v1, w0, w1 = w0, w1, v0, v1
        if alive and logc[k] > -np.inf:
            c = math.exp(logc[k])
            for i in range(first, last + 1):
                old = out[i]
                t = c * v[i]
                if agg == 0:
                    new = t if t > old else old
                else:
                    new = old + t
                out[i] = new
                if new > top:
                    top = new
                if normkind == 1:
                    sq += new * new - old * old
            if normkind == 0:
                partial[k] = top
            elif math.isfinite(sq):
                partial[k] = math.sqrt(max(sq, 0.0))
            else:
                partial[k] = _scaled_l2(out, top)
        elif k > 0:
            partial[k] = partial[k - 1]
    if normkind == 1 and R > 0 and math.isfinite(sq):
        # replace the running sum with an exact final value
        partial[R - 1] = vec_norm(out, 1)
    return out, partial
