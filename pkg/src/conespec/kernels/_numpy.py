"""Pure-numpy implementations of the hot loops.

Each function mirrors the compiled twin in ``_numba`` exactly: same
arguments, same return layout, same floating-point operation order per
step wherever numpy permits.

Banded operator layout used throughout: row ``i`` of the operator reads
``x[lo[i] + w]`` for ``w < band.shape[1]`` with weight ``band[i, w]``;
reads past the end of ``x`` contribute nothing. ``agg`` is 0 for max,
1 for sum. ``normkind`` is 0 for sup, 1 for Euclidean.
"""

import numpy as np

# power-of-two rescaling thresholds; rescaling by 2**k is exact
_BIG = 2.0**512
_SMALL = 2.0**-512


def _gather(lo, band, x):
    n = x.shape[0]
    width = band.shape[1]
    idx = lo[:, None] + np.arange(width)[None, :]
    valid = idx < n
    xs = np.where(valid, x[np.minimum(idx, n - 1)], 0.0)
    return band * xs


def band_apply(lo, band, x, agg):
    prod = _gather(lo, band, x)
    if agg == 0:
        return prod.max(axis=1) if prod.shape[1] else np.zeros(lo.shape[0])
    return prod.sum(axis=1)


def vec_norm(v, normkind):
    if v.shape[0] == 0:
        return 0.0
    if normkind == 0:
        return float(np.max(np.abs(v)))
    return float(np.sqrt(np.sum(v * v)))


def power_norms(lo, band, H, agg):
    """Sup norms of ``T^n 1`` for n = 0..H as mantissa and power-of-two exponent.

    For sup-preserving or positive additive operators with the sup norm
    this equals the cone operator norm of ``T^n``.
    """
    mant = np.zeros(H + 1)
    exp2 = np.zeros(H + 1, dtype=np.int64)
    v = np.ones(lo.shape[0])
    e = 0
    mant[0] = 1.0
    for n in range(1, H + 1):
        v = band_apply(lo, band, v, agg)
        top = float(v.max()) if v.shape[0] else 0.0
        if top == 0.0:
            break
        if top > _BIG or top < _SMALL:
            k = int(np.frexp(top)[1])
            v = np.ldexp(v, -k)
            e += k
            top = float(v.max())
        mant[n] = top
        exp2[n] = e
    return mant, exp2


def _row_range(lo, width, first, last, mono):
    """Rows that can be nonzero when the input lives on ``[first, last]``."""
    if not mono:
        return 0, lo.shape[0]
    r0 = int(np.searchsorted(lo, first - width + 1, side="left"))
    r1 = int(np.searchsorted(lo, last, side="right"))
    return r0, max(r0, r1)


def _step(lo, band, v, first, last, agg, mono):
    """One application restricted to the live rows; returns the new vector and its support."""
    r0, r1 = _row_range(lo, band.shape[1], first, last, mono)
    w = np.zeros(v.shape[0])
    if r1 > r0:
        w[r0:r1] = band_apply(lo[r0:r1], band[r0:r1], v, agg)
    nz = np.flatnonzero(w[r0:r1])
    if nz.size == 0:
        return w, -1, -1
    return w, r0 + int(nz[0]), r0 + int(nz[-1])


def _scaled_l2(v, top):
    # overflow-safe Euclidean norm, used once the running sum has overflowed
    return top * float(np.sqrt(np.sum((v / top) ** 2))) if top > 0 else 0.0


def _is_sorted(lo):
    return bool(np.all(lo[1:] >= lo[:-1]))


def orbit_lognorms(lo, band, x, H, agg, normkind):
    """``log ||T^k x||`` for k = 0..H (``-inf`` once the orbit vanishes)."""
    out = np.full(H + 1, -np.inf)
    nrm = vec_norm(x, normkind)
    if nrm == 0.0:
        return out
    mono = _is_sorted(lo)
    v = x / nrm
    nz = np.flatnonzero(v)
    first, last = int(nz[0]), int(nz[-1])
    acc = np.log(nrm)
    out[0] = acc
    for k in range(1, H + 1):
        v, first, last = _step(lo, band, v, first, last, agg, mono)
        if first < 0:
            break
        nrm = vec_norm(v[first : last + 1], normkind)
        v[first : last + 1] /= nrm
        acc += np.log(nrm)
        out[k] = acc
    return out


def envelope(lo, band, x, logc, agg, normkind):
    """Aggregate ``c_k * T^k x / ||T^k x||`` over k, with ``c_k = exp(logc[k])``.

    Returns the aggregate and the norm of every partial aggregate. The
    partial norms are maintained incrementally (the aggregate only grows);
    the last Euclidean one is recomputed exactly.
    """
    R = logc.shape[0]
    out = np.zeros(x.shape[0])
    partial = np.zeros(R)
    nrm = vec_norm(x, normkind)
    if nrm == 0.0:
        return out, partial
    mono = _is_sorted(lo)
    v = x / nrm
    nz = np.flatnonzero(v)
    first, last = int(nz[0]), int(nz[-1])
    top = 0.0
    sq = 0.0
    alive = True
    for k in range(R):
        if k > 0 and alive:
            v, first, last = _step(lo, band, v, first, last, agg, mono)
            if first < 0:
                alive = False
            else:
                v[first : last + 1] /= vec_norm(v[first : last + 1], normkind)
        if alive and logc[k] > -np.inf:
            sl = slice(first, last + 1)
            old = out[sl].copy()
            term = np.exp(logc[k]) * v[sl]
            new = np.maximum(old, term) if agg == 0 else old + term
            out[sl] = new
            top = max(top, float(new.max()))
            if normkind == 0:
                partial[k] = top
            else:
                with np.errstate(over="ignore", invalid="ignore"):
                    sq += float(np.sum(new * new - old * old))
                partial[k] = np.sqrt(max(sq, 0.0)) if np.isfinite(sq) else _scaled_l2(out, top)
        elif k > 0:
            partial[k] = partial[k - 1]
    if normkind == 1 and R > 0 and np.isfinite(sq):
        partial[R - 1] = vec_norm(out, 1)
    return out, partial
