"""Independent brute-force references used by the tests."""

import itertools
import math

import numpy as np


def simple_cycle_max_mean(A):
    """Max geometric mean over all simple cycles, by enumerating node sequences."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    best = 0.0
    for length in range(1, n + 1):
        for nodes in itertools.permutations(range(n), length):
            if nodes[0] != min(nodes):
                continue  # each cycle once, rooted at its smallest node
            prod = 1.0
            for a, b in zip(nodes, nodes[1:] + nodes[:1]):
                prod *= A[b, a]  # edge a -> b carries a(b, a)
            if prod > 0:
                best = max(best, prod ** (1.0 / length))
    return best


def maxtimes_power(A, n):
    """n-fold max-times power by explicit path enumeration (small n only)."""
    A = np.asarray(A, dtype=float)
    size = A.shape[0]
    out = np.zeros_like(A)
    for i in range(size):
        for j in range(size):
            best = 0.0
            for mid in itertools.product(range(size), repeat=n - 1):
                path = (i,) + mid + (j,)
                prod = 1.0
                for a, b in zip(path, path[1:]):
                    prod *= A[a, b]
                best = max(best, prod)
            out[i, j] = best
    return out


def maxtimes_apply(A, x):
    A = np.asarray(A, dtype=float)
    return np.array([max(A[i, j] * x[j] for j in range(len(x))) for i in range(A.shape[0])])


def orbit_norm_radius(A, x, H):
    """max over n in [H/2, H] of ||A^n x||^(1/n), with plain loops."""
    v = np.asarray(x, dtype=float)
    vals = []
    for n in range(1, H + 1):
        v = maxtimes_apply(A, v)
        top = v.max()
        if top == 0:
            return 0.0
        vals.append((n, top))
    return max(t ** (1.0 / n) for n, t in vals if n >= math.ceil(H / 2))


def random_maxtimes(rng, nmax=6, density=0.6, lo=0.5, hi=2.0):
    n = int(rng.integers(1, nmax + 1))
    return rng.uniform(lo, hi, (n, n)) * (rng.random((n, n)) < density)


def is_irreducible(A):
    M = np.asarray(A) > 0
    n = M.shape[0]
    R = M | np.eye(n, dtype=bool)
    for _ in range(n):
        R = R | ((R.astype(int) @ R.astype(int)) > 0)
    return bool(R.all())
