"""
Brute-force sums over subsets of times, used as oracles for the
recursions. Only feasible for a dozen or so times.
"""
from itertools import combinations

import numpy as np

from pinsim.coarse_grain import enumerate_no_triple, is_no_triple


def subsets(times, nonempty=False):
    times = list(times)
    for r in range(1 if nonempty else 0, len(times) + 1):
        yield from combinations(times, r)


def chain_weight(pts, weight, kernel):
    """prod_n weight(n) * prod_j kernel(pts[j+1] - pts[j])."""
    out = np.prod([weight[n] for n in pts])
    return out * np.prod([kernel[b - a] for a, b in zip(pts[:-1], pts[1:])])


def brute_pin_partition(zeta, M, K, kernel):
    w = 1.0 + np.asarray(zeta)
    total = 0.0
    for A in subsets(range(M + 1, K)):
        pts = (M,) + A + ((K,) if K > M else ())
        total += chain_weight(pts, w, kernel)
    return total


def brute_chaos(zeta, N, p0):
    total = 1.0
    for A in subsets(range(1, N + 1), nonempty=True):
        total += chain_weight((0,) + A, np.r_[1.0, zeta[1:]], p0)
    return total


def brute_polymer(zeta, kernels, keep=None):
    """q + N^{-1/2} sum_A a(n_1) prod zeta prod p0(gaps) b(N - n_k)."""
    N = kernels.N
    total = kernels.q
    for A in subsets(range(1, N), nonempty=True):
        if keep is not None and not keep(A):
            continue
        total += kernels.a[A[0]] * chain_weight(A, zeta, kernels.p0) * \
            kernels.b[N - A[-1]] / np.sqrt(N)
    return total


def brute_polymer_second(sigma2, kernels, keep=None):
    N = kernels.N
    total = kernels.q ** 2
    w = np.full(N + 1, sigma2)
    for A in subsets(range(1, N), nonempty=True):
        if keep is not None and not keep(A):
            continue
        total += kernels.a[A[0]] ** 2 * chain_weight(A, w, kernels.p0 ** 2) * \
            kernels.b[N - A[-1]] ** 2 / N
    return total


def interval_of(grid, n):
    return int(np.searchsorted(grid.edges, n, side="left"))


def no_triple_filter(grid, r_max):
    def keep(A):
        visited = sorted({interval_of(grid, n) for n in A})
        return len(visited) <= r_max and is_no_triple(visited, grid.K, grid.lo, grid.hi)
    return keep


def brute_theta(weight, kernel, grid, block, scale):
    t1 = grid.times(block.i)
    if block.width == 1:
        return scale * sum(chain_weight(A, weight, kernel)
                           for A in subsets(t1, nonempty=True))
    t2 = grid.times(block.i2)
    total = 0.0
    for A1 in subsets(t1, nonempty=True):
        for A2 in subsets(t2, nonempty=True):
            total += chain_weight(A1 + A2, weight, kernel)
    return scale * total


def brute_cg_sum(theta, grid, start, end, r_max):
    g0 = 1.0 / np.sqrt(2.0 * np.pi * np.maximum(np.arange(grid.M + 1), 1))
    total = 0.0
    for blocks in enumerate_no_triple(grid, r_max, paired=True):
        term = start[blocks[0].i] * end[blocks[-1].i2]
        term *= np.prod([theta[b] for b in blocks])
        term *= np.prod([g0[b.i - a.i2] for a, b in zip(blocks[:-1], blocks[1:])])
        total += term
    return total
