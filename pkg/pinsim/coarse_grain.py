"""
Mesoscopic time blocks, coarse-grained disorder and the coarse-grained
partition functions.
"""
from dataclasses import dataclass, field

import numpy as np
from more_itertools import windowed
from scipy.stats import ks_2samp

from pinsim.continuum_kernels import discretize, heat_kernel, pairings
from pinsim.disorder import parse_disorder_law, solve_critical_beta, zeta_fields
from pinsim.ensemble import MCEstimate, run_ensemble
from pinsim.lib.renewal import renewal_solve
from pinsim.partition import exact_second_moment, polymer_measure_integral
from pinsim.utils import mylog
from pinsim.walks import LatticeWeights


def default_K(eps):
    r""":math:`\min(\lceil(\log 1/\epsilon)^6\rceil, \lfloor 1/(4\epsilon)\rfloor)`."""
    L = np.log(1.0 / eps)
    return int(min(np.ceil(L ** 6), np.floor(1.0 / (4.0 * eps))))


def default_r_max(eps):
    return max(int(np.floor(np.log(1.0 / eps) ** 2)), 1)


@dataclass(frozen=True)
class TimeBlock:
    """
    A pair of mesoscopic indices i <= i2. Its width is i2 - i + 1 and the
    distance to a later block j is ``j.i - self.i2``.
    """
    i: int
    i2: int

    def __post_init__(self):
        if self.i2 < self.i:
            raise ValueError(f"A time block needs i <= i', got ({self.i}, {self.i2})!")

    @property
    def width(self):
        return self.i2 - self.i + 1

    def dist(self, other):
        return other.i - self.i2

    def precedes(self, other):
        return self.i2 < other.i

    def indices(self):
        return (self.i,) if self.i == self.i2 else (self.i, self.i2)

    def __str__(self):
        return f"({self.i},{self.i2})"


class MesoGrid:
    r"""
    The mesoscopic intervals :math:`T(i) = (\lfloor(i-1)\epsilon N\rfloor,
    \lfloor i\epsilon N\rfloor]`, i = 1..M with :math:`M = \lfloor1/\epsilon\rfloor`.

    Parameters
    ----------
    N : integer
    eps : float
    K : integer, optional
        The threshold separating short and long gaps. Defaults to
        :func:`default_K`.
    r_max : integer, optional
        The largest number of visited intervals (or blocks) summed over.
    """
    def __init__(self, N, eps, K=None, r_max=None):
        self.N = int(N)
        self.eps = float(eps)
        self.M = int(np.floor(1.0 / eps + 1.0e-12))
        if self.eps * self.N < 1.0:
            raise ValueError(f"eps N = {self.eps * self.N} leaves empty intervals!")
        asymptotic = np.log(1.0 / eps) ** 6
        if K is None:
            K = default_K(eps)
            if K < asymptotic:
                mylog.warning(f"Using K_eps = {K} instead of (log 1/eps)^6 = "
                              f"{asymptotic:.1f}, which empties the index set.")
        self.K = int(K)
        if self.K < 1 or self.K >= 1.0 / (2.0 * eps):
            raise ValueError(f"K_eps = {self.K} must satisfy 1 <= K_eps < "
                             f"1/(2 eps) = {1.0 / (2.0 * eps)}; the no-triple "
                             f"index set is empty otherwise.")
        self.r_max = default_r_max(eps) if r_max is None else int(r_max)
        self.edges = np.floor(np.arange(self.M + 1) * self.eps * self.N + 1.0e-9).astype("int64")

    @property
    def lo(self):
        return self.K

    @property
    def hi(self):
        return self.M - self.K

    @property
    def block_length(self):
        return self.eps * self.N

    def times(self, i):
        """The times in T(i)."""
        return np.arange(self.edges[i - 1] + 1, self.edges[i] + 1)

    def blocks(self):
        """All blocks inside [K, M - K] with width at most K."""
        return [TimeBlock(i, j) for i in range(self.lo, self.hi + 1)
                for j in range(i, min(i + self.K, self.hi + 1))]

    def as_dict(self):
        return {"N": self.N, "eps": self.eps, "K": self.K, "r_max": self.r_max,
                "M": self.M, "K_asymptotic": float(np.log(1.0 / self.eps) ** 6)}

    def __repr__(self):
        return (f"MesoGrid(N={self.N}, eps={self.eps}, K={self.K}, "
                f"r_max={self.r_max})")


def is_no_triple(indices, K, lo, hi):
    """Whether *indices* is increasing inside [lo, hi] with no two
    consecutive gaps both shorter than K."""
    indices = tuple(indices)
    if not indices or indices[0] < lo or indices[-1] > hi:
        return False
    if any(b <= a for a, b in zip(indices[:-1], indices[1:])):
        return False
    gaps = [b - a for a, b in zip(indices[:-1], indices[1:])]
    return not any(g1 < K and g2 < K for g1, g2 in windowed(gaps, 2)
                   if g2 is not None)


def pair_indices(indices, K):
    """Bind indices closer than K into blocks."""
    blocks = []
    j = 0
    while j < len(indices):
        if j + 1 < len(indices) and indices[j + 1] - indices[j] < K:
            blocks.append(TimeBlock(indices[j], indices[j + 1]))
            j += 2
        else:
            blocks.append(TimeBlock(indices[j], indices[j]))
            j += 1
    return tuple(blocks)


def expand_blocks(blocks):
    return tuple(i for b in blocks for i in b.indices())


def enumerate_no_triple(grid, r_max=None, paired=False):
    r"""
    Lazily enumerate the no-triple index tuples of *grid*.

    Unpaired tuples satisfy :math:`K\le i_1<\dots<i_k\le M-K` with
    k <= *r_max*, and a gap shorter than K is always followed by one of
    at least K. The paired form yields tuples of :class:`TimeBlock` of
    width at most K and mutual distance at least K, with at most
    *r_max* blocks.
    """
    r_max = grid.r_max if r_max is None else r_max
    K, lo, hi = grid.K, grid.lo, grid.hi

    def unpaired(prefix, short):
        if prefix:
            yield prefix
        if len(prefix) == r_max:
            return
        start = lo if not prefix else prefix[-1] + 1
        for nxt in range(start, hi + 1):
            gap_short = bool(prefix) and nxt - prefix[-1] < K
            if short and gap_short:
                continue
            yield from unpaired(prefix + (nxt,), gap_short)

    def blocks(prefix):
        if prefix:
            yield prefix
        if len(prefix) == r_max:
            return
        start = lo if not prefix else prefix[-1].i2 + K
        for i in range(start, hi + 1):
            for j in range(i, min(i + K, hi + 1)):
                yield from blocks(prefix + (TimeBlock(i, j),))

    return blocks(()) if paired else unpaired((), False)


@dataclass
class ThetaSample:
    block: TimeBlock
    value: float
    N: int
    eps: float
    seed: int = None
    algorithm: str = "prefix-recursion"


def _interval_chains(w, times, seed, kernel):
    # B(n) = w_n (seed(n) + sum_{m<n in T} B(m) k(n-m)), n in T
    return renewal_solve(w[..., times], seed, kernel[:times.size + 1])


def _connect(G, times_from, times_to, kernel):
    # sum_f G(f) k(n - f) for n in times_to
    if times_from.size == 0:
        return 0.0
    mat = kernel[times_to[:, None] - times_from[None, :]]
    return G[..., times_from] @ mat.T


def _theta_from_weights(w, grid, block, kernel, scale):
    t1 = grid.times(block.i)
    B1 = _interval_chains(w, t1, np.ones(t1.size), kernel)
    if block.width == 1:
        return B1.sum(axis=-1) * scale
    t2 = grid.times(block.i2)
    full = np.zeros(w.shape[:-1] + (grid.N + 1,))
    full[..., t1] = B1
    seed = _connect(full, t1, t2, kernel)
    B2 = _interval_chains(w, t2, seed, kernel)
    return B2.sum(axis=-1) * scale


def theta(field, grid, block, table):
    r"""
    The coarse-grained disorder of one block,

    .. math::

        \Theta(\vec i) = \frac{1}{\sqrt{\epsilon N}}\sum_{d\le f\in T(i)}
        \sum_{d'\le f'\in T(i')}X_{d,f}\,p_{d'-f}(0)\,X_{d',f'},

    or :math:`(\epsilon N)^{-1/2}\sum_{d\le f\in T(i)}X_{d,f}` for width 1,
    with :math:`X_{d,f} = \zeta_d\tilde Z_{d,f}(0,0)\zeta_f`. The sums
    over chains inside an interval are prefix recursions seeded with 1.
    """
    table.require(grid.N)
    w = field.window(0, grid.N + 1)
    value = _theta_from_weights(w, grid, block, table.p0,
                                1.0 / np.sqrt(grid.block_length))
    return ThetaSample(block, value, grid.N, grid.eps, field.seed)


def theta_values(field, grid, table, blocks=None):
    """Theta for every block of the grid, keyed by block."""
    blocks = grid.blocks() if blocks is None else blocks
    return {b: theta(field, grid, b, table).value for b in blocks}


def theta_variance(grid, block, sigma2, table):
    r"""
    :math:`E[\Theta(\vec i)^2]`, the same recursions with :math:`\zeta`
    replaced by :math:`\sigma^2` and :math:`p_n(0)` by :math:`u(n)`.
    """
    w = np.full(grid.N + 1, sigma2)
    return float(_theta_from_weights(w, grid, block, table.u, 1.0 / grid.block_length))


def _no_triple_sum(grid, w, a, b, kernel, r_max=None):
    r"""
    :math:`\sum a(d_1)\,X_{d_1,f_1}\prod k(d_j-f_{j-1})X_{d_j,f_j}\,b(N-f_k)`
    over the no-triple tuples of visited intervals, with X built from the
    weights w and the kernel k.

    The sum runs over (interval, number of intervals, whether the last gap
    was short); exits are accumulated on the time axis per level.
    """
    r_max = grid.r_max if r_max is None else r_max
    N, K = grid.N, grid.K
    batch = w.shape[:-1]
    G_all = [np.zeros(batch + (N + 1,)) for _ in range(r_max + 1)]
    G_long = [np.zeros(batch + (N + 1,)) for _ in range(r_max + 1)]
    total = np.zeros(batch)
    for i in range(grid.lo, grid.hi + 1):
        t = grid.times(i)
        far = np.arange(1, grid.edges[i - K] + 1)
        near = np.arange(grid.edges[i - K] + 1, grid.edges[i - 1] + 1)
        for k in range(1, r_max + 1):
            for short in (False, True):
                if k == 1:
                    if short:
                        continue
                    seed = np.broadcast_to(a[t], batch + t.shape)
                elif short:
                    seed = _connect(G_long[k - 1], near, t, kernel)
                else:
                    seed = _connect(G_all[k - 1], far, t, kernel)
                if np.isscalar(seed) or not np.any(seed):
                    continue
                E = _interval_chains(w, t, seed, kernel)
                total = total + E @ b[N - t]
                G_all[k][..., t] += E
                if not short:
                    G_long[k][..., t] += E
    return total


def z_no_triple(field, grid, kernels, r_max=None):
    r"""
    The polymer integral restricted to the no-triple index set,

    .. math::

        q^N_{0,N}(\varphi,\psi) + \frac{1}{\sqrt N}\sum_{k\le r_{max}}
        \sum_{(i_1..i_k)}\sum_{d_j\le f_j\in T(i_j)}
        q^N_{0,d_1}(\varphi,0)X_{d_1,f_1}\prod_{j\ge2}p_{d_j-f_{j-1}}(0)X_{d_j,f_j}
        \,q^N_{f_k,N}(0,\psi).
    """
    N = kernels.N
    if grid.N != N:
        raise ValueError(f"The grid is for N = {grid.N}, the kernels for N = {N}!")
    w = field.window(0, N + 1)
    return kernels.q + _no_triple_sum(grid, w, kernels.a, kernels.b,
                                      kernels.p0, r_max) / np.sqrt(N)


def z_no_triple_second_moment(grid, kernels, sigma2, r_max=None):
    """The exact second moment of :func:`z_no_triple`."""
    N = kernels.N
    w = np.full(N + 1, sigma2)
    return kernels.q ** 2 + _no_triple_sum(grid, w, kernels.a ** 2, kernels.b ** 2,
                                           kernels.p0 ** 2, r_max) / N


def no_triple_l2_distance(grid, kernels, sigma2, ubar, r_max=None):
    r"""
    :math:`\|\tilde Z - Z^{(no\ triple)}\|_2`. The restricted sum is an
    orthogonal projection of the chaos expansion, so the squared
    distance is the difference of the second moments.
    """
    full = exact_second_moment(kernels, ubar)
    part = z_no_triple_second_moment(grid, kernels, sigma2, r_max)
    return float(np.sqrt(max(full - part, 0.0)))


def eps_test_weights(phi, eps):
    r""":math:`\varphi_\epsilon(a) = \int_a^{a+1}\varphi(\sqrt\epsilon x)\,dx`."""
    return discretize(phi, 1.0 / eps)


def lattice_eps_weights(phi_N, grid):
    r"""
    :math:`\varphi_{N,\epsilon}(a) = (\epsilon N)^{-1/2}\sum_{u\in(a\sqrt{\epsilon N},
    (a+1)\sqrt{\epsilon N}]}\varphi_N(u)`, from the lattice weights phi_N.
    """
    m = np.sqrt(grid.block_length)
    u = np.arange(phi_N.lo, phi_N.hi + 1)
    cell = np.ceil(u / m).astype("int64") - 1
    lo = cell.min()
    vals = np.bincount(cell - lo, weights=phi_N.values) / m
    return LatticeWeights(vals, lo)


def _boundary_weights(weights, grid):
    # sum_a w(a) g_j(a) for j = 0..M
    a = np.arange(weights.lo, weights.hi + 1)
    j = np.arange(grid.M + 1)
    return heat_kernel(j[:, None], a[None, :]) @ weights.values


def _cg_sum(theta, grid, start, end, r_max=None):
    r_max = grid.r_max if r_max is None else r_max
    blocks = sorted(theta, key=lambda b: (b.i, b.i2))
    g0 = heat_kernel(np.arange(grid.M + 1), 0.0)
    F = {}
    total = 0.0
    for r in range(1, r_max + 1):
        for blk in blocks:
            if r == 1:
                acc = start[blk.i]
            else:
                acc = sum(F[(r - 1, p)] * g0[blk.i - p.i2] for p in blocks
                          if (r - 1, p) in F and blk.i - p.i2 >= grid.K)
            if np.isscalar(acc) and acc == 0.0:
                continue
            F[(r, blk)] = theta[blk] * acc
            total = total + F[(r, blk)] * end[blk.i2]
    return total


@dataclass
class CGWeights:
    """Boundary sums and the deterministic term of a coarse-grained model."""
    start: np.ndarray
    end: np.ndarray
    g1: float


def cg_weights(phi, psi, grid, lattice=None):
    r"""
    The boundary sums :math:`\sum_a\varphi_\epsilon(a)g_i(a)` and
    :math:`\sum_b g_{M-i'}(b)\psi_\epsilon(b)`. With *lattice* set to a
    pair of lattice weight vectors, the :math:`\varphi_{N,\epsilon}` forms
    are used instead.
    """
    if lattice is None:
        phi_e = eps_test_weights(phi, grid.eps)
        psi_e = eps_test_weights(psi, grid.eps)
    else:
        phi_e = lattice_eps_weights(lattice[0], grid)
        psi_e = lattice_eps_weights(lattice[1], grid)
    start = _boundary_weights(phi_e, grid)
    tail = _boundary_weights(psi_e, grid)
    end = tail[grid.M - np.arange(grid.M + 1)]
    return CGWeights(start, end, pairings(phi, psi).phi_psi)


def l_cg(theta, grid, phi=None, psi=None, weights=None, r_max=None):
    r"""
    The coarse-grained model

    .. math::

        g_1(\varphi,\psi) + \sqrt\epsilon\sum_{r\le r_{max}}
        \sum_{(\vec i_1..\vec i_r)}\sum_{a,b}\varphi_\epsilon(a)g_{i_1}(a)
        \Theta(\vec i_1)\prod_{j\ge2}g_{i_j-i'_{j-1}}(0)\Theta(\vec i_j)
        \,g_{M-i'_r}(b)\psi_\epsilon(b).

    Parameters
    ----------
    theta : dict
        Coarse-grained disorder keyed by :class:`TimeBlock`; blocks
        missing from it count as 0.
    grid : :class:`MesoGrid`
    phi, psi : TestFn, optional
    weights : :class:`CGWeights`, optional
        Precomputed boundary sums, used instead of phi and psi.
    """
    if weights is None:
        weights = cg_weights(phi, psi, grid)
    return weights.g1 + np.sqrt(grid.eps) * _cg_sum(theta, grid, weights.start,
                                                    weights.end, r_max)


def z_cg(theta, grid, phi, psi, r_max=None):
    r"""
    :func:`l_cg` with the lattice-averaged test functions
    :math:`\varphi_{N,\epsilon}` and :math:`\psi_{N,\epsilon}` built from
    :math:`\varphi_N` and :math:`\psi_N`.
    """
    phi_N = discretize(phi, grid.N)
    psi_N = discretize(psi, grid.N)
    weights = cg_weights(phi, psi, grid, lattice=(phi_N, psi_N))
    return l_cg(theta, grid, weights=weights, r_max=r_max)


@dataclass
class ThetaMomentReport:
    grid: MesoGrid
    blocks: list
    second: list
    fourth: list
    exact_second: list
    covariances: dict = field(default_factory=dict)

    def rows(self):
        out = []
        for b, m2, m4, ex in zip(self.blocks, self.second, self.fourth,
                                 self.exact_second):
            out.append({"block": str(b), "width": b.width,
                        "m2": m2.mean, "m2_stderr": m2.stderr,
                        "m4": m4.mean, "m4_stderr": m4.stderr,
                        "m2_exact": ex,
                        "kurtosis_ratio": m4.mean / m2.mean ** 2 if m2.mean > 0 else np.nan})
        return out


def _theta_chunk(first, count, law, beta, grid, table, blocks, seed):
    fields = zeta_fields(law, beta, grid.N, seed, count, first=first)
    w = fields.window(0, grid.N + 1)
    scale = 1.0 / np.sqrt(grid.block_length)
    return np.stack([_theta_from_weights(w, grid, b, table.p0, scale)
                     for b in blocks], axis=-1)


def theta_moment_experiment(law, beta, grid, samples, seed, table, blocks=None,
                            workers=1):
    r"""
    Empirical second and fourth moments of :math:`\Theta(\vec i)` per
    block, next to the exact second moment, and the empirical
    covariances of disjoint blocks.
    """
    blocks = grid.blocks() if blocks is None else list(blocks)
    vals = run_ensemble(_theta_chunk, samples, workers=workers,
                        desc="Sampling coarse-grained disorder", law=law,
                        beta=beta, grid=grid, table=table, blocks=blocks,
                        seed=seed)
    sigma2 = float(parse_disorder_law(law).zeta_variance(beta))
    second = [MCEstimate.from_samples(vals[:, j] ** 2, keep=False) for j in range(len(blocks))]
    fourth = [MCEstimate.from_samples(vals[:, j] ** 4, keep=False) for j in range(len(blocks))]
    exact = [theta_variance(grid, b, sigma2, table) for b in blocks]
    cov = {}
    for j, bj in enumerate(blocks):
        for k in range(j + 1, len(blocks)):
            bk = blocks[k]
            if bj.precedes(bk) or bk.precedes(bj):
                cov[(str(bj), str(bk))] = MCEstimate.from_samples(vals[:, j] * vals[:, k],
                                                                  keep=False)
    return ThetaMomentReport(grid, blocks, second, fourth, exact, cov)


def _no_triple_gap_chunk(first, count, law, beta, grid, kernels, r_max, seed):
    fields = zeta_fields(law, beta, grid.N, seed, count, first=first)
    z = polymer_measure_integral(fields, kernels)
    znt = z_no_triple(fields, grid, kernels, r_max)
    return (z - znt) ** 2


def no_triple_gap_experiment(law, beta, grid, kernels, samples, seed,
                             r_max=None, workers=1):
    r"""Monte Carlo estimate of :math:`\|\tilde Z - Z^{(no\ triple)}\|_2^2`."""
    vals = run_ensemble(_no_triple_gap_chunk, samples, workers=workers,
                        desc="Sampling no-triple gap", law=law, beta=beta,
                        grid=grid, kernels=kernels, r_max=r_max, seed=seed)
    return MCEstimate.from_samples(vals)


def _lcg_chunk(first, count, law, beta, grid, table, blocks, weights, seed):
    fields = zeta_fields(law, beta, grid.N, seed, count, first=first)
    w = fields.window(0, grid.N + 1)
    scale = 1.0 / np.sqrt(grid.block_length)
    th = {b: _theta_from_weights(w, grid, b, table.p0, scale) for b in blocks}
    return np.broadcast_to(l_cg(th, grid, weights=weights), (count,))


@dataclass
class CGConvergenceReport:
    N_values: list
    samples: dict = field(repr=False)
    means: dict = field(default_factory=dict)
    ks: dict = field(default_factory=dict)
    g1: float = np.nan
    ks_repetitions: dict = field(default_factory=dict)
    repetitions: int = 1

    def rows(self):
        return [{"N_i": a, "N_j": b, "ks": v,
                 "ks_min": float(np.min(self.ks_repetitions.get((a, b), v))),
                 "ks_max": float(np.max(self.ks_repetitions.get((a, b), v)))}
                for (a, b), v in sorted(self.ks.items())]


def cg_convergence_experiment(eps, K, N_values, phi, psi, law, vartheta, samples,
                              seed, table, repetitions=5, workers=1):
    r"""
    Sample :math:`\mathcal L^{(cg)}(\varphi,\psi|\Theta_{N,\epsilon})` for
    every N in *N_values* at the critical :math:`\beta_N` and report the
    pairwise two-sample KS distances.

    The experiment is repeated *repetitions* times. Repetition r uses the
    disorder streams ``r * samples .. (r + 1) * samples - 1``, the same
    for every N, so repetitions are independent of each other. The
    reported KS distance of a pair is the median over repetitions.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be positive, got {repetitions}!")
    N_values = sorted(int(n) for n in N_values)
    out = {}
    means = {}
    g1 = np.nan
    for N in N_values:
        table.require(N)
        grid = MesoGrid(N, eps, K)
        window = solve_critical_beta(law, N, vartheta, table.R[N])
        weights = cg_weights(phi, psi, grid)
        g1 = weights.g1
        vals = run_ensemble(_lcg_chunk, samples * repetitions, workers=workers,
                            desc=f"Sampling coarse-grained model at N = {N}",
                            law=law, beta=window.beta, grid=grid, table=table,
                            blocks=grid.blocks(), weights=weights, seed=seed)
        out[N] = vals.reshape(repetitions, samples)
        means[N] = MCEstimate.from_samples(vals, keep=False)
    ks_reps = {}
    for j, a in enumerate(N_values):
        for b in N_values[j:]:
            ks_reps[(a, b)] = np.array([ks_2samp(out[a][r], out[b][r]).statistic
                                        for r in range(repetitions)])
    ks = {pair: float(np.median(v)) for pair, v in ks_reps.items()}
    return CGConvergenceReport(N_values, out, means, ks, g1, ks_reps, repetitions)
