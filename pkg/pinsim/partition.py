"""
Exact partition functions of the pinning model and of the directed
polymer smeared over test functions, their chaos expansions and their
second moments.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import InterpolatedUnivariateSpline
from scipy.special import roots_legendre

from pinsim.continuum_kernels import discretize, heat_pairing, \
    hitting_pairing, project_onto_hitting_basis, cell_integrals
from pinsim.disorder import ChaosField, parse_disorder_law, zeta_fields, \
    tilted_field
from pinsim.ensemble import MCEstimate, run_ensemble
from pinsim.lib.renewal import renewal_solve, causal_convolve
from pinsim.utils import mylog, write_table
from pinsim.walks import default_reach, propagate_to_origin, \
    first_hit_weights, no_hit_pairing, pairing

max_table_size = 5000


def _weights(field, a, b, h=0.0):
    # the factors e^{beta omega_n - lambda + h} for n = a..b-1
    w = 1.0 + field.window(a, b)
    if h != 0.0:
        w = w * np.exp(h)
    return w


def pin_partition(field, M, K, table, h=0.0):
    r"""
    The point-to-point pinning partition function :math:`Z_{M,K}`.

    The disorder is collected at both endpoints, and the last-return
    recursion

    .. math::

        W(k) = e^{\beta\omega_k - \lambda(\beta) + h}
        \left(1\{k=M\} + \sum_{M\le j<k}W(j)K(k-j)\right)

    gives :math:`Z_{M,K} = W(K)`.

    Parameters
    ----------
    field : :class:`~pinsim.disorder.ChaosField`
        The disorder; it must cover the times M..K. Batched fields give
        one value per field.
    M, K : integers
        The pinned endpoints, M <= K.
    table : :class:`~pinsim.walks.KernelTable`
    h : float, optional
        The pinning reward.
    """
    if K < M:
        raise ValueError(f"Need M <= K, got M = {M}, K = {K}!")
    table.require(K - M)
    w = _weights(field, M, K + 1, h)
    source = np.zeros(K - M + 1)
    source[0] = 1.0
    return renewal_solve(w, source, table.K[:K - M + 1])[..., -1]


class PartitionTable:
    r"""
    All point-to-point partition functions :math:`Z_{m,n}`,
    0 <= m <= n <= N, of one disorder field.

    ``Z[m, n]`` holds :math:`Z_{m,n}` and is 0 below the diagonal.
    """
    def __init__(self, Z, field=None, h=0.0):
        self.Z = np.asarray(Z, dtype="float64")
        self.N = self.Z.shape[0] - 1
        self.field = field
        self.h = h

    def __call__(self, m, n):
        return self.Z[m, n]

    def pinning_integral(self, f, h):
        r"""
        :math:`\sum_{0\le m\le n\le N-1} F_m\sqrt N Z_{m,n} H_n` with
        :math:`F_m = \int_{m/N}^{(m+1)/N} f`, and H likewise.
        """
        N = self.N
        edges = np.arange(N + 1) / N
        F = cell_integrals(f, edges)
        H = cell_integrals(h, edges)
        return float(np.sqrt(N) * F @ self.Z[:N, :N] @ H)

    def write_csv(self, filename, overwrite=True):
        m, n = np.triu_indices(self.N + 1)
        return write_table(filename, {"m": m, "n": n, "Z": self.Z[m, n]},
                           meta={"N": self.N, "h": self.h}, overwrite=overwrite)


def build_partition_table(field, N, table, h=0.0, max_size=max_table_size):
    """
    Tabulate :math:`Z_{m,n}` for 0 <= m <= n <= N, one renewal recursion
    per starting point solved as a batch.
    """
    if N > max_size:
        msg = (f"A partition table with N = {N} exceeds the limit of "
               f"{max_size}; use the streaming integrals instead.")
        mylog.error(msg)
        raise MemoryError(msg)
    table.require(N)
    w = _weights(field, 0, N + 1, h)
    if w.ndim != 1:
        raise ValueError("Partition tables are built for one field at a time!")
    Z = renewal_solve(w, np.eye(N + 1), table.K[:N + 1])
    return PartitionTable(Z, field=field, h=h)


def chaos_eval(field, N, table):
    r"""
    The point-to-line partition function through its polynomial chaos
    expansion,

    .. math::

        Z = 1 + \sum_{n=1}^N D(n),\qquad
        D(n) = \zeta_n\Big(p_n(0) + \sum_{m<n}D(m)p_{n-m}(0)\Big).

    Works on batched fields.
    """
    table.require(N)
    zeta = field.window(1, N + 1)
    D = renewal_solve(zeta, table.p0[1:N + 1], table.p0[:N + 1])
    return 1.0 + D.sum(axis=-1)


def point_to_line_partition(field, N, table, h=0.0):
    r"""
    The point-to-line partition function by first and last visits,

    .. math::

        Z = P(\tau_1 > N) + \sum_{1\le m\le n\le N}K(m)Z_{m,n}P(\tau_1>N-n),

    streamed through the backward recursion
    :math:`Y(m) = w_m(P(\tau_1>N-m) + \sum_{j>m}K(j-m)Y(j))`.
    """
    table.require(N)
    survival = 1.0 - np.concatenate([[0.0], np.cumsum(table.K[1:N + 1])])
    w = _weights(field, 1, N + 1, h)
    # h_n = P(tau_1 > N - n) for n = 1..N
    Y = renewal_solve(w, survival[N - 1::-1], table.K[:N + 1], reverse=True)
    return survival[N] + Y @ table.K[1:N + 1]


def pinning_measure_integral(field, N, f, h, table, h_reward=0.0):
    r"""
    The integral of :math:`f\otimes h` against the rescaled pinning measure,
    :math:`\sum_{0\le m\le n\le N-1}F_m\,\sqrt N Z_{m,n}\,H_n`, with
    :math:`F_m = \int_{m/N}^{(m+1)/N}f`.

    The double sum is streamed with the backward recursion
    :math:`Y(m) = w_m(H_m + \sum_{j>m}K(j-m)Y(j))`, so no table of
    :math:`Z_{m,n}` is formed.

    Parameters
    ----------
    field : :class:`~pinsim.disorder.ChaosField`
        Disorder on the times 0..N-1.
    N : integer
    f, h : callable
        Vectorized functions on [0, 1].
    table : :class:`~pinsim.walks.KernelTable`
    h_reward : float, optional
        The pinning reward.
    """
    table.require(N)
    edges = np.arange(N + 1) / N
    F = cell_integrals(f, edges)
    H = cell_integrals(h, edges)
    w = _weights(field, 0, N, h_reward)
    Y = renewal_solve(w, H, table.K[:N], reverse=True)
    return np.sqrt(N) * (Y @ F)


@dataclass
class PolymerKernels:
    r"""
    Deterministic ingredients of the polymer integral for one
    :math:`(N, \varphi, \psi)`.

    Attributes
    ----------
    a : ndarray
        :math:`q^N_{0,n}(\varphi,0) = \sum_u\varphi_N(u)p_n(-u)`, n = 0..N.
    b : ndarray
        :math:`\sum_v p_k(v)\psi_N(v)`, k = 0..N, so that
        :math:`q^N_{n,N}(0,\psi) = b(N-n)`.
    q : float
        :math:`q^N_{0,N}(\varphi,\psi)`, normalized by :math:`1/\sqrt N`.
    A, B : ndarray
        First-hit weights :math:`\sum_u\varphi_N(u)q_u(m)` and
        :math:`\sum_v\psi_N(v)q_{-v}(k)`.
    no_hit : float
        :math:`\sum\varphi_N(u)P^u(S_N=v,\tau_1\ge N)\psi_N(v)`.
    """
    N: int
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    q: float
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    no_hit: float
    p0: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)


def polymer_kernels(N, phi, psi, table):
    """Build the :class:`PolymerKernels` for test functions phi and psi."""
    table.require(N)
    law = table.law
    reach = default_reach(law, N)
    phi_N = discretize(phi, N, reach=reach)
    psi_N = discretize(psi, N, reach=reach)
    a = propagate_to_origin(law, phi_N, N)
    b = propagate_to_origin(law, psi_N, N, reflect=True)
    q = pairing(law, phi_N, psi_N, N) / np.sqrt(N)
    A = first_hit_weights(law, phi_N, N)
    B = first_hit_weights(law, psi_N, N, reflect=True)
    no_hit = no_hit_pairing(law, phi_N, psi_N, N)
    return PolymerKernels(int(N), a, b, float(q), A, B, float(no_hit),
                          table.p0[:N + 1], table.K[:N + 1])


def polymer_measure_integral(field, kernels):
    r"""
    The polymer partition function averaged over
    :math:`\varphi` and :math:`\psi`, without boundary disorder:

    .. math::

        \tilde Z = q^N_{0,N}(\varphi,\psi) + \frac{1}{\sqrt N}
        \sum_{n=1}^{N-1}D(n)\,q^N_{n,N}(0,\psi),

    with :math:`D(n) = \zeta_n(q^N_{0,n}(\varphi,0) + \sum_{m<n}D(m)p_{n-m}(0))`.
    """
    N = kernels.N
    zeta = field.window(1, N)
    D = renewal_solve(zeta, kernels.a[1:N], kernels.p0)
    return kernels.q + D @ kernels.b[N - 1:0:-1] / np.sqrt(N)


def polymer_decomposition(field, kernels):
    r"""
    The polymer integral rebuilt from first and last visits to 0,

    .. math::

        \tilde Z = \frac{1}{\sqrt N}\Big(\sum\varphi_N\bar P\psi_N
        + \sum_{1\le m\le n\le N-1}A(m)Z_{m,n}B(N-n)\Big).

    Returns the no-hit and the hitting parts separately.
    """
    N = kernels.N
    w = 1.0 + field.window(1, N)
    Y = renewal_solve(w, kernels.B[N - 1:0:-1], kernels.K, reverse=True)
    hit = Y @ kernels.A[1:N] / np.sqrt(N)
    return kernels.no_hit / np.sqrt(N), hit


def decomposition_identity_check(field, kernels):
    """
    The largest absolute gap between the direct polymer integral and its
    first/last-visit reconstruction, over all fields in *field*.
    """
    direct = polymer_measure_integral(field, kernels)
    no_hit, hit = polymer_decomposition(field, kernels)
    return float(np.max(np.abs(direct - no_hit - hit)))


def exact_second_moment(kernels, ubar):
    r"""
    :math:`E[\tilde Z^2] = q^2 + \frac1N\sum_{1\le m\le n<N}
    a(m)^2\,\bar U_N(n-m)\,b(N-n)^2`, evaluated by one FFT convolution.
    """
    N = kernels.N
    if ubar.N < N - 1:
        raise RuntimeError(f"The renewal kernel covers n <= {ubar.N}, "
                           f"but {N - 1} is needed!")
    a2 = kernels.a[:N] ** 2
    a2[0] = 0.0
    conv = causal_convolve(a2, ubar.U[:N], N)
    return kernels.q ** 2 + conv[1:N] @ kernels.b[N - 1:0:-1] ** 2 / N


def _gauss_legendre(a, b, order, panels):
    x, w = roots_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    return ((0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel(),
            (0.5 * (hi - lo) * w).ravel())


def _v1_quadrature(Asq, Bsq, gtheta, cum_eps, eps, order):
    # int_0^1 G(u) H(u) du with H(u) = int_0^{1-u} A(r)^2 B(1-u-r)^2 dr
    x, w = roots_legendre(order)

    def H(u):
        u = np.atleast_1d(u)[:, None]
        r = 0.5 * (1.0 - u) * (x + 1.0)
        return (0.5 * (1.0 - u[:, 0]) *
                ((Asq(r) * Bsq(1.0 - u - r)) @ w))

    y, wy = _gauss_legendre(np.log(eps), 0.0, order, 24)
    u = np.exp(y)
    body = (wy * u * gtheta(u) * H(u)).sum()
    return cum_eps * H(0.0)[0] + body


def v1_theta(phi, psi, gtheta, n_nodes=401, order=32, eps=1.0e-10, tol=1.0e-4):
    r"""
    The limiting variance

    .. math::

        V_1^\vartheta(\varphi,\psi) = 2\pi\iint_{0<r<s<1}
        g_r(\varphi,0)^2\,G_\vartheta(s-r)\,g_{1-s}(0,\psi)^2\,dr\,ds.

    The Gaussian pairings are tabulated in r and splined; the singular
    end of :math:`G_\vartheta` is integrated in the logarithmic variable
    below which its cumulative function takes over.

    Parameters
    ----------
    phi, psi : TestFn
    gtheta : :class:`~pinsim.dickman.GThetaTable`
    tol : float, optional
        Relative tolerance, checked against a rule of lower order.
    """
    r = np.concatenate([[0.0], np.geomspace(1.0e-8, 1.0, n_nodes - 1)])
    A = np.array([heat_pairing(phi, ri)[0] for ri in r])
    B = np.array([heat_pairing(psi, ri)[0] for ri in r])
    if not (np.any(A) and np.any(B)):
        return 0.0
    Asq = InterpolatedUnivariateSpline(r, A ** 2, k=3)
    Bsq = InterpolatedUnivariateSpline(r, B ** 2, k=3)
    cum_eps = gtheta.cumulative(eps)
    value = _v1_quadrature(Asq, Bsq, gtheta, cum_eps, eps, order)
    check = _v1_quadrature(Asq, Bsq, gtheta, cum_eps, eps, order * 3 // 4)
    if abs(value - check) > tol * abs(value):
        raise RuntimeError(f"V1 tolerance {tol:.1e} not achieved "
                           f"(error estimate {abs(value - check):.3e}).")
    return 2.0 * np.pi * float(value)


def annealed_free_energy(h, N, table):
    r""":math:`\frac1N\log E[Z]`, the chaos expansion with :math:`\zeta\equiv e^h-1`."""
    field = ChaosField(np.full(N + 1, np.expm1(h)), 0.0, law="annealed")
    return float(np.log(chaos_eval(field, N, table)) / N)


def _log_partition_chunk(first, count, law, beta, h, N, seed, table):
    fields = tilted_field(zeta_fields(law, beta, N, seed, count, first=first), h)
    Z = point_to_line_partition(fields, N, table)
    if not np.all(np.isfinite(Z)) or np.any(Z <= 0.0):
        raise RuntimeError(f"Partition function overflow at N = {N}, h = {h}; "
                           f"reduce N.")
    return np.log(Z) / N


def free_energy_estimate(law, beta, h, N, samples, seed, table, workers=1):
    r"""
    Monte Carlo estimate of the quenched free energy
    :math:`\frac1N E[\log Z_{N,\beta,h}]`.

    Returns
    -------
    :class:`~pinsim.ensemble.MCEstimate`
    """
    table.require(N)
    parse_disorder_law(law)
    vals = run_ensemble(_log_partition_chunk, samples, workers=workers,
                        desc="Estimating free energy", law=law, beta=beta,
                        h=h, N=N, seed=seed, table=table)
    return MCEstimate.from_samples(vals)


@dataclass
class PinningPolymerGap:
    """The mean square gap between matched pinning and polymer integrals."""
    gap2: MCEstimate
    pinning2: MCEstimate
    fit_errors: tuple

    @property
    def relative(self):
        return self.gap2.mean / self.pinning2.mean


def pinning_polymer_gap(f, h, N, field, table, K=6, radius=8.0):
    r"""
    Compare the pinning-measure integral of :math:`f\otimes h` with the
    hitting part of the polymer integral for test functions whose
    hitting pairings reproduce f and :math:`h(1-\cdot)`.

    Since :math:`A(m)/\sqrt N\approx N^{-1}\int\varphi(x)Q(x,m/N)dx`,
    choosing :math:`\varphi,\psi` with :math:`\int\varphi Q(\cdot,s) = f(s)`
    and :math:`\int\psi Q(\cdot,s) = h(1-s)` matches the two sums term by
    term up to discretization.

    Parameters
    ----------
    f, h : callable
        Functions on [0, 1].
    N : integer
    field : :class:`~pinsim.disorder.ChaosField`
        Batched disorder on the times 0..N.
    table : :class:`~pinsim.walks.KernelTable`
    K : integer, optional
        Degree of the hitting-basis fits.
    radius : float, optional
        Support radius of the fitted test functions.
    """
    fit_phi = project_onto_hitting_basis(f, K, radius=radius)
    fit_psi = project_onto_hitting_basis(lambda s: h(1.0 - s), K, radius=radius)
    kernels = polymer_kernels(N, fit_phi.phi, fit_psi.phi, table)
    _, hit = polymer_decomposition(field, kernels)
    pin = pinning_measure_integral(field, N, f, h, table)
    return PinningPolymerGap(MCEstimate.from_samples(np.atleast_1d(pin - hit) ** 2),
                             MCEstimate.from_samples(np.atleast_1d(pin) ** 2),
                             (fit_phi.sup_error, fit_psi.sup_error))


def hitting_weight_profile(phi, N, m):
    """The continuum counterpart N^{-1} int phi Q(., m/N) of A(m)/sqrt(N)."""
    return np.array([hitting_pairing(phi, mi / N)[0] for mi in np.atleast_1d(m)]) / N
