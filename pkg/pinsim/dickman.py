"""
The Dickman subordinator density, the function G_theta and the
second-moment renewal kernel.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path

import numpy as np
from numpy.polynomial import legendre
from scipy.integrate import quad
from scipy.interpolate import InterpolatedUnivariateSpline
from scipy.optimize import minimize_scalar
from scipy.special import expi, gammaln, hyp2f1, roots_legendre
from scipy.stats import kstest

from pinsim.ensemble import MCEstimate, run_ensemble
from pinsim.lib.renewal import renewal_solve_blocked
from pinsim.utils import mylog, euler_gamma, make_rng, parse_seed, \
    write_table, validate_parameters

gtheta_magic = "PINSIMGT"
gtheta_version = 1


def dickman_tail_bound(s, x):
    r"""
    Chernoff bound for :math:`P(Y_s > x)`.

    Uses :math:`E[e^{\lambda Y_s}] = \exp(s\,{\rm Ein}(\lambda))` with
    :math:`{\rm Ein}(\lambda) = {\rm Ei}(\lambda) - \gamma - \log\lambda`.
    """
    if x <= s:
        return 1.0

    def log_bound(lam):
        return -lam * x + s * (expi(lam) - euler_gamma - np.log(lam))

    res = minimize_scalar(log_bound, bounds=(1.0e-6, 200.0), method="bounded",
                          options={"xatol": 1.0e-10})
    return float(min(1.0, np.exp(res.fun)))


class DickmanDensity:
    r"""
    The density :math:`f_s(t)` of the Dickman subordinator at time s.

    On (0, 1] the density is
    :math:`f_s(t) = s t^{s-1} e^{-\gamma s}/\Gamma(s+1)`. Beyond 1 it
    solves

    .. math::

        f_s(t) = \frac{s t^{s-1} e^{-\gamma s}}{\Gamma(s+1)}
        - s t^{s-1}\int_0^{t-1}\frac{f_s(a)}{(1+a)^s}\,da,

    which only refers to the density one unit earlier, so the
    continuation is built one unit interval at a time. On each interval
    the integrand is fitted by Legendre series on Gauss-Legendre panels
    graded geometrically toward the left end, where it is not smooth.

    Parameters
    ----------
    s : float
        The subordinator time, positive.
    t_max : float, optional
        The continuation is built on (0, t_max].
    order : integer, optional
        Nodes per panel.
    levels : integer, optional
        Number of geometric grading levels per unit interval.
    """
    def __init__(self, s, t_max=4.0, order=16, levels=40):
        if s <= 0.0:
            raise ValueError(f"The Dickman index must be positive, got s = {s}!")
        self.s = float(s)
        self.t_max = float(t_max)
        self.order = order
        self.levels = levels
        self.c = float(np.exp(-euler_gamma * self.s - gammaln(self.s + 1.0)))
        self.n_intervals = max(int(np.ceil(self.t_max)) - 1, 0)
        # per interval k >= 1: panel edges, Legendre coefficients of the
        # antiderivatives of g = f (1+a)^{-s} and of f, and their values
        # at the panel starts
        self.edges = []
        self._g_int = []
        self._f_int = []
        self._g_start = []
        self._f_start = []
        self.I_at = [0.0, self.c * hyp2f1(self.s, self.s, self.s + 1.0, -1.0)]
        self.F_at = [0.0, self.c]
        self._build()

    def _head(self, t):
        return self.s * self.c * t ** (self.s - 1.0)

    def _build(self):
        xi, _ = roots_legendre(self.order)
        grading = np.concatenate([[0.0], 0.5 ** np.arange(self.levels, -1, -1)])
        for k in range(1, self.n_intervals + 1):
            edges = k + grading
            a = edges[:-1, None]
            b = edges[1:, None]
            nodes = 0.5 * (b - a) * xi + 0.5 * (b + a)
            f = self._head(nodes) - self.s * nodes ** (self.s - 1.0) * \
                self.integral_g(nodes - 1.0)
            g = f * (1.0 + nodes) ** (-self.s)
            half = 0.5 * (b - a)
            cg = legendre.legint(legendre.legfit(xi, g.T, self.order - 1), lbnd=-1) * half.T
            cf = legendre.legint(legendre.legfit(xi, f.T, self.order - 1), lbnd=-1) * half.T
            g_tot = legendre.legval(1.0, cg)
            f_tot = legendre.legval(1.0, cf)
            self.edges.append(edges)
            self._g_int.append(cg)
            self._f_int.append(cf)
            self._g_start.append(self.I_at[k] + np.concatenate([[0.0], np.cumsum(g_tot)[:-1]]))
            self._f_start.append(self.F_at[k] + np.concatenate([[0.0], np.cumsum(f_tot)[:-1]]))
            self.I_at.append(self.I_at[k] + g_tot.sum())
            self.F_at.append(self.F_at[k] + f_tot.sum())

    def _panel_integral(self, x, coefs, starts):
        x = np.asarray(x, dtype="float64")
        out = np.zeros(x.shape)
        k = np.floor(x).astype("int64")
        k = np.where(x == np.floor(x), k - 1, k)
        for kk in np.unique(k[x > 1.0]):
            sel = (k == kk) & (x > 1.0)
            edges = self.edges[kk - 1]
            i = np.clip(np.searchsorted(edges, x[sel], side="left") - 1, 0,
                        edges.size - 2)
            a, b = edges[i], edges[i + 1]
            xi = (2.0 * x[sel] - a - b) / (b - a)
            c = coefs[kk - 1][:, i]
            out[sel] = starts[kk - 1][i] + legendre.legval(xi, c, tensor=False)
        return out

    def _check_range(self, x, top):
        if np.any(np.asarray(x) > top * (1.0 + 1.0e-14)):
            raise RuntimeError(f"The Dickman continuation for s = {self.s} is "
                               f"built up to t = {self.t_max}, but "
                               f"t = {np.max(x)} was requested!")

    def integral_g(self, x):
        r""":math:`I(x) = \int_0^x f_s(a)(1+a)^{-s}\,da`, x >= 0."""
        x = np.asarray(x, dtype="float64")
        self._check_range(x, float(self.n_intervals + 1))
        small = self.c * np.clip(x, 0.0, 1.0) ** self.s * \
            hyp2f1(self.s, self.s, self.s + 1.0, -np.clip(x, 0.0, 1.0))
        return np.where(x <= 1.0, small,
                        self._panel_integral(x, self._g_int, self._g_start))

    def __call__(self, t):
        t = np.asarray(t, dtype="float64")
        self._check_range(t, self.t_max)
        tt = np.where(t > 0.0, t, 1.0)
        head = self._head(tt)
        tail = np.where(tt > 1.0, self.s * tt ** (self.s - 1.0) *
                        self.integral_g(np.clip(tt - 1.0, 0.0, None)), 0.0)
        out = np.where(t > 0.0, head - tail, 0.0)
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        r""":math:`P(Y_s \le x)`."""
        x = np.asarray(x, dtype="float64")
        self._check_range(x, float(self.n_intervals + 1))
        small = self.c * np.clip(x, 0.0, 1.0) ** self.s
        out = np.where(x <= 1.0, small,
                       self._panel_integral(x, self._f_int, self._f_start))
        return out[()] if out.ndim == 0 else out

    def tail_bound(self, x=None):
        return dickman_tail_bound(self.s, self.t_max if x is None else x)

    def normalization(self):
        """Mass on (0, t_max] and the analytic bound on the mass beyond."""
        return float(self.cdf(self.t_max)), self.tail_bound()


@lru_cache(maxsize=64)
def _cached_density(s, t_max):
    return DickmanDensity(s, t_max=t_max)


def dickman_density(s, t, t_max=None):
    r"""
    The Dickman density :math:`f_s(t)`.

    Parameters
    ----------
    s : float
        The subordinator time.
    t : float or array_like
        Evaluation points.
    t_max : float, optional
        Extent of the continuation; defaults to the larger of 4 and the
        largest requested t.

    Examples
    --------
    >>> dickman_density(1.0, 0.5)
    0.5614594835668851
    """
    t = np.asarray(t, dtype="float64")
    if t_max is None:
        t_max = max(4.0, float(np.ceil(t.max())) if t.size else 4.0)
    return _cached_density(float(s), float(t_max))(t)


@dataclass
class DickmanGrid:
    """Dickman densities tabulated on a (s, t) grid."""
    s: np.ndarray
    t: np.ndarray
    f: np.ndarray

    def write_csv(self, filename, overwrite=True):
        ss, tt = np.meshgrid(self.s, self.t, indexing="ij")
        return write_table(filename, {"s": ss.ravel(), "t": tt.ravel(),
                                      "f": self.f.ravel()},
                           meta={"kind": "dickman density"}, overwrite=overwrite)


def dickman_grid(s_values, t_values):
    s_values = np.atleast_1d(np.asarray(s_values, dtype="float64"))
    t_values = np.atleast_1d(np.asarray(t_values, dtype="float64"))
    t_max = max(4.0, float(np.ceil(t_values.max())))
    f = np.array([DickmanDensity(s, t_max=t_max)(t_values) for s in s_values])
    if np.any(f < -1.0e-12):
        raise RuntimeError("The Dickman continuation produced negative densities!")
    return DickmanGrid(s_values, t_values, np.clip(f, 0.0, None))


def _g_small(vartheta, t):
    # t G(t) = int_0^inf e^{s(vartheta - gamma + log t)} / Gamma(s) ds
    L = vartheta - euler_gamma + np.log(t)
    val = quad(lambda s: np.exp(s * L - gammaln(s)) if s > 0.0 else 0.0,
               0.0, np.inf, epsabs=0.0, epsrel=1.0e-11, limit=400)[0]
    return val / t


def _s_truncation(vartheta, t_max, threshold=1.0e-14):
    # e^{vartheta s} f_s(t) <= e^{vartheta s} s c_s t^{s-1} for t > 1
    s = np.arange(1.0, 2000.0)
    logb = (vartheta - euler_gamma) * s - gammaln(s + 1.0) + np.log(s) + \
        (s - 1.0) * np.log(t_max)
    peak = np.argmax(logb)
    below = np.nonzero(logb[peak:] < logb[peak] + np.log(threshold))[0]
    return float(s[peak + below[0]])


def _g_large(vartheta, t, order=16):
    t = np.atleast_1d(np.asarray(t, dtype="float64"))
    t_max = max(2.0, float(np.ceil(t.max())))
    s_max = _s_truncation(vartheta, t_max)
    edges = np.unique(np.concatenate([[0.0, 0.25, 0.5, 1.0],
                                      np.arange(2.0, s_max, 2.0), [s_max]]))
    xi, w = roots_legendre(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = (0.5 * (b - a) * xi + 0.5 * (b + a)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    out = np.zeros(t.size)
    for s, ws in zip(nodes, weights):
        out += ws * np.exp(vartheta * s) * DickmanDensity(s, t_max=t_max)(t)
    return out


def g_theta(vartheta, t):
    r"""
    :math:`G_\vartheta(t) = \int_0^\infty e^{\vartheta s} f_s(t)\,ds`.

    On (0, 1] this is :math:`t^{-1}\int_0^\infty e^{s(\vartheta-\gamma+\log t)}
    /\Gamma(s)\,ds`; beyond 1 the s-integral is done by Gauss-Legendre
    over Dickman densities, truncated where the integrand is below 1e-14
    of its peak.
    """
    t = np.asarray(t, dtype="float64")
    if np.any(t <= 0.0):
        raise ValueError("G_theta needs t > 0!")
    flat = np.atleast_1d(t).ravel()
    out = np.empty(flat.size)
    small = flat <= 1.0
    out[small] = [_g_small(vartheta, x) for x in flat[small]]
    if (~small).any():
        out[~small] = _g_large(vartheta, flat[~small])
    out = out.reshape(t.shape)
    return out[()] if out.ndim == 0 else out


def g_theta_cumulative(vartheta, T):
    r""":math:`\int_0^T G_\vartheta = \int_0^\infty e^{(\vartheta-\gamma)s}T^s/\Gamma(s+1)\,ds`, T <= 1."""
    T = np.asarray(T, dtype="float64")
    if np.any(T > 1.0) or np.any(T <= 0.0):
        raise ValueError("The closed-form cumulative G_theta needs 0 < T <= 1!")

    def single(x):
        L = vartheta - euler_gamma + np.log(x)
        return quad(lambda s: np.exp(s * L - gammaln(s + 1.0)), 0.0, np.inf,
                    epsabs=0.0, epsrel=1.0e-11, limit=400)[0]

    out = np.array([single(x) for x in np.atleast_1d(T).ravel()]).reshape(T.shape)
    return out[()] if out.ndim == 0 else out


class GThetaTable:
    r"""
    A tabulation of :math:`G_\vartheta` on (t_min, t_max].

    The grid is geometric on (t_min, 1] and uniform on (1, t_max];
    :math:`\log(tG_\vartheta(t))` is interpolated by cubic splines in
    :math:`\log t` on each side of t = 1. Below t_min the closed form is
    evaluated directly.

    Attributes
    ----------
    interp_error : float
        Largest relative deviation between the splines and direct
        evaluation at cell midpoints.
    """
    def __init__(self, vartheta, t=None, G=None, t_min=1.0e-12, t_max=4.0,
                 n_small=241, n_large=61, check=True):
        self.vartheta = float(vartheta)
        if t is None:
            mylog.info(f"Tabulating G_theta for vartheta = {vartheta} "
                       f"on [{t_min}, {t_max}].")
            t_small = np.geomspace(t_min, 1.0, n_small)
            t_large = np.linspace(1.0, t_max, n_large)[1:] if t_max > 1.0 else np.zeros(0)
            t = np.concatenate([t_small, t_large])
            G = np.concatenate([g_theta(vartheta, t_small),
                                _g_large(vartheta, t_large) if t_large.size else []])
        self.t = np.asarray(t, dtype="float64")
        self.G = np.asarray(G, dtype="float64")
        if np.any(self.G <= 0.0):
            raise RuntimeError("G_theta must be positive on its grid!")
        self.t_min = float(self.t[0])
        self.t_max = float(self.t[-1])
        left = self.t <= 1.0
        right = self.t >= 1.0
        self._left = InterpolatedUnivariateSpline(np.log(self.t[left]),
                                                  np.log(self.t[left] * self.G[left]), k=3)
        self._right = None
        if right.sum() >= 4:
            self._right = InterpolatedUnivariateSpline(np.log(self.t[right]),
                                                       np.log(self.t[right] * self.G[right]), k=3)
        self._cum1 = float(g_theta_cumulative(self.vartheta, 1.0))
        self.interp_error = self._check_interpolation() if check else np.nan

    def _check_interpolation(self, stride=20):
        tm = np.sqrt(self.t[:-1] * self.t[1:])[::stride]
        return float(np.max(np.abs(self(tm) / g_theta(self.vartheta, tm) - 1.0)))

    def __call__(self, t):
        t = np.asarray(t, dtype="float64")
        if np.any(t > self.t_max * (1.0 + 1.0e-12)):
            raise RuntimeError(f"The G_theta table covers t <= {self.t_max}, "
                               f"but t = {np.max(t)} was requested!")
        flat = np.atleast_1d(t).ravel()
        out = np.empty(flat.size)
        lo = flat < self.t_min
        mid = ~lo & (flat <= 1.0)
        hi = flat > 1.0
        if lo.any():
            out[lo] = [_g_small(self.vartheta, x) for x in flat[lo]]
        out[mid] = np.exp(self._left(np.log(flat[mid]))) / flat[mid]
        if hi.any():
            out[hi] = np.exp(self._right(np.log(flat[hi]))) / flat[hi]
        out = out.reshape(t.shape)
        return out[()] if out.ndim == 0 else out

    def cumulative(self, T):
        r""":math:`\int_0^T G_\vartheta(t)\,dt`."""
        T = float(T)
        if T <= 1.0:
            return float(g_theta_cumulative(self.vartheta, T))
        return self._cum1 + quad(lambda x: float(self(x)), 1.0, T,
                                 epsabs=0.0, epsrel=1.0e-10)[0]

    @property
    def parameters(self):
        return {"magic": gtheta_magic, "version": gtheta_version,
                "vartheta": self.vartheta, "t_min": self.t_min,
                "t_max": self.t_max}

    def to_hdf5(self, filename, overwrite=False):
        import h5py
        filename = Path(filename)
        if filename.exists() and not overwrite:
            raise IOError(f"Cannot overwrite existing file {filename}. "
                          "If you want to do this, set overwrite=True.")
        filename.parent.mkdir(parents=True, exist_ok=True)
        with h5py.File(filename, "w") as f:
            for k, v in self.parameters.items():
                f.attrs[k] = v
            f.create_dataset("t", data=self.t, dtype="<f8")
            f.create_dataset("G", data=self.G, dtype="<f8")

    @classmethod
    def from_hdf5(cls, filename, vartheta=None):
        import h5py
        with h5py.File(filename, "r") as f:
            header = {k: (v.decode() if isinstance(v, bytes) else v)
                      for k, v in f.attrs.items()}
            if header.get("magic") != gtheta_magic:
                raise IOError(f"{filename} is not a G_theta table file!")
            table = cls(header["vartheta"], t=f["t"][:], G=f["G"][:], check=False)
        if vartheta is not None:
            validate_parameters({"vartheta": header["vartheta"]},
                                {"vartheta": float(vartheta)})
        return table

    def write_csv(self, filename, overwrite=True):
        return write_table(filename, {"t": self.t, "G": self.G},
                           meta={"vartheta": self.vartheta,
                                 "interp_error": self.interp_error},
                           overwrite=overwrite)


def gtheta_asymptotic_ratios(table, t_values=(1.0e-2, 1.0e-4, 1.0e-6)):
    r"""
    The ratios :math:`tG_\vartheta(t)\log^2(1/t)` and
    :math:`\log(1/t)\int_0^t G_\vartheta`, both tending to 1 as t -> 0.
    """
    t = np.asarray(t_values, dtype="float64")
    L = np.log(1.0 / t)
    density = t * table(t) * L ** 2
    cumulative = np.array([table.cumulative(x) for x in t]) * L
    return density, cumulative


def gtheta_renewal_identity(table, t, tbar, eps=1.0e-10):
    r"""
    Both sides of the renewal identity

    .. math::

        G_\vartheta(t) = \iint_{0<u<\bar t\le v<t}
        G_\vartheta(u)\,\frac{1}{v-u}\,G_\vartheta(t-v)\,du\,dv,

    for :math:`0 < \bar t < t \le 1`. The singular ends of both
    G-factors are integrated in the logarithmic variable and the last
    *eps* is taken from the cumulative function.
    """
    if not 0.0 < tbar < t <= 1.0:
        raise ValueError(f"The renewal identity needs 0 < tbar < t <= 1, "
                         f"got t = {t}, tbar = {tbar}!")
    cum_eps = table.cumulative(eps)
    opts = dict(epsabs=0.0, epsrel=1.0e-9, limit=400)

    def J(v):
        head = cum_eps / v
        body = quad(lambda x: table(np.exp(x)) * np.exp(x) / (v - np.exp(x)),
                    np.log(eps), np.log(tbar), **opts)[0]
        return head + body

    head = J(t) * cum_eps
    body = quad(lambda y: J(t - np.exp(y)) * table(np.exp(y)) * np.exp(y),
                np.log(eps), np.log(t - tbar), **opts)[0]
    return float(table(t)), float(head + body)


@dataclass
class UbarTable:
    r"""
    The second-moment renewal kernel :math:`\bar U_N(n)`, n = 0..N.
    """
    N: int
    sigma2: float
    U: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.U[0] != self.sigma2 or np.any(self.U < 0.0):
            raise RuntimeError("Inconsistent renewal kernel table!")

    def ratio_deviation(self, gtheta, lo=0.1):
        r"""
        :math:`\sup_{lo N \le n \le N}|N\bar U_N(n)/(2\pi G_\vartheta(n/N)) - 1|`.
        """
        n = np.arange(max(int(np.ceil(lo * self.N)), 1), self.N + 1)
        ratio = self.N * self.U[n] / (2.0 * np.pi * gtheta(n / self.N))
        return float(np.abs(ratio - 1.0).max())

    def write_csv(self, filename, overwrite=True):
        return write_table(filename, {"n": np.arange(self.N + 1), "U": self.U},
                           meta={"N": self.N, "sigma2": self.sigma2},
                           overwrite=overwrite)


def build_ubar(N, sigma2, table):
    r"""
    The renewal kernel :math:`\bar U_N(n)` from the overlap sequence u.

    It solves :math:`\bar U(n) = \sigma^2(1\{n=0\} + \sum_{m<n}\bar U(m)u(n-m))`,
    so that :math:`\bar U(0) = \sigma^2` and
    :math:`\bar U(n) = \sigma^2 W(n)` with
    :math:`W(n) = \sigma^2(u(n) + \sum_{1\le j<n}u(j)W(n-j))` for n >= 1.

    Parameters
    ----------
    N : integer
    sigma2 : float
    table : :class:`~pinsim.walks.KernelTable`
    """
    table.require(N)
    source = np.zeros(N + 1)
    source[0] = 1.0
    U = renewal_solve_blocked(sigma2, source, table.u[:N + 1])
    return UbarTable(int(N), float(sigma2), U)


def ubar_kterm(n, k, sigma2, u):
    r"""
    The k-th term of :math:`\bar U(n)` as an explicit sum over
    compositions of n into k - 1 positive parts,
    :math:`\sigma^{2k}\sum\prod_j u(n_j - n_{j-1})`.
    """
    if k == 1:
        return sigma2 if n == 0 else 0.0
    if n < k - 1:
        return 0.0
    total = 0.0
    for cuts in combinations(range(1, n), k - 2):
        pts = (0,) + cuts + (n,)
        total += np.prod([u[b - a] for a, b in zip(pts[:-1], pts[1:])])
    return sigma2 ** k * total


@dataclass
class DickmanRenewalSample:
    N: int
    s: float
    steps: int
    values: np.ndarray = field(repr=False)
    ks: float
    pvalue: float
    s_N: float
    ks_matched: float
    increment_mean: MCEstimate
    expected_increment: float

    def as_dict(self):
        return {"N": self.N, "s": self.s, "steps": self.steps, "ks": self.ks,
                "pvalue": self.pvalue, "s_N": self.s_N,
                "ks_matched": self.ks_matched,
                "increment_mean": self.increment_mean.mean,
                "increment_stderr": self.increment_mean.stderr,
                "expected_increment": self.expected_increment}


def _renewal_chunk(first, count, seed, steps, cdf):
    out = np.empty((count, steps + 1))
    for i in range(count):
        rng = make_rng(seed, "dickman", first + i)
        incr = 1 + np.searchsorted(cdf, rng.uniform(size=steps), side="right")
        incr = np.minimum(incr, cdf.size)
        out[i, 0] = incr.sum()
        out[i, 1:] = incr
    return out


def sample_dickman_renewal(N, s, count, seed, table, workers=1):
    r"""
    Sample :math:`\iota_k/N` for the renewal with increment law
    :math:`u(n)/R_N` on {1..N} and :math:`k = \lfloor s\log N\rfloor`,
    and compare it with the Dickman law.

    Two KS distances are reported: against :math:`Y_s` and against
    :math:`Y_{s_N}` with :math:`s_N = k/(2\pi R_N)`, the index the finite
    renewal actually has.
    """
    table.require(N)
    seed = parse_seed(seed)
    steps = int(np.floor(s * np.log(N)))
    if steps < 1:
        raise ValueError(f"s log N = {s * np.log(N):.3f} gives no renewal steps!")
    probs = table.u[1:N + 1] / table.R[N]
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    res = run_ensemble(_renewal_chunk, count, workers=workers,
                       desc="Sampling Dickman renewal", seed=seed, steps=steps,
                       cdf=cdf)
    values = res[:, 0] / N
    t_max = max(4.0, float(np.ceil(values.max())))
    test = kstest(values, DickmanDensity(s, t_max=t_max).cdf)
    s_N = steps / (2.0 * np.pi * table.R[N])
    matched = kstest(values, DickmanDensity(s_N, t_max=t_max).cdf)
    increments = MCEstimate.from_samples(res[:, 1:].mean(axis=1), keep=False)
    expected = float(np.dot(np.arange(1, N + 1), probs))
    mylog.info(f"Dickman renewal at N = {N}: KS = {test.statistic:.4f}, "
               f"KS at s_N = {s_N:.4f} is {matched.statistic:.4f}.")
    return DickmanRenewalSample(int(N), float(s), steps, values,
                                float(test.statistic), float(test.pvalue),
                                float(s_N), float(matched.statistic), increments,
                                expected)
