"""
Disorder distributions, the tilted field zeta, and the critical window.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, cumulative_trapezoid
from scipy.interpolate import InterpolatedUnivariateSpline
from scipy.optimize import brentq

from pinsim.utils import mylog, make_rng, parse_seed, read_table


class DisorderLaw:
    r"""
    Base class for disorder distributions with mean 0 and variance 1.

    Subclasses implement :meth:`log_mgf`, its derivative
    :meth:`dlog_mgf` and :meth:`sample`.

    Parameters
    ----------
    beta0 : float
        The log-moment generating function
        :math:`\lambda(\beta) = \log E[e^{\beta\omega}]` is finite on
        :math:`(-\beta_0, \beta_0)`.
    """
    name = "custom"

    def __init__(self, beta0=np.inf):
        self.beta0 = beta0

    def check_beta(self, beta):
        beta = np.asarray(beta, dtype="float64")
        if np.any(np.abs(beta) >= self.beta0):
            raise ValueError(f"beta = {beta} is outside the interval "
                             f"(-{self.beta0}, {self.beta0}) where the "
                             f"log-MGF of '{self.name}' is finite!")
        return beta

    def log_mgf(self, beta):
        raise NotImplementedError

    def dlog_mgf(self, beta):
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    @property
    def cumulants(self):
        """The cumulants (kappa_2, kappa_3, kappa_4)."""
        raise NotImplementedError

    def zeta_variance(self, beta):
        r""":math:`\sigma^2(\beta) = e^{\lambda(2\beta) - 2\lambda(\beta)} - 1`."""
        self.check_beta(2.0 * np.asarray(beta))
        return np.expm1(self.log_mgf(2.0 * beta) - 2.0 * self.log_mgf(beta))

    def dzeta_variance(self, beta):
        return (1.0 + self.zeta_variance(beta)) * \
            (2.0 * self.dlog_mgf(2.0 * beta) - 2.0 * self.dlog_mgf(beta))

    def to_dict(self):
        return {"name": self.name}

    def __repr__(self):
        return f"{self.__class__.__name__}()"


class GaussianDisorder(DisorderLaw):
    name = "gaussian"

    def log_mgf(self, beta):
        beta = self.check_beta(beta)
        return 0.5 * beta * beta

    def dlog_mgf(self, beta):
        return np.asarray(beta, dtype="float64")

    def zeta_variance(self, beta):
        return np.expm1(np.asarray(beta, dtype="float64") ** 2)

    def sample(self, rng, size):
        return rng.standard_normal(size)

    @property
    def cumulants(self):
        return 1.0, 0.0, 0.0


class RademacherDisorder(DisorderLaw):
    name = "rademacher"

    def log_mgf(self, beta):
        b = np.abs(self.check_beta(beta))
        return b + np.log1p(np.exp(-2.0 * b)) - np.log(2.0)

    def dlog_mgf(self, beta):
        return np.tanh(beta)

    def zeta_variance(self, beta):
        # cosh(2b)/cosh(b)^2 = 1 + tanh(b)^2
        return np.tanh(np.asarray(beta, dtype="float64")) ** 2

    def sample(self, rng, size):
        return 2.0 * rng.integers(0, 2, size=size) - 1.0

    @property
    def cumulants(self):
        return 1.0, 0.0, -2.0


class DensityDisorder(DisorderLaw):
    r"""
    A disorder law given by a density on a bounded interval.

    Parameters
    ----------
    density : callable
        The (not necessarily normalized) density.
    support : tuple of floats
        The interval carrying the density.
    beta0 : float, optional
        Declared finiteness bound of the log-MGF. Bounded support makes
        it finite everywhere.
    name : string, optional
    n_grid : integer, optional
        Grid size for the inverse-CDF sampler.
    """
    def __init__(self, density, support, beta0=np.inf, name="custom",
                 n_grid=8193, tol=1.0e-6):
        super().__init__(beta0=beta0)
        self.name = name
        self.support = (float(support[0]), float(support[1]))
        norm = self._quad(density)
        self.density = lambda x: density(x) / norm
        m1 = self._quad(lambda x: x * self.density(x))
        m2 = self._quad(lambda x: x * x * self.density(x))
        if abs(m1) > tol or abs(m2 - 1.0) > tol:
            raise ValueError(f"Disorder law '{name}' must have mean 0 and "
                             f"variance 1, got {m1:.3e} and {m2:.6f}!")
        self._m = [1.0, m1, m2, self._quad(lambda x: x ** 3 * self.density(x)),
                   self._quad(lambda x: x ** 4 * self.density(x))]
        x = np.linspace(*self.support, n_grid)
        cdf = cumulative_trapezoid(self.density(x), x, initial=0.0)
        cdf /= cdf[-1]
        cdf, idx = np.unique(cdf, return_index=True)
        self._invcdf = InterpolatedUnivariateSpline(cdf, x[idx], k=1)

    def _quad(self, f):
        return quad(f, *self.support, epsabs=0.0, epsrel=1.0e-13, limit=200)[0]

    def log_mgf(self, beta):
        beta = self.check_beta(beta)

        def single(b):
            # factor out the largest exponent on the support
            shift = max(b * self.support[0], b * self.support[1])
            val = self._quad(lambda x: np.exp(b * x - shift) * self.density(x))
            return np.log(val) + shift

        if beta.ndim == 0:
            return single(float(beta))
        return np.array([single(b) for b in beta.ravel()]).reshape(beta.shape)

    def dlog_mgf(self, beta):
        def single(b):
            shift = max(b * self.support[0], b * self.support[1])
            num = self._quad(lambda x: x * np.exp(b * x - shift) * self.density(x))
            den = self._quad(lambda x: np.exp(b * x - shift) * self.density(x))
            return num / den
        beta = np.asarray(beta, dtype="float64")
        if beta.ndim == 0:
            return single(float(beta))
        return np.array([single(b) for b in beta.ravel()]).reshape(beta.shape)

    def sample(self, rng, size):
        return self._invcdf(rng.uniform(size=size)).reshape(size)

    @property
    def cumulants(self):
        m2, m3, m4 = self._m[2], self._m[3], self._m[4]
        return m2, m3, m4 - 3.0 * m2 * m2

    @classmethod
    def from_csv(cls, filename, name="tabulated", beta0=np.inf):
        """
        Read a tabulated density from a CSV file with columns ``x`` and
        ``density``; it is interpolated linearly between the nodes.
        """
        t = read_table(filename)
        x = np.asarray(t["x"], dtype="float64")
        d = np.asarray(t["density"], dtype="float64")
        spline = InterpolatedUnivariateSpline(x, d, k=1, ext="zeros")
        return cls(lambda y: np.clip(spline(y), 0.0, None), (x[0], x[-1]),
                   beta0=beta0, name=name)

    def to_dict(self):
        return {"name": self.name, "support": list(self.support)}


def uniform_disorder():
    """The uniform law on [-sqrt(3), sqrt(3)]."""
    a = np.sqrt(3.0)
    return DensityDisorder(lambda x: np.ones_like(x), (-a, a), name="uniform")


disorder_laws = {"gaussian": GaussianDisorder,
                 "rademacher": RademacherDisorder,
                 "uniform": uniform_disorder,
                 "tabulated": DensityDisorder.from_csv}


def parse_disorder_law(law, **params):
    if law is None:
        law = "gaussian"
    if isinstance(law, DisorderLaw):
        return law
    if isinstance(law, dict):
        return parse_disorder_law(law["name"], **law.get("params", {}), **params)
    if law not in disorder_laws:
        raise KeyError(f"{law} is not a known disorder law!")
    return disorder_laws[law](**params)


def log_mgf(law, beta):
    r"""
    The log-moment generating function :math:`\lambda(\beta)`.

    Examples
    --------
    >>> log_mgf("gaussian", 0.3)
    0.045
    """
    return parse_disorder_law(law).log_mgf(beta)


@dataclass
class CriticalWindow:
    r"""
    The disorder strength in the critical window at size N.

    Attributes
    ----------
    N : integer
    vartheta : float
    R_N : float
        The overlap sum from the kernel table.
    sigma2 : float
        :math:`\sigma_N^2 = R_N^{-1}(1 + \vartheta/\log N)`.
    beta : float
        The solution of :math:`e^{\lambda(2\beta)-2\lambda(\beta)} - 1 = \sigma_N^2`.
    residual : float
        The solver residual.
    law : string
    """
    N: int
    vartheta: float
    R_N: float
    sigma2: float
    beta: float
    residual: float
    law: str

    @property
    def lambda_N(self):
        return self.sigma2 * self.R_N

    def as_dict(self):
        return {"N": self.N, "vartheta": self.vartheta, "R_N": self.R_N,
                "sigma2": self.sigma2, "beta": self.beta,
                "lambda_N": self.lambda_N, "residual": self.residual,
                "law": self.law}


def window_target(N, vartheta, R_N):
    return (1.0 + vartheta / np.log(N)) / R_N


def solve_critical_beta(law, N, vartheta, R_N, newton_steps=4):
    r"""
    Solve for the disorder strength :math:`\beta_N` in the critical window.

    The target :math:`\sigma_N^2 = R_N^{-1}(1 + \vartheta/\log N)` is
    hit exactly (no lower-order correction). The root is bracketed and
    found by Brent's method, then polished by Newton steps.

    Parameters
    ----------
    law : DisorderLaw or string
    N : integer
        The system size, at least 3.
    vartheta : float
        The window parameter.
    R_N : float
        The overlap sum :math:`R_N`, normally ``table.R[N]``.

    Returns
    -------
    :class:`CriticalWindow`
    """
    law = parse_disorder_law(law)
    if N < 3:
        raise ValueError(f"The critical window needs N >= 3, got {N}!")
    target = window_target(N, vartheta, R_N)
    if target <= 0.0:
        raise ValueError(f"The window target {target} must be positive; "
                         f"increase vartheta or N.")

    def f(b):
        return float(law.zeta_variance(b)) - target

    limit = 0.5 * law.beta0
    hi = min(1.0, 0.5 * limit)
    while f(hi) < 0.0:
        hi *= 2.0
        if hi >= limit or hi > 64.0:
            msg = (f"The window target sigma^2 = {target:.6g} is unattainable "
                   f"for disorder law '{law.name}'.")
            mylog.error(msg)
            raise ValueError(msg)
    beta = brentq(f, 0.0, hi, xtol=1.0e-16, rtol=4.0 * np.finfo(float).eps,
                  maxiter=500)
    res = abs(f(beta))
    for _ in range(newton_steps):
        d = float(law.dzeta_variance(beta))
        if d == 0.0:
            break
        trial = beta - f(beta) / d
        if abs(f(trial)) < res:
            beta, res = trial, abs(f(trial))
        else:
            break
    return CriticalWindow(int(N), float(vartheta), float(R_N), float(target),
                          float(beta), float(res), law.name)


class ChaosField:
    r"""
    Realizations of the tilted disorder :math:`\zeta_n = e^{\beta\omega_n -
    \lambda(\beta)} - 1` on the times ``start..start + n_times - 1``.

    ``zeta`` has shape ``(n_times,)`` for one field or
    ``(n_fields, n_times)`` for a batch; ``streams`` lists the stream
    index each row was drawn from.
    """
    def __init__(self, zeta, beta, law="custom", seed=None, streams=None,
                 omega=None, start=0):
        self.zeta = np.asarray(zeta, dtype="float64")
        self.beta = float(beta)
        self.law = law
        self.seed = seed
        self.omega = omega
        self.start = int(start)
        if streams is None:
            streams = np.arange(1) if self.zeta.ndim == 1 else np.arange(self.zeta.shape[0])
        self.streams = np.atleast_1d(streams)

    @property
    def n_times(self):
        return self.zeta.shape[-1]

    @property
    def batched(self):
        return self.zeta.ndim == 2

    @property
    def n_fields(self):
        return self.zeta.shape[0] if self.batched else 1

    def window(self, a, b):
        """zeta on the times a..b-1."""
        if a < self.start or b > self.start + self.n_times:
            raise RuntimeError(f"The field covers times {self.start}.."
                               f"{self.start + self.n_times - 1}, not {a}..{b - 1}!")
        return self.zeta[..., a - self.start:b - self.start]

    def row(self, i):
        if not self.batched:
            return self
        omega = None if self.omega is None else self.omega[i]
        return ChaosField(self.zeta[i], self.beta, self.law, self.seed,
                          self.streams[i:i + 1], omega, self.start)

    @classmethod
    def zeros(cls, n_times, n_fields=None):
        shape = (n_times,) if n_fields is None else (n_fields, n_times)
        return cls(np.zeros(shape), 0.0, law="none")


def _parse_range(index_range):
    if np.isscalar(index_range):
        return 0, int(index_range) + 1
    start, stop = index_range
    return int(start), int(stop)


def zeta_fields(law, beta, index_range, seed, count, first=0):
    r"""
    Draw *count* independent fields, field i from stream ``first + i``.

    Field i depends only on ``(law, beta, index_range, seed, first + i)``,
    so batches may be split across workers in any way.
    """
    law = parse_disorder_law(law)
    seed = parse_seed(seed)
    start, stop = _parse_range(index_range)
    lam = law.log_mgf(beta)
    omega = np.empty((count, stop - start))
    for i in range(count):
        rng = make_rng(seed, "disorder", first + i)
        omega[i] = law.sample(rng, stop)[start:]
    zeta = np.expm1(beta * omega - lam)
    return ChaosField(zeta, beta, law.name, seed, np.arange(first, first + count),
                      omega, start)


def zeta_field(law, beta, index_range, seed, stream=0):
    r"""
    Draw one field :math:`\zeta_n`, n in *index_range*.

    Parameters
    ----------
    law : DisorderLaw or string
    beta : float
    index_range : integer or (start, stop)
        An integer N means the times 0..N.
    seed : integer
        The master seed.
    stream : integer, optional
        The field index within the ensemble.

    Examples
    --------
    >>> field = zeta_field("gaussian", 0.4, 1000, seed=1)
    >>> field.zeta.shape
    (1001,)
    """
    return zeta_fields(law, beta, index_range, seed, 1, first=stream).row(0)


def tilted_field(field, h):
    r"""The field :math:`e^h(1+\zeta) - 1` carrying the pinning reward h."""
    return ChaosField(np.expm1(h + np.log1p(field.zeta)), field.beta,
                      field.law, field.seed, field.streams, field.omega,
                      field.start)
