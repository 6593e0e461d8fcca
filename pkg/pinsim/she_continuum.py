"""
The mollified stochastic heat equation: mollifiers, the continuum
renewal kernel, the critical scaling and the Feynman-Kac Monte Carlo.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from pinsim.continuum_kernels import _gauss_smooth, default_scheme, heat_kernel
from pinsim.dickman import g_theta_cumulative
from pinsim.ensemble import MCEstimate, run_ensemble
from pinsim.lib.renewal import renewal_solve_blocked
from pinsim.utils import euler_gamma, make_rng, mylog, parse_seed

max_log_weight = 700.0


def _bump_profile(x):
    x = np.asarray(x, dtype="float64")
    inside = np.abs(x) < 1.0
    den = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, np.exp(-1.0 / den), 0.0)


def _cosine_profile(x):
    x = np.asarray(x, dtype="float64")
    return np.where(np.abs(x) < 1.0, 0.5 * (1.0 + np.cos(np.pi * x)), 0.0)


mollifier_profiles = {"bump": _bump_profile,
                      "cosine": _cosine_profile}


class Mollifier:
    r"""
    An even probability density :math:`\rho` supported on [-radius, radius],
    together with a tabulation of :math:`\rho*\rho` on [0, 2 radius].

    Parameters
    ----------
    name : string
        One of the keys of ``mollifier_profiles``.
    radius : float, optional
        The support radius.
    n_grid : integer, optional
        Number of tabulation points of the self-convolution.
    """
    def __init__(self, name="bump", radius=1.0, n_grid=1025):
        if name not in mollifier_profiles:
            raise KeyError(f"{name} is not a known mollifier! Choose from "
                           f"{list(mollifier_profiles)}.")
        if radius <= 0.0:
            raise ValueError(f"The mollifier radius must be positive, got {radius}!")
        self.name = name
        self.radius = float(radius)
        self._profile = mollifier_profiles[name]
        mass = quad(lambda x: float(self._profile(x)), -1.0, 1.0,
                    epsabs=1.0e-14, epsrel=1.0e-13, limit=200)[0]
        self._norm = mass * self.radius
        self.sup = float(self(0.0))
        a = np.linspace(0.0, 2.0 * self.radius, n_grid)
        c = np.array([self._self_conv(x) for x in a])
        self._conv = CubicSpline(a, c)

    def __call__(self, x):
        return self._profile(np.asarray(x) / self.radius) / self._norm

    def _self_conv(self, a):
        R = self.radius
        lo, hi = max(-R, a - R), min(R, a + R)
        if hi <= lo:
            return 0.0
        return quad(lambda x: float(self(x) * self(a - x)), lo, hi,
                    epsabs=1.0e-14, epsrel=1.0e-12, limit=200)[0]

    def self_convolution(self, a):
        r""":math:`(\rho*\rho)(a)`."""
        a = np.abs(np.asarray(a, dtype="float64"))
        return np.where(a < 2.0 * self.radius,
                        self._conv(np.clip(a, 0.0, 2.0 * self.radius)), 0.0)

    def check(self, tol=1.0e-10):
        """Raise ValueError unless rho is an even, normalized density
        vanishing outside its support."""
        R = self.radius
        mass = quad(lambda x: float(self(x)), -R, R, epsabs=1.0e-14,
                    epsrel=1.0e-13, limit=200)[0]
        if abs(mass - 1.0) > tol:
            raise ValueError(f"Mollifier '{self.name}' has mass {mass}!")
        x = np.linspace(0.0, 2.0 * R, 2001)
        if np.max(np.abs(self(x) - self(-x))) > tol:
            raise ValueError(f"Mollifier '{self.name}' is not even!")
        if np.any(self(x[x >= R]) != 0.0) or np.any(self(x) < 0.0):
            raise ValueError(f"Mollifier '{self.name}' is not a density "
                             f"supported on [-{R}, {R}]!")
        return True

    def __repr__(self):
        return f"Mollifier('{self.name}', radius={self.radius})"


@lru_cache(maxsize=8)
def make_mollifier(name="bump", radius=1.0):
    return Mollifier(name, radius)


def _parse_mollifier(mollifier):
    if mollifier is None:
        return make_mollifier()
    if isinstance(mollifier, str):
        return make_mollifier(mollifier)
    return mollifier


_gl_x, _gl_w = roots_legendre(48)


def _h_of_t(rho, t):
    # h(t) = int g_t(a) (rho*rho)(a) da, on [0, min(2R, 14 sqrt t)] in 8 panels
    t = np.atleast_1d(np.asarray(t, dtype="float64"))
    top = np.minimum(2.0 * rho.radius, 14.0 * np.sqrt(t))
    panels = 8
    u = (np.arange(panels)[:, None] + 0.5 * (_gl_x[None, :] + 1.0)).ravel() / panels
    w = np.tile(0.5 * _gl_w, panels) / panels
    a = top[:, None] * u[None, :]
    vals = heat_kernel(t[:, None], a) * rho.self_convolution(a)
    return 2.0 * top * (vals @ w)


def r_of_t(mollifier, t):
    r"""
    The continuum renewal kernel

    .. math::

        r(t) = \iiiint\rho(x')\rho(y')g_t(x-x')g_t(y-y')\rho(x)\rho(y)
        = \Big(\int g_t(a)(\rho*\rho)(a)\,da\Big)^2,

    which behaves like :math:`1/(2\pi t)` for large t.
    """
    rho = _parse_mollifier(mollifier)
    t = np.asarray(t, dtype="float64")
    if np.any(t <= 0.0):
        raise ValueError("r(t) needs t > 0!")
    out = _h_of_t(rho, t.ravel()) ** 2
    return out.reshape(t.shape)[()] if t.ndim else float(out[0])


def log_energy(mollifier):
    r"""
    :math:`\iint(\rho*\rho)(a)(\rho*\rho)(b)\log\frac{1}{a^2+b^2}\,da\,db`,
    in polar coordinates with the logarithm integrated exactly.
    """
    rho = _parse_mollifier(mollifier)
    R2 = 2.0 * rho.radius

    def radial(phi):
        c, s = np.cos(phi), np.sin(phi)
        top = R2 / max(c, s)
        # int_0^top r log(r) F(r) dr
        val = quad(lambda r: float(rho.self_convolution(r * c) *
                                   rho.self_convolution(r * s)),
                   0.0, top, weight="alg-loga", wvar=(1.0, 0.0),
                   epsabs=1.0e-13, epsrel=1.0e-10, limit=200)[0]
        return val

    inner = quad(radial, 0.0, 0.5 * np.pi, epsabs=1.0e-12, epsrel=1.0e-10,
                 limit=200)[0]
    return -8.0 * inner


def vartheta_from_theta(theta, mollifier=None):
    r"""
    The renewal parameter of a mollified SHE in the window
    :math:`\beta_\delta^2 = 2\pi/\log\delta^{-2} + \theta/(\log\delta^{-2})^2`:

    .. math::

        \vartheta = \log 2 - \gamma + \iint(\rho*\rho)(a)(\rho*\rho)(b)
        \log\frac{1}{a^2+b^2}\,da\,db + \frac{\theta}{2\pi}.
    """
    rho = _parse_mollifier(mollifier)
    return float(np.log(2.0) - euler_gamma + log_energy(rho) + theta / (2.0 * np.pi))


def R_delta(mollifier, delta):
    r""":math:`\int_0^{\delta^{-2}} r(t)\,dt`."""
    rho = _parse_mollifier(mollifier)
    T = delta ** -2
    head = quad(lambda t: float(_h_of_t(rho, t)[0] ** 2), 0.0, min(T, 1.0),
                epsabs=1.0e-13, epsrel=1.0e-11, limit=200)[0]
    if T <= 1.0:
        return head
    tail = quad(lambda u: float(np.exp(u) * _h_of_t(rho, np.exp(u))[0] ** 2),
                0.0, np.log(T), epsabs=1.0e-13, epsrel=1.0e-11, limit=400)[0]
    return head + tail


@dataclass
class ContinuumWindow:
    delta: float
    theta: float
    beta: float
    vartheta: float
    R_delta: float
    mollifier: str = "bump"

    @property
    def log_scale(self):
        r""":math:`\log\delta^{-2}`."""
        return -2.0 * np.log(self.delta)

    @property
    def consistency_gap(self):
        r""":math:`\beta_\delta^2R_\delta - 1 - \vartheta/\log\delta^{-2}`."""
        return self.beta ** 2 * self.R_delta - 1.0 - self.vartheta / self.log_scale

    def as_dict(self):
        return {"delta": self.delta, "theta": self.theta, "beta": self.beta,
                "vartheta": self.vartheta, "R_delta": self.R_delta,
                "consistency_gap": self.consistency_gap,
                "mollifier": self.mollifier}


def continuum_window(delta, theta, mollifier=None):
    r"""
    :math:`\beta_\delta` with the vanishing correction set to 0, the
    matching :math:`\vartheta` and :math:`R_\delta`.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}!")
    rho = _parse_mollifier(mollifier)
    L = -2.0 * np.log(delta)
    beta2 = 2.0 * np.pi / L + theta / L ** 2
    if beta2 <= 0.0:
        raise ValueError(f"theta = {theta} gives beta_delta^2 = {beta2} <= 0 "
                         f"at delta = {delta}!")
    return ContinuumWindow(float(delta), float(theta), float(np.sqrt(beta2)),
                           vartheta_from_theta(theta, rho), R_delta(rho, delta),
                           rho.name)


def she_renewal_function(mollifier, beta, T_max, n_steps=4096):
    r"""
    Solve :math:`V(T) = 1 + \beta^2\int_0^T r(s)V(T-s)\,ds` on a uniform
    grid of [0, T_max] with the trapezoidal rule. ``V(T)`` sums
    :math:`\beta^{2k}` times the k-fold integrals of r over total time
    at most T.

    Returns
    -------
    T, V : ndarray
    """
    rho = _parse_mollifier(mollifier)
    T = np.linspace(0.0, T_max, n_steps + 1)
    dT = T[1]
    r = np.empty_like(T)
    r[0] = rho.self_convolution(0.0) ** 2
    r[1:] = _h_of_t(rho, T[1:]) ** 2
    b2 = beta * beta
    c = 1.0 / (1.0 - 0.5 * b2 * dT * r[0])
    w = np.full(T.size, c)
    w[0] = 1.0
    source = 1.0 - 0.5 * b2 * dT * r
    source[0] = 1.0
    V = renewal_solve_blocked(w, source, b2 * dT * r)
    return T, V


@dataclass
class SHESecondMoment:
    value: float
    mean_square: float
    k1: float
    discretization_error: float
    window: ContinuumWindow

    @property
    def variance(self):
        return self.value - self.mean_square


def _support(f):
    if not f.bounded:
        raise ValueError(f"{f.name} has unbounded support; a compactly "
                         f"supported test function is required!")
    return f.interval()


def _t_nodes(T_micro, order=8):
    edges = np.unique(np.concatenate([np.linspace(0.0, 1.0, 9),
                                      1.0 - np.geomspace(0.125, 0.1 / T_micro, 24)]))
    x, w = roots_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * x + 0.5 * (b + a)).ravel(), (0.5 * (b - a) * w).ravel()


def _prefactor(f, rho, delta, t):
    # (int rho(x') (f*g_t)(delta x') dx')^2
    x, w = roots_legendre(16)
    xs = rho.radius * x
    ws = rho.radius * w * rho(xs)
    return np.array([(ws @ _gauss_smooth(f, delta * xs, tk)) ** 2 for tk in t])


def she_second_moment_semianalytic(delta, theta, f, mollifier=None, n_steps=4096,
                                   rel_tol=1.0e-2):
    r"""
    The second moment of :math:`u^\delta[f] = \int f(x)u^\delta(1,x)\,dx`
    with the pair of heat kernels between consecutive noise times
    replaced by r:

    .. math::

        (\textstyle\int f)^2 + \beta_\delta^2\int_0^1\Big(\int\rho(x')
        (f*g_t)(\delta x')\,dx'\Big)^2V\big(\delta^{-2}(1-t)\big)\,dt.

    The discretization error is the change when the renewal grid is
    halved. A RuntimeError carrying it is raised when it exceeds
    *rel_tol* times the fluctuation term.
    """
    rho = _parse_mollifier(mollifier)
    window = continuum_window(delta, theta, rho)
    T_micro = delta ** -2
    lo, hi = _support(f)
    mass = default_scheme.integrate(f, lo, hi, breakpoints=f.breakpoints)[0]
    t, w = _t_nodes(T_micro)
    P = _prefactor(f, rho, delta, t)
    b2 = window.beta ** 2

    def contract(n):
        T, V = she_renewal_function(rho, window.beta, T_micro, n)
        Vt = np.interp(T_micro * (1.0 - t), T, V)
        return b2 * (w * P) @ Vt

    fine = contract(n_steps)
    coarse = contract(n_steps // 2)
    err = abs(fine - coarse)
    if err > rel_tol * abs(fine):
        msg = (f"Second moment discretization error {err:.3e} exceeds "
               f"{rel_tol:.1e} of {fine:.3e}; increase n_steps beyond {n_steps}.")
        mylog.error(msg)
        raise RuntimeError(msg)
    k1 = float(b2 * (w * P).sum())
    return SHESecondMoment(float(mass ** 2 + fine), float(mass ** 2), k1,
                           float(err), window)


def she_second_moment_limit(vartheta, f, order=8):
    r"""
    :math:`2\pi\int_0^1(f*g_t)(0)^2\int_0^{1-t}G_\vartheta(s)\,ds\,dt`,
    the limiting variance of :math:`u^\delta[f]`.
    """
    t, w = _t_nodes(1.0e6, order)
    F = np.array([_gauss_smooth(f, [0.0], tk)[0] for tk in t])
    cum = g_theta_cumulative(vartheta, 1.0 - t)
    return float(2.0 * np.pi * (w * F ** 2) @ cum)


def _she_chunk(first, count, beta, mollifier, starts, node_weights, n_paths,
               n_steps, dt, seed):
    out = np.empty(count)
    sdt = np.sqrt(dt)
    for j in range(count):
        i = first + j
        dW = make_rng(seed, "she_noise", i).standard_normal(n_steps) * sdt
        paths = make_rng(seed, "she_paths", i)
        B = np.repeat(starts, n_paths)
        logw = np.zeros(B.size)
        for k in range(n_steps):
            rho = mollifier(B)
            logw += beta * rho * dW[k] - 0.5 * beta * beta * rho * rho * dt
            B += sdt * paths.standard_normal(B.size)
        top = logw.max()
        if not np.isfinite(top) or top > max_log_weight:
            mylog.error(f"Noise {i}: log-weight {top:.1f} at beta = {beta}, "
                        f"dt = {dt}.")
            raise RuntimeError(f"Feynman-Kac weight overflow in noise realization {i}!")
        avg = np.exp(logw).reshape(starts.size, n_paths).mean(axis=1)
        out[j] = node_weights @ avg
    return out


def she_mc(delta, theta, f, dt=None, n_paths=64, n_noise=64, seed=0,
           mollifier=None, n_starts=48, workers=1):
    r"""
    Monte Carlo for :math:`u^\delta[f]` through the Feynman-Kac
    representation in microscopic time :math:`[0, \delta^{-2}]`:

    .. math::

        u^\delta[f] = \int f(x)\,E^{x/\delta}\Big[\exp\Big(\beta_\delta
        \int_0^{\delta^{-2}}\rho(B_s)\,dW_s - \frac12\beta_\delta^2
        \int_0^{\delta^{-2}}\rho(B_s)^2\,ds\Big)\Big]\,dx.

    The x integral is a composite Gauss-Legendre rule of order 8 with
    about *n_starts* nodes over the support of f.
    For every noise realization all paths share the same increments
    of W, with the Ito sum evaluated at left endpoints. Noise i and its
    paths use their own streams, so results do not depend on *workers*.

    Returns
    -------
    :class:`~pinsim.ensemble.MCEstimate` over noise realizations.
    """
    rho = _parse_mollifier(mollifier)
    window = continuum_window(delta, theta, rho)
    T_micro = delta ** -2
    if dt is None:
        dt = T_micro / 2 ** 16
    n_steps = int(round(T_micro / dt))
    dt = T_micro / n_steps
    stiffness = window.beta ** 2 * rho.sup ** 2 * dt
    if stiffness >= 0.1:
        raise ValueError(f"beta^2 sup(rho)^2 dt = {stiffness:.3f} is too large; "
                         f"reduce dt below {0.1 / (window.beta * rho.sup) ** 2:.3e}.")
    lo, hi = _support(f)
    x, w = roots_legendre(8)
    edges = np.linspace(lo, hi, max(n_starts // 8, 1) + 1)
    a, b = edges[:-1, None], edges[1:, None]
    xs = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    node_weights = (0.5 * (b - a) * w).ravel() * f(xs)
    n_starts = xs.size
    mylog.info(f"SHE Monte Carlo: delta = {delta}, beta = {window.beta:.5f}, "
               f"{n_steps} steps, {n_starts * n_paths} paths per noise.")
    vals = run_ensemble(_she_chunk, n_noise, workers=workers,
                        desc="Sampling noise realizations", beta=window.beta,
                        mollifier=rho, starts=xs / delta,
                        node_weights=node_weights, n_paths=n_paths,
                        n_steps=n_steps, dt=dt, seed=parse_seed(seed))
    return MCEstimate.from_samples(vals)
