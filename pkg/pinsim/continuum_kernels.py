"""
Heat kernel, Brownian hitting densities, test functions and the
quadratures pairing them.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, factorial2, roots_legendre

from pinsim.utils import mylog
from pinsim.walks import LatticeWeights

sqrt_two_pi = np.sqrt(2.0 * np.pi)


def heat_kernel(t, x):
    r"""
    The heat kernel :math:`g_t(x) = e^{-x^2/2t}/\sqrt{2\pi t}`, with the
    convention :math:`g_0(0) = 1` and :math:`g_0(x) = 0` for x != 0.
    """
    t, x = np.broadcast_arrays(np.asarray(t, dtype="float64"),
                               np.asarray(x, dtype="float64"))
    if np.any(t < 0.0):
        raise ValueError("The heat kernel needs t >= 0!")
    out = np.zeros(t.shape)
    pos = t > 0.0
    out[pos] = np.exp(-0.5 * x[pos] ** 2 / t[pos]) / np.sqrt(2.0 * np.pi * t[pos])
    out[~pos & (x == 0.0)] = 1.0
    return out[()] if out.ndim == 0 else out


def bm_first_hit(x, s):
    r"""
    Density in s of the first time a Brownian motion started at x hits 0,
    :math:`Q(x,s) = |x| e^{-x^2/2s}/(\sqrt{2\pi} s^{3/2})`.
    """
    x = np.asarray(x, dtype="float64")
    s = np.asarray(s, dtype="float64")
    if np.any(s <= 0.0):
        raise ValueError("The first-hit density needs s > 0!")
    return np.abs(x) * np.exp(-0.5 * x * x / s) / (sqrt_two_pi * s ** 1.5)


def bm_first_hit_cdf(x, s):
    r""":math:`\int_0^s Q(x,r)\,dr = {\rm erfc}(|x|/\sqrt{2s})`."""
    x = np.asarray(x, dtype="float64")
    s = np.asarray(s, dtype="float64")
    return erfc(np.abs(x) / np.sqrt(2.0 * s))


def bm_no_hit(x, y, t=1.0):
    r"""
    Density of a Brownian motion started at x being at y at time t
    without having hit 0, by reflection:
    :math:`\bar Q(x,y) = g_t(y-x) - g_t(y+x)` if xy > 0, else 0.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype="float64"),
                               np.asarray(y, dtype="float64"))
    out = heat_kernel(t, y - x) - heat_kernel(t, y + x)
    return np.where(x * y > 0.0, out, 0.0)


class TestFn:
    r"""
    A real test function with a declared support.

    Parameters
    ----------
    func : callable
        Vectorized evaluator.
    support : tuple of floats or None
        The closed support interval, or None for unbounded support.
    sup_norm : float, optional
        An upper bound for :math:`|f|`. Estimated on a dense grid if
        not given.
    breakpoints : sequence of floats, optional
        Points where the function is not smooth; quadratures split there.
    name : string, optional
    """
    __test__ = False

    def __init__(self, func, support=None, sup_norm=None, breakpoints=(),
                 name="custom"):
        self.func = func
        self.support = None if support is None else (float(support[0]),
                                                     float(support[1]))
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self.name = name
        if sup_norm is None:
            if self.support is None:
                grid = np.linspace(-50.0, 50.0, 20001)
            else:
                grid = np.linspace(*self.support, 20001)
            sup_norm = float(np.abs(self(grid)).max())
        self.sup_norm = sup_norm

    @property
    def bounded(self):
        return self.support is not None

    def __call__(self, x):
        x = np.asarray(x, dtype="float64")
        out = np.asarray(self.func(x), dtype="float64") * np.ones_like(x)
        if self.support is not None:
            out = np.where((x >= self.support[0]) & (x <= self.support[1]),
                           out, 0.0)
        return out

    def interval(self, center=0.0, scale=np.inf):
        """The support intersected with [center - scale, center + scale]."""
        lo, hi = center - scale, center + scale
        if self.support is not None:
            lo, hi = max(lo, self.support[0]), min(hi, self.support[1])
        return lo, hi

    def __repr__(self):
        return f"TestFn(name={self.name!r}, support={self.support})"


def gaussian_bump(scale=0.5, center=0.0, mass=1.0, cutoff=12.0):
    """A Gaussian density profile, truncated at *cutoff* standard deviations."""
    def f(x):
        return mass * np.exp(-0.5 * ((x - center) / scale) ** 2) / (sqrt_two_pi * scale)
    return TestFn(f, support=(center - cutoff * scale, center + cutoff * scale),
                  sup_norm=mass / (sqrt_two_pi * scale), name="gaussian_bump")


def tent(half_width=1.0, center=0.0, height=1.0):
    def f(x):
        return height * np.clip(1.0 - np.abs(x - center) / half_width, 0.0, None)
    return TestFn(f, support=(center - half_width, center + half_width),
                  sup_norm=abs(height),
                  breakpoints=(center - half_width, center, center + half_width),
                  name="tent")


def _smooth_step(x):
    # C-infinity transition from 0 (x <= 0) to 1 (x >= 1)
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0.0, np.exp(-1.0 / np.where(x > 0.0, x, 1.0)), 0.0)
        b = np.where(x < 1.0, np.exp(-1.0 / np.where(x < 1.0, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def indicator_smooth(half_width=1.0, edge=0.25, center=0.0, height=1.0):
    """
    A smoothed indicator: *height* on [center - half_width, center +
    half_width], decaying smoothly to 0 over a further distance *edge*.
    """
    def f(x):
        d = np.abs(x - center) - half_width
        return height * (1.0 - _smooth_step(d / edge))
    r = half_width + edge
    return TestFn(f, support=(center - r, center + r), sup_norm=abs(height),
                  breakpoints=(center - r, center - half_width,
                               center + half_width, center + r),
                  name="indicator_smooth")


def constant(value=1.0):
    return TestFn(lambda x: value * np.ones_like(x), support=None,
                  sup_norm=abs(value), name="constant")


test_functions = {"gaussian_bump": gaussian_bump,
                  "tent": tent,
                  "indicator_smooth": indicator_smooth,
                  "constant": constant}


def make_test_function(name, **params):
    if name not in test_functions:
        raise KeyError(f"{name} is not a known test function!")
    return test_functions[name](**params)


@dataclass
class QuadratureScheme:
    r"""
    Composite Gauss-Legendre quadrature with uniform panel doubling.

    Parameters
    ----------
    order : integer
        Gauss-Legendre nodes per panel.
    abs_tol, rel_tol : float
        Refinement stops once successive estimates differ by less than
        ``max(abs_tol, rel_tol*|I|)``.
    max_levels : integer
        The most panel doublings before giving up.
    """
    order: int = 16
    abs_tol: float = 1.0e-12
    rel_tol: float = 1.0e-10
    max_levels: int = 12

    def _estimate(self, f, edges, level):
        x, w = roots_legendre(self.order)
        sub = 2 ** level
        fine = np.concatenate([np.linspace(a, b, sub + 1)[:-1]
                               for a, b in zip(edges[:-1], edges[1:])] + [edges[-1:]])
        a = fine[:-1, None]
        b = fine[1:, None]
        nodes = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
        weights = (0.5 * (b - a) * w).ravel()
        vals = np.asarray(f(nodes), dtype="float64")
        terms = weights * vals
        return terms.sum(), np.abs(terms).sum()

    def integrate(self, f, a, b, breakpoints=()):
        """
        Integrate the vectorized *f* over [a, b]. Returns the value and an
        error estimate.
        """
        if b < a:
            value, err = self.integrate(f, b, a, breakpoints)
            return -value, err
        if a == b:
            return 0.0, 0.0
        inner = [p for p in breakpoints if a < p < b]
        edges = np.unique(np.concatenate([[a], inner, [b]]))
        previous, _ = self._estimate(f, edges, 0)
        err = np.inf
        for level in range(1, self.max_levels + 1):
            current, scale = self._estimate(f, edges, level)
            err = abs(current - previous)
            if err <= max(self.abs_tol, self.rel_tol * abs(current)):
                # rounding floor for integrands the rule already resolves
                return current, max(err, 16.0 * np.finfo(float).eps * scale)
            previous = current
        msg = (f"Quadrature on [{a}, {b}] did not reach the tolerance after "
               f"{self.max_levels} refinements (achieved error {err:.3e}).")
        mylog.error(msg)
        raise RuntimeError(msg)


default_scheme = QuadratureScheme()


def cell_integrals(func, edges, order=8):
    """Integrals of *func* over consecutive cells [edges[i], edges[i+1]]."""
    x, w = roots_legendre(order)
    a = np.asarray(edges[:-1], dtype="float64")[:, None]
    b = np.asarray(edges[1:], dtype="float64")[:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    return (func(nodes) * (0.5 * (b - a) * w)).sum(axis=-1)


def discretize(phi, N, window=None, reach=0):
    r"""
    The lattice version :math:`\varphi_N(u) = \int_u^{u+1}\varphi(t/\sqrt{N})\,dt`
    of a test function.

    Parameters
    ----------
    phi : TestFn
    N : integer
    window : tuple of integers, optional
        Lattice range to cover; required for unbounded support.
    reach : integer, optional
        Zero padding added on both sides for later propagation.

    Returns
    -------
    :class:`~pinsim.walks.LatticeWeights`
    """
    sN = np.sqrt(N)
    if window is None:
        if not phi.bounded:
            raise ValueError(f"Test function '{phi.name}' has unbounded support, "
                             "so a lattice window must be given!")
        lo = int(np.floor(phi.support[0] * sN)) - 1
        hi = int(np.ceil(phi.support[1] * sN))
    else:
        lo, hi = int(window[0]), int(window[1])
    u = np.arange(lo, hi + 2, dtype="float64")
    vals = cell_integrals(lambda t: phi(t / sN), u)
    return LatticeWeights(vals, lo, reach=reach)


def _gauss_smooth(fn, centers, t, z_max=12.0, panels=24, order=16):
    # x -> int fn(y) g_t(y - x) dy for an array of centers x
    x, w = roots_legendre(order)
    out = np.empty(len(centers))
    for i, c in enumerate(np.atleast_1d(centers)):
        lo, hi = fn.interval(c, z_max * np.sqrt(t))
        if hi <= lo:
            out[i] = 0.0
            continue
        edges = np.unique(np.concatenate([np.linspace(lo, hi, panels + 1),
                                          [p for p in fn.breakpoints + (c,)
                                           if lo < p < hi]]))
        a = edges[:-1, None]
        b = edges[1:, None]
        nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
        out[i] = (fn(nodes) * heat_kernel(t, nodes - c) * (0.5 * (b - a) * w)).sum()
    return out


def heat_pairing(phi, t, a=0.0, scheme=None):
    r""":math:`g_t(\varphi, a) = \int\varphi(x)\,g_t(a-x)\,dx` with error estimate."""
    scheme = scheme or default_scheme
    if t == 0.0:
        return float(phi(a)), 0.0
    lo, hi = phi.interval(a, 40.0 * np.sqrt(t))
    if hi <= lo:
        return 0.0, 0.0
    return scheme.integrate(lambda x: phi(x) * heat_kernel(t, a - x), lo, hi,
                            breakpoints=phi.breakpoints + (a,))


@dataclass
class Pairings:
    phi_a: float
    b_psi: float
    phi_psi: float
    error: float


def pairings(phi, psi, t=1.0, a=0.0, b=0.0, scheme=None, tol=1.0e-8):
    r"""
    The heat-kernel pairings :math:`g_t(\varphi,a)`, :math:`g_t(b,\psi)` and
    :math:`g_t(\varphi,\psi) = \iint\varphi(x)g_t(y-x)\psi(y)\,dx\,dy`.

    Raises RuntimeError if the combined error estimate exceeds *tol*.
    """
    if not phi.bounded:
        raise ValueError("pairings needs a compactly supported phi!")
    scheme = scheme or QuadratureScheme(abs_tol=1.0e-12, rel_tol=1.0e-11)
    phi_a, e1 = heat_pairing(phi, t, a, scheme)
    b_psi, e2 = heat_pairing(psi, t, b, scheme)
    lo, hi = phi.interval()

    def inner(x):
        return phi(x) * _gauss_smooth(psi, x, t)

    phi_psi, e3 = scheme.integrate(inner, lo, hi, breakpoints=phi.breakpoints)
    error = e1 + e2 + e3
    if error > tol:
        raise RuntimeError(f"Pairing tolerance {tol:.1e} not achieved "
                           f"(error estimate {error:.3e}).")
    return Pairings(float(phi_a), float(b_psi), float(phi_psi), float(error))


def _hit_profile(phi, sigma, z_max=16.0, scheme=None):
    # A(sigma) = int phi(sigma z) |z| g_1(z) dz
    scheme = scheme or default_scheme
    if sigma == 0.0:
        return float(phi(0.0)) * np.sqrt(2.0 / np.pi), 0.0
    lo, hi = -z_max, z_max
    if phi.support is not None:
        lo = max(lo, phi.support[0] / sigma)
        hi = min(hi, phi.support[1] / sigma)
    if hi <= lo:
        return 0.0, 0.0
    bps = tuple(p / sigma for p in phi.breakpoints) + (0.0,)
    return scheme.integrate(lambda z: phi(sigma * z) * np.abs(z) * heat_kernel(1.0, z),
                            lo, hi, breakpoints=bps)


def hitting_pairing(phi, s, scheme=None, z_max=16.0):
    r"""
    :math:`\int\varphi(x)\,Q(x,s)\,dx`, evaluated in the scaled variable
    :math:`x = \sqrt{s}z`.
    """
    if s <= 0.0:
        raise ValueError("hitting_pairing needs s > 0!")
    sigma = np.sqrt(s)
    value, err = _hit_profile(phi, sigma, z_max=z_max, scheme=scheme)
    return value / sigma, err / sigma


def hitting_moment(k, s, scheme=None):
    r"""
    :math:`\int|x|^{2k+1}Q(x,s)\,dx` by quadrature, returned with its
    closed form :math:`(2k+1)!!\,s^k`.
    """
    power = 2 * k + 1
    phi = TestFn(lambda x: np.abs(x) ** power, sup_norm=np.inf,
                 breakpoints=(0.0,), name=f"abs_power_{power}")
    value, _ = hitting_pairing(phi, s, scheme=scheme)
    return float(value), float(factorial2(power) * s ** k)


def sE(phi, psi, order=64, tol=1.0e-6):
    r"""
    The deterministic term

    .. math::

        \iint_{0<s<t<1} \frac{ds\,dt}{\sqrt{2\pi(t-s)}}
        \int\varphi(u)Q(u,s)\,du \int\psi(v)Q(v,1-t)\,dv.

    With :math:`s=\sigma^2`, :math:`1-t=\tau^2` and polar coordinates in
    :math:`(\sigma,\tau)`, the integrand becomes smooth on a rectangle and
    is integrated by tensor Gauss-Legendre. The error is estimated
    against a rule of lower order.
    """
    if not (phi.bounded and psi.bounded):
        raise ValueError("sE needs compactly supported test functions!")
    scheme = QuadratureScheme(order=16, abs_tol=1.0e-13, rel_tol=1.0e-12)

    def rule(n):
        x, w = roots_legendre(n)
        theta = 0.25 * np.pi * (x + 1.0)
        wt = 0.25 * np.pi * w
        ww = 0.5 * (x + 1.0)
        wv = 0.5 * w
        rho = np.sqrt(1.0 - ww ** 2)
        sig = np.outer(np.cos(theta), rho)
        tau = np.outer(np.sin(theta), rho)
        A = np.vectorize(lambda z: _hit_profile(phi, z, scheme=scheme)[0])(sig)
        B = np.vectorize(lambda z: _hit_profile(psi, z, scheme=scheme)[0])(tau)
        return 4.0 / sqrt_two_pi * np.einsum("i,j,ij,ij->", wt, wv, A, B)

    value = rule(order)
    err = abs(value - rule(order * 3 // 4))
    if err > tol:
        raise RuntimeError(f"sE tolerance {tol:.1e} not achieved "
                           f"(error estimate {err:.3e}).")
    return float(value)


@dataclass
class HittingBasisFit:
    coefficients: np.ndarray
    phi: TestFn
    sup_error: float
    condition: float
    radius: float


def project_onto_hitting_basis(f, K, radius=None, n_nodes=512, max_condition=1.0e13):
    r"""
    Find :math:`\varphi` with :math:`\int\varphi(x)Q(x,s)\,dx \approx f(s)`
    on [0, 1].

    The fit :math:`f(s)\approx\sum_{k\le K}c_k s^k` is a Chebyshev least
    squares fit on Chebyshev nodes, and
    :math:`\varphi(x) = \sum_k c_k |x|^{2k+1}/(2k+1)!!` reproduces it
    because :math:`\int|x|^{2k+1}Q(x,s)\,dx = (2k+1)!!\,s^k`.

    Parameters
    ----------
    f : callable
        The function on [0, 1].
    K : integer
        The polynomial degree.
    radius : float, optional
        If given, phi is multiplied by a smooth cutoff equal to 1 on
        [-radius, radius] and vanishing beyond radius + 1, which makes it
        compactly supported. The reported sup error includes the effect.

    Returns
    -------
    :class:`HittingBasisFit`
    """
    j = np.arange(n_nodes)
    s = 0.5 * (1.0 - np.cos(np.pi * (j + 0.5) / n_nodes))
    vander = np.vander(s, K + 1, increasing=True)
    condition = float(np.linalg.cond(vander))
    if condition > max_condition:
        raise ValueError(f"Hitting-basis fit with K = {K} is ill-conditioned "
                         f"(condition estimate {condition:.3e})!")
    cheb = np.polynomial.Chebyshev.fit(s, np.asarray(f(s), dtype="float64"), K,
                                       domain=[0.0, 1.0])
    coef = cheb.convert(kind=np.polynomial.Polynomial).coef
    coef = np.pad(coef, (0, K + 1 - coef.size))
    dfact = factorial2(2 * np.arange(K + 1) + 1).astype("float64")
    scaled = coef / dfact
    powers = 2 * np.arange(K + 1) + 1

    if radius is None:
        def func(x):
            ax = np.abs(x)[..., None]
            return (scaled * ax ** powers).sum(axis=-1)
        phi = TestFn(func, support=None, sup_norm=float((np.abs(scaled) * 50.0 ** powers).sum()),
                     breakpoints=(0.0,), name="hitting_basis")
    else:
        cut = indicator_smooth(half_width=radius, edge=1.0)

        def func(x):
            ax = np.abs(x)[..., None]
            return (scaled * ax ** powers).sum(axis=-1) * cut(x)
        phi = TestFn(func, support=cut.support, breakpoints=(0.0,) + cut.breakpoints,
                     name="hitting_basis")

    grid = np.linspace(0.0, 1.0, 201)[1:]
    fitted = np.array([hitting_pairing(phi, si)[0] for si in grid])
    sup_error = float(np.abs(fitted - np.asarray(f(grid), dtype="float64")).max())
    mylog.info(f"Hitting-basis fit with K = {K}: sup error {sup_error:.3e}, "
               f"condition {condition:.3e}.")
    return HittingBasisFit(coef, phi, sup_error, condition,
                           np.inf if radius is None else radius)
