"""
Random-walk step laws and the exact kernel tables derived from them.
"""
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import roots_legendre

from pinsim.lib.renewal import lattice_step
from pinsim.utils import mylog, canonical_hash, validate_parameters, \
    write_table

cache_magic = "PINSIMKT"
cache_version = 1


def _to_fraction(p):
    if isinstance(p, Fraction):
        return p
    if isinstance(p, (int, np.integer)):
        return Fraction(int(p))
    if isinstance(p, str):
        return Fraction(p)
    return None


class StepLaw:
    r"""
    A random-walk step distribution with finite support on the integers.

    Parameters
    ----------
    support : dict or iterable of (offset, probability) pairs
        The step offsets and their probabilities. Probabilities given as
        integers, :class:`~fractions.Fraction` instances or strings such as
        ``"3/8"`` are kept as exact rationals; floats switch the moment
        checks to floating-point arithmetic.
    name : string, optional
        A name for the law, used in logs, caches and manifests.

    Examples
    --------
    >>> law = StepLaw({0: "3/8", 1: "1/4", -1: "1/4", 2: "1/16", -2: "1/16"},
    ...               name="binomial4")
    """
    def __init__(self, support, name="custom"):
        if isinstance(support, dict):
            items = list(support.items())
        else:
            items = list(support)
        if len(items) == 0:
            raise ValueError("A step law needs a nonempty support!")
        merged = {}
        for offset, p in items:
            if int(offset) != offset:
                raise ValueError(f"Step offsets must be integers, got {offset}!")
            merged.setdefault(int(offset), []).append(p)
        offsets = sorted(merged)
        exact = []
        for s in offsets:
            fracs = [_to_fraction(p) for p in merged[s]]
            exact.append(None if None in fracs else sum(fracs, Fraction(0)))
        if any(e is None for e in exact):
            self.exact_probs = None
            probs = [float(sum(float(Fraction(p)) if isinstance(p, str) else
                               float(p) for p in merged[s])) for s in offsets]
        else:
            self.exact_probs = exact
            probs = [float(e) for e in exact]
        self.name = name
        self.offsets = np.array(offsets, dtype="int64")
        self.probs = np.array(probs, dtype="float64")
        keep = self.probs != 0.0
        self.offsets = self.offsets[keep]
        self.probs = self.probs[keep]
        if self.exact_probs is not None:
            self.exact_probs = [e for e, k in zip(self.exact_probs, keep) if k]

    @property
    def max_step(self):
        return int(np.abs(self.offsets).max())

    @property
    def is_exact(self):
        return self.exact_probs is not None

    @property
    def is_symmetric(self):
        d = dict(zip(self.offsets.tolist(), self.probs.tolist()))
        return all(d.get(-s, 0.0) == p for s, p in d.items())

    def moment(self, k):
        """The k-th moment, exact when the probabilities are rational."""
        if self.is_exact:
            return sum((p * Fraction(int(s)) ** k for s, p in
                        zip(self.offsets, self.exact_probs)), Fraction(0))
        return float(np.sum(self.probs * self.offsets.astype("float64") ** k))

    def char_function(self, t):
        """The characteristic function E[exp(itX)] at the points *t*."""
        t = np.asarray(t, dtype="float64")
        arg = np.multiply.outer(t, self.offsets.astype("float64"))
        return (self.probs * np.exp(1j * arg)).sum(axis=-1)

    def dense(self):
        """The probabilities on the offsets -max_step..max_step."""
        out = np.zeros(2 * self.max_step + 1)
        out[self.offsets + self.max_step] = self.probs
        return out

    @property
    def law_hash(self):
        if self.is_exact:
            probs = [str(p) for p in self.exact_probs]
        else:
            probs = [repr(float(p)) for p in self.probs]
        return canonical_hash(list(zip(self.offsets.tolist(), probs)))[:16]

    def to_dict(self):
        if self.is_exact:
            probs = [str(p) for p in self.exact_probs]
        else:
            probs = self.probs.tolist()
        return {"name": self.name,
                "support": list(zip(self.offsets.tolist(), probs))}

    def __repr__(self):
        return f"StepLaw(name={self.name!r}, offsets={self.offsets.tolist()})"


step_laws = {
    "binomial4": StepLaw({0: "3/8", 1: "1/4", -1: "1/4", 2: "1/16", -2: "1/16"},
                         name="binomial4"),
    "lazy5": StepLaw({0: "1/2", 1: "1/6", -1: "1/6", 2: "1/12", -2: "1/12"},
                     name="lazy5"),
    "range3": StepLaw({0: "4/9", 1: "1/4", -1: "1/4", 3: "1/36", -3: "1/36"},
                      name="range3"),
}

default_step_law = "binomial4"


def parse_step_law(law):
    if law is None:
        law = default_step_law
    if isinstance(law, StepLaw):
        return law
    if isinstance(law, str):
        if law not in step_laws:
            raise KeyError(f"{law} is not a known step law!")
        return step_laws[law]
    if isinstance(law, dict):
        return StepLaw(law)
    raise TypeError(f"Cannot interpret {law!r} as a step law!")


@dataclass
class MomentReport:
    """Moments and lattice properties of a step law."""
    name: str
    mean: Number
    variance: Number
    third_moment: Number
    fourth_moment: Number
    span: int
    period: int
    exact: bool
    violations: list = field(default_factory=list)

    @property
    def accepted(self):
        return len(self.violations) == 0

    def raise_if_rejected(self):
        if not self.accepted:
            raise ValueError(f"Step law '{self.name}' violates: "
                             f"{', '.join(self.violations)}!")


def validate_step_law(law):
    r"""
    Check that a step law satisfies the moment and lattice assumptions.

    The law must have total mass one, mean zero, unit variance, zero third
    moment, and generate an irreducible and aperiodic walk on the
    integers. Moments are computed in rational arithmetic when the
    probabilities are rational, otherwise in floating point with an
    absolute tolerance of 1e-12.

    Parameters
    ----------
    law : StepLaw or string
        The law to check.

    Returns
    -------
    :class:`MomentReport`
        The report; ``report.accepted`` is True iff no assumption is
        violated, and ``report.violations`` names the violated ones.

    Examples
    --------
    >>> report = validate_step_law("binomial4")
    >>> report.variance
    Fraction(1, 1)
    """
    law = parse_step_law(law)
    exact = law.is_exact
    violations = []

    def close(a, b):
        if exact:
            return a == b
        return abs(a - b) <= 1.0e-12

    if np.any(law.probs < 0.0):
        violations.append("nonnegative probabilities")
    total = sum(law.exact_probs, Fraction(0)) if exact else float(law.probs.sum())
    if not close(total, 1):
        violations.append("probabilities sum to 1")
    mean = law.moment(1)
    variance = law.moment(2)
    third = law.moment(3)
    fourth = law.moment(4)
    if not close(mean, 0):
        violations.append("mean zero")
    if not close(variance, 1):
        violations.append("unit variance")
    if not close(third, 0):
        violations.append("zero third moment")
    offsets = [int(s) for s in law.offsets]
    span = math.gcd(*offsets) if len(offsets) > 1 else abs(offsets[0])
    diffs = [s - offsets[0] for s in offsets[1:]]
    period = math.gcd(*diffs) if diffs else 0
    if span != 1:
        violations.append(f"irreducible (offsets share the factor {span})")
    if period != 1:
        violations.append(f"aperiodic (period {period})")
    report = MomentReport(law.name, mean, variance, third, fourth, span,
                          period, exact, violations)
    if not report.accepted:
        mylog.warning(f"Step law '{law.name}' rejected: {', '.join(violations)}.")
    return report


def _graded_panels(n_max, levels):
    # geometric grading toward t = 0, where the integrand concentrates
    h0 = min(np.pi / 4, 0.05 / np.sqrt(max(n_max, 1)))
    n_geo = int(np.ceil(np.log2(np.pi / h0)))
    edges = np.concatenate([[0.0], np.pi * 2.0 ** -np.arange(n_geo, -1, -1)])
    sub = 2 ** levels
    fine = [np.linspace(a, b, sub + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
    return np.append(np.concatenate(fine), np.pi)


def _panel_nodes(edges, order):
    x, w = roots_legendre(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _char_integral(law, n, nodes, weights):
    phi = law.char_function(nodes)
    logabs = np.log(np.abs(phi))
    arg = np.angle(phi)
    n = np.asarray(n, dtype="float64")[:, None]
    with np.errstate(invalid="ignore", divide="ignore", under="ignore"):
        vals = np.exp(n * logabs) * np.cos(n * arg)
    vals[~np.isfinite(vals)] = 0.0
    return vals @ weights / np.pi


def return_probabilities(law, n_max, order=24, tol=1.0e-13,
                         max_refinements=8, chunk_size=2048):
    r"""
    Compute the return probabilities :math:`p_n(0)` for n = 0..n_max.

    Uses :math:`p_n(0) = \frac{1}{\pi}\int_0^\pi {\rm Re}\,\phi(t)^n\,dt`
    by composite Gauss-Legendre quadrature on panels graded toward 0.
    Every panel is bisected until the values on a sample set of n change
    by less than *tol*.
    """
    law = parse_step_law(law)
    sample_n = np.unique(np.concatenate([np.arange(1, min(n_max, 32) + 1),
                                      np.geomspace(1, n_max, 48).astype("int64"),
                                      [n_max]]))
    previous = None
    err = np.inf
    for level in range(max_refinements + 1):
        nodes, weights = _panel_nodes(_graded_panels(n_max, level), order)
        current = _char_integral(law, sample_n, nodes, weights)
        if previous is not None:
            err = np.abs(current - previous).max()
            if err < tol:
                break
        previous = current
    else:
        msg = (f"Return-probability quadrature did not converge after "
               f"{max_refinements} refinements (achieved error {err:.3e}).")
        mylog.error(msg)
        raise RuntimeError(msg)
    p0 = np.empty(n_max + 1)
    p0[0] = 1.0
    for start in range(1, n_max + 1, chunk_size):
        n = np.arange(start, min(start + chunk_size, n_max + 1))
        p0[n] = _char_integral(law, n, nodes, weights)
    return p0


def first_return_law(p0, block_size=8192):
    r"""
    Invert :math:`p_n(0) = \sum_{j=1}^n K(j) p_{n-j}(0)` for K.

    Within a block the sum is accumulated directly; the contribution of
    earlier blocks is carried in by one FFT convolution per block.
    """
    p0 = np.asarray(p0, dtype="float64")
    n_max = p0.size - 1
    K = np.zeros(n_max + 1)
    for a in range(1, n_max + 1, block_size):
        b = min(a + block_size, n_max + 1)
        if a > 1:
            carry = fftconvolve(K[1:a], p0[:b])[a - 1:b - 1]
        else:
            carry = np.zeros(b - a)
        for n in range(a, b):
            inner = np.dot(K[a:n], p0[n - a:0:-1]) if n > a else 0.0
            K[n] = p0[n] - carry[n - a] - inner
    return K


class KernelTable:
    r"""
    Return probabilities, first-return law and overlap sums of a walk.

    Attributes
    ----------
    n_max : integer
        The largest time covered.
    p0 : ndarray
        :math:`p_n(0)`, n = 0..n_max.
    K : ndarray
        The first-return law :math:`K(n)` (``K[0] = 0``).
    u : ndarray
        :math:`u(n) = p_n(0)^2`.
    R : ndarray
        The overlap sums :math:`R_N = \sum_{n=1}^N u(n)` (``R[0] = 0``).
    """
    def __init__(self, law, p0, K=None):
        self.law = parse_step_law(law)
        self.p0 = np.asarray(p0, dtype="float64")
        self.n_max = self.p0.size - 1
        self.K = first_return_law(self.p0) if K is None else np.asarray(K, dtype="float64")
        self.u = self.p0 ** 2
        self.R = np.concatenate([[0.0], np.cumsum(self.u[1:])])

    def covers(self, N):
        return N <= self.n_max

    def require(self, N):
        if not self.covers(N):
            raise RuntimeError(f"The kernel table covers n <= {self.n_max}, "
                               f"but n = {N} was requested!")

    def first_return_residual(self):
        """max_n |p_n(0) - sum_j K(j) p_{n-j}(0)| over 1 <= n <= n_max."""
        conv = fftconvolve(self.K, self.p0)[:self.n_max + 1]
        return float(np.abs(self.p0[1:] - conv[1:]).max())

    @property
    def parameters(self):
        return {"magic": cache_magic, "version": cache_version,
                "law_hash": self.law.law_hash, "law_name": self.law.name,
                "n_max": self.n_max}

    def to_hdf5(self, filename, overwrite=False):
        """
        Write the table to an HDF5 cache file. The header is stored as
        attributes (magic, version, law hash, n_max), the arrays as
        little-endian float64 datasets.
        """
        import h5py
        filename = Path(filename)
        if filename.exists() and not overwrite:
            raise IOError(f"Cannot overwrite existing file {filename}. "
                          "If you want to do this, set overwrite=True.")
        filename.parent.mkdir(parents=True, exist_ok=True)
        with h5py.File(filename, "w") as f:
            for k, v in self.parameters.items():
                f.attrs[k] = v
            f.attrs["law"] = json.dumps(self.law.to_dict(), sort_keys=True)
            for k in ("p0", "K", "u", "R"):
                f.create_dataset(k, data=getattr(self, k), dtype="<f8")

    @classmethod
    def from_hdf5(cls, filename, law=None):
        import h5py
        with h5py.File(filename, "r") as f:
            header = {k: (v.decode() if isinstance(v, bytes) else v)
                      for k, v in f.attrs.items() if k != "law"}
            if header.get("magic") != cache_magic:
                raise IOError(f"{filename} is not a kernel table cache file!")
            if law is None:
                d = json.loads(f.attrs["law"])
                law = StepLaw([tuple(x) for x in d["support"]], name=d["name"])
            table = cls(law, f["p0"][:], K=f["K"][:])
        validate_parameters({k: header[k] for k in table.parameters},
                            table.parameters)
        return table

    def write_csv(self, filename, stride=1):
        n = np.arange(0, self.n_max + 1, stride)
        return write_table(filename, {"n": n, "p0": self.p0[n], "K": self.K[n],
                                      "u": self.u[n], "R": self.R[n]},
                           meta={"law": self.law.name, "n_max": self.n_max})


def build_kernel_table(law, n_max, order=24, tol=1.0e-13, max_refinements=8):
    r"""
    Build the kernel table of a validated step law up to time *n_max*.

    Parameters
    ----------
    law : StepLaw or string
        The step law. It is validated first and rejected laws raise.
    n_max : integer
        The largest time in the table.
    order : integer, optional
        Gauss-Legendre order per panel.
    tol : float, optional
        Convergence threshold of the panel refinement.

    Returns
    -------
    :class:`KernelTable`

    Examples
    --------
    >>> table = build_kernel_table("binomial4", 10000)
    >>> table.R[10000]
    """
    law = parse_step_law(law)
    validate_step_law(law).raise_if_rejected()
    if n_max < 1:
        raise ValueError(f"n_max must be at least 1, got {n_max}!")
    mylog.info(f"Building kernel table for step law '{law.name}' up to n = {n_max}.")
    p0 = return_probabilities(law, n_max, order=order, tol=tol,
                              max_refinements=max_refinements)
    return KernelTable(law, p0)


def load_or_build_kernel_table(law, n_max, cache_dir=None):
    """
    Read the kernel table from *cache_dir* if a cached table covers
    *n_max*, otherwise build it and store it there.
    """
    law = parse_step_law(law)
    if cache_dir is None:
        return build_kernel_table(law, n_max)
    cache_dir = Path(cache_dir)
    for fn in sorted(cache_dir.glob(f"kernels_{law.law_hash}_*.h5")):
        n_cached = int(fn.stem.rsplit("_", 1)[-1])
        if n_cached >= n_max:
            mylog.info(f"Reading kernel table from {fn}.")
            table = KernelTable.from_hdf5(fn, law=law)
            return table
    table = build_kernel_table(law, n_max)
    table.to_hdf5(cache_dir / f"kernels_{law.law_hash}_{n_max}.h5",
                  overwrite=True)
    return table


@dataclass
class KAsymptoticsReport:
    n: np.ndarray
    ratio: np.ndarray
    total_mass: float
    min_value: float
    n_min: int
    bounds: tuple

    @property
    def passed(self):
        tail = self.n >= self.n_min
        if not tail.any():
            return self.min_value >= 0.0
        r = self.ratio[tail]
        return bool(self.min_value >= 0.0 and r.min() >= self.bounds[0]
                    and r.max() <= self.bounds[1])


def K_asymptotics_check(table, n_min=1000, bounds=(0.9, 1.1)):
    r"""
    Compare the first-return law with :math:`1/(\sqrt{2\pi} n^{3/2})`.

    Returns the sequence :math:`\sqrt{2\pi} n^{3/2} K(n)`; the report
    passes if it lies within *bounds* for all n >= *n_min* and K is
    nonnegative.
    """
    n = np.arange(1, table.n_max + 1)
    ratio = np.sqrt(2.0 * np.pi) * n ** 1.5 * table.K[1:]
    return KAsymptoticsReport(n, ratio, float(table.K[1:].sum()),
                              float(table.K[1:].min()), n_min, tuple(bounds))


class HitTable:
    r"""
    First-hitting laws :math:`q_x(n)` of the origin.

    Attributes
    ----------
    x_values : ndarray
        The starting points covered.
    n_max : integer
        The largest time covered.
    q : ndarray
        ``q[i, n]`` is the probability that the walk started at
        ``x_values[i]`` first hits 0 at time n >= 1.
    """
    def __init__(self, x_values, q):
        self.x_values = np.asarray(x_values, dtype="int64")
        self.q = np.asarray(q, dtype="float64")
        self.n_max = self.q.shape[1] - 1

    def __call__(self, x, n):
        i = np.asarray(x) - self.x_values[0]
        if np.any(i < 0) or np.any(i >= self.x_values.size):
            raise KeyError(f"x = {x} is outside the hit table!")
        return self.q[i, n]


def build_hit_table(law, x_range, n_max, max_cells=int(5e8)):
    r"""
    Exact first-hitting laws of 0 for all starting points in *x_range*.

    The dynamic program runs backward in time on the whole lattice window
    :math:`|y| \le |x| + s_{max} n`, with the origin absorbing:
    :math:`h_n(x) = \sum_s p(s)\,h_{n-1}(x+s)\,1\{x+s\neq0\}`.

    Parameters
    ----------
    law : StepLaw or string
        The step law.
    x_range : tuple of integers
        The inclusive range of starting points.
    n_max : integer
        The largest time.
    max_cells : integer, optional
        Budget for window size times number of steps.
    """
    law = parse_step_law(law)
    validate_step_law(law).raise_if_rejected()
    x_lo, x_hi = int(x_range[0]), int(x_range[1])
    if x_hi < x_lo:
        raise ValueError(f"Empty starting range {x_range}!")
    reach = law.max_step * n_max
    lo = max(x_lo - reach, -reach)
    hi = min(x_hi + reach, reach)
    lo, hi = min(lo, x_lo, 0), max(hi, x_hi, 0)
    width = hi - lo + 1
    if width * n_max > max_cells:
        msg = (f"Hit table window of {width} sites over {n_max} steps "
               f"exceeds the budget of {max_cells} cells!")
        mylog.error(msg)
        raise MemoryError(msg)
    o = -lo
    idx = np.arange(x_lo, x_hi + 1) + o
    q = np.zeros((idx.size, n_max + 1))
    h = np.zeros(width)
    for s, p in zip(law.offsets, law.probs):
        if 0 <= o - s < width:
            h[o - s] = p
    q[:, 1] = h[idx]
    for n in range(2, n_max + 1):
        h[o] = 0.0
        h = lattice_step(h, law.offsets, law.probs, reflect=True)
        q[:, n] = h[idx]
    return HitTable(np.arange(x_lo, x_hi + 1), q)


def default_reach(law, n):
    """Lattice distance beyond which n-step mass is below ~1e-30."""
    law = parse_step_law(law)
    return int(min(law.max_step * n, np.ceil(12.0 * np.sqrt(n)) + law.max_step))


class LatticeWeights:
    """
    A weight vector on a window of the integer lattice, padded so that
    *reach* steps of propagation stay inside the window.
    """
    def __init__(self, values, lo, reach=0):
        values = np.asarray(values, dtype="float64")
        self.lo = int(lo) - reach
        self.values = np.pad(values, [(0, 0)] * (values.ndim - 1) + [(reach, reach)])

    @property
    def hi(self):
        return self.lo + self.values.shape[-1] - 1

    @property
    def origin(self):
        o = -self.lo
        if not 0 <= o < self.values.shape[-1]:
            raise RuntimeError("The lattice window does not contain the origin!")
        return o

    def aligned(self, lo, hi):
        """The weights on the window [lo, hi], zero-filled."""
        out = np.zeros(self.values.shape[:-1] + (hi - lo + 1,))
        a = max(lo, self.lo)
        b = min(hi, self.hi)
        if a <= b:
            out[..., a - lo:b - lo + 1] = self.values[..., a - self.lo:b - self.lo + 1]
        return out


def propagate_to_origin(law, weights, n_max, reflect=False):
    r"""
    Mass reaching the origin after n steps, n = 0..n_max.

    Returns :math:`c(n) = \sum_u w(u)\,P(u + S_n = 0)`. With
    ``reflect=True`` this is :math:`\sum_v w(v)\,P(S_n = v)`.
    """
    law = parse_step_law(law)
    v = weights.values.copy()
    o = weights.origin
    out = np.zeros(v.shape[:-1] + (n_max + 1,))
    out[..., 0] = v[..., o]
    for n in range(1, n_max + 1):
        v = lattice_step(v, law.offsets, law.probs, reflect=reflect)
        out[..., n] = v[..., o]
    return out


def first_hit_weights(law, weights, n_max, reflect=False):
    r"""
    :math:`A(m) = \sum_u w(u)\,q_u(m)` for m = 0..n_max (``A[0] = 0``).

    With ``reflect=True`` the reflected walk is used, which gives
    :math:`\sum_v w(v)\,q_{-v}(m)`.
    """
    law = parse_step_law(law)
    v = weights.values.copy()
    o = weights.origin
    out = np.zeros(v.shape[:-1] + (n_max + 1,))
    for m in range(1, n_max + 1):
        v = lattice_step(v, law.offsets, law.probs, reflect=reflect)
        out[..., m] = v[..., o]
        v[..., o] = 0.0
    return out


def no_hit_pairing(law, phi, psi, N):
    r"""
    :math:`\sum_{u,v}\phi(u)\,P^u(S_N=v,\ \tau_1\ge N)\,\psi(v)`: the walk
    avoids the origin at times 1..N-1.
    """
    law = parse_step_law(law)
    lo = min(phi.lo, psi.lo)
    hi = max(phi.hi, psi.hi)
    f = psi.aligned(lo, hi)
    o = -lo
    for k in range(1, N + 1):
        if k >= 2:
            f[..., o] = 0.0
        f = lattice_step(f, law.offsets, law.probs, reflect=True)
    return (phi.aligned(lo, hi) * f).sum(axis=-1)


def pairing(law, phi, psi, N):
    r""":math:`\sum_{u,v}\phi(u)\,P^u(S_N=v)\,\psi(v)`."""
    law = parse_step_law(law)
    lo = min(phi.lo, psi.lo)
    hi = max(phi.hi, psi.hi)
    f = psi.aligned(lo, hi)
    for k in range(N):
        f = lattice_step(f, law.offsets, law.probs, reflect=True)
    return (phi.aligned(lo, hi) * f).sum(axis=-1)


def transition_row(law, x, n, reach=None):
    """The distribution of x + S_n on the window [x - reach, x + reach]."""
    law = parse_step_law(law)
    if reach is None:
        reach = law.max_step * n
    v = LatticeWeights([1.0], x, reach=reach)
    out = v.values
    for k in range(n):
        out = lattice_step(out, law.offsets, law.probs)
    return np.arange(v.lo, v.hi + 1), out
