"""
Batched kernels for renewal-type recursions and lattice propagation.
"""
import numpy as np
from scipy.signal import fftconvolve


def renewal_solve(weights, source, kernel, reverse=False):
    r"""
    Solve the renewal-type recursion

    .. math::

        D_n = w_n \left(s_n + \sum_{m<n} D_m k_{n-m}\right)

    along the last axis, for any number of leading (batch) axes.

    Parameters
    ----------
    weights : array_like
        The multiplicative weights :math:`w_n`, broadcastable against
        *source*.
    source : array_like
        The source terms :math:`s_n`.
    kernel : array_like
        The kernel :math:`k_j`, needed for :math:`1 \le j < L` where
        :math:`L` is the length of the last axis. ``kernel[0]`` is unused.
    reverse : boolean, default False
        If True, solve the backward recursion
        :math:`D_n = w_n (s_n + \sum_{m>n} k_{m-n} D_m)` instead.

    Returns
    -------
    D : ndarray
        The solution, with the broadcast shape of *weights* and *source*.
    """
    weights = np.asarray(weights, dtype="float64")
    source = np.asarray(source, dtype="float64")
    shape = np.broadcast_shapes(weights.shape, source.shape)
    w = np.broadcast_to(weights, shape)
    s = np.broadcast_to(source, shape)
    if reverse:
        w = w[..., ::-1]
        s = s[..., ::-1]
    length = shape[-1]
    kernel = np.asarray(kernel, dtype="float64")
    if length > 1 and kernel.size < length:
        raise RuntimeError(f"Kernel of length {kernel.size} is too short for "
                           f"a recursion of length {length}!")
    out = np.zeros(shape)
    out[..., 0] = w[..., 0] * s[..., 0]
    for n in range(1, length):
        acc = out[..., :n] @ kernel[n:0:-1]
        out[..., n] = w[..., n] * (s[..., n] + acc)
    if reverse:
        out = out[..., ::-1]
    return out


def lattice_step(vec, offsets, probs, reflect=False):
    r"""
    One step of a random walk acting on lattice measures.

    Computes :math:`(\mu * p)(y) = \sum_s p(s)\,\mu(y-s)` along the last
    axis. Mass pushed beyond the window is dropped. With
    ``reflect=True`` the reflected step law :math:`p(-s)` is used, which
    is the backward (expectation) operator
    :math:`f \mapsto \sum_s p(s) f(x+s)`.
    """
    out = np.zeros_like(vec)
    for s, p in zip(offsets, probs):
        s = -int(s) if reflect else int(s)
        if s > 0:
            out[..., s:] += p * vec[..., :-s]
        elif s < 0:
            out[..., :s] += p * vec[..., -s:]
        else:
            out += p * vec
    return out


def causal_convolve(a, b, length=None):
    """Full linear convolution of *a* and *b* truncated to *length* terms."""
    a = np.asarray(a, dtype="float64")
    b = np.asarray(b, dtype="float64")
    if length is None:
        length = a.shape[-1]
    if a.shape[-1] == 0 or b.shape[-1] == 0:
        return np.zeros(a.shape[:-1] + (length,))
    if b.ndim < a.ndim:
        b = b.reshape((1,) * (a.ndim - b.ndim) + b.shape)
    elif a.ndim < b.ndim:
        a = a.reshape((1,) * (b.ndim - a.ndim) + a.shape)
    c = fftconvolve(a, b, axes=-1)[..., :length]
    if c.shape[-1] < length:
        pad = [(0, 0)] * (c.ndim - 1) + [(0, length - c.shape[-1])]
        c = np.pad(c, pad)
    return c


def renewal_solve_blocked(weights, source, kernel, block_size=4096):
    r"""
    One-dimensional :func:`renewal_solve` for long sequences.

    The contribution of earlier blocks is added by one FFT convolution
    per block, so the cost is dominated by the in-block updates.
    """
    source = np.asarray(source, dtype="float64")
    length = source.size
    weights = np.broadcast_to(np.asarray(weights, dtype="float64"), (length,))
    kernel = np.asarray(kernel, dtype="float64")
    if length > 1 and kernel.size < length:
        raise RuntimeError(f"Kernel of length {kernel.size} is too short for "
                           f"a recursion of length {length}!")
    out = np.zeros(length)
    for a in range(0, length, block_size):
        b = min(a + block_size, length)
        if a > 0:
            carry = fftconvolve(out[:a], kernel[:b])[a:b]
        else:
            carry = np.zeros(b - a)
        for n in range(a, b):
            inner = np.dot(out[a:n], kernel[n - a:0:-1]) if n > a else 0.0
            out[n] = weights[n] * (source[n] + carry[n - a] + inner)
    return out
