"""
Monte Carlo estimates and the deterministic parallel ensemble runner.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from tqdm.auto import tqdm

from pinsim.utils import mylog

default_chunk_size = 64


class ParallelProgressBar:
    def __init__(self, title):
        self.title = title
        mylog.info(f"Starting '{title}'")

    def update(self, *args, **kwargs):
        return

    def close(self):
        mylog.info(f"Finishing '{self.title}'")


@dataclass
class MCEstimate:
    r"""
    A Monte Carlo estimate: the sample mean and variance, the standard
    error :math:`\sqrt{\mathrm{variance}/n}` and the number of samples.
    ``samples`` keeps the raw values when requested.
    """
    mean: float
    variance: float
    stderr: float
    n: int
    seed: int = None
    wall_time: float = None
    samples: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_samples(cls, values, keep=True, seed=None, wall_time=None):
        values = np.asarray(values, dtype="float64").ravel()
        n = values.size
        if n < 2:
            raise ValueError(f"An estimate needs at least 2 samples, got {n}!")
        mean = float(values.mean())
        variance = float(values.var(ddof=1))
        stderr = float(np.sqrt(variance / n))
        return cls(mean, variance, stderr, n, seed, wall_time,
                   values if keep else None)

    def consistent_with(self, value, n_sigma=3.0):
        return abs(self.mean - value) < n_sigma * self.stderr

    def as_dict(self):
        return {"mean": self.mean, "variance": self.variance,
                "stderr": self.stderr, "n": self.n, "seed": self.seed,
                "wall_time": self.wall_time}


def chunk_bounds(n_samples, chunk_size=default_chunk_size):
    """
    Split sample indices 0..n_samples-1 into consecutive chunks. The
    split depends only on *n_samples* and *chunk_size*.
    """
    starts = range(0, n_samples, chunk_size)
    return [(a, min(chunk_size, n_samples - a)) for a in starts]


def _run_chunk(args):
    task, first, count, kwargs = args
    return np.asarray(task(first, count, **kwargs))


def run_ensemble(task, n_samples, workers=1, chunk_size=default_chunk_size,
                 desc="Running ensemble", **kwargs):
    r"""
    Evaluate a sampled quantity over an ensemble of independent samples.

    Parameters
    ----------
    task : callable
        ``task(first, count, **kwargs)`` returns the values for samples
        ``first..first + count - 1`` stacked along the first axis. It must
        be a picklable module-level function when *workers* > 1, and
        sample i must only depend on its own stream index i.
    n_samples : integer
        The ensemble size.
    workers : integer, optional
        Number of worker processes. Results do not depend on it.
    chunk_size : integer, optional
        Samples per task.

    Returns
    -------
    values : ndarray
        Per-sample results in sample order.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}!")
    if workers < 1:
        raise ValueError(f"workers must be positive, got {workers}!")
    chunks = chunk_bounds(n_samples, chunk_size)
    jobs = [(task, first, count, kwargs) for first, count in chunks]
    mylog.info(f"{desc}: {n_samples} samples in {len(chunks)} chunks "
               f"on {workers} worker(s).")
    out = []
    if workers == 1:
        pbar = tqdm(leave=True, total=n_samples, desc=desc)
        for job in jobs:
            out.append(_run_chunk(job))
            pbar.update(job[2])
        pbar.close()
    else:
        pbar = ParallelProgressBar(desc)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for res in executor.map(_run_chunk, jobs):
                out.append(res)
        pbar.close()
    return np.concatenate(out, axis=0)
