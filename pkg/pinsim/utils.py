import hashlib
import json
import logging
from pathlib import Path

import numpy as np
from more_itertools import always_iterable

pinsimLogger = logging.getLogger("pinsim")

ufstring = "%(name)-3s : [%(levelname)-9s] %(asctime)s %(message)s"
cfstring = "%(name)-3s : [%(levelname)-18s] %(asctime)s %(message)s"

pinsim_sh = logging.StreamHandler()
# create formatter and add it to the handlers
formatter = logging.Formatter(ufstring)
pinsim_sh.setFormatter(formatter)
# add the handler to the logger
pinsimLogger.addHandler(pinsim_sh)
pinsimLogger.setLevel('INFO')
pinsimLogger.propagate = False

mylog = pinsimLogger

euler_gamma = float(np.euler_gamma)

# Tags folded into the stream key so that different consumers of the
# same master seed never share a stream.
stream_tags = {
    "disorder": 0x5EED0001,
    "she_noise": 0x5EED0002,
    "she_paths": 0x5EED0003,
    "dickman": 0x5EED0004,
    "quadrature_mc": 0x5EED0005,
}


def ensure_list(obj):
    return list(always_iterable(obj))


def parse_seed(seed):
    if seed is None:
        return 0
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError(f"Seeds must be nonnegative, got {seed}!")
        return int(seed)
    raise TypeError(f"Cannot interpret {seed!r} as a master seed!")


def make_rng(seed, tag, index=0):
    r"""
    Return the random number generator for one sample.

    Every sample of every ensemble gets its own counter-based stream:
    a Philox generator keyed from the master seed, with the stream
    tag and the sample index folded into the spawn key. The result for
    a given ``(seed, tag, index)`` therefore does not depend on which
    worker draws it or in which order samples are processed.

    Parameters
    ----------
    seed : integer
        The master seed of the run.
    tag : string or integer
        The consumer of the stream, either a key of ``stream_tags``
        or a raw integer.
    index : integer or tuple of integers, optional
        The sample index. Tuples are folded in element by element.

    Examples
    --------
    >>> rng = make_rng(42, "disorder", 17)
    >>> omega = rng.standard_normal(100)
    """
    if isinstance(tag, str):
        if tag not in stream_tags:
            raise KeyError(f"{tag} is not a known stream tag!")
        tag = stream_tags[tag]
    key = (int(tag),) + tuple(int(i) for i in always_iterable(index))
    ss = np.random.SeedSequence(parse_seed(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def validate_parameters(first, second, skip=None):
    if skip is None:
        skip = []
    keys1 = sorted(first.keys())
    keys2 = sorted(second.keys())
    if keys1 != keys2:
        raise RuntimeError("The two inputs do not have the same parameters!")
    for k in keys1:
        if k in skip:
            continue
        v1 = first[k]
        v2 = second[k]
        if isinstance(v1, (str, bytes)) or isinstance(v2, (str, bytes)):
            check_equal = v1 == v2
        else:
            check_equal = np.allclose(np.array(v1), np.array(v2),
                                      rtol=0.0, atol=1.0e-10)
        if not check_equal:
            raise RuntimeError(f"The values for the parameter '{k}' in the two "
                               f"inputs are not identical ({v1} vs. {v2})!")


def canonical_hash(obj):
    """SHA-256 of the canonical JSON dump of *obj*."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_table(filename, columns, meta=None, overwrite=True):
    r"""
    Write a dict of equal-length columns to a CSV file.

    Parameters
    ----------
    filename : string or Path
        The CSV file to write.
    columns : dict
        Column name -> 1D array. Insertion order gives the column order.
    meta : dict, optional
        Metadata stored in the table header comments.
    overwrite : boolean, default True
        Whether an existing file may be replaced.
    """
    from astropy.table import Table
    t = Table(list(columns.values()), names=list(columns.keys()))
    if meta:
        t.meta["comments"] = [f"{k} = {v}" for k, v in meta.items()]
    filename = Path(filename)
    filename.parent.mkdir(parents=True, exist_ok=True)
    t.write(filename, format="ascii.csv", overwrite=overwrite)
    return filename


def read_table(filename):
    from astropy.table import Table
    return Table.read(filename, format="ascii.csv")
