import numpy as np
import pytest
from numpy.testing import assert_array_equal

from pinsim.ensemble import MCEstimate, chunk_bounds, run_ensemble
from pinsim.utils import make_rng


def _normal_task(first, count, seed, size):
    return np.stack([make_rng(seed, "quadrature_mc", first + j).standard_normal(size)
                     for j in range(count)])


def test_chunk_bounds():
    assert chunk_bounds(10, 4) == [(0, 4), (4, 4), (8, 2)]
    assert chunk_bounds(3, 64) == [(0, 3)]
    assert chunk_bounds(0, 4) == []


def test_run_ensemble_independent_of_workers():
    kw = dict(seed=9, size=3)
    serial = run_ensemble(_normal_task, 50, workers=1, chunk_size=8, **kw)
    parallel = run_ensemble(_normal_task, 50, workers=2, chunk_size=8, **kw)
    assert serial.shape == (50, 3)
    assert_array_equal(serial, parallel)
    # chunking does not change sample i either
    assert_array_equal(serial, run_ensemble(_normal_task, 50, chunk_size=7, **kw))
    with pytest.raises(ValueError):
        run_ensemble(_normal_task, 0, **kw)
    with pytest.raises(ValueError):
        run_ensemble(_normal_task, 5, workers=0, **kw)


def test_mc_estimate():
    est = MCEstimate.from_samples([1.0, 2.0, 3.0, 4.0], seed=1)
    assert est.mean == 2.5
    assert est.variance == pytest.approx(5.0 / 3.0)
    assert est.stderr == pytest.approx(np.sqrt(5.0 / 12.0))
    assert est.n == 4
    assert est.consistent_with(3.0)
    assert not est.consistent_with(10.0)
    assert est.as_dict()["seed"] == 1
    assert MCEstimate.from_samples(np.ones(5), keep=False).samples is None
    with pytest.raises(ValueError):
        MCEstimate.from_samples([1.0])
