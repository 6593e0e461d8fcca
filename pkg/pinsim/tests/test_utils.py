import numpy as np
import pytest
from numpy.testing import assert_array_equal

from pinsim.utils import make_rng, parse_seed, validate_parameters, \
    canonical_hash, write_table, read_table, ensure_list


def test_streams():
    a = make_rng(42, "disorder", 17).standard_normal(8)
    b = make_rng(42, "disorder", 17).standard_normal(8)
    assert_array_equal(a, b)
    assert not np.array_equal(a, make_rng(42, "disorder", 18).standard_normal(8))
    assert not np.array_equal(a, make_rng(42, "dickman", 17).standard_normal(8))
    assert not np.array_equal(a, make_rng(43, "disorder", 17).standard_normal(8))
    c = make_rng(1, "she_noise", (3, 4)).standard_normal(4)
    assert not np.array_equal(c, make_rng(1, "she_noise", (4, 3)).standard_normal(4))
    with pytest.raises(KeyError):
        make_rng(0, "weather")


def test_parse_seed():
    assert parse_seed(None) == 0
    assert parse_seed(np.int64(7)) == 7
    with pytest.raises(ValueError):
        parse_seed(-1)
    with pytest.raises(TypeError):
        parse_seed("seven")


def test_validate_parameters():
    p1 = {"N": 100, "beta": 0.3, "law": "gaussian"}
    validate_parameters(p1, dict(p1))
    with pytest.raises(RuntimeError):
        validate_parameters(p1, {"N": 100, "beta": 0.3})
    with pytest.raises(RuntimeError):
        validate_parameters(p1, dict(p1, beta=0.31))
    validate_parameters(p1, dict(p1, beta=0.31), skip=["beta"])


def test_canonical_hash():
    assert canonical_hash({"a": 1, "b": [1, 2]}) == canonical_hash({"b": [1, 2], "a": 1})
    assert canonical_hash({"a": 1}) != canonical_hash({"a": 2})
    assert len(canonical_hash({})) == 64


def test_tables(tmp_path):
    fn = write_table(tmp_path / "sub" / "t.csv",
                     {"n": np.arange(4), "x": np.linspace(0.0, 1.0, 4)},
                     meta={"seed": 3})
    t = read_table(fn)
    assert t.colnames == ["n", "x"]
    assert_array_equal(t["n"], np.arange(4))
    assert "seed = 3" in t.meta["comments"]
    assert ensure_list("a") == ["a"]
