from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import comb

from pinsim.walks import StepLaw, validate_step_law, build_kernel_table, \
    KernelTable, K_asymptotics_check, build_hit_table, LatticeWeights, \
    propagate_to_origin, first_hit_weights, no_hit_pairing, pairing, \
    transition_row, load_or_build_kernel_table, parse_step_law


@pytest.mark.parametrize("name", ["binomial4", "lazy5", "range3"])
def test_catalog_laws_accepted(name):
    report = validate_step_law(name)
    assert report.accepted
    assert report.exact
    assert report.mean == 0
    assert report.variance == 1
    assert report.third_moment == 0
    assert report.period == 1


def test_binomial4_moments_exact():
    report = validate_step_law("binomial4")
    assert isinstance(report.variance, Fraction)
    assert report.fourth_moment == Fraction(5, 2)


def test_rejected_laws():
    report = validate_step_law(StepLaw({1: "1/2", -1: "1/2"}, name="srw"))
    assert not report.accepted
    assert any("aperiodic" in v for v in report.violations)
    with pytest.raises(ValueError):
        report.raise_if_rejected()
    skewed = validate_step_law(StepLaw({-1: "1/2", 0: "1/4", 2: "1/4"}))
    assert "mean zero" not in skewed.violations
    assert "zero third moment" in skewed.violations
    lattice2 = validate_step_law(StepLaw({-2: "1/2", 0: "1/2"}))
    assert any("irreducible" in v for v in lattice2.violations)
    with pytest.raises(ValueError):
        build_kernel_table(StepLaw({1: "1/2", -1: "1/2"}), 10)


def test_float_probabilities():
    law = StepLaw({0: 0.375, 1: 0.25, -1: 0.25, 2: 0.0625, -2: 0.0625})
    assert not law.is_exact
    assert validate_step_law(law).accepted
    assert parse_step_law({0: "1/2", 1: "1/4", -1: "1/4"}).is_exact
    with pytest.raises(KeyError):
        parse_step_law("not_a_law")


def test_return_probabilities_closed_form(small_table):
    # binomial4 steps are sums of four fair +-1/2 coins
    n = np.arange(1, 51)
    exact = np.array([comb(4 * k, 2 * k, exact=True) / 2 ** (4 * k) for k in n])
    assert_allclose(small_table.p0[n], exact, rtol=1.0e-11, atol=1.0e-14)
    assert small_table.p0[0] == 1.0


def test_first_return_identity(kernel_table):
    assert kernel_table.first_return_residual() < 1.0e-12
    assert kernel_table.K[0] == 0.0
    assert kernel_table.K[1] == pytest.approx(3.0 / 8.0, abs=1.0e-14)
    assert kernel_table.K[1:].min() >= -1.0e-15
    assert kernel_table.K.sum() < 1.0
    assert_allclose(kernel_table.u, kernel_table.p0 ** 2)
    assert kernel_table.R[5] == pytest.approx(kernel_table.u[1:6].sum())


def test_K_asymptotics(kernel_table):
    report = K_asymptotics_check(kernel_table, n_min=1000)
    assert report.passed
    assert abs(report.ratio[-1] - 1.0) < 0.02


def test_require(small_table):
    small_table.require(64)
    with pytest.raises(RuntimeError):
        small_table.require(65)


def test_kernel_table_cache(tmp_path, small_table):
    fn = tmp_path / "kt.h5"
    small_table.to_hdf5(fn)
    with pytest.raises(IOError):
        small_table.to_hdf5(fn)
    table = KernelTable.from_hdf5(fn)
    assert table.law.law_hash == small_table.law.law_hash
    assert_allclose(table.K, small_table.K, rtol=0.0, atol=0.0)
    cached = load_or_build_kernel_table("binomial4", 32, cache_dir=tmp_path / "cache")
    assert len(list((tmp_path / "cache").glob("kernels_*.h5"))) == 1
    again = load_or_build_kernel_table("binomial4", 16, cache_dir=tmp_path / "cache")
    assert again.n_max == 32
    assert_allclose(again.p0, cached.p0, rtol=0.0, atol=0.0)


def test_kernel_table_csv(tmp_path, small_table):
    from pinsim.utils import read_table
    fn = small_table.write_csv(tmp_path / "kernels.csv", stride=8)
    t = read_table(fn)
    assert list(t["n"]) == list(range(0, 65, 8))
    assert_allclose(t["K"], small_table.K[::8], rtol=1.0e-12)


def test_hit_table_sums_to_first_return(small_table):
    law = small_table.law
    hits = build_hit_table(law, (-3, 3), 20)
    # starting from 0, the first hit of 0 is the first return
    assert_allclose(hits(0, np.arange(1, 21)), small_table.K[1:21], atol=1.0e-15)
    # first-step decomposition: q_x(n) = sum_s p(s) q_{x+s}(n-1) 1{x+s != 0}
    x = 2
    lhs = hits(x, 5)
    rhs = sum(p * hits(x + s, 4) for s, p in zip(law.offsets, law.probs)
              if x + s != 0)
    assert lhs == pytest.approx(rhs, rel=1.0e-12)
    with pytest.raises(KeyError):
        hits(10, 3)


def test_propagation_and_pairing_decomposition(small_table):
    law = small_table.law
    N = 12
    rng = np.random.default_rng(3)
    phi = LatticeWeights(rng.uniform(size=7), -3, reach=2 * N)
    psi = LatticeWeights(rng.uniform(size=5), -1, reach=2 * N)
    A = first_hit_weights(law, phi, N)
    b = propagate_to_origin(law, psi, N, reflect=True)
    assert A[0] == 0.0
    total = pairing(law, phi, psi, N)
    split = no_hit_pairing(law, phi, psi, N) + \
        sum(A[m] * b[N - m] for m in range(1, N))
    assert total == pytest.approx(split, rel=1.0e-12)
    # from the origin, the mass at 0 after n steps is p_n(0)
    delta = LatticeWeights([1.0], 0, reach=2 * N)
    assert_allclose(propagate_to_origin(law, delta, N), small_table.p0[:N + 1],
                    rtol=1.0e-12)


def test_transition_row():
    x, probs = transition_row("binomial4", 3, 2)
    assert probs.sum() == pytest.approx(1.0)
    assert x[np.argmax(probs)] == 3
    assert (x * probs).sum() == pytest.approx(3.0)
    assert ((x - 3) ** 2 * probs).sum() == pytest.approx(2.0)


if __name__ == "__main__":
    test_catalog_laws_accepted("binomial4")
    test_rejected_laws()
