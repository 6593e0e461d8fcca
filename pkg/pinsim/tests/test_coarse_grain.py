from itertools import combinations

import numpy as np
import pytest

from pinsim.coarse_grain import MesoGrid, TimeBlock, default_K, default_r_max, \
    is_no_triple, pair_indices, expand_blocks, enumerate_no_triple, theta, \
    theta_variance, theta_values, theta_moment_experiment, z_no_triple, \
    z_no_triple_second_moment, no_triple_l2_distance, no_triple_gap_experiment, \
    CGWeights, cg_weights, eps_test_weights, l_cg, z_cg, cg_convergence_experiment
from pinsim.continuum_kernels import gaussian_bump, pairings
from pinsim.dickman import build_ubar
from pinsim.disorder import zeta_field, zeta_fields
from pinsim.partition import polymer_kernels
from pinsim.tests.utils import brute_theta, brute_polymer, \
    brute_polymer_second, no_triple_filter, brute_cg_sum


def test_default_thresholds():
    assert default_K(1.0 / 8) == 2
    assert default_K(1.0 / 16) == 4
    assert default_K(1.0 / 32) == 8
    assert default_r_max(1.0 / 8) == 4


def test_meso_grid():
    grid = MesoGrid(24, 1.0 / 6, K=2)
    assert grid.M == 6
    assert (grid.lo, grid.hi) == (2, 4)
    assert list(grid.edges) == [0, 4, 8, 12, 16, 20, 24]
    times = np.concatenate([grid.times(i) for i in range(1, grid.M + 1)])
    assert list(times) == list(range(1, 25))
    assert all(b.width <= grid.K for b in grid.blocks())
    assert len(grid.blocks()) == 5
    with pytest.raises(ValueError):
        MesoGrid(24, 1.0 / 6, K=3)
    with pytest.raises(ValueError):
        MesoGrid(4, 0.1, K=1)
    assert MesoGrid(1000, 1.0 / 8).K == 2
    with pytest.raises(ValueError):
        TimeBlock(3, 2)


def test_is_no_triple():
    assert not is_no_triple((2, 3, 4), 2, 2, 4)
    assert is_no_triple((2, 3), 2, 2, 4)
    assert is_no_triple((2, 4), 2, 2, 4)
    assert not is_no_triple((), 2, 2, 4)
    assert not is_no_triple((1, 3), 2, 2, 4)
    assert not is_no_triple((3, 2), 2, 2, 4)
    assert is_no_triple((2, 3, 6, 7), 2, 2, 8)


def test_enumeration_and_pairing():
    grid = MesoGrid(40, 0.1, K=2, r_max=7)
    idx = range(grid.lo, grid.hi + 1)
    brute = {c for r in range(1, 8) for c in combinations(idx, r)
             if is_no_triple(c, grid.K, grid.lo, grid.hi)}
    unpaired = set(enumerate_no_triple(grid))
    assert unpaired == brute
    paired = set(enumerate_no_triple(grid, paired=True))
    assert paired == {pair_indices(c, grid.K) for c in unpaired}
    assert {expand_blocks(b) for b in paired} == unpaired
    short = list(enumerate_no_triple(grid, r_max=2))
    assert max(len(c) for c in short) == 2


@pytest.fixture(scope="module")
def theta_grid():
    return MesoGrid(24, 1.0 / 6, K=2)


def test_theta_brute_force(theta_grid, small_table):
    field = zeta_field("gaussian", 0.4, 24, seed=2)
    for block in theta_grid.blocks():
        value = theta(field, theta_grid, block, small_table).value
        brute = brute_theta(field.zeta, small_table.p0, theta_grid, block, 0.5)
        assert value == pytest.approx(brute, rel=1.0e-12)
    values = theta_values(field, theta_grid, small_table)
    assert set(values) == set(theta_grid.blocks())


def test_theta_variance_brute_force(theta_grid, small_table):
    sigma2 = 0.2
    w = np.full(25, sigma2)
    for block in theta_grid.blocks():
        exact = theta_variance(theta_grid, block, sigma2, small_table)
        assert exact == pytest.approx(
            brute_theta(w, small_table.u, theta_grid, block, 0.25), rel=1.0e-12)


def test_theta_moments(theta_grid, small_table):
    report = theta_moment_experiment("gaussian", 0.4, theta_grid, 4000, 0,
                                     small_table)
    for m2, exact in zip(report.second, report.exact_second):
        assert m2.consistent_with(exact, 4.0)
    assert len(report.covariances) == 5
    for est in report.covariances.values():
        assert est.consistent_with(0.0, 4.0)
    rows = report.rows()
    assert rows[0]["block"] == "(2,2)"
    assert set(rows[0]) == {"block", "width", "m2", "m2_stderr", "m4",
                            "m4_stderr", "m2_exact", "kurtosis_ratio"}


@pytest.fixture(scope="module")
def nt_setup(small_table):
    grid = MesoGrid(12, 1.0 / 6, K=2, r_max=3)
    kernels = polymer_kernels(12, gaussian_bump(), gaussian_bump(), small_table)
    return grid, kernels


def test_no_triple_brute_force(nt_setup):
    grid, kernels = nt_setup
    keep = no_triple_filter(grid, grid.r_max)
    field = zeta_field("rademacher", 0.5, 12, seed=4)
    assert z_no_triple(field, grid, kernels) == \
        pytest.approx(brute_polymer(field.zeta, kernels, keep), rel=1.0e-12)
    fields = zeta_fields("rademacher", 0.5, 12, seed=4, count=3)
    assert z_no_triple(fields, grid, kernels)[0] == \
        pytest.approx(z_no_triple(field, grid, kernels), rel=1.0e-14)
    with pytest.raises(ValueError):
        z_no_triple(field, MesoGrid(24, 1.0 / 6, K=2), kernels)


def test_no_triple_second_moment(nt_setup, small_table):
    grid, kernels = nt_setup
    sigma2 = 0.3
    keep = no_triple_filter(grid, grid.r_max)
    part = z_no_triple_second_moment(grid, kernels, sigma2)
    assert part == pytest.approx(brute_polymer_second(sigma2, kernels, keep),
                                 rel=1.0e-12)
    full = brute_polymer_second(sigma2, kernels)
    dist = no_triple_l2_distance(grid, kernels, sigma2, build_ubar(12, sigma2, small_table))
    assert dist == pytest.approx(np.sqrt(full - part), rel=1.0e-6)


def test_no_triple_gap_monte_carlo(nt_setup, small_table):
    grid, kernels = nt_setup
    beta = 0.5
    sigma2 = float(np.expm1(beta ** 2))
    exact = no_triple_l2_distance(grid, kernels, sigma2,
                                  build_ubar(12, sigma2, small_table)) ** 2
    est = no_triple_gap_experiment("gaussian", beta, grid, kernels, 4000, 1)
    assert est.consistent_with(exact, 4.0)


def test_cg_sum_brute_force():
    grid = MesoGrid(40, 0.1, K=2, r_max=3)
    rng = np.random.default_rng(0)
    th = {b: rng.normal() for b in grid.blocks()}
    weights = CGWeights(rng.uniform(size=grid.M + 1), rng.uniform(size=grid.M + 1), 0.7)
    value = l_cg(th, grid, weights=weights)
    brute = 0.7 + np.sqrt(0.1) * brute_cg_sum(th, grid, weights.start, weights.end, 3)
    assert value == pytest.approx(brute, rel=1.0e-12)
    assert l_cg({}, grid, weights=weights) == 0.7


def test_cg_sum_linear_in_each_block():
    grid = MesoGrid(40, 0.1, K=2, r_max=3)
    rng = np.random.default_rng(3)
    th = {b: rng.normal() for b in grid.blocks()}
    weights = CGWeights(rng.uniform(size=grid.M + 1), rng.uniform(size=grid.M + 1), 0.7)
    base = l_cg(th, grid, weights=weights)
    slopes = []
    for block in grid.blocks():
        def shifted(h):
            return l_cg({**th, block: th[block] + h}, grid, weights=weights)
        up, down = shifted(0.25), shifted(-0.25)
        assert up - base == pytest.approx(base - down, rel=1.0e-9, abs=1.0e-12)
        slope = shifted(1.0) - base
        assert shifted(-3.0) - base == pytest.approx(-3.0 * slope, rel=1.0e-9, abs=1.0e-12)
        slopes.append(slope)
    assert max(abs(s) for s in slopes) > 0.0


def test_cg_weights():
    grid = MesoGrid(64, 1.0 / 8, K=2)
    bump = gaussian_bump()
    weights = cg_weights(bump, bump, grid)
    assert weights.g1 == pytest.approx(pairings(bump, bump).phi_psi)
    phi_e = eps_test_weights(bump, grid.eps)
    assert weights.start[0] == pytest.approx(phi_e.values[-phi_e.lo])
    assert weights.end[grid.M] == pytest.approx(phi_e.values[-phi_e.lo])
    zero = {b: 0.0 for b in grid.blocks()}
    assert z_cg(zero, grid, bump, bump) == pytest.approx(weights.g1)


def test_cg_convergence_experiment(small_table):
    bump = gaussian_bump()
    report = cg_convergence_experiment(1.0 / 8, 2, [32, 64], bump, bump,
                                       "gaussian", 0.0, 32, 0, small_table,
                                       repetitions=3)
    assert report.repetitions == 3
    assert report.samples[32].shape == (3, 32)
    assert report.ks[(32, 32)] == 0.0
    assert 0.0 <= report.ks[(32, 64)] <= 1.0
    assert report.ks[(32, 64)] == np.median(report.ks_repetitions[(32, 64)])
    rows = report.rows()
    assert [r["N_i"] for r in rows] == [32, 32, 64]
    assert rows[1]["ks_min"] <= rows[1]["ks"] <= rows[1]["ks_max"]
    assert report.means[64].n == 96
    # repetition 0 uses the same streams as a single repetition
    single = cg_convergence_experiment(1.0 / 8, 2, [32], bump, bump, "gaussian",
                                       0.0, 32, 0, small_table, repetitions=1)
    assert np.array_equal(single.samples[32][0], report.samples[32][0])
    assert not np.array_equal(report.samples[32][0], report.samples[32][1])
    with pytest.raises(ValueError):
        cg_convergence_experiment(1.0 / 8, 2, [32], bump, bump, "gaussian",
                                  0.0, 32, 0, small_table, repetitions=0)


if __name__ == "__main__":
    test_is_no_triple()
    test_enumeration_and_pairing()
