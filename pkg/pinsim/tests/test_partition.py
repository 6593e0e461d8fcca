import numpy as np
import pytest
from numpy.testing import assert_allclose

from pinsim.continuum_kernels import gaussian_bump, tent, pairings
from pinsim.dickman import build_ubar, GThetaTable
from pinsim.disorder import zeta_field, zeta_fields, ChaosField
from pinsim.partition import pin_partition, build_partition_table, \
    chaos_eval, point_to_line_partition, pinning_measure_integral, \
    polymer_kernels, polymer_measure_integral, decomposition_identity_check, \
    exact_second_moment, annealed_free_energy, free_energy_estimate, v1_theta, \
    pinning_polymer_gap, hitting_weight_profile
from pinsim.tests.utils import brute_pin_partition, brute_chaos, \
    brute_polymer, brute_polymer_second


@pytest.fixture
def field10():
    return zeta_field("gaussian", 0.5, 12, seed=11)


def test_pin_partition_brute_force(field10, small_table):
    zeta = field10.zeta
    for M, K in [(0, 0), (0, 1), (2, 9), (1, 12), (3, 3)]:
        direct = pin_partition(field10, M, K, small_table)
        brute = brute_pin_partition(zeta, M, K, small_table.K)
        assert direct == pytest.approx(brute, rel=1.0e-12)
    with pytest.raises(ValueError):
        pin_partition(field10, 5, 2, small_table)


def test_pin_partition_reward(field10, small_table):
    h = 0.3
    direct = pin_partition(field10, 2, 8, small_table, h=h)
    tilted = np.expm1(h + np.log1p(field10.zeta))
    assert direct == pytest.approx(brute_pin_partition(tilted, 2, 8, small_table.K),
                                   rel=1.0e-12)


def test_partition_table(field10, small_table):
    table = build_partition_table(field10, 12, small_table)
    for m, n in [(0, 12), (4, 7), (5, 5)]:
        assert table(m, n) == pytest.approx(pin_partition(field10, m, n, small_table),
                                            rel=1.0e-12)
    assert table(7, 4) == 0.0
    with pytest.raises(MemoryError):
        build_partition_table(field10, 12, small_table, max_size=10)
    batch = zeta_fields("gaussian", 0.5, 12, seed=1, count=2)
    with pytest.raises(ValueError):
        build_partition_table(batch, 12, small_table)


def test_chaos_expansion_brute_force(field10, small_table):
    N = 10
    assert chaos_eval(field10, N, small_table) == \
        pytest.approx(brute_chaos(field10.zeta, N, small_table.p0), rel=1.0e-12)


def test_chaos_matches_point_to_line(small_table):
    fields = zeta_fields("rademacher", 0.6, 40, seed=2, count=5)
    chaos = chaos_eval(fields, 40, small_table)
    ptl = point_to_line_partition(fields, 40, small_table)
    assert chaos.shape == (5,)
    assert_allclose(chaos, ptl, rtol=1.0e-12)


def test_zero_disorder(small_table):
    # with zeta = 0 the point-to-line partition function is 1
    field = ChaosField.zeros(31)
    assert chaos_eval(field, 30, small_table) == pytest.approx(1.0)
    assert point_to_line_partition(field, 30, small_table) == pytest.approx(1.0)
    assert annealed_free_energy(0.0, 30, small_table) == pytest.approx(0.0, abs=1.0e-15)
    assert annealed_free_energy(0.5, 30, small_table) > 0.0


def test_pinning_measure_integral_matches_table(small_table):
    field = zeta_field("gaussian", 0.4, 20, seed=4)
    f = gaussian_bump(scale=0.2, center=0.3)
    h = tent(half_width=0.4, center=0.6)
    table = build_partition_table(field, 20, small_table)
    streamed = pinning_measure_integral(field, 20, f, h, small_table)
    assert streamed == pytest.approx(table.pinning_integral(f, h), rel=1.0e-12)


@pytest.fixture(scope="module")
def kernels10(small_table):
    return polymer_kernels(10, gaussian_bump(), tent(), small_table)


def test_polymer_kernels(kernels10):
    assert kernels10.N == 10
    assert kernels10.A[0] == 0.0
    assert kernels10.a.shape == (11,)
    q = pairings(gaussian_bump(), tent()).phi_psi
    # the lattice pairing is already close to the continuum one at N = 10
    assert kernels10.q == pytest.approx(q, rel=0.1)


def test_polymer_integral_brute_force(kernels10):
    field = zeta_field("gaussian", 0.5, 10, seed=5)
    assert polymer_measure_integral(field, kernels10) == \
        pytest.approx(brute_polymer(field.zeta, kernels10), rel=1.0e-12)


def test_decomposition_identity(kernels10):
    fields = zeta_fields("rademacher", 0.5, 10, seed=6, count=8)
    assert decomposition_identity_check(fields, kernels10) < 1.0e-12


def test_exact_second_moment(kernels10, small_table):
    sigma2 = 0.3
    ubar = build_ubar(10, sigma2, small_table)
    assert exact_second_moment(kernels10, ubar) == \
        pytest.approx(brute_polymer_second(sigma2, kernels10), rel=1.0e-12)
    with pytest.raises(RuntimeError):
        exact_second_moment(kernels10, build_ubar(5, sigma2, small_table))


def test_second_moment_monte_carlo(kernels10, small_table):
    beta = 0.4
    fields = zeta_fields("gaussian", beta, 10, seed=9, count=20000)
    z = polymer_measure_integral(fields, kernels10)
    sigma2 = float(np.expm1(beta ** 2))
    exact = exact_second_moment(kernels10, build_ubar(10, sigma2, small_table))
    stderr = np.std(z ** 2) / np.sqrt(z.size)
    assert abs(np.mean(z ** 2) - exact) < 4.0 * stderr
    assert abs(z.mean() - kernels10.q) < 4.0 * z.std() / np.sqrt(z.size)


def test_free_energy_jensen(small_table):
    est = free_energy_estimate("gaussian", 0.3, 0.0, 40, 16, seed=0,
                               table=small_table)
    assert est.n == 16
    assert est.mean < annealed_free_energy(0.0, 40, small_table) + 3.0 * est.stderr
    again = free_energy_estimate("gaussian", 0.3, 0.0, 40, 16, seed=0,
                                 table=small_table)
    assert again.mean == est.mean


def test_hitting_weights_match_continuum(small_table):
    bump = gaussian_bump()
    kernels = polymer_kernels(64, bump, bump, small_table)
    m = np.array([32, 48])
    assert_allclose(kernels.A[m] / 8.0, hitting_weight_profile(bump, 64, m), rtol=0.1)


def test_pinning_polymer_gap(small_table):
    def f(s):
        return 1.0 + 0.5 * s * (1.0 - s)

    def h(s):
        return np.ones_like(s)

    fields = zeta_fields("gaussian", 0.2, 40, seed=12, count=8)
    gap = pinning_polymer_gap(f, h, 40, fields, small_table)
    assert gap.gap2.n == 8
    assert max(gap.fit_errors) < 1.0e-5
    assert gap.pinning2.mean > 0.0
    assert gap.relative < 0.25


def test_v1_theta():
    gtheta = GThetaTable(0.0, t_max=2.0, n_small=61, n_large=11, check=False)
    bump = gaussian_bump()
    t = tent()
    v = v1_theta(bump, t, gtheta)
    assert v > 0.0
    assert v1_theta(t, bump, gtheta) == pytest.approx(v, rel=1.0e-3)
    assert v1_theta(gaussian_bump(mass=2.0), t, gtheta) == pytest.approx(4.0 * v, rel=1.0e-8)


if __name__ == "__main__":
    from pinsim.walks import build_kernel_table
    test_chaos_matches_point_to_line(build_kernel_table("binomial4", 64))
