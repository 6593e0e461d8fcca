import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad, trapezoid
from scipy.special import gammaln

from pinsim.dickman import DickmanDensity, dickman_density, dickman_grid, \
    dickman_tail_bound, g_theta, g_theta_cumulative, GThetaTable, \
    gtheta_asymptotic_ratios, gtheta_renewal_identity, build_ubar, \
    ubar_kterm, UbarTable, sample_dickman_renewal
from pinsim.utils import euler_gamma


def test_head_closed_form():
    assert dickman_density(1.0, 0.5) == pytest.approx(0.5614594835668851, rel=1.0e-14)
    t = np.linspace(1.05, 2.0, 12)
    assert_allclose(dickman_density(1.0, t), np.exp(-euler_gamma) * (1.0 - np.log(t)),
                    rtol=1.0e-10)
    d = DickmanDensity(0.5)
    assert d(0.0) == 0.0
    assert d(0.25) == pytest.approx(0.5 * 0.25 ** -0.5 * d.c)
    with pytest.raises(ValueError):
        DickmanDensity(0.0)
    with pytest.raises(RuntimeError):
        d(5.0)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_normalization(s):
    d = DickmanDensity(s, t_max=14.0)
    mass, tail = d.normalization()
    assert tail < 1.0e-8
    assert mass == pytest.approx(1.0, abs=1.0e-7)
    x = np.linspace(0.1, 13.0, 40)
    assert np.all(np.diff(d.cdf(x)) >= -1.0e-14)
    # the cdf is the integral of the density
    assert d.cdf(2.5) - d.cdf(1.5) == pytest.approx(
        quad(lambda t: float(d(t)), 1.5, 2.5, epsabs=1.0e-13)[0], rel=1.0e-9)


def test_mean_of_dickman():
    # E[Y_s] = s
    s = 1.5
    d = DickmanDensity(s, t_max=16.0)
    mean = quad(lambda t: t * float(d(t)), 0.0, 16.0, points=[1.0, 2.0, 3.0],
                limit=400)[0]
    assert mean == pytest.approx(s, rel=1.0e-7)


def test_tail_bound():
    assert dickman_tail_bound(1.0, 0.5) == 1.0
    bounds = [dickman_tail_bound(1.0, x) for x in (2.0, 4.0, 8.0)]
    assert np.all(np.diff(bounds) < 0.0)
    d = DickmanDensity(1.0, t_max=6.0)
    assert 1.0 - d.cdf(4.0) <= dickman_tail_bound(1.0, 4.0)


def test_dickman_grid(tmp_path):
    grid = dickman_grid([0.5, 1.0], [0.5, 1.5, 3.0])
    assert grid.f.shape == (2, 3)
    assert grid.f.min() >= 0.0
    fn = grid.write_csv(tmp_path / "dickman.csv")
    assert fn.exists()


def test_g_theta_small_t():
    vartheta = 0.3
    # G(t) = t^{-1} int_0^inf e^{s(vartheta - gamma + log t)}/Gamma(s) ds on (0, 1]
    s = np.linspace(0.0, 40.0, 400001)
    for t in (1.0e-3, 0.5, 1.0):
        integrand = np.zeros_like(s)
        integrand[1:] = np.exp(s[1:] * (vartheta - euler_gamma + np.log(t)) - gammaln(s[1:]))
        ref = trapezoid(integrand, s) / t
        assert g_theta(vartheta, t) == pytest.approx(ref, rel=1.0e-6)
    with pytest.raises(ValueError):
        g_theta(vartheta, 0.0)


def test_g_theta_cumulative():
    vartheta = -0.2
    direct = quad(lambda t: float(g_theta(vartheta, t)), 0.1, 0.6, epsrel=1.0e-9)[0]
    diff = g_theta_cumulative(vartheta, 0.6) - g_theta_cumulative(vartheta, 0.1)
    assert diff == pytest.approx(direct, rel=1.0e-6)
    with pytest.raises(ValueError):
        g_theta_cumulative(vartheta, 1.5)


def test_g_theta_continuous_at_one():
    below = g_theta(0.0, 1.0)
    above = g_theta(0.0, 1.0 + 1.0e-7)
    assert above == pytest.approx(below, rel=1.0e-5)


@pytest.fixture(scope="module")
def small_gtheta():
    return GThetaTable(0.0, t_max=2.0, n_small=61, n_large=11, check=False)


def test_gtheta_table(small_gtheta, tmp_path):
    t = np.array([1.0e-3, 0.3, 1.5])
    assert_allclose(small_gtheta(t), g_theta(0.0, t), rtol=1.0e-4)
    with pytest.raises(RuntimeError):
        small_gtheta(3.0)
    fn = tmp_path / "gt.h5"
    small_gtheta.to_hdf5(fn)
    again = GThetaTable.from_hdf5(fn, vartheta=0.0)
    assert_allclose(again.G, small_gtheta.G, rtol=0.0, atol=0.0)
    with pytest.raises(RuntimeError):
        GThetaTable.from_hdf5(fn, vartheta=1.0)
    assert small_gtheta.cumulative(1.5) > small_gtheta.cumulative(1.0)


def test_gtheta_asymptotics(small_gtheta):
    density, cumulative = gtheta_asymptotic_ratios(small_gtheta, (1.0e-4, 1.0e-8))
    assert np.all(np.abs(density - 1.0) < 0.5)
    assert np.abs(density[-1] - 1.0) < np.abs(density[0] - 1.0)
    assert np.all(np.abs(cumulative - 1.0) < 0.5)


@pytest.mark.slow
def test_gtheta_renewal_identity(small_gtheta):
    lhs, rhs = gtheta_renewal_identity(small_gtheta, 0.8, 0.4)
    assert rhs == pytest.approx(lhs, rel=1.0e-3)
    with pytest.raises(ValueError):
        gtheta_renewal_identity(small_gtheta, 0.4, 0.8)


def test_ubar_compositions(small_table):
    sigma2 = 0.4
    N = 9
    ubar = build_ubar(N, sigma2, small_table)
    assert ubar.U[0] == sigma2
    for n in range(1, N + 1):
        total = sum(ubar_kterm(n, k, sigma2, small_table.u) for k in range(1, n + 2))
        assert ubar.U[n] == pytest.approx(total, rel=1.0e-12)
    assert ubar_kterm(3, 6, sigma2, small_table.u) == 0.0
    with pytest.raises(RuntimeError):
        UbarTable(3, 0.5, np.array([0.4, 0.1, 0.1, 0.1]))


def test_dickman_renewal_sample(kernel_table):
    sample = sample_dickman_renewal(2000, 1.0, 64, seed=3, table=kernel_table)
    assert sample.steps == int(np.floor(np.log(2000)))
    assert sample.values.shape == (64,)
    assert np.all(sample.values > 0.0)
    assert 0.0 <= sample.ks_matched <= 1.0
    assert sample.increment_mean.consistent_with(sample.expected_increment, 4.0)
    again = sample_dickman_renewal(2000, 1.0, 64, seed=3, table=kernel_table)
    assert_allclose(again.values, sample.values, rtol=0.0, atol=0.0)
    with pytest.raises(ValueError):
        sample_dickman_renewal(2, 0.1, 8, seed=0, table=kernel_table)


if __name__ == "__main__":
    test_head_closed_form()
    test_normalization(1.0)
