import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from pinsim.continuum_kernels import constant, gaussian_bump
from pinsim.she_continuum import Mollifier, make_mollifier, r_of_t, \
    vartheta_from_theta, R_delta, continuum_window, she_renewal_function, \
    she_second_moment_semianalytic, she_second_moment_limit, she_mc


@pytest.mark.parametrize("name", ["bump", "cosine"])
def test_mollifier(name):
    rho = make_mollifier(name)
    assert rho.check()
    assert rho is make_mollifier(name)
    assert rho.sup == pytest.approx(float(rho(0.0)))
    mass = quad(lambda a: float(rho.self_convolution(a)), -2.0, 2.0, limit=200)[0]
    assert mass == pytest.approx(1.0, rel=1.0e-6)
    assert rho.self_convolution(2.5) == 0.0


def test_mollifier_errors():
    with pytest.raises(KeyError):
        Mollifier("boxcar")
    with pytest.raises(ValueError):
        Mollifier("bump", radius=0.0)


def test_r_of_t():
    t = 1.0e4
    assert r_of_t("bump", t) == pytest.approx(1.0 / (2.0 * np.pi * t), rel=1.0e-3)
    ts = np.array([0.5, 2.0, 8.0])
    r = r_of_t("bump", ts)
    assert r.shape == (3,)
    assert np.all(np.diff(r) < 0.0)
    with pytest.raises(ValueError):
        r_of_t("bump", 0.0)


def test_vartheta_slope():
    gap = vartheta_from_theta(2.0 * np.pi) - vartheta_from_theta(0.0)
    assert gap == pytest.approx(1.0, rel=1.0e-12)


def test_continuum_window():
    window = continuum_window(0.1, 1.0)
    L = 2.0 * np.log(10.0)
    assert window.beta ** 2 == pytest.approx(2.0 * np.pi / L + 1.0 / L ** 2)
    assert window.log_scale == pytest.approx(L)
    assert window.R_delta > 0.0
    assert set(window.as_dict()) >= {"beta", "vartheta", "consistency_gap"}
    with pytest.raises(ValueError):
        continuum_window(1.5, 0.0)
    with pytest.raises(ValueError):
        continuum_window(0.1, -100.0)


def test_renewal_function():
    T, V = she_renewal_function("bump", 0.0, 4.0, n_steps=256)
    assert_allclose(V, 1.0, rtol=0.0, atol=1.0e-15)
    beta = 1.0e-3
    T, V = she_renewal_function("bump", beta, 4.0, n_steps=4096)
    assert T[-1] == 4.0
    assert (V[-1] - 1.0) / beta ** 2 == pytest.approx(R_delta("bump", 0.5), rel=1.0e-3)
    assert np.all(np.diff(V) >= 0.0)


def test_second_moment():
    f = gaussian_bump()
    sm = she_second_moment_semianalytic(0.5, 0.0, f, n_steps=512)
    assert sm.mean_square == pytest.approx(1.0, rel=1.0e-8)
    assert sm.value > sm.mean_square
    assert sm.variance > sm.k1 > 0.0
    assert she_second_moment_limit(sm.window.vartheta, f) > 0.0


def test_second_moment_grid_too_coarse():
    f = gaussian_bump()
    with pytest.raises(RuntimeError, match="discretization error"):
        she_second_moment_semianalytic(0.5, 0.0, f, n_steps=512, rel_tol=0.0)
    with pytest.raises(RuntimeError, match="increase n_steps beyond 16"):
        she_second_moment_semianalytic(0.1, 0.0, f, n_steps=16, rel_tol=1.0e-8)


def test_unbounded_test_function_rejected():
    with pytest.raises(ValueError, match="unbounded support"):
        she_second_moment_semianalytic(0.5, 0.0, constant(), n_steps=64)
    with pytest.raises(ValueError, match="unbounded support"):
        she_mc(0.5, 0.0, constant(), dt=4.0 / 256, n_paths=2, n_noise=4)


def test_she_mc_determinism():
    f = gaussian_bump()
    kw = dict(dt=4.0 / 256, n_paths=2, n_noise=4, seed=5, n_starts=8)
    one = she_mc(0.5, 0.0, f, workers=1, **kw)
    two = she_mc(0.5, 0.0, f, workers=2, **kw)
    assert one.n == 4
    assert one.mean == two.mean
    assert one.variance == two.variance
    with pytest.raises(ValueError):
        she_mc(0.5, 0.0, f, dt=4.0 / 64, n_paths=2, n_noise=4)


if __name__ == "__main__":
    test_vartheta_slope()
    test_r_of_t()
