import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pinsim.disorder import parse_disorder_law, DensityDisorder, \
    uniform_disorder, log_mgf, solve_critical_beta, zeta_fields, zeta_field, \
    tilted_field, ChaosField
from pinsim.utils import write_table


def test_log_mgf_closed_forms():
    assert log_mgf("gaussian", 0.3) == pytest.approx(0.045)
    rad = parse_disorder_law("rademacher")
    assert rad.log_mgf(0.7) == pytest.approx(np.log(np.cosh(0.7)), rel=1.0e-14)
    assert rad.log_mgf(40.0) == pytest.approx(40.0 - np.log(2.0))
    a = np.sqrt(3.0) * 0.5
    assert uniform_disorder().log_mgf(0.5) == pytest.approx(np.log(np.sinh(a) / a),
                                                            rel=1.0e-10)


def test_zeta_variance(disorder_law):
    beta = 0.35
    generic = np.expm1(disorder_law.log_mgf(2 * beta) - 2 * disorder_law.log_mgf(beta))
    assert disorder_law.zeta_variance(beta) == pytest.approx(generic, rel=1.0e-12)
    h = 1.0e-6
    numeric = (disorder_law.zeta_variance(beta + h) -
               disorder_law.zeta_variance(beta - h)) / (2 * h)
    assert disorder_law.dzeta_variance(beta) == pytest.approx(numeric, rel=1.0e-6)


def test_cumulants():
    assert parse_disorder_law("rademacher").cumulants == (1.0, 0.0, -2.0)
    k2, k3, k4 = uniform_disorder().cumulants
    assert k2 == pytest.approx(1.0)
    assert k3 == pytest.approx(0.0, abs=1.0e-12)
    assert k4 == pytest.approx(-1.2)


def test_density_disorder_validation(tmp_path):
    with pytest.raises(ValueError):
        DensityDisorder(lambda x: np.ones_like(x), (-1.0, 1.0))
    bounded = DensityDisorder(lambda x: np.ones_like(x), (-np.sqrt(3.0), np.sqrt(3.0)),
                              beta0=1.0)
    with pytest.raises(ValueError):
        bounded.zeta_variance(0.6)
    x = np.linspace(-np.sqrt(3.0), np.sqrt(3.0), 11)
    fn = write_table(tmp_path / "density.csv", {"x": x, "density": np.ones_like(x)})
    law = parse_disorder_law({"name": "tabulated", "params": {"filename": str(fn)}})
    assert law.name == "tabulated"
    assert law.log_mgf(0.5) == pytest.approx(uniform_disorder().log_mgf(0.5), rel=1.0e-8)
    with pytest.raises(KeyError):
        parse_disorder_law("cauchy")


def test_critical_beta_closed_forms():
    N, vartheta, R_N = 100, 0.5, 3.0
    target = (1.0 + vartheta / np.log(N)) / R_N
    gauss = solve_critical_beta("gaussian", N, vartheta, R_N)
    assert gauss.sigma2 == pytest.approx(target, rel=1.0e-15)
    assert gauss.beta == pytest.approx(np.sqrt(np.log1p(target)), rel=1.0e-12)
    assert gauss.residual < 1.0e-14
    assert gauss.lambda_N == pytest.approx(1.0 + vartheta / np.log(N))
    rad = solve_critical_beta("rademacher", N, vartheta, R_N)
    assert rad.beta == pytest.approx(np.arctanh(np.sqrt(target)), rel=1.0e-12)
    uni = solve_critical_beta(uniform_disorder(), N, vartheta, R_N)
    assert float(uni.residual) / target < 1.0e-10


def test_critical_beta_errors():
    with pytest.raises(ValueError):
        solve_critical_beta("rademacher", 100, 0.0, 0.5)
    with pytest.raises(ValueError):
        solve_critical_beta("gaussian", 2, 0.0, 1.0)
    with pytest.raises(ValueError):
        solve_critical_beta("gaussian", 100, -10.0, 1.0)


def test_beta_decreases_with_R():
    betas = [solve_critical_beta("gaussian", 10 ** k, 0.0, R).beta
             for k, R in [(3, 1.5), (4, 2.0), (5, 2.5)]]
    assert np.all(np.diff(betas) < 0.0)


def test_zeta_field_moments(disorder_law):
    beta = 0.4
    fields = zeta_fields(disorder_law, beta, 1999, seed=1, count=50)
    z = fields.zeta.ravel()
    sigma2 = disorder_law.zeta_variance(beta)
    assert abs(z.mean()) < 4.0 * np.sqrt(sigma2 / z.size)
    assert z.var() == pytest.approx(sigma2, rel=0.05)
    assert fields.batched
    assert fields.n_fields == 50
    assert fields.n_times == 2000


def test_zeta_streams_independent_of_batching():
    batch = zeta_fields("gaussian", 0.3, 50, seed=7, count=4)
    single = zeta_field("gaussian", 0.3, 50, seed=7, stream=2)
    assert_array_equal(batch.row(2).zeta, single.zeta)
    later = zeta_fields("gaussian", 0.3, 50, seed=7, count=2, first=2)
    assert_array_equal(later.zeta[0], batch.zeta[2])
    assert_array_equal(later.streams, [2, 3])
    other = zeta_field("gaussian", 0.3, 50, seed=8, stream=2)
    assert not np.array_equal(other.zeta, single.zeta)
    window = zeta_field("gaussian", 0.3, (10, 40), seed=7, stream=2)
    assert window.start == 10
    assert_array_equal(window.window(10, 40), single.window(10, 40))


def test_chaos_field_window():
    field = ChaosField(np.arange(10.0), 0.0, start=5)
    assert_array_equal(field.window(6, 8), [1.0, 2.0])
    with pytest.raises(RuntimeError):
        field.window(4, 8)
    with pytest.raises(RuntimeError):
        field.window(10, 16)
    zeros = ChaosField.zeros(6, n_fields=3)
    assert zeros.zeta.shape == (3, 6)
    assert zeros.row(1).zeta.shape == (6,)


def test_tilted_field():
    field = zeta_field("rademacher", 0.5, 20, seed=3)
    tilted = tilted_field(field, 0.2)
    assert_allclose(1.0 + tilted.zeta, np.exp(0.2) * (1.0 + field.zeta), rtol=1.0e-14)


if __name__ == "__main__":
    test_critical_beta_closed_forms()
    test_zeta_streams_independent_of_batching()
