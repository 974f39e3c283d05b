import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import special

from hermpos.errors import NumericError
from hermpos.geometry import (INF, FsSampleSet, ProjectivePoint, ball_kernel_integral, ball_volume,
                              ball_volume_quadrature, canonical_chart, canonicalize, chart_coordinates, diastasis,
                              diastasis_sq, fs_samples, kernel, kernel_power_integral, off_diagonal_integral,
                              pair_diastasis_sq, polar_integrate)
from hermpos.montecarlo import mean_estimate


def random_unitary(rng, k):
    q, r = np.linalg.qr(rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_projective_point_normalization():
    p = ProjectivePoint([0, 2j, 2])
    assert abs(np.linalg.norm(p.coords) - 1) <= 1e-14
    assert p.coords[1].imag == 0 and p.coords[1].real > 0
    assert p == ProjectivePoint(np.array([0, 1, -1j]) * (0.3 - 0.4j))
    with pytest.raises(ValueError):
        ProjectivePoint([0, 0])


def test_diastasis_examples():
    x = [1, 0]
    assert diastasis(x, x) == 0
    assert diastasis(x, [1, 0.5]) == pytest.approx(0.5, abs=1e-15)
    assert diastasis(x, [0, 1]) == INF


def test_diastasis_symmetric_and_invariant():
    rng = np.random.default_rng(1)
    X = fs_samples(2, 1000, 1, stream="a").points
    Y = fs_samples(2, 1000, 1, stream="b").points
    d = diastasis_sq(X, Y)
    np.testing.assert_allclose(d, diastasis_sq(Y, X), rtol=1e-12)
    assert np.max(diastasis_sq(X, X)) <= 1e-28
    U = random_unitary(rng, 3)
    np.testing.assert_allclose(diastasis(X @ U.T, Y @ U.T), np.sqrt(d), rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(pair_diastasis_sq(X[:5], Y[:7]), diastasis_sq(X[:5, None], Y[None, :7]), rtol=1e-9)


@pytest.mark.parametrize("m", [0, 1, 7, 20])
def test_kernel_identity(m):
    X = fs_samples(1, 500, 2, stream="a").points
    Y = fs_samples(1, 500, 2, stream="b").points
    np.testing.assert_allclose(kernel(X, Y, m), (1 + diastasis_sq(X, Y)) ** -m, rtol=1e-12, atol=1e-300)


def test_canonical_chart_examples():
    chart = canonical_chart([1, 0, 0])
    assert chart([0, 0]) == ProjectivePoint([1, 0, 0])
    assert canonical_chart([1, 0])([1]) == ProjectivePoint([1, 1])


def test_canonical_chart_preserves_diastasis():
    rng = np.random.default_rng(3)
    for x in fs_samples(2, 20, 3).points:
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        z *= 0.7 / np.linalg.norm(z)
        y = canonical_chart(x)(z)
        assert diastasis(x, y) == pytest.approx(0.7, abs=1e-12)
        # independent recomputation of delta from the chart point
        c = y.coords
        inner = abs(np.vdot(canonicalize(x), c)) ** 2
        assert math.sqrt(1 / inner - 1) == pytest.approx(0.7, abs=1e-12)
        assert np.linalg.norm(chart_coordinates(x, c)) == pytest.approx(0.7, abs=1e-12)


def test_fs_samples_basic():
    S = fs_samples(1, 20000, 5)
    assert S.integrate(np.ones(len(S))) == pytest.approx(1.0, abs=1e-12)
    est = mean_estimate(np.abs(S.points[:, 0]) ** 2)
    assert est.within(0.5)
    other = fs_samples(1, 20000, 5, stream="other")
    est = mean_estimate(np.abs(np.sum(S.points * other.points.conj(), axis=1)) ** 2)
    assert est.within(float(kernel_power_integral(1, 1).exact))


def test_fs_samples_sharding_is_deterministic():
    a = fs_samples(2, 1001, 9, shards=4)
    b = fs_samples(2, 1001, 9, shards=4)
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, fs_samples(2, 1001, 9, shards=3).points)
    assert len(a) == 1001


def test_sample_set_persistence(tmp_path):
    a = fs_samples(1, 50, 4, shards=2)
    b = FsSampleSet.from_json(a.to_json())
    np.testing.assert_array_equal(a.points, b.points)
    a.save(tmp_path / "s.npz")
    c = FsSampleSet.load(tmp_path / "s.npz")
    np.testing.assert_array_equal(a.points, c.points)
    assert c.meta() == a.meta()


def test_monte_carlo_rate():
    errs = []
    for N in (3000, 9000, 27000):
        X = fs_samples(1, N, 6, stream="x").points
        Y = fs_samples(1, N, 6, stream="y").points
        errs.append(mean_estimate(kernel(X, Y, 3)).stderr)
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(math.sqrt(3), rel=0.15)


def test_polar_integrate_examples():
    assert polar_integrate(lambda r: (1 + r * r) ** -3, 1) == pytest.approx(0.5, rel=1e-10)
    assert polar_integrate(lambda r: 0.0, 1) == 0
    assert polar_integrate(lambda r: r, 1, 1.0) == pytest.approx(2 / 3, rel=1e-12)


def test_polar_integrate_divergent_raises():
    with pytest.raises(NumericError):
        polar_integrate(lambda r: r ** 3, 1)


@pytest.mark.parametrize("m, n, expected", [(0, 1, 1), (0, 3, 1), (1, 1, Fraction(1, 2)), (10, 2, Fraction(1, 66))])
def test_kernel_power_integral_examples(m, n, expected):
    ki = kernel_power_integral(m, n)
    assert ki.exact == expected
    assert ki.quadrature == pytest.approx(float(expected), rel=1e-10)


@pytest.mark.parametrize("m", [0, 3, 12, 40])
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("R", [0.1, 0.6, 2.0])
def test_off_diagonal_regularized_beta(m, n, R):
    # n int_T^1 t^(n-1) (1-t)^m dt with T = R^2/(1+R^2)
    T = R * R / (1 + R * R)
    beta = special.beta(n, m + 1) * (1 - special.betainc(n, m + 1, T))
    assert off_diagonal_integral(m, n, R) == pytest.approx(n * beta, rel=1e-8)
    total = float(kernel_power_integral(m, n).exact)
    assert off_diagonal_integral(m, n, R) + ball_kernel_integral(m, n, R) == pytest.approx(total, rel=1e-9)


def test_off_diagonal_examples():
    assert off_diagonal_integral(3, 2, 1e-9) == pytest.approx(float(kernel_power_integral(3, 2).exact), rel=1e-9)
    assert off_diagonal_integral(0, 1, 1.0) == pytest.approx(1 - ball_volume(1.0, 1), rel=1e-10)
    assert off_diagonal_integral(20, 1, 1.0) <= 2.0 ** -20
    assert off_diagonal_integral(5, 1, INF) == 0


def test_ball_volume_examples():
    assert ball_volume(INF, 2) == 1
    assert ball_volume(1.0, 1) == 0.5
    assert ball_volume_quadrature(1.0, 1) == pytest.approx(0.5, rel=1e-12)
    for R in np.linspace(0.05, 10, 40):
        assert ball_volume(R, 1) <= R * R
    with pytest.raises(ValueError):
        ball_volume(0.0, 1)


def test_ball_volume_matches_sampling():
    X = fs_samples(2, 20000, 7, stream="x").points
    Y = fs_samples(2, 20000, 7, stream="y").points
    est = mean_estimate((diastasis_sq(X, Y) < 0.8 ** 2).astype(float))
    assert est.within(ball_volume(0.8, 2))
