from fractions import Fraction
from math import comb, sqrt

import numpy as np
import pytest

from hermpos import certifier
from hermpos.certifier import (assemble_matrix, extract_certificate, is_positive_definite_exact, min_eigenvalue,
                               minimal_m_search, verify_certificate)
from hermpos.errors import DimensionGuardError, NotPositiveDefinite, UnsupportedPrecision
from hermpos.linalg import eigendecompose, rational_ldl
from hermpos.polyalg import (HermitianBihomPoly, HoloPoly, constant, hermitian_square, make_r, multiply,
                             p_dangelo, p_eps, r_power_times)


def binom(m, j):
    return comb(m, j) if 0 <= j <= m else 0


def diagonal_oracle(eps, m):
    return [binom(m, a - 2) + (eps - 2) * binom(m, a - 1) + binom(m, a) for a in range(m + 3)]


def oracle_minimal_m(eps, m_max=40):
    return next((m for m in range(m_max + 1) if min(diagonal_oracle(eps, m)) > 0), None)


def test_assemble_matrix_examples():
    np.testing.assert_array_equal(assemble_matrix(make_r(1)).entries, np.eye(2))
    np.testing.assert_array_equal(assemble_matrix(p_dangelo()).entries, np.diag([1, -2, 1]))
    np.testing.assert_array_equal(assemble_matrix(multiply(make_r(1), make_r(1))).entries, np.diag([1, 2, 1]))


def test_assemble_matrix_hermitian_and_sized():
    rng = np.random.default_rng(0)
    s = HoloPoly.from_vector(2, 2, rng.normal(size=6) + 1j * rng.normal(size=6))
    M = assemble_matrix(r_power_times(hermitian_square(s), 2))
    assert M.size == comb(4 + 2, 2)
    np.testing.assert_array_equal(M.entries, M.entries.conj().T)


def test_exact_pd_examples():
    eye = {(i, i): 1 for i in range(5)}
    assert rational_ldl(eye, 5).positive_definite
    assert not is_positive_definite_exact(assemble_matrix(p_dangelo()))
    assert is_positive_definite_exact(assemble_matrix(r_power_times(p_eps(1), 3)))


def test_exact_pd_rejects_floats():
    with pytest.raises(UnsupportedPrecision):
        is_positive_definite_exact(assemble_matrix(make_r(1).to_float()))


def test_ldl_semidefinite_and_indefinite():
    assert rational_ldl({(0, 0): 1, (2, 2): 1}, 3).status == "psd"
    assert rational_ldl({(0, 0): 1, (0, 1): 2, (1, 0): 2, (1, 1): 1}, 2).status == "indefinite"
    assert rational_ldl({(0, 1): 1, (1, 0): 1}, 2).status == "indefinite"


def test_eigendecompose_examples():
    lam, P = eigendecompose(np.diag([1.0, -2.0, 1.0]))
    np.testing.assert_allclose(lam, [-2, 1, 1])
    lam, _ = eigendecompose(np.eye(4))
    np.testing.assert_allclose(lam, np.ones(4))
    lam, _ = eigendecompose(assemble_matrix(r_power_times(p_dangelo(), 1)).entries)
    np.testing.assert_allclose(lam, [-1, -1, 1, 1])
    assert sorted(diagonal_oracle(0, 1)) == [-1, -1, 1, 1]


def test_eigendecompose_unitary_and_deterministic():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30))
    M = A + A.conj().T
    lam, P = eigendecompose(M)
    assert np.max(np.abs(P.conj().T @ P - np.eye(30))) <= 1e-10
    lam2, P2 = eigendecompose(M.copy())
    np.testing.assert_array_equal(P, P2)
    assert np.all(np.diff(lam) >= 0)


def test_psd_invariant_under_diagonal_rescaling():
    rng = np.random.default_rng(8)
    for _ in range(50):
        A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        M = A @ A.conj().T - rng.uniform(0, 8) * np.eye(6)
        D = np.diag(rng.uniform(0.2, 3.0, size=6))
        assert np.sign(eigendecompose(M)[0][0]) == np.sign(eigendecompose(D @ M @ D)[0][0])


def test_exact_float_agreement_on_rational_matrices():
    rng = np.random.default_rng(9)
    for _ in range(40):
        A = rng.integers(-3, 4, size=(5, 5))
        M = A @ A.T - int(rng.integers(0, 6)) * np.eye(5, dtype=int)
        lam = eigendecompose(M.astype(float))[0][0]
        if abs(lam) <= 1e-6:
            continue
        entries = {(i, j): int(M[i, j]) for i in range(5) for j in range(5)}
        assert rational_ldl(entries, 5).positive_definite == (lam > 10 * certifier.DEFAULT_TOL)


def test_certificate_for_constant():
    cert = extract_certificate(constant(1), 2)
    assert sorted(cert.eigenvalues) == pytest.approx([1, 1, 2])
    assert len(cert.sections) == 3
    middle = [s for s in cert.sections if (1, 1) in s.terms][0]
    assert abs(middle.terms[(1, 1)]) == pytest.approx(sqrt(2))
    assert verify_certificate(cert, constant(1)) == 0
    assert verify_certificate(cert, constant(1), path="float") <= 1e-15


def test_dangelo_not_pd():
    with pytest.raises(NotPositiveDefinite) as info:
        extract_certificate(p_dangelo(), 2)
    assert info.value.min_eigenvalue == pytest.approx(-2) == min(diagonal_oracle(0, 2))


def test_peps_certificate():
    p = p_eps(1)
    cert = extract_certificate(p, 3)
    assert min(cert.eigenvalues) > 0 and cert.exact_psd
    assert len(cert.sections) == comb(3 + 2 + 1, 1)
    assert verify_certificate(cert, p, path="exact") == 0
    scale = r_power_times(p, 3).max_coefficient()
    assert verify_certificate(cert, p, path="float") <= 1e-10 * scale


def test_tampered_certificate_detected():
    p = p_eps(1)
    cert = extract_certificate(p, 3)
    cert.sections[0] = cert.sections[0] * 1.01
    assert verify_certificate(cert, p, path="float") > 1e-3
    cert.exact_weights[0] = cert.exact_weights[0] * Fraction(101, 100)
    assert verify_certificate(cert, p, path="exact") > 1e-3


def test_certificate_soundness_random():
    rng = np.random.default_rng(12)
    for _ in range(5):
        s = HoloPoly.from_vector(2, 1, [Fraction(int(v)) for v in rng.integers(-2, 3, size=3)])
        p = hermitian_square(s) + make_r(2)
        cert = extract_certificate(p, 1)
        assert verify_certificate(cert, p) == 0
        assert cert.residual <= certifier.DEFAULT_TOL


def test_search_examples():
    assert minimal_m_search(make_r(1), 5).minimal_m == 0
    rep = minimal_m_search(p_eps(1), 10)
    assert rep.minimal_m == 3 == oracle_minimal_m(1)
    assert [t.m for t in rep.trace] == [0, 1, 2, 3]
    rep2 = minimal_m_search(p_eps(2), 10)
    assert rep2.first_psd_m == 0 and rep2.minimal_m == 1


def test_search_dangelo_exhausted():
    rep = minimal_m_search(p_dangelo(), 8)
    assert not rep.found
    assert len(rep.trace) == 9 and all(t.min_eigenvalue < 0 for t in rep.trace)
    assert rep.warnings
    assert rep.to_dict()["minimal_m"] == "not found <= 8"


@pytest.mark.parametrize("eps, expected", [(Fraction(1, 4), 15), (Fraction(1, 2), 7), (1, 3), (2, 1)])
def test_minimal_m_frozen(eps, expected):
    assert oracle_minimal_m(eps) == expected
    assert minimal_m_search(p_eps(eps), 20).minimal_m == expected


def test_minimal_m_monotone_in_eps():
    ms = [minimal_m_search(p_eps(e), 20).minimal_m for e in (Fraction(1, 4), Fraction(1, 2), 1, 2)]
    assert ms == sorted(ms, reverse=True)


def test_min_eigenvalue_matches_oracle():
    for m in range(9):
        assert min_eigenvalue(p_dangelo(), m) == pytest.approx(min(diagonal_oracle(0, m)))


def test_dimension_guard():
    with pytest.raises(DimensionGuardError):
        extract_certificate(make_r(3), 30)


def test_float_input_certificate():
    p = p_eps(1).to_float()
    cert = extract_certificate(p, 3)
    assert cert.exact_sections is None and not cert.exact_psd
    assert cert.residual <= 1e-12
