"""Acceptance criteria, one test each, at their stated tolerances."""

import io
import json
import math
import time
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from hermpos import polyio
from hermpos.certifier import extract_certificate, min_eigenvalue, minimal_m_search, verify_certificate
from hermpos.cli import main
from hermpos.geometry import (ball_volume, ball_volume_quadrature, fs_samples, kernel_power_integral,
                              off_diagonal_integral)
from hermpos.lemmas import run_lemma_suite
from hermpos.montecarlo import substream
from hermpos.operator import abc_decomposition, asymptotic_ratio, gram, gram_diagonalize, k_form, merge
from hermpos.polyalg import (HoloPoly, constant, hermitian_square, make_r, multiply,
                             p_dangelo, p_eps, r_power_times)
from hermpos import multiindex as mi


def binom(m, j):
    return comb(m, j) if 0 <= j <= m else 0


def diagonal_oracle(eps, m):
    """Diagonal of r^m p_eps at Z_1-exponent a, from the binomial expansion."""
    return [binom(m, a - 2) + (eps - 2) * binom(m, a - 1) + binom(m, a) for a in range(m + 3)]


def random_section(rng, n, k):
    size = mi.basis_size(k, n)
    return HoloPoly.from_vector(n, k, rng.normal(size=size) + 1j * rng.normal(size=size))


def test_kernel_integral_exactness(criterion):
    t0 = time.time()
    worst = 0.0
    for n in (1, 2):
        for m in (0, 1, 5, 10, 25):
            ki = kernel_power_integral(m, n)
            exact = Fraction(math.factorial(n) * math.factorial(m), math.factorial(m + n))
            assert ki.exact == exact
            worst = max(worst, abs(ki.quadrature - float(exact)) / float(exact))
    elapsed = time.time() - t0
    ok = criterion(1, "kernel integral exactness", worst <= 1e-8 and elapsed < 10,
                   f"worst rel err {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_off_diagonal_bound(criterion):
    t0 = time.time()
    ok = True
    worst_ratio = 0.0
    for m in (5, 10, 20):
        for R in (0.5, 1.0):
            off = off_diagonal_integral(m, 1, R)
            bound = (1 + R * R) ** -m
            ok &= off <= bound * (1 + 1e-8)
            worst_ratio = max(worst_ratio, off / bound)
    elapsed = time.time() - t0
    assert criterion(2, "off-diagonal bound", ok and elapsed < 5, f"max value/bound {worst_ratio:.3f}, {elapsed:.1f}s")


def test_ball_volume_bound(criterion):
    t0 = time.time()
    rng = substream(2024, "acceptance.ball")
    ok, worst = True, 0.0
    for _ in range(50):
        R = float(rng.uniform(0.01, 5.0))
        n = int(rng.integers(1, 4))
        v = ball_volume(R, n)
        ok &= v <= R ** (2 * n)
        ok &= v == pytest.approx((R * R / (1 + R * R)) ** n, rel=1e-15)
        worst = max(worst, abs(ball_volume_quadrature(R, n) - v) / v)
    elapsed = time.time() - t0
    assert criterion(3, "ball-volume bound", ok and worst <= 1e-10 and elapsed < 5,
                     f"worst quadrature rel err {worst:.2e}, {elapsed:.1f}s")


def test_d0_operator_identity(criterion):
    t0 = time.time()
    p = constant(1)
    n = 1
    X = fs_samples(n, 100_000, 4, shards=8, stream="acceptance.d0.x")
    Y = fs_samples(n, 100_000, 4, shards=8, stream="acceptance.d0.y")
    rng = substream(4, "acceptance.d0.sections")
    worst, ok = 0.0, True
    for m in (5, 10, 20):
        target = math.factorial(m) * math.factorial(n) / math.factorial(m + n)
        sections = [HoloPoly.monomial((m, 0)), HoloPoly.monomial((m // 2, m - m // 2)), HoloPoly.monomial((0, m))]
        sections += [random_section(rng, n, m) for _ in range(2)]
        for s in sections:
            est = asymptotic_ratio(s, p, m, X, Y)
            # the ratio estimate is K m^n / (n! |s|^2); divide the normalization back out
            scale = math.factorial(n) / m ** n
            value, err = est.ratio.real * scale, est.ratio.stderr * scale
            z = abs(value - target) / err
            worst = max(worst, z)
            ok &= z <= 3
    elapsed = time.time() - t0
    assert criterion(4, "d=0 operator identity", ok and elapsed < 300, f"worst {worst:.2f} sigma, {elapsed:.0f}s")


def test_ratio_trend(criterion):
    t0 = time.time()
    p = make_r(1)
    X = fs_samples(1, 200_000, 5, shards=4, stream="acceptance.trend.x")
    Y = fs_samples(1, 200_000, 5, shards=4, stream="acceptance.trend.y")
    devs = []
    for m in (8, 16, 32, 64):
        k = m + 1
        s = HoloPoly.monomial((k - k // 2, k // 2))
        est = asymptotic_ratio(s, p, m, X, Y).ratio
        devs.append((abs(est.real - 1.0), est.stderr))
    ok = all(a - b > 3 * math.hypot(ea, eb) for (a, ea), (b, eb) in zip(devs, devs[1:]))
    elapsed = time.time() - t0
    detail = ", ".join(f"{d:.4f}+-{e:.4f}" for d, e in devs)
    assert criterion(5, "normalized ratio trend", ok and elapsed < 900, f"|ratio-1|: {detail}; {elapsed:.0f}s")


def _random_metric_poly(rng, n, d):
    """r^d plus a small sum of Hermitian squares: positive on the sphere, not invariant."""
    p = make_r(n)
    base = p
    for _ in range(d - 1):
        base = multiply(base, p)
    s = random_section(rng, n, d)
    return base + hermitian_square(s * (0.3 / max(1e-12, float(np.max(np.abs(s.to_vector()))))))


def test_decomposition_consistency(criterion):
    t0 = time.time()
    rng = substream(6, "acceptance.abc")
    consistent, b_zero = True, True
    worst = 0.0
    for run in range(10):
        n = int(rng.integers(1, 3))
        d = int(rng.integers(1, 3))
        m = int(rng.integers(4, 17))
        p = _random_metric_poly(rng, n, d)
        s = random_section(rng, n, m + d)
        X = fs_samples(n, 2000, 6, stream=f"acceptance.abc.x.{run}")
        Y = fs_samples(n, 2000, 6, stream=f"acceptance.abc.y.{run}")
        rep = abc_decomposition(s, p, m, X, Y)
        consistent &= rep.decomposition_consistent()
        worst = max(worst, abs(rep.A.value + rep.B.value + rep.C.value - rep.k_value.value) / rep.k_value.stderr)
    for m in (5, 10):
        X = fs_samples(1, 2000, 7, stream="acceptance.abc.one.x")
        Y = fs_samples(1, 2000, 7, stream="acceptance.abc.one.y")
        rep = abc_decomposition(random_section(rng, 1, m), constant(1), m, X, Y)
        b_zero &= rep.B.within(0.0) and rep.decomposition_consistent()
    elapsed = time.time() - t0
    assert criterion(6, "decomposition consistency", consistent and b_zero and elapsed < 600,
                     f"worst |A+B+C-K| {worst:.2e} sigma, {elapsed:.0f}s")


def test_certificate_pipeline(criterion):
    t0 = time.time()
    p = p_eps(1)
    rep = minimal_m_search(p, 10)
    oracle_m = next(m for m in range(11) if min(diagonal_oracle(1, m)) > 0)
    cert = extract_certificate(p, 3)
    exact_res = verify_certificate(cert, p, path="exact")
    oracle_diag = all(
        r_power_times(p, m).coefficient((m + 2 - a, a), (m + 2 - a, a)) == diagonal_oracle(1, m)[a]
        for m in range(0, 6) for a in range(m + 3))
    ok = rep.minimal_m == 3 == oracle_m and cert.exact_psd and exact_res == 0 and oracle_diag
    dangelo_ok = True
    for m in range(9):
        lam = min_eigenvalue(p_dangelo(), m)
        dangelo_ok &= lam < 0 and math.isclose(lam, min(diagonal_oracle(0, m)), rel_tol=1e-12)
    elapsed = time.time() - t0
    assert criterion(7, "certificate pipeline", ok and dangelo_ok and elapsed < 30,
                     f"minimal_m {rep.minimal_m}, exact residual {exact_res}, {elapsed:.1f}s")


def test_eigenvalue_operator_consistency(criterion):
    t0 = time.time()
    p, m = p_eps(1), 4
    X = fs_samples(1, 6000, 8, stream="acceptance.eig.x")
    Y = fs_samples(1, 6000, 8, stream="acceptance.eig.y")
    G = gram(p, m, merge(X, Y))
    lam, fs = gram_diagonalize(p, m, G)
    worst, ok = 0.0, True
    for lam_eta, f in zip(lam, fs):
        est = k_form(f, f, p, m, X, Y, method="pairwise")
        z = abs(est.value - lam_eta) / est.stderr
        worst = max(worst, z)
        ok &= z <= 3
    elapsed = time.time() - t0
    assert criterion(8, "eigenvalue/operator consistency", ok and len(lam) == 7 and elapsed < 600,
                     f"worst {worst:.3f} sigma over {len(lam)} eigenvalues, {elapsed:.0f}s")


def test_lemma_suites(criterion):
    t0 = time.time()
    good = run_lemma_suite(seed=9)
    tampered = run_lemma_suite(tol=0.0, seed=9)
    by_name = {g.name: g for g in good.gates}
    ok = (good.passed and by_name["schwarz"].detail["trials"] == 100 and by_name["mean_value"].detail["trials"] == 20
          and not tampered.passed)
    elapsed = time.time() - t0
    assert criterion(9, "lemma suites", ok and elapsed < 300,
                     f"{len(good.gates)} gates pass, tampered fails on {len(tampered.failures())}, {elapsed:.0f}s")


def test_determinism(criterion, tmp_path):
    inp = tmp_path / "p.json"
    inp.write_text(polyio.dumps(make_r(1)))
    runs = [
        ["asymptotics", "--input", str(inp), "--m-list", "4,8", "--samples", "3000", "--pair-samples", "400",
         "--seed", "3", "--shards", "2"],
        ["search", "--input", str(inp), "--m-max", "3"],
        ["certify", "--input", str(inp), "--m", "2"],
    ]
    same = True
    for argv in runs:
        outs = []
        for _ in range(2):
            buf = io.StringIO()
            assert main(argv, stdout=buf) == 0
            outs.append(buf.getvalue().encode())
        same &= outs[0] == outs[1]
        json.loads(outs[0])
    assert criterion(10, "determinism", same, "byte-identical JSON over repeated runs")
