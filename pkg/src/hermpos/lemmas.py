"""Pass/fail suite for the integral lemmas: quadrature identities and randomized checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import multiindex as mi
from .geometry import (ball_kernel_integral, ball_volume, ball_volume_quadrature, fs_samples,
                       kernel_power_integral, off_diagonal_integral)
from .montecarlo import substream
from .operator import mean_value_check, verify_schwarz_bound
from .polyalg import HoloPoly

KERNEL_CASES = [(n, m) for n in (1, 2) for m in (0, 1, 5, 10, 25)]
OFF_DIAGONAL_CASES = [(m, R) for m in (5, 10, 20) for R in (0.5, 1.0)]


@dataclass
class Gate:
    name: str
    passed: bool
    detail: dict

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class SuiteReport:
    gates: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    def failures(self):
        return [g.name for g in self.gates if not g.passed]

    def to_dict(self):
        return {"passed": self.passed, "failures": self.failures(), "gates": [g.to_dict() for g in self.gates]}


def _rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a)


def kernel_gates(tol):
    out = []
    for n, m in KERNEL_CASES:
        ki = kernel_power_integral(m, n)
        err = _rel(ki.quadrature, float(ki.exact))
        out.append(Gate(f"kernel_integral n={n} m={m}", err <= tol,
                        {"exact": str(ki.exact), "quadrature": ki.quadrature, "rel_err": err}))
    return out


def off_diagonal_gates(tol):
    out = []
    for m, R in OFF_DIAGONAL_CASES:
        off = off_diagonal_integral(m, 1, R)
        bound = (1 + R * R) ** -m
        closed = (1 + R * R) ** -(m + 1) / (m + 1)
        inner = ball_kernel_integral(m, 1, R)
        total = float(kernel_power_integral(m, 1).exact)
        err = max(_rel(off, closed), _rel(off + inner, total))
        out.append(Gate(f"off_diagonal m={m} R={R}", off <= bound * (1 + tol) and err <= tol,
                        {"value": off, "bound": bound, "closed_form": closed, "rel_err": err}))
    return out


def ball_volume_gates(tol, seed, trials=50):
    rng = substream(seed, "lemmas.ball")
    worst, bound_ok = 0.0, True
    for _ in range(trials):
        R = float(rng.uniform(0.05, 4.0))
        n = int(rng.integers(1, 4))
        v = ball_volume(R, n)
        bound_ok &= v <= R ** (2 * n)
        worst = max(worst, _rel(ball_volume_quadrature(R, n), v))
    return [Gate("ball_volume", bool(bound_ok and worst <= tol), {"trials": trials, "bound_holds": bool(bound_ok),
                                                                  "worst_rel_err": worst})]


def _random_section(rng, n, k):
    basis = mi.monomials(k, n)
    c = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    return HoloPoly.from_vector(n, k, c)


def _random_kernel(rng, n):
    power = int(rng.integers(0, 6))
    a, b = float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.0, 1.0))
    v = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    v /= np.linalg.norm(v)

    def q(Xc, Y):
        G = np.abs(Xc @ Y.conj().T) ** 2
        return a * G ** power + b * np.abs(Xc @ v.conj())[:, None] ** 2
    return q


def schwarz_trial(seed, trial, samples):
    rng = substream(seed, "lemmas.schwarz", trial)
    n = int(rng.integers(1, 3))
    q = _random_kernel(rng, n)
    s = _random_section(rng, n, int(rng.integers(0, 4)))
    c = float(rng.uniform(0.0, 1.0))
    g = lambda X: np.abs(s(X)) ** 2 + c
    R0 = math.inf if rng.random() < 0.1 else float(rng.uniform(0.2, 3.0))
    X = fs_samples(n, samples, seed, stream=f"lemmas.schwarz.x.{trial}")
    Y = fs_samples(n, samples, seed, stream=f"lemmas.schwarz.y.{trial}")
    return verify_schwarz_bound(q, g, R0, X, Y), {"n": n, "R0": R0}


def mean_value_trial(seed, trial, samples):
    rng = substream(seed, "lemmas.mean_value", trial)
    n = int(rng.integers(1, 3))
    m = int(rng.integers(4, 9))
    x = fs_samples(n, 1, seed, stream=f"lemmas.mean_value.center.{trial}").points[0]
    f = _random_section(rng, n, int(rng.integers(0, 4)))
    R0 = math.inf if rng.random() < 0.2 else float(rng.uniform(0.3, 2.0))
    h = lambda r: (1.0 + r * r) ** -m
    Y = fs_samples(n, samples, seed, stream=f"lemmas.mean_value.y.{trial}")
    return mean_value_check(h, f, x, R0, Y), {"n": n, "m": m, "R0": R0, "degree": f.k}


def schwarz_gates(seed, trials, samples):
    results = []
    for t in range(trials):
        res, _ = schwarz_trial(seed, t, samples)
        results.append(res.holds and res.holds_weak)
    worst = int(np.argmin(results)) if results else 0
    return [Gate("schwarz", all(results), {"trials": trials, "passed": int(sum(results)), "first_failure":
                                           None if all(results) else worst})]


def mean_value_gates(seed, trials, samples):
    passed, worst = 0, 0.0
    for t in range(trials):
        res, _ = mean_value_trial(seed, t, samples)
        z = abs(res.value) / res.stderr if res.stderr > 0 else (0.0 if res.value == 0 else math.inf)
        worst = max(worst, z)
        passed += z <= 3.0
    return [Gate("mean_value", passed == trials, {"trials": trials, "passed": passed, "worst_sigma": worst})]


def run_lemma_suite(tol: float = 1e-9, seed: int = 0, schwarz_trials: int = 100, mean_value_trials: int = 20,
                    samples: int = 1000, mean_value_samples: int = 20000) -> SuiteReport:
    """All lemma gates.  Quadrature identities are held to relative ``tol``;
    the randomized checks use 3-sigma bands."""
    report = SuiteReport()
    report.gates += kernel_gates(tol)
    report.gates += off_diagonal_gates(tol)
    report.gates += ball_volume_gates(tol, seed)
    report.gates += schwarz_gates(seed, schwarz_trials, samples)
    report.gates += mean_value_gates(seed, mean_value_trials, mean_value_samples)
    return report
