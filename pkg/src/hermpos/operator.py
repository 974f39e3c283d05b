"""Monte Carlo estimators for the p-weighted inner product and the form K.

For sections s1, s2 of degree m + d,

    (s1, s2)     = int s1 conj(s2) / (r^m p) dOmega
    K(s1, s2)    = int int (r^m p)(x, conj y) conj(s2(x)) s1(y) / ((r^m p)(x) (r^m p)(y)) dOmega(y) dOmega(x)

The double integral is estimated over independent x and y sample sets.
Because (r^m p)(x, conj y) = sum_{ab} c_{ab} x^a conj(y)^b, the double mean
over all Nx * Ny pairs factors through the coefficient matrix and costs
O((Nx + Ny) dim); ``method="pairwise"`` evaluates the same double mean
pair by pair and serves as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import PositivityError
from .geometry import (FsSampleSet, ball_volume, diastasis_sq, householder_to, kernel_power_integral,
                       off_diagonal_integral, pair_diastasis_sq, pair_gram)
from .linalg import eigendecompose
from .montecarlo import Estimate, PairAccumulator, mean_estimate
from .polyalg import (HermitianBihomPoly, HoloPoly, dense_coefficients, evaluate_polarized, monomial_features,
                      polarized_matrix, r_power_times)
from . import multiindex as mi

CHUNK = 256
FEATURE_CHUNK = 8192


def default_radius(m: int) -> float:
    """R(m) = log m / sqrt m."""
    if m < 2:
        raise ValueError("the default cutoff radius needs m >= 2")
    return math.log(m) / math.sqrt(m)


def merge(a: FsSampleSet, b: FsSampleSet) -> FsSampleSet:
    pts = np.concatenate([a.points, b.points])
    return FsSampleSet(a.n, pts, np.full(len(pts), 1.0 / len(pts)), a.seed, a.shards, f"{a.stream}+{b.stream}")


def density(p: HermitianBihomPoly, m: int, X: np.ndarray) -> np.ndarray:
    """(r^m p)(x, conj x) at each row of X; raises PositivityError if any is <= 0."""
    rx = np.sum(np.abs(X) ** 2, axis=1)
    val = rx ** m * np.real(evaluate_polarized(p, X, X))
    bad = np.flatnonzero(~(val > 0))
    if bad.size:
        i = int(bad[0])
        raise PositivityError(X[i], val[i])
    return val


def _check_degree(s: HoloPoly, p: HermitianBihomPoly, m: int):
    if s.k != m + p.d or s.n != p.n:
        raise ValueError(f"section must have degree m + d = {m + p.d} on {p.n + 1} variables, got degree {s.k}")


# -- inner product and Gram matrix ---------------------------------------------
def inner_product(s1: HoloPoly, s2: HoloPoly, p: HermitianBihomPoly, m: int, samples: FsSampleSet) -> Estimate:
    _check_degree(s1, p, m)
    _check_degree(s2, p, m)
    X = samples.points
    if s1 == s2:
        return mean_estimate((np.abs(s1(X)) ** 2 / density(p, m, X)).astype(complex))
    return mean_estimate(s1(X) * np.conj(s2(X)) / density(p, m, X))


def norm_sq(s: HoloPoly, p: HermitianBihomPoly, m: int, samples: FsSampleSet) -> Estimate:
    X = samples.points
    return mean_estimate(np.abs(s(X)) ** 2 / density(p, m, X))


@dataclass
class GramMatrix:
    m: int
    d: int
    n: int
    basis: tuple
    entries: np.ndarray
    stderr: np.ndarray
    transform: np.ndarray  # column g holds the monomial coefficients of e_g
    sample_meta: dict

    def orthonormal_basis(self) -> list[HoloPoly]:
        return [HoloPoly.from_vector(self.n, self.m + self.d, self.transform[:, j])
                for j in range(self.transform.shape[1])]


def gram(p: HermitianBihomPoly, m: int, samples: FsSampleSet) -> GramMatrix:
    """Inner products of all monomials of degree m + d, plus an orthonormalizing transform.

    With G = L L* (Cholesky), the sections e = L^{-1} Z (coefficients
    T = L^{-T}) are orthonormal for the estimated inner product.
    """
    k = m + p.d
    X = samples.points
    F = monomial_features(X, k)
    w = 1.0 / density(p, m, X)
    N = len(X)
    G = (F * w[:, None]).T @ F.conj() / N
    G = 0.5 * (G + G.conj().T)
    A2 = np.abs(F) ** 2 * w[:, None]
    second = A2.T @ A2 / N
    stderr = np.sqrt(np.maximum(second - np.abs(G) ** 2, 0.0) / max(N - 1, 1))
    L = np.linalg.cholesky(G)
    T = np.linalg.inv(L).T
    return GramMatrix(m, p.d, p.n, mi.monomials(k, p.n), G, stderr, T, samples.meta())


def gram_diagonalize(p: HermitianBihomPoly, m: int, G: GramMatrix):
    """Eigen-decomposition of r^m p in the orthonormal basis e.

    Returns (lam, f) with r^m p = sum lam_eta |f_eta|^2 and f_eta orthonormal
    for the inner product that produced G.
    """
    M = dense_coefficients(r_power_times(p, m))
    L = np.linalg.inv(G.transform.T)
    c = L.T @ M @ L.conj()
    c = 0.5 * (c + c.conj().T)
    lam, P = eigendecompose(c)
    coeffs = G.transform @ P
    k = m + p.d
    return lam, [HoloPoly.from_vector(p.n, k, coeffs[:, j]) for j in range(len(lam))]


# -- the form K ----------------------------------------------------------------
@dataclass
class _KParts:
    value: complex
    h1: np.ndarray  # E_y h(x_i, y) for each x sample
    h2: np.ndarray  # E_x h(x, y_j) for each y sample
    var_h: float  # variance of h at independent pairs
    nx: int
    ny: int

    def estimate(self) -> Estimate:
        v1 = _cvar(self.h1)
        v2 = _cvar(self.h2)
        resid = max(self.var_h - v1 - v2, 0.0)
        var = v1 / self.nx + v2 / self.ny + resid / (self.nx * self.ny)
        return Estimate(complex(self.value), math.sqrt(var))


def _cvar(a):
    return float(np.var(a.real, ddof=1) + np.var(a.imag, ddof=1)) if a.size > 1 else 0.0


def _pair_values(s1, s2, p, m, X, Y):
    """h(x_i, y_i) at matched pairs, evaluated directly."""
    n = min(len(X), len(Y))
    X, Y = X[:n], Y[:n]
    qxy = np.sum(X * Y.conj(), axis=1) ** m * evaluate_polarized(p, X, Y)
    return qxy * np.conj(s2(X)) * s1(Y) / (density(p, m, X) * density(p, m, Y))


def _k_factored(s1, s2, p, m, X, Y) -> _KParts:
    k = m + p.d
    M = dense_coefficients(r_power_times(p, m))

    def phi(Xc):
        return monomial_features(Xc, k) * (np.conj(s2(Xc)) / density(p, m, Xc))[:, None]

    def psi(Yc):
        return monomial_features(Yc, k).conj() * (s1(Yc) / density(p, m, Yc))[:, None]

    step = FEATURE_CHUNK
    u = sum(phi(X[i:i + step]).sum(axis=0) for i in range(0, len(X), step)) / len(X)
    w = sum(psi(Y[i:i + step]).sum(axis=0) for i in range(0, len(Y), step)) / len(Y)
    Mw = M @ w
    uM = u @ M
    value = complex(u @ Mw)
    h1 = np.concatenate([phi(X[i:i + step]) @ Mw for i in range(0, len(X), step)])
    h2 = np.concatenate([psi(Y[i:i + step]) @ uM for i in range(0, len(Y), step)])
    hp = _pair_values(s1, s2, p, m, X, Y)
    var_h = _cvar(hp) if hp.size > 1 else 0.0
    return _KParts(value, h1, h2, var_h, len(X), len(Y))


def _k_pairwise(s1, s2, p, m, X, Y) -> _KParts:
    acc = PairAccumulator(len(X), len(Y))
    sy = s1(Y) / density(p, m, Y)
    for start in range(0, len(X), CHUNK):
        Xc = X[start:start + CHUNK]
        qxy = pair_gram(Xc, Y) ** m * polarized_matrix(p, Xc, Y)
        sx = np.conj(s2(Xc)) / density(p, m, Xc)
        acc.add(slice(start, start + len(Xc)), qxy * sx[:, None] * sy[None, :])
    h1, h2 = acc.influence()
    est_total = acc.row_sums.sum() / (len(X) * len(Y))
    var_h = acc.sq_sum / (len(X) * len(Y)) - abs(est_total) ** 2
    return _KParts(complex(est_total), h1, h2, var_h, len(X), len(Y))


def k_form(s1: HoloPoly, s2: HoloPoly, p: HermitianBihomPoly, m: int,
           samples_x: FsSampleSet, samples_y: FsSampleSet, method: str = "factored") -> Estimate:
    """Double Monte Carlo estimate of K_{r^m p}(s1, s2)."""
    _check_degree(s1, p, m)
    _check_degree(s2, p, m)
    parts = _k_parts(s1, s2, p, m, samples_x, samples_y, method)
    return parts.estimate()


def _k_parts(s1, s2, p, m, samples_x, samples_y, method):
    if method == "factored":
        return _k_factored(s1, s2, p, m, samples_x.points, samples_y.points)
    if method == "pairwise":
        return _k_pairwise(s1, s2, p, m, samples_x.points, samples_y.points)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class RatioEstimate:
    ratio: Estimate
    k_value: Estimate
    norm_sq: Estimate


def asymptotic_ratio(s: HoloPoly, p: HermitianBihomPoly, m: int, samples_x: FsSampleSet,
                     samples_y: FsSampleSet, method: str = "factored") -> RatioEstimate:
    """K(s, s) m^n / (n! ||s||^2), with ||s||^2 taken over the pooled x and y samples.

    The error bar propagates the joint fluctuation of numerator and
    denominator (delta method), so errors common to both cancel.
    """
    _check_degree(s, p, m)
    X, Y = samples_x.points, samples_y.points
    parts = _k_parts(s, s, p, m, samples_x, samples_y, method)
    gx = np.abs(s(X)) ** 2 / density(p, m, X)
    gy = np.abs(s(Y)) ** 2 / density(p, m, Y)
    nx, ny = len(X), len(Y)
    S = (gx.sum() + gy.sum()) / (nx + ny)
    K = parts.value.real
    c = m ** p.n / math.factorial(p.n)
    ratio = c * K / S

    tx = parts.h1.real / (nx * S) - K * gx / ((nx + ny) * S * S)
    ty = parts.h2.real / (ny * S) - K * gy / ((nx + ny) * S * S)
    v1, v2 = _cvar(parts.h1), _cvar(parts.h2)
    resid = max(parts.var_h - v1 - v2, 0.0) / (nx * ny) / (S * S)
    var = nx * float(np.var(tx, ddof=1)) + ny * float(np.var(ty, ddof=1)) + resid
    s_err = math.sqrt((_cvar(gx) * nx + _cvar(gy) * ny) / (nx + ny) / (nx + ny))
    return RatioEstimate(Estimate(ratio, c * math.sqrt(var)), parts.estimate(), Estimate(float(S), s_err))


# -- A / B / C decomposition ------------------------------------------------------
@dataclass
class OperatorReport:
    m: int
    n: int
    d: int
    k_value: Estimate
    norm_sq: Estimate
    ratio: Estimate
    A: Estimate
    B: Estimate
    C: Estimate
    R_used: float
    C_p: float
    M_p: float
    B_bound: float
    C_bound: float
    ab_identity_error: float
    sample_meta: dict = field(default_factory=dict)

    @property
    def error_bars(self) -> dict:
        return {name: getattr(self, name).stderr for name in ("k_value", "norm_sq", "ratio", "A", "B", "C")}

    def decomposition_consistent(self, nsigma: float = 3.0) -> bool:
        total = self.A.value + self.B.value + self.C.value
        err = math.sqrt(self.A.stderr ** 2 + self.B.stderr ** 2 + self.C.stderr ** 2 + self.k_value.stderr ** 2)
        return bool(abs(total - self.k_value.value) <= nsigma * err)

    def c_bound_holds(self, nsigma: float = 3.0) -> bool:
        return abs(self.C.value) <= self.C_bound * (1 + nsigma * _rel(self.C)) + nsigma * self.C.stderr

    def b_bound_holds(self, nsigma: float = 3.0) -> bool:
        return abs(self.B.value) <= self.B_bound * (1 + nsigma * _rel(self.norm_sq)) + nsigma * self.B.stderr

    def to_dict(self) -> dict:
        return {
            "m": self.m, "n": self.n, "d": self.d,
            "k_value": self.k_value.to_dict(), "norm_sq": self.norm_sq.to_dict(), "ratio": self.ratio.to_dict(),
            "A": self.A.to_dict(), "B": self.B.to_dict(), "C": self.C.to_dict(),
            "R_used": self.R_used, "C_p": self.C_p, "M_p": self.M_p,
            "B_bound": self.B_bound, "C_bound": self.C_bound,
            "B_bound_holds": bool(self.b_bound_holds()), "C_bound_holds": bool(self.c_bound_holds()),
            "decomposition_consistent": bool(self.decomposition_consistent()),
            "ab_identity_error": self.ab_identity_error,
            "error_bars": self.error_bars,
            "samples": self.sample_meta,
        }


def _rel(e: Estimate) -> float:
    v = abs(e.value)
    return e.stderr / v if v > 0 else 0.0


def abc_decomposition(s: HoloPoly, p: HermitianBihomPoly, m: int, samples_x: FsSampleSet,
                      samples_y: FsSampleSet, R: float | None = None) -> OperatorReport:
    """Split K(s, s) into the near-diagonal terms A, B and the off-diagonal term C.

    Inside the ball delta(x, y) < R, A integrates kernel^m conj(s(x)) s(y) /
    (r^m p)(y, conj x) and B the same times [|p(x, conj y)|^2/(p(x)p(y)) - 1];
    C is the raw K integrand outside the ball.  All four double means use
    the same pairs, so A + B + C reproduces K up to rounding; the pointwise
    identity of A + B with the raw integrand is measured as
    ``ab_identity_error``.  Local constants C_p (over pairs inside the ball)
    and M_p are collected from the same pairs.
    """
    _check_degree(s, p, m)
    if R is None:
        R = default_radius(m)
    if R <= 0:
        raise ValueError("R must be positive")
    X, Y = samples_x.points, samples_y.points
    nx, ny = len(X), len(Y)
    R2 = R * R
    qy = density(p, m, Y)
    py = np.real(evaluate_polarized(p, Y, Y))
    sy = s(Y)
    acc = {name: PairAccumulator(nx, ny) for name in "ABCK"}
    ident, c_p, m_p = 0.0, 0.0, 0.0

    for start in range(0, nx, CHUNK):
        Xc = X[start:start + CHUNK]
        rows = slice(start, start + len(Xc))
        qx = density(p, m, Xc)
        px = np.real(evaluate_polarized(p, Xc, Xc))
        rxy = pair_gram(Xc, Y)
        pxy = polarized_matrix(p, Xc, Y)
        qxy = rxy ** m * pxy
        d2 = pair_diastasis_sq(Xc, Y, rxy)
        inside = d2 < R2
        rx = np.sum(np.abs(Xc) ** 2, axis=1)
        ry = np.sum(np.abs(Y) ** 2, axis=1)
        kern = (np.abs(rxy) ** 2 / (rx[:, None] * ry[None, :])) ** m
        ratio_p = np.abs(pxy) ** 2 / (px[:, None] * py[None, :])
        sxsy = np.conj(s(Xc))[:, None] * sy[None, :]
        raw = qxy * sxsy / (qx[:, None] * qy[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            a_int = np.where(inside, kern * sxsy / np.conj(qxy), 0.0)
        b_int = a_int * (ratio_p - 1.0)
        acc["A"].add(rows, a_int)
        acc["B"].add(rows, b_int)
        acc["C"].add(rows, np.where(inside, 0.0, raw))
        acc["K"].add(rows, raw)

        if inside.any():
            diff = np.abs(a_int + b_int - raw)[inside]
            scale = np.abs(raw[inside]) + np.finfo(float).tiny
            ident = max(ident, float(np.max(diff / scale)))
            Gp = np.sqrt(ratio_p[inside])
            dd = d2[inside]
            usable = dd > 1e-12
            if usable.any():
                with np.errstate(divide="ignore"):
                    c_p = max(c_p, float(np.max(np.abs(Gp[usable] - 1.0 / Gp[usable]) / dd[usable])))
        m_p = max(m_p, float(np.sqrt(np.max(ratio_p))))

    gx = np.abs(s(X)) ** 2 / density(p, m, X)
    gy = np.abs(sy) ** 2 / qy
    S = float((gx.sum() + gy.sum()) / (nx + ny))
    s_err = math.sqrt((_cvar(gx) * nx + _cvar(gy) * ny) / (nx + ny) / (nx + ny))
    K = acc["K"].estimate()
    c = m ** p.n / math.factorial(p.n)
    ratio = Estimate(c * K.real / S, c * K.stderr / S)
    B_bound = c_p * R2 * math.sqrt(float(kernel_power_integral(m, p.n).exact)) * math.sqrt(ball_volume(R, p.n)) * S
    C_bound = m_p * math.sqrt(off_diagonal_integral(m, p.n, R)) * S
    return OperatorReport(m=m, n=p.n, d=p.d, k_value=K, norm_sq=Estimate(S, s_err), ratio=ratio,
                          A=acc["A"].estimate(), B=acc["B"].estimate(), C=acc["C"].estimate(), R_used=R,
                          C_p=c_p, M_p=m_p, B_bound=B_bound, C_bound=C_bound, ab_identity_error=ident,
                          sample_meta={"x": samples_x.meta(), "y": samples_y.meta()})


# -- lemma checks ---------------------------------------------------------------------
@dataclass
class SchwarzResult:
    lhs: Estimate
    rhs: float
    rhs_weak: float
    rel_err: float
    holds: bool
    holds_weak: bool

    def to_dict(self):
        return {"lhs": self.lhs.to_dict(), "rhs": self.rhs, "rhs_weak": self.rhs_weak,
                "rel_err": self.rel_err, "holds": self.holds, "holds_weak": self.holds_weak}


def verify_schwarz_bound(q: Callable, g: Callable, R0: float, samples_x: FsSampleSet,
                         samples_y: FsSampleSet, nsigma: float = 3.0) -> SchwarzResult:
    """Estimate both sides of the near-diagonal Schwarz bound.

    lhs = int int_{delta(x,y) < R0} q(x,y) g(x) g(y)
    rhs = sqrt(sup_x int_{B(x,R0)} q(x,.)^2) * sqrt(vol B(R0)) * int g^2,
    and the weak form drops the ball-volume factor.  ``q(Xc, Y)`` returns
    the block of kernel values and ``g(X)`` the function values; both must
    be nonnegative.
    """
    X, Y = samples_x.points, samples_y.points
    nx, ny = len(X), len(Y)
    gx, gy = np.asarray(g(X), dtype=float), np.asarray(g(Y), dtype=float)
    if np.any(gx < 0) or np.any(gy < 0):
        raise ValueError("g must be nonnegative")
    acc = PairAccumulator(nx, ny)
    inner_sq = np.zeros(nx)
    inner_sq_m2 = np.zeros(nx)
    R2 = R0 * R0 if math.isfinite(R0) else math.inf
    for start in range(0, nx, CHUNK):
        Xc = X[start:start + CHUNK]
        Q = np.asarray(q(Xc, Y), dtype=float)
        if np.any(Q < 0):
            raise ValueError("q must be nonnegative")
        inside = pair_diastasis_sq(Xc, Y) < R2 if math.isfinite(R2) else np.ones(Q.shape, dtype=bool)
        Qin = np.where(inside, Q, 0.0)
        acc.add(slice(start, start + len(Xc)), Qin * gx[start:start + len(Xc), None] * gy[None, :])
        inner_sq[start:start + len(Xc)] = np.mean(Qin ** 2, axis=1)
        inner_sq_m2[start:start + len(Xc)] = np.mean(Qin ** 4, axis=1)
    lhs = acc.estimate()
    lhs = Estimate(lhs.real, lhs.stderr)
    i = int(np.argmax(inner_sq))
    sup = float(inner_sq[i])
    sup_err = math.sqrt(max(inner_sq_m2[i] - sup * sup, 0.0) / max(ny - 1, 1))
    g2 = mean_estimate(np.concatenate([gx, gy]) ** 2)
    vol = ball_volume(R0, samples_x.n)
    rhs_weak = math.sqrt(sup) * g2.real
    rhs = rhs_weak * math.sqrt(vol)
    rel = math.sqrt(_rel(lhs) ** 2 + _rel(g2) ** 2 + (sup_err / (2 * sup) if sup > 0 else 0.0) ** 2)
    holds = lhs.real <= rhs * (1 + nsigma * rel)
    holds_weak = lhs.real <= rhs_weak * (1 + nsigma * rel)
    return SchwarzResult(lhs, rhs, rhs_weak, rel, bool(holds), bool(holds_weak))


def mean_value_check(h: Callable, f: HoloPoly, x, R0: float, samples: FsSampleSet) -> Estimate:
    """int_{B(x,R0)} h(delta(x,y)) (f(y) - f(x)) dOmega(y), which should vanish.

    ``f`` is a polynomial in the canonical coordinates z centered at x,
    written homogeneously with Z_0 as the homogenizing variable: its value
    at z is f(1, z_1, ..., z_n).
    """
    Y = samples.points
    U = householder_to(x)
    W = Y @ U.conj()
    with np.errstate(divide="ignore", invalid="ignore"):
        Z = W[:, 1:] / W[:, :1]
    rad = np.sqrt(np.sum(np.abs(Z) ** 2, axis=1))
    inside = rad < R0 if math.isfinite(R0) else np.isfinite(rad)
    ones = np.ones((len(Y), 1), dtype=complex)
    vals = np.zeros(len(Y), dtype=complex)
    zin = np.concatenate([ones[inside], Z[inside]], axis=1)
    f0 = f(np.concatenate([[1.0], np.zeros(f.n)]))
    hv = np.asarray(h(rad[inside]), dtype=complex)
    vals[inside] = hv * (f(zin) - f0)
    return mean_estimate(vals)


# -- local constants -----------------------------------------------------------------
@dataclass
class ConstantsReport:
    C_p: float
    M_p: float
    pairs: int
    excluded: int
    max_diastasis: float | None
    sample_meta: dict

    def to_dict(self):
        return {"C_p": self.C_p, "M_p": self.M_p, "pairs": self.pairs, "excluded": self.excluded,
                "max_diastasis": self.max_diastasis, "samples": self.sample_meta}


def local_constants(p: HermitianBihomPoly, samples_x: FsSampleSet, samples_y: FsSampleSet,
                    max_diastasis: float | None = None, min_diastasis: float = 1e-6) -> ConstantsReport:
    """Sample lower estimates of C_p and M_p over matched pairs (x_i, y_i).

    G = [|p(x, conj y)|^2 / (p(x) p(y))]^(1/2); C_p is the largest
    |G - 1/G| / delta^2 and M_p the largest G.  Pairs closer than
    ``min_diastasis`` are excluded from C_p; ``max_diastasis`` restricts C_p to
    a neighbourhood of the diagonal.
    """
    n = min(len(samples_x), len(samples_y))
    X, Y = samples_x.points[:n], samples_y.points[:n]
    px = density(p, 0, X)
    py = density(p, 0, Y)
    ratio = np.abs(evaluate_polarized(p, X, Y)) ** 2 / (px * py)
    G = np.sqrt(ratio)
    d2 = np.asarray(diastasis_sq(X, Y))
    close = d2 < min_diastasis ** 2
    use = ~close
    if max_diastasis is not None:
        use &= d2 < max_diastasis ** 2
    with np.errstate(divide="ignore"):
        vals = np.abs(G[use] - 1.0 / G[use]) / d2[use]
    c_p = float(np.max(vals)) if vals.size else 0.0
    return ConstantsReport(c_p, float(np.max(G)), n, int(close.sum()), max_diastasis,
                           {"x": samples_x.meta(), "y": samples_y.meta()})

