"""Sparse algebra for Hermitian bihomogeneous and holomorphic polynomials.

Polynomials live in the variables Z_0..Z_n (and their conjugates).  Terms
are stored as dicts keyed by multiindices; zero coefficients are always
pruned.  Coefficients are exact :class:`GaussianRational` values when every
input coefficient is exact, and Python ``complex`` otherwise.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from . import multiindex as mi
from .errors import DimensionMismatch, HermitianSymmetryError
from .scalars import GaussianRational, conj, is_exact


def _normalize_coeffs(values: Iterable) -> tuple[bool, list]:
    values = list(values)
    exact = all(is_exact(v) for v in values)
    if exact:
        return True, [GaussianRational.coerce(v) for v in values]
    return False, [complex(v) for v in values]


def _is_zero(c) -> bool:
    return c == 0


class HermitianBihomPoly:
    """sum a_{ab} Z^a conj(Z)^b over |a| = |b| = d, with conj(a_{ab}) = a_{ba}.

    ``terms`` maps ``(alpha, beta)`` to the coefficient.  Construction
    validates lengths and Hermitian symmetry; pass ``symmetrize=True`` to
    instead rebuild the lower triangle from the upper one (used internally
    after floating arithmetic, where summation order can break exact
    conjugate symmetry in the last bit).
    """

    __slots__ = ("n", "d", "terms", "exact")

    def __init__(self, n: int, d: int, terms: Mapping, symmetrize: bool = False):
        if n < 0 or d < 0:
            raise ValueError("n and d must be nonnegative")
        keys = []
        for a, b in terms:
            a, b = mi.make_index(a), mi.make_index(b)
            if len(a) != n + 1 or len(b) != n + 1:
                raise DimensionMismatch(f"multiindex {a}/{b} does not have {n + 1} entries")
            if sum(a) != d or sum(b) != d:
                raise ValueError(f"term ({a}, {b}) is not of bidegree ({d}, {d})")
            keys.append((a, b))
        exact, coeffs = _normalize_coeffs(terms.values())
        raw = {k: c for k, c in zip(keys, coeffs)}
        if symmetrize:
            raw = _symmetrize(raw, exact)
        else:
            _check_hermitian(raw)
        self.n = n
        self.d = d
        self.exact = exact
        self.terms = {k: c for k, c in sorted(raw.items(), key=_term_key) if not _is_zero(c)}

    # -- basic queries -----------------------------------------------------
    def coefficient(self, alpha, beta):
        zero = GaussianRational(0) if self.exact else 0j
        return self.terms.get((tuple(alpha), tuple(beta)), zero)

    def __eq__(self, other):
        if not isinstance(other, HermitianBihomPoly):
            return NotImplemented
        return self.n == other.n and self.d == other.d and self.terms == other.terms

    def __repr__(self):
        return f"HermitianBihomPoly(n={self.n}, d={self.d}, {len(self.terms)} terms)"

    def max_coefficient(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def to_float(self) -> "HermitianBihomPoly":
        if not self.exact:
            return self
        return HermitianBihomPoly(self.n, self.d, {k: complex(c) for k, c in self.terms.items()})

    def scale(self, c) -> "HermitianBihomPoly":
        """Multiply by a real scalar (real keeps the result Hermitian)."""
        if isinstance(c, complex) and c.imag != 0:
            raise ValueError("only real scalars preserve Hermitian symmetry")
        return HermitianBihomPoly(self.n, self.d, {k: v * c for k, v in self.terms.items()},
                                  symmetrize=not (self.exact and is_exact(c)))

    def __add__(self, other: "HermitianBihomPoly") -> "HermitianBihomPoly":
        _same_shape(self, other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return HermitianBihomPoly(self.n, self.d, out, symmetrize=not (self.exact and other.exact))

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def evaluate(self, z) -> float | np.ndarray:
        """p(z, conj z); real up to rounding, returned as float(s)."""
        val = evaluate_polarized(self, z, z)
        return np.real(val) if isinstance(val, np.ndarray) else val.real


class HoloPoly:
    """Homogeneous holomorphic polynomial sum s_a Z^a with |a| = k."""

    __slots__ = ("n", "k", "terms", "exact")

    def __init__(self, n: int, k: int, terms: Mapping):
        keys = []
        for a in terms:
            a = mi.make_index(a)
            if len(a) != n + 1:
                raise DimensionMismatch(f"multiindex {a} does not have {n + 1} entries")
            if sum(a) != k:
                raise ValueError(f"monomial {a} does not have degree {k}")
            keys.append(a)
        exact, coeffs = _normalize_coeffs(terms.values())
        self.n = n
        self.k = k
        self.exact = exact
        self.terms = {a: c for a, c in sorted(zip(keys, coeffs), key=lambda t: mi.grlex_key(t[0]))
                      if not _is_zero(c)}

    @classmethod
    def monomial(cls, alpha, coeff=1) -> "HoloPoly":
        alpha = tuple(alpha)
        return cls(len(alpha) - 1, sum(alpha), {alpha: coeff})

    @classmethod
    def from_vector(cls, n: int, k: int, vec) -> "HoloPoly":
        """Coefficients listed in graded lex order of the degree-k basis."""
        basis = mi.monomials(k, n)
        if len(vec) != len(basis):
            raise DimensionMismatch(f"expected {len(basis)} coefficients, got {len(vec)}")
        return cls(n, k, dict(zip(basis, vec)))

    def to_vector(self) -> np.ndarray:
        idx = mi.index_map(self.k, self.n)
        v = np.zeros(len(idx), dtype=complex)
        for a, c in self.terms.items():
            v[idx[a]] = complex(c)
        return v

    def __eq__(self, other):
        if not isinstance(other, HoloPoly):
            return NotImplemented
        return self.n == other.n and self.k == other.k and self.terms == other.terms

    def __repr__(self):
        return f"HoloPoly(n={self.n}, k={self.k}, {len(self.terms)} terms)"

    def __mul__(self, c) -> "HoloPoly":
        return HoloPoly(self.n, self.k, {a: v * c for a, v in self.terms.items()})

    __rmul__ = __mul__

    def __add__(self, other: "HoloPoly") -> "HoloPoly":
        if (self.n, self.k) != (other.n, other.k):
            raise DimensionMismatch("holomorphic polynomials of different shape")
        out = dict(self.terms)
        for a, v in other.terms.items():
            out[a] = out[a] + v if a in out else v
        return HoloPoly(self.n, self.k, out)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        vals = monomial_features(z, self.k) @ self.to_vector()
        return complex(vals) if z.ndim == 1 else vals


def _term_key(item):
    (a, b), _ = item
    return (mi.grlex_key(a), mi.grlex_key(b))


def _same_shape(p, q):
    if p.n != q.n:
        raise DimensionMismatch(f"polynomials on {p.n + 1} and {q.n + 1} variables")
    if p.d != q.d:
        raise ValueError(f"bidegrees ({p.d},{p.d}) and ({q.d},{q.d}) differ")


def _check_hermitian(terms: dict):
    for (a, b), c in terms.items():
        partner = terms.get((b, a))
        if partner is None:
            if not _is_zero(c):
                raise HermitianSymmetryError(f"term ({a}, {b}) has no conjugate partner ({b}, {a})")
            continue
        if partner != conj(c):
            raise HermitianSymmetryError(
                f"coefficient at ({b}, {a}) is {partner}, expected conjugate of {c}")


def _symmetrize(terms: dict, exact: bool) -> dict:
    out = {}
    for (a, b), c in terms.items():
        ka, kb = mi.grlex_key(a), mi.grlex_key(b)
        if ka < kb:
            out[(a, b)] = c
            out[(b, a)] = conj(c)
        elif ka == kb:
            out[(a, a)] = c if exact else complex(c.real, 0.0)
        elif (b, a) not in terms:
            out[(a, b)] = c
            out[(b, a)] = conj(c)
    return out


# -- constructors --------------------------------------------------------------
def constant(n: int, value=1) -> HermitianBihomPoly:
    zero = (0,) * (n + 1)
    return HermitianBihomPoly(n, 0, {(zero, zero): value})


def make_r(n: int) -> HermitianBihomPoly:
    """r = |Z_0|^2 + ... + |Z_n|^2."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return HermitianBihomPoly(n, 1, {(mi.unit(n, i), mi.unit(n, i)): 1 for i in range(n + 1)})


def p_dangelo() -> HermitianBihomPoly:
    """(|Z_0|^2 - |Z_1|^2)^2: nonnegative on the sphere, zero on |z_0| = |z_1|."""
    return p_eps(0)


def p_eps(eps) -> HermitianBihomPoly:
    """(|Z_0|^2 - |Z_1|^2)^2 + eps |Z_0 Z_1|^2 on two variables."""
    return HermitianBihomPoly(1, 2, {
        ((2, 0), (2, 0)): 1,
        ((1, 1), (1, 1)): eps - 2,
        ((0, 2), (0, 2)): 1,
    })


def hermitian_square(s: HoloPoly, weight=1) -> HermitianBihomPoly:
    """weight * |s|^2 as a bihomogeneous polynomial (weight real)."""
    terms = {}
    for a, ca in s.terms.items():
        for b, cb in s.terms.items():
            terms[(a, b)] = weight * ca * conj(cb)
    exact = s.exact and is_exact(weight)
    return HermitianBihomPoly(s.n, s.k, terms, symmetrize=not exact)


# -- arithmetic ----------------------------------------------------------------
def multiply(p: HermitianBihomPoly, q: HermitianBihomPoly) -> HermitianBihomPoly:
    """Product by convolution over splittings of both multiindices."""
    if p.n != q.n:
        raise DimensionMismatch(f"cannot multiply polynomials on {p.n + 1} and {q.n + 1} variables")
    out: dict = {}
    for (a, b), c in p.terms.items():
        for (a2, b2), c2 in q.terms.items():
            key = (mi.add(a, a2), mi.add(b, b2))
            v = c * c2
            out[key] = out[key] + v if key in out else v
    return HermitianBihomPoly(p.n, p.d + q.d, out, symmetrize=not (p.exact and q.exact))


def r_power_times(p: HermitianBihomPoly, m: int) -> HermitianBihomPoly:
    """r^m p via the multinomial expansion of r^m.

    The coefficient at (mu, nu) is the sum over |g| = m with g <= mu, nu of
    (m!/g!) a_{mu-g, nu-g}.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return p
    out: dict = {}
    weights = [(g, mi.multinomial(g)) for g in mi.monomials(m, p.n)]
    for (a, b), c in p.terms.items():
        for g, w in weights:
            key = (mi.add(a, g), mi.add(b, g))
            v = c * w
            out[key] = out[key] + v if key in out else v
    return HermitianBihomPoly(p.n, p.d + m, out, symmetrize=not p.exact)


# -- evaluation ----------------------------------------------------------------
def monomial_features(z, k: int) -> np.ndarray:
    """Values z^a for every |a| = k, graded lex order; shape (..., dim)."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1] - 1
    exps = np.array(mi.monomials(k, n), dtype=np.intp)  # (dim, n+1)
    powers = z[..., :, None] ** np.arange(k + 1)  # (..., n+1, k+1)
    cols = np.arange(n + 1)
    gathered = powers[..., cols[None, :], exps]  # (..., dim, n+1)
    return np.prod(gathered, axis=-1)


def dense_coefficients(p: HermitianBihomPoly) -> np.ndarray:
    """Complex (dim x dim) matrix with entry (a, b) = a_{ab}, graded lex basis."""
    idx = mi.index_map(p.d, p.n)
    A = np.zeros((len(idx), len(idx)), dtype=complex)
    for (a, b), c in p.terms.items():
        A[idx[a], idx[b]] = complex(c)
    return A


def evaluate_polarized(p: HermitianBihomPoly, x, y):
    """p(x, conj y) = sum a_{ab} x^a conj(y)^b, broadcasting over leading axes."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape[-1] != p.n + 1 or y.shape[-1] != p.n + 1:
        raise DimensionMismatch(f"points must have {p.n + 1} coordinates")
    A = dense_coefficients(p)
    fx = monomial_features(x, p.d)
    fy = monomial_features(y, p.d)
    val = np.einsum("...i,ij,...j->...", fx, A, fy.conj())
    if val.ndim == 0:
        return complex(val)
    return val


def polarized_matrix(p: HermitianBihomPoly, X, Y) -> np.ndarray:
    """All-pairs p(x_i, conj y_j) for point arrays X (Nx, n+1) and Y (Ny, n+1)."""
    A = dense_coefficients(p)
    return monomial_features(X, p.d) @ A @ monomial_features(Y, p.d).conj().T


def sphere_points(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Uniform points on the unit sphere of C^{n+1}."""
    g = rng.standard_normal((count, n + 1)) + 1j * rng.standard_normal((count, n + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_min_estimate(p: HermitianBihomPoly, samples: int, seed: int) -> float:
    """Minimum of p(z, conj z) over random points of the unit sphere.

    A nonpositive result proves p is not strictly positive; a positive one
    is only evidence.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    pts = sphere_points(rng, samples, p.n)
    return float(np.min(np.real(evaluate_polarized(p, pts, pts))))


def sphere_min_refined(p: HermitianBihomPoly, samples: int, seed: int, starts: int = 4) -> float:
    """Sampled minimum polished by local descent from the best few samples.

    Zeros of p on the sphere usually have measure zero, so pure sampling
    only ever sees positive values; the descent drives them to rounding level.
    """
    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    pts = sphere_points(rng, samples, p.n)
    vals = np.real(evaluate_polarized(p, pts, pts))
    k = p.n + 1

    def f(v):
        z = v[:k] + 1j * v[k:]
        z = z / np.linalg.norm(z)
        return float(np.real(evaluate_polarized(p, z, z)))

    best = float(np.min(vals))
    for i in np.argsort(vals)[:starts]:
        res = minimize(f, np.concatenate([pts[i].real, pts[i].imag]), method="BFGS")
        best = min(best, float(res.fun))
    return best

