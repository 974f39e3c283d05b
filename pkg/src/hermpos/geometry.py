"""Projective points, the diastasis, Fubini-Study sampling and radial integrals.

Points of P^n are unit vectors of C^{n+1} up to phase.  The Fubini-Study
volume form, normalized to total mass one, is the push-forward of the
uniform measure on the unit sphere, which is how it is sampled here.  In a
canonical coordinate z centered at x it reads n! dV(z) / (pi^n (1+|z|^2)^{n+1})
and the diastasis from x is |z|, so every radial integral reduces to
2n int r^{2n-1} g(r) dr.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from .errors import NumericError
from .montecarlo import substream
from .polyalg import sphere_points

INF = math.inf


def canonicalize(z) -> np.ndarray:
    """Unit-norm representatives with the first nonzero coordinate real positive."""
    z = np.array(z, dtype=complex)
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("the zero vector is not a point of projective space")
    z = z / norm
    mag = np.abs(z)
    lead = np.argmax(mag > 1e-14, axis=-1)
    ph = np.take_along_axis(z, lead[..., None], axis=-1)
    return z * (np.abs(ph) / ph)


class ProjectivePoint:
    __slots__ = ("coords",)

    def __init__(self, coords):
        c = canonicalize(coords)
        if c.ndim != 1:
            raise ValueError("a single point needs a 1-d coordinate vector")
        self.coords = c

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, ProjectivePoint):
            return NotImplemented
        return self.coords.shape == other.coords.shape and bool(np.allclose(self.coords, other.coords, atol=1e-12, rtol=0))

    def __repr__(self):
        return f"ProjectivePoint({np.array2string(self.coords, precision=6)})"


def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, ProjectivePoint) else np.asarray(x, dtype=complex)


def diastasis_sq(x, y) -> np.ndarray | float:
    """delta(x, y)^2 elementwise; inf where <x, y> = 0.

    The numerator r(x)r(y) - |r(x, conj y)|^2 is computed as the Lagrange sum
    of |x_i y_j - x_j y_i|^2, which stays accurate for nearby points.
    """
    x, y = np.broadcast_arrays(_coords(x), _coords(y))
    k = x.shape[-1]
    num = np.zeros(x.shape[:-1])
    for i in range(k):
        for j in range(i + 1, k):
            num = num + np.abs(x[..., i] * y[..., j] - x[..., j] * y[..., i]) ** 2
    inner = np.abs(np.sum(x * y.conj(), axis=-1)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(inner > 0, num / np.where(inner > 0, inner, 1.0), INF)
    return float(out) if out.ndim == 0 else out


def diastasis(x, y):
    """sqrt(r(x)r(y)/|r(x, conj y)|^2 - 1), with math.inf for orthogonal points."""
    return np.sqrt(diastasis_sq(x, y))


def pair_gram(X, Y) -> np.ndarray:
    """r(x_i, conj y_j) for all pairs of row vectors."""
    return np.asarray(X) @ np.asarray(Y).conj().T


def pair_diastasis_sq(X, Y, G=None) -> np.ndarray:
    """All-pairs delta^2 for unit-norm rows (fast form, for region tests)."""
    if G is None:
        G = pair_gram(X, Y)
    a = np.abs(G) ** 2
    with np.errstate(divide="ignore"):
        return np.where(a > 0, np.maximum(1.0 - a, 0.0) / np.where(a > 0, a, 1.0), INF)


def kernel(x, y, m: int = 1):
    """[|r(x, conj y)|^2 / (r(x) r(y))]^m elementwise, equal to (1 + delta^2)^(-m)."""
    x, y = _coords(x), _coords(y)
    inner = np.abs(np.sum(x * y.conj(), axis=-1)) ** 2
    val = (inner / (np.sum(np.abs(x) ** 2, axis=-1) * np.sum(np.abs(y) ** 2, axis=-1))) ** m
    return float(val) if np.ndim(val) == 0 else val


def householder_to(x) -> np.ndarray:
    """Unitary (Hermitian) U with U e_0 = x, for x with real nonnegative x_0."""
    x = canonicalize(_coords(x))
    if abs(x[0].imag) > 1e-15:
        raise ValueError("leading coordinate must be real")
    k = len(x)
    v = -x.copy()
    v[0] += 1.0
    vv = float(np.vdot(v, v).real)
    if vv < 1e-30:
        return np.eye(k, dtype=complex)
    return np.eye(k, dtype=complex) - 2.0 * np.outer(v, v.conj()) / vv


def canonical_chart(x) -> Callable:
    """The chart z -> [U (1, z)] centered at x, in which delta(x, .) = |z|."""
    U = householder_to(x)

    def chart(z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = np.concatenate([np.ones(z.shape[:-1] + (1,), dtype=complex), z], axis=-1)
        pts = w @ U.T
        return ProjectivePoint(pts) if pts.ndim == 1 else canonicalize(pts)

    chart.unitary = U
    return chart


def chart_coordinates(x, Y) -> np.ndarray:
    """Inverse chart: canonical coordinates centered at x of the points Y."""
    U = householder_to(x)
    W = np.asarray(Y, dtype=complex) @ U.conj()
    return W[..., 1:] / W[..., :1]


@dataclass
class FsSampleSet:
    n: int
    points: np.ndarray
    weights: np.ndarray
    seed: int
    shards: int = 1
    stream: str = "fs_samples"

    def __len__(self):
        return len(self.points)

    def integrate(self, values):
        return np.sum(self.weights * values)

    def meta(self) -> dict:
        return {"n": self.n, "count": len(self), "seed": self.seed, "shards": self.shards, "stream": self.stream}

    def to_json(self) -> str:
        re_im = np.stack([self.points.real, self.points.imag], axis=-1).reshape(len(self), -1)
        doc = dict(self.meta(), points=re_im.tolist(), weights=self.weights.tolist())
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "FsSampleSet":
        doc = json.loads(text)
        arr = np.asarray(doc["points"], dtype=float).reshape(len(doc["points"]), -1, 2)
        return cls(doc["n"], arr[..., 0] + 1j * arr[..., 1], np.asarray(doc["weights"]), doc["seed"],
                   doc.get("shards", 1), doc.get("stream", "fs_samples"))

    def save(self, path):
        np.savez(path, points=self.points, weights=self.weights,
                 meta=np.array(json.dumps(self.meta())))

    @classmethod
    def load(cls, path) -> "FsSampleSet":
        with np.load(path) as f:
            meta = json.loads(str(f["meta"]))
            return cls(meta["n"], f["points"], f["weights"], meta["seed"], meta["shards"], meta["stream"])


def shard_sizes(count: int, shards: int) -> list[int]:
    base, extra = divmod(count, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def fs_samples(n: int, N: int, seed: int, shards: int = 1, stream: str = "fs_samples") -> FsSampleSet:
    """N i.i.d. Fubini-Study distributed points, weight 1/N each."""
    if N < 1:
        raise ValueError("need at least one sample")
    if shards < 1:
        raise ValueError("shard count must be positive")
    parts = [sphere_points(substream(seed, stream, i), size, n) for i, size in enumerate(shard_sizes(N, shards)) if size]
    pts = canonicalize(np.concatenate(parts))
    return FsSampleSet(n, pts, np.full(N, 1.0 / N), seed, shards, stream)


# -- radial integrals ------------------------------------------------------------
def polar_integrate(g: Callable[[float], float], n: int, r_max: float = INF, scale: float | None = None,
                    rel_tol: float = 1e-10) -> float:
    """2n int_0^{r_max} r^{2n-1} g(r) dr by adaptive quadrature.

    With ``scale`` (the width where the integrand concentrates) the integral
    is taken in u = r^2 and split at ``scale**2`` so that sharply peaked
    integrands are resolved.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if r_max <= 0:
        return 0.0

    def run(f, a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=rel_tol, limit=500)
            except integrate.IntegrationWarning as exc:
                raise NumericError(f"radial quadrature did not converge on [{a}, {b}]: {exc}") from None
        return val

    if scale is None:
        return 2 * n * run(lambda r: r ** (2 * n - 1) * g(r), 0.0, r_max)
    u_max = r_max ** 2 if math.isfinite(r_max) else INF
    split = min(scale ** 2, u_max)
    f = lambda u: u ** (n - 1) * g(math.sqrt(u))
    total = run(f, 0.0, split)
    if split < u_max:
        total += run(f, split, u_max)
    return n * total


class KernelIntegral(NamedTuple):
    exact: Fraction
    quadrature: float


def kernel_power_integral(m: int, n: int) -> KernelIntegral:
    """int_{P^n} [|r(x, conj y)|^2/(r(x) r(y))]^m Omega(y) = n! m! / (m+n)!"""
    if m < 0:
        raise ValueError("m must be nonnegative")
    exact = Fraction(math.factorial(n) * math.factorial(m), math.factorial(m + n))
    quad = polar_integrate(lambda r: (1.0 + r * r) ** -(m + n + 1), n, INF, scale=_peak_scale(m, n))
    return KernelIntegral(exact, quad)


def _peak_scale(m, n):
    return math.sqrt((n + 1.0) / (m + n + 1.0))


def off_diagonal_integral(m: int, n: int, R: float) -> float:
    """Kernel-power mass outside the diastasis ball of radius R (any center)."""
    if R <= 0:
        raise ValueError("R must be positive")
    if not math.isfinite(R):
        return 0.0
    f = lambda u: u ** (n - 1) * (1.0 + u) ** -(m + n + 1)
    s2 = _peak_scale(m, n) ** 2
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            a = R * R
            val = 0.0
            if a < s2:
                val += integrate.quad(f, a, s2, epsabs=0.0, epsrel=1e-11, limit=500)[0]
                a = s2
            val += integrate.quad(f, a, INF, epsabs=0.0, epsrel=1e-11, limit=500)[0]
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"off-diagonal quadrature did not converge: {exc}") from None
    return n * val


def ball_volume(R: float, n: int) -> float:
    """Omega-measure of {y : delta(x, y) < R} = (R^2/(1+R^2))^n."""
    if R <= 0:
        raise ValueError("R must be positive")
    if not math.isfinite(R):
        return 1.0
    return (R * R / (1.0 + R * R)) ** n


def ball_volume_quadrature(R: float, n: int) -> float:
    return polar_integrate(lambda r: (1.0 + r * r) ** -(n + 1), n, R)


def ball_kernel_integral(m: int, n: int, R: float) -> float:
    """Kernel-power mass inside the ball of radius R."""
    if not math.isfinite(R):
        return float(kernel_power_integral(m, n).exact)
    return polar_integrate(lambda r: (1.0 + r * r) ** -(m + n + 1), n, R, scale=min(R, _peak_scale(m, n)))
