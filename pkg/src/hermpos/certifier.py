"""Sum-of-Hermitian-squares certificates for r^m p.

The coefficient matrix of r^m p in the monomial basis of degree m + d is
positive definite exactly when r^m p is a sum of |s_eta|^2 over a basis
s_eta of that space.  For exact inputs a rational LDL* factorization
decides definiteness and yields a certificate with rational sections; the
floating eigendecomposition gives the orthonormal form.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import multiindex as mi
from .errors import DimensionGuardError, NotPositiveDefinite, ResidualTooLarge, UnsupportedPrecision
from .linalg import LDLResult, eigendecompose, rational_ldl
from .polyalg import HermitianBihomPoly, HoloPoly, dense_coefficients, r_power_times, sphere_min_refined
from .polyio import dumps, holo_to_dict
from .scalars import GaussianRational

DEFAULT_TOL = 1e-9
MAX_DIMENSION = 2000


@dataclass
class CoefficientMatrix:
    n: int
    k: int
    index: tuple
    entries: np.ndarray
    exact_entries: dict | None = None

    @property
    def size(self) -> int:
        return len(self.index)


@dataclass
class Certificate:
    m: int
    eigenvalues: list
    sections: list
    residual: float
    exact_psd: bool
    n: int = 1
    k: int = 0
    exact_weights: list | None = None
    exact_sections: list | None = None

    def to_dict(self) -> dict:
        doc = {
            "m": self.m,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "sections": [holo_to_dict(s) for s in self.sections],
            "residual": float(self.residual),
            "exact_psd": bool(self.exact_psd),
        }
        if self.exact_sections is not None:
            doc["exact_ldl"] = {
                "weights": [str(w) for w in self.exact_weights],
                "sections": [holo_to_dict(s) for s in self.exact_sections],
            }
        return doc


@dataclass
class TraceEntry:
    m: int
    min_eigenvalue: float
    psd: bool
    pd: bool

    def to_dict(self):
        return {"m": self.m, "min_eigenvalue": self.min_eigenvalue, "psd": self.psd, "pd": self.pd}


@dataclass
class SearchReport:
    p_id: str
    m_max: int
    minimal_m: int | None
    first_psd_m: int | None
    trace: list = field(default_factory=list)
    certificate: Certificate | None = None
    warnings: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.minimal_m is not None

    def to_dict(self) -> dict:
        return {
            "p_id": self.p_id,
            "m_max": self.m_max,
            "minimal_m": self.minimal_m if self.found else f"not found <= {self.m_max}",
            "first_psd_m": self.first_psd_m,
            "trace": [t.to_dict() for t in self.trace],
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "warnings": list(self.warnings),
        }


def polynomial_id(p: HermitianBihomPoly) -> str:
    return hashlib.sha256(dumps(p).encode()).hexdigest()[:16]


def _guard(n, k, allow_large):
    size = mi.basis_size(k, n)
    if size > MAX_DIMENSION and not allow_large:
        raise DimensionGuardError(
            f"coefficient matrix would be {size}x{size} (limit {MAX_DIMENSION}); pass allow_large to override")


def assemble_matrix(q: HermitianBihomPoly) -> CoefficientMatrix:
    """Hermitian matrix (c_{gd}) with q = sum c_{gd} Z^g conj(Z)^d."""
    index = mi.monomials(q.d, q.n)
    entries = dense_coefficients(q)
    exact = None
    if q.exact:
        pos = mi.index_map(q.d, q.n)
        exact = {(pos[a], pos[b]): c for (a, b), c in q.terms.items()}
    return CoefficientMatrix(q.n, q.d, index, entries, exact)


def ldl_factor(M: CoefficientMatrix) -> LDLResult:
    if M.exact_entries is None:
        raise UnsupportedPrecision("exact definiteness test needs a matrix with rational entries")
    return rational_ldl(M.exact_entries, M.size)


def is_positive_definite_exact(M: CoefficientMatrix) -> bool:
    return ldl_factor(M).positive_definite


def _exact_sections(M: CoefficientMatrix, ldl: LDLResult):
    sections = []
    for col in ldl.columns:
        sections.append(HoloPoly(M.n, M.k, {M.index[j]: v for j, v in col.items()}))
    return list(ldl.pivots), sections


def extract_certificate(p: HermitianBihomPoly, m: int, tol: float = DEFAULT_TOL,
                        allow_large: bool = False) -> Certificate:
    """Certificate r^m p = sum |s_eta|^2 with s_eta = sqrt(lam_eta) sum_g P_{g eta} Z^g.

    Raises NotPositiveDefinite when an eigenvalue is <= tol * (largest) or the
    exact factorization finds a nonpositive pivot, and ResidualTooLarge when
    the reconstruction misses r^m p by more than tol relative to its largest
    coefficient.
    """
    _guard(p.n, p.d + m, allow_large)
    q = r_power_times(p, m)
    M = assemble_matrix(q)
    lam, P = eigendecompose(M.entries)
    lam_max = float(np.max(np.abs(lam))) if len(lam) else 0.0
    ldl = ldl_factor(M) if p.exact else None
    exact_pd = bool(ldl and ldl.positive_definite)
    if lam[0] <= tol * lam_max or (ldl is not None and not exact_pd):
        raise NotPositiveDefinite(lam[0], m)

    sections = [HoloPoly.from_vector(M.n, M.k, np.sqrt(lam[j]) * P[:, j]) for j in range(len(lam))]
    cert = Certificate(m=m, eigenvalues=[float(x) for x in lam], sections=sections, residual=0.0,
                       exact_psd=exact_pd, n=p.n, k=M.k)
    if ldl is not None:
        cert.exact_weights, cert.exact_sections = _exact_sections(M, ldl)
    cert.residual = verify_certificate(cert, p)
    limit = tol * max(1.0, q.max_coefficient())
    if cert.residual > limit:
        raise ResidualTooLarge(cert.residual, limit)
    if ldl is not None:
        float_residual = verify_certificate(cert, p, path="float")
        if float_residual > limit:
            raise ResidualTooLarge(float_residual, limit)
    return cert


def verify_certificate(cert: Certificate, p: HermitianBihomPoly, path: str = "auto") -> float:
    """Max coefficient modulus of sum |s_eta|^2 - r^m p, recomputed from scratch.

    ``path="exact"`` checks the rational LDL* sections (weights times
    squares) in exact arithmetic; ``"float"`` checks the floating sections;
    ``"auto"`` uses the exact sections when the certificate carries them.
    """
    if path == "auto":
        path = "exact" if cert.exact_sections is not None and p.exact else "float"
    q = r_power_times(p, cert.m)
    if path == "exact":
        return float(verify_certificate_exact(cert, p))
    k = q.d
    if cert.sections and cert.sections[0].k != k:
        return float("inf")
    S = np.array([s.to_vector() for s in cert.sections], dtype=complex).T.reshape(mi.basis_size(k, p.n), -1)
    recon = S @ S.conj().T
    return float(np.max(np.abs(recon - dense_coefficients(q)), initial=0.0))


def verify_certificate_exact(cert: Certificate, p: HermitianBihomPoly) -> Fraction:
    if cert.exact_sections is None or not p.exact:
        raise UnsupportedPrecision("certificate has no exact sections")
    q = r_power_times(p, cert.m)
    diff = {key: -c for key, c in q.terms.items()}
    for w, s in zip(cert.exact_weights, cert.exact_sections):
        for a, ca in s.terms.items():
            for b, cb in s.terms.items():
                v = w * ca * cb.conjugate()
                key = (a, b)
                diff[key] = diff[key] + v if key in diff else v
    worst = Fraction(0)
    for v in diff.values():
        v = GaussianRational.coerce(v)
        worst = max(worst, v.abs2())
    return Fraction(0) if worst == 0 else Fraction(float(worst) ** 0.5)


def min_eigenvalue(p: HermitianBihomPoly, m: int) -> float:
    lam, _ = eigendecompose(assemble_matrix(r_power_times(p, m)).entries)
    return float(lam[0])


def minimal_m_search(p: HermitianBihomPoly, m_max: int, tol: float = DEFAULT_TOL,
                     allow_large: bool = False, screen_samples: int = 4096,
                     screen_seed: int = 0) -> SearchReport:
    """Smallest m <= m_max with r^m p strictly positive definite.

    Every m from 0 to the stopping point is recorded with its minimum
    eigenvalue and PSD/PD flags (exact when p is rational).
    """
    if m_max < 0:
        raise ValueError("m_max must be nonnegative")
    report = SearchReport(p_id=polynomial_id(p), m_max=m_max, minimal_m=None, first_psd_m=None)
    smin = sphere_min_refined(p, screen_samples, screen_seed)
    if smin <= tol * max(1.0, p.max_coefficient()):
        report.warnings.append(
            f"p(z, conj z) reaches {smin:.3g} on the unit sphere: p is not strictly positive, "
            "a certificate may not exist for any m")
    for m in range(m_max + 1):
        _guard(p.n, p.d + m, allow_large)
        M = assemble_matrix(r_power_times(p, m))
        lam, _ = eigendecompose(M.entries)
        lam_min, lam_max = float(lam[0]), float(np.max(np.abs(lam)))
        if p.exact:
            ldl = ldl_factor(M)
            psd, pd = ldl.positive_semidefinite, ldl.positive_definite
        else:
            psd, pd = lam_min >= -tol * lam_max, lam_min > tol * lam_max
        report.trace.append(TraceEntry(m, lam_min, psd, pd))
        if psd and report.first_psd_m is None:
            report.first_psd_m = m
        if pd and lam_min > tol * lam_max:
            report.certificate = extract_certificate(p, m, tol, allow_large)
            report.minimal_m = m
            break
    return report
