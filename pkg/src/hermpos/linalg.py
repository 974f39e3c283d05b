"""Exact LDL* factorization and a deterministic Hermitian eigensolver."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NumericError, UnsupportedPrecision
from .scalars import GaussianRational


@dataclass
class LDLResult:
    """Outcome of :func:`rational_ldl`.

    status is ``"pd"`` (all pivots > 0), ``"psd"`` (zero pivots only with
    vanishing columns) or ``"indefinite"`` (negative pivot, or a zero pivot
    with a nonzero column).  ``columns[t]`` holds the t-th column of the
    unit lower factor as a sparse ``{row: value}`` dict, in the original
    row numbering; ``order[t]`` is the row chosen as pivot at step t.
    """

    status: str
    pivots: list = field(default_factory=list)
    order: list = field(default_factory=list)
    columns: list = field(default_factory=list)

    @property
    def positive_definite(self) -> bool:
        return self.status == "pd"

    @property
    def positive_semidefinite(self) -> bool:
        return self.status in ("pd", "psd")


def rational_ldl(entries: dict, size: int) -> LDLResult:
    """LDL* with symmetric diagonal pivoting over Gaussian rationals.

    ``entries`` is a sparse Hermitian matrix ``{(i, j): value}``.  At each
    step the largest remaining diagonal entry becomes the pivot (ties go
    to the lowest index).  The matrix is consumed as a copy.
    """
    rows: dict[int, dict[int, GaussianRational]] = {i: {} for i in range(size)}
    for (i, j), v in entries.items():
        if not isinstance(v, GaussianRational):
            if isinstance(v, (float, complex)):
                raise UnsupportedPrecision("rational LDL* needs exact entries")
            v = GaussianRational.coerce(v)
        if v != 0:
            rows[i][j] = v

    remaining = set(range(size))
    out = LDLResult(status="pd")
    zero = GaussianRational(0)
    while remaining:
        piv = max(sorted(remaining), key=lambda i: rows[i].get(i, zero).re)
        d = rows[piv].get(piv, zero).re
        col = {j: rows[j][piv] for j in rows[piv] if j != piv and j in remaining}
        if d < 0 or (d == 0 and col):
            out.status = "indefinite"
            return out
        remaining.discard(piv)
        if d == 0:
            out.status = "psd"
            out.pivots.append(Fraction(0))
            out.order.append(piv)
            out.columns.append({piv: GaussianRational(1)})
            continue
        lcol = {piv: GaussianRational(1)}
        for j, v in col.items():
            lcol[j] = v / d
        items = list(col.items())
        for j, vj in items:
            rj = rows[j]
            for l, vl in items:
                upd = rj.get(l, zero) - vj * vl.conjugate() / d
                if upd == 0:
                    rj.pop(l, None)
                else:
                    rj[l] = upd
        for j in col:
            rows[j].pop(piv, None)
        out.pivots.append(d)
        out.order.append(piv)
        out.columns.append(lcol)
    return out


def eigendecompose(M: np.ndarray, check_tol: float = 1e-10):
    """Eigenvalues ascending and a unitary P with M = P diag(lam) P*.

    Eigenvectors are phase-normalized so their largest-modulus entry (first
    such index) is real positive; within a cluster of equal eigenvalues the
    columns are ordered by that pivot index.
    """
    M = np.asarray(M, dtype=complex)
    if M.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    try:
        lam, P = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Hermitian eigensolver did not converge for a {M.shape[0]}x{M.shape[0]} matrix: {exc}") from None

    mag = np.abs(P)
    pivot = np.argmax(mag >= mag.max(axis=0, keepdims=True) * (1 - 1e-12), axis=0)
    phase = P[pivot, np.arange(P.shape[1])]
    P = P * (np.abs(phase) / phase)[None, :]

    scale = max(1.0, float(np.max(np.abs(lam))))
    order = sorted(range(len(lam)), key=lambda j: (lam[j], pivot[j]))
    # re-sort clusters of numerically equal eigenvalues by pivot index
    clusters, cur = [], [order[0]]
    for j in order[1:]:
        if abs(lam[j] - lam[cur[-1]]) <= 1e-12 * scale:
            cur.append(j)
        else:
            clusters.append(cur)
            cur = [j]
    clusters.append(cur)
    order = [j for c in clusters for j in sorted(c, key=lambda j: pivot[j])]
    lam, P = lam[order], P[:, order]

    norm = max(float(np.max(np.abs(M))), np.finfo(float).tiny)
    recon = float(np.max(np.abs(P @ np.diag(lam) @ P.conj().T - M)))
    unit = float(np.max(np.abs(P.conj().T @ P - np.eye(len(lam)))))
    if recon > check_tol * norm or unit > check_tol:
        raise NumericError(
            f"eigendecomposition check failed: reconstruction error {recon:.3e} (norm {norm:.3e}), "
            f"unitarity error {unit:.3e}")
    return lam, P
