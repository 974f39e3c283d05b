"""Seeded random streams and Monte Carlo estimates with standard errors."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def substream(seed: int, name: str, shard: int = 0) -> np.random.Generator:
    """Independent generator for a named consumer and shard of one run seed."""
    key = (zlib.crc32(name.encode()), int(shard))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo value with its standard error."""

    value: complex
    stderr: float

    @property
    def real(self) -> float:
        return float(np.real(self.value))

    @property
    def imag(self) -> float:
        return float(np.imag(self.value))

    def within(self, target, nsigma: float = 3.0) -> bool:
        return abs(self.value - target) <= nsigma * self.stderr

    def to_dict(self) -> dict:
        v = complex(self.value)
        return {"re": v.real, "im": v.imag, "stderr": float(self.stderr)}


def _var(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(np.var(x.real, ddof=1) + (np.var(x.imag, ddof=1) if np.iscomplexobj(x) else 0.0))


def mean_estimate(values) -> Estimate:
    """Sample mean and standard error (complex: total variance of both parts)."""
    values = np.asarray(values)
    n = values.size
    mean = values.mean()
    return Estimate(complex(mean) if np.iscomplexobj(values) else float(mean), (_var(values) / n) ** 0.5)


class PairAccumulator:
    """Streams blocks of h(x_i, y_j) and estimates the double mean.

    The standard error uses the two-sample U-statistic decomposition
    var(h1)/Nx + var(h2)/Ny + (var(h) - var(h1) - var(h2))/(Nx Ny), where h1 and
    h2 are the row and column means.
    """

    def __init__(self, nx: int, ny: int):
        self.nx, self.ny = nx, ny
        self.row_sums = np.zeros(nx, dtype=complex)
        self.col_sums = np.zeros(ny, dtype=complex)
        self.sq_sum = 0.0

    def add(self, rows: slice, block: np.ndarray):
        self.row_sums[rows] += block.sum(axis=1)
        self.col_sums += block.sum(axis=0)
        self.sq_sum += float(np.sum(block.real ** 2 + block.imag ** 2))

    def estimate(self) -> Estimate:
        nx, ny = self.nx, self.ny
        total = self.row_sums.sum() / (nx * ny)
        h1 = self.row_sums / ny
        h2 = self.col_sums / nx
        v1, v2 = _var(h1), _var(h2)
        vh = self.sq_sum / (nx * ny) - abs(total) ** 2
        resid = max(vh - v1 - v2, 0.0)
        var = v1 / nx + v2 / ny + resid / (nx * ny)
        return Estimate(complex(total), var ** 0.5)

    def influence(self) -> tuple[np.ndarray, np.ndarray]:
        """Row and column means, for delta-method combinations."""
        return self.row_sums / self.ny, self.col_sums / self.nx
