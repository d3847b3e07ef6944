"""Dense design-matrix primitives and deterministic RNG stream derivation.

All randomness in the package flows through :class:`RngStream`, a
(master_seed, path) pair mapped to an independent counter-based generator.
Two streams with different paths are statistically independent, and the
same (seed, path) reproduces the identical sequence bit-for-bit, so
replications can run in any order (or in parallel) without changing
results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream identified by a master seed and a path.

    The path is a tuple of integers, e.g. ``(replication, dictionary)``.
    Derivation uses numpy's SeedSequence spawn-key mechanism on top of the
    counter-based Philox generator.
    """

    master_seed: int
    path: tuple[int, ...] = field(default_factory=tuple)

    def child(self, *indices: int) -> "RngStream":
        return RngStream(self.master_seed, self.path + tuple(indices))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))


def toeplitz_sigma(p: int, rho: float) -> np.ndarray:
    """Toeplitz correlation matrix with entries rho**|i-j| and unit diagonal.

    Requires 0 <= rho < 1 so the matrix is positive definite.
    """
    if p < 1:
        raise InputError(f"p must be >= 1, got {p}")
    if not 0.0 <= rho < 1.0:
        raise InputError(f"rho must lie in [0, 1), got {rho}")
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def sample_design(n: int, p: int, sigma: np.ndarray, stream: RngStream) -> np.ndarray:
    """Draw an n x p matrix with i.i.d. rows from N(0, sigma).

    Rows are generated as standard-normal vectors times the lower Cholesky
    factor of sigma, so the covariance is exact.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (p, p):
        raise InputError(f"sigma must be {p}x{p}, got shape {sigma.shape}")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise InputError("sigma is not positive definite") from exc
    z = stream.generator().standard_normal((n, p))
    return z @ chol.T


def standardize_columns(x: np.ndarray, return_stats: bool = False):
    """Center each column and rescale it to Euclidean norm sqrt(n).

    Uses the population (1/n) variance so the rescaled norm is exactly
    sqrt(n). A constant column has no scale and is rejected.

    With ``return_stats=True`` also returns the per-column (mean, scale)
    used, where ``out = (x - mean) / scale``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InputError("expected a 2-d array")
    n = x.shape[0]
    means = x.mean(axis=0)
    centered = x - means
    norms = np.linalg.norm(centered, axis=0)
    bad = np.flatnonzero(norms <= 0.0)
    if bad.size:
        raise InputError(f"column {bad[0]} is constant and cannot be standardized")
    scales = norms / np.sqrt(n)
    out = centered / scales
    if return_stats:
        return out, means, scales
    return out
