"""Quantile-based threshold selection under the null model.

The threshold tau is calibrated so that with beta = 0 (hence no
corruption), the all-zero vector is returned with probability 1 - alpha.
The Monte Carlo statistic max_j |beta_med_j| is divided by a scale built
from the dictionary noise coefficients, which makes the calibration free
of the unknown noise level: both numerator and denominator scale linearly
with the data, so the quantile computed at unit noise applies at any
sigma.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import RngStream
from .errors import InputError, SolverFailure
from .estimators import RlzConfig, RlzFit, robust_lasso_zero
from .lp import SolverOptions


@dataclass
class QutSpec:
    alpha: float = 0.05
    n_mc: int = 500
    lam: float = 1.0
    n_dictionaries: int = 20
    master_seed: int = 0
    pivot: str = "pooled_median"  # or "per_dictionary_mad"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must be in (0,1), got {self.alpha}")
        if self.n_mc < 50:
            raise InputError(f"n_mc must be >= 50, got {self.n_mc}")
        if self.pivot not in ("pooled_median", "per_dictionary_mad"):
            raise InputError(f"unknown pivot choice {self.pivot!r}")


@dataclass
class QutResult:
    pivot_quantile: float
    mc_statistics: np.ndarray
    tau: Optional[float] = None  # filled in once a data fit is available


def pivot_scale_from_gammas(gamma_all, pivot: str = "pooled_median") -> float:
    """Noise scale from the dictionary coefficients.

    Only the nonzero coefficients enter: basic solutions of the l1
    programs zero out most dictionary entries, so a median over all of
    them would collapse to zero. Both choices are scale-equivariant
    (solutions are positively homogeneous in the response, with the
    sparsity pattern unchanged), which is what makes the calibration
    noise-level-free.

    Default: median of the nonzero |gamma| pooled over all dictionaries.
    The alternative takes a per-dictionary median of nonzero |gamma|
    first, then the median across dictionaries.
    """
    if not gamma_all:
        raise InputError("no dictionary noise coefficients available")
    if pivot == "pooled_median":
        pooled = np.abs(np.concatenate([np.ravel(g) for g in gamma_all]))
        nz = pooled[pooled > 0.0]
        scale = float(np.median(nz)) if nz.size else 0.0
    elif pivot == "per_dictionary_mad":
        meds = []
        for g in gamma_all:
            a = np.abs(np.ravel(g))
            a = a[a > 0.0]
            meds.append(float(np.median(a)) if a.size else 0.0)
        scale = float(np.median(meds))
    else:
        raise InputError(f"unknown pivot choice {pivot!r}")
    if scale <= 0.0:
        raise InputError("all noise coefficients are zero; pivot scale "
                         "undefined (degenerate response)")
    return scale


def pivot_scale(fit: RlzFit, pivot: str = "pooled_median") -> float:
    """Pivot scale of a fitted estimate; requires stored noise coefficients."""
    return pivot_scale_from_gammas(fit.gamma_all, pivot)


def qut_threshold(x: np.ndarray, spec: QutSpec,
                  corruption_cols: Optional[np.ndarray] = None,
                  opts: Optional[SolverOptions] = None) -> QutResult:
    """Upper alpha-quantile of the pivotized null statistic.

    For each draw j the noise comes from the stream (master_seed, (j, 0))
    and its dictionaries from (master_seed, (j, k)), so the result is a
    deterministic function of (x, spec). ``x`` must be the exact matrix
    the subsequent fit will use (already imputed and rescaled).

    The returned ``pivot_quantile`` multiplies the pivot scale of the data
    fit to give the data-dependent threshold; ``tau`` is left unset here.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    stats = []
    failed = 0
    for j in range(1, spec.n_mc + 1):
        eps = RngStream(spec.master_seed, (j, 0)).generator().standard_normal(n)
        cfg = RlzConfig(lam=spec.lam, tau=0.0,
                        n_dictionaries=spec.n_dictionaries,
                        master_seed=spec.master_seed,
                        corruption_cols=corruption_cols, rng_path=(j,))
        try:
            fit = robust_lasso_zero(x, eps, cfg, opts)
            scale = pivot_scale(fit, spec.pivot)
        except (SolverFailure, InputError):
            failed += 1
            continue
        stats.append(float(np.abs(fit.beta_med).max()) / scale)
    if failed > 0.1 * spec.n_mc:
        raise SolverFailure(f"{failed}/{spec.n_mc} calibration draws failed")
    if failed:
        warnings.warn(f"{failed} calibration draws failed and were dropped")
    stats = np.asarray(stats)
    quantile = float(np.quantile(stats, 1.0 - spec.alpha))
    return QutResult(pivot_quantile=quantile, mc_statistics=stats)
