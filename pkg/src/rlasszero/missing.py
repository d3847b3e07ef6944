"""Missingness generation, imputation, and the missing-covariates pipeline.

Missing entries are reformulated as sparse row-wise corruptions: after
imputing, the discrepancy (X - X_imputed) beta / sqrt(n) acts as a sparse
corruption supported on the incomplete rows, so the median-aggregated
corruption-aware estimator applies directly. Entries go missing through a
logistic mechanism in |x|: slope a = 0 gives MCAR, a > 0 makes large
values more likely to be missing (MNAR).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, logit

from .calibration import QutResult, QutSpec, qut_threshold
from .core import RngStream, standardize_columns
from .errors import InputError
from .estimators import RlzConfig, RlzFit, robust_lasso_zero
from .lp import SolverOptions


@dataclass
class IncompleteMatrix:
    """Observed matrix with NaN at missing positions plus the boolean mask."""

    values: np.ndarray  # n x p, NaN where missing
    mask: np.ndarray    # n x p bool, True = missing

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.shape != self.mask.shape:
            raise InputError("values and mask shapes differ")
        if not np.array_equal(np.isnan(self.values), self.mask):
            raise InputError("NaN positions and mask disagree")

    @classmethod
    def from_values(cls, values: np.ndarray) -> "IncompleteMatrix":
        values = np.asarray(values, dtype=float)
        return cls(values=values, mask=np.isnan(values))

    @property
    def incomplete_rows(self) -> np.ndarray:
        """Indices of rows containing at least one missing entry."""
        return np.flatnonzero(self.mask.any(axis=1))


def logistic_missing_prob(x, a: float, b: float):
    """P(entry missing | value x) = 1 / (1 + exp(-a|x| - b))."""
    if a < 0:
        raise InputError(f"a must be >= 0, got {a}")
    return expit(a * np.abs(x) + b)


def _gh_expectation(a: float, b: float, nodes: int = 96) -> float:
    """E[logistic_missing_prob(Z, a, b)] for Z ~ N(0,1), by Gauss-Hermite."""
    t, w = np.polynomial.hermite.hermgauss(nodes)
    vals = expit(a * np.abs(np.sqrt(2.0) * t) + b)
    return float((w * vals).sum() / np.sqrt(np.pi))


def solve_b_for_pi(a: float, pi: float, tol: float = 1e-10) -> float:
    """Intercept b giving an expected missing proportion pi for N(0,1) entries.

    Closed form logit(pi) when a = 0; otherwise bisection on the
    Gauss-Hermite expectation (monotone increasing in b).
    """
    if not 0.0 < pi < 1.0:
        raise InputError(f"pi must be in (0,1), got {pi}")
    if a < 0:
        raise InputError(f"a must be >= 0, got {a}")
    if a == 0:
        return float(logit(pi))
    lo, hi = -50.0, 50.0
    assert _gh_expectation(a, lo) < pi < _gh_expectation(a, hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _gh_expectation(a, mid) < pi:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class MissingnessSpec:
    """Logistic mechanism parameters; b derived from (a, pi) when omitted."""

    a: float
    pi: float
    b: Optional[float] = None

    def __post_init__(self):
        if self.b is None:
            self.b = solve_b_for_pi(self.a, self.pi)

    @classmethod
    def mcar(cls, pi: float) -> "MissingnessSpec":
        return cls(a=0.0, pi=pi)

    @classmethod
    def mnar(cls, pi: float, a: float = 5.0) -> "MissingnessSpec":
        return cls(a=a, pi=pi)


def generate_missingness(x: np.ndarray, spec: MissingnessSpec,
                         stream: RngStream) -> IncompleteMatrix:
    """Mask each entry independently with its logistic probability."""
    x = np.asarray(x, dtype=float)
    probs = logistic_missing_prob(x, spec.a, spec.b)
    mask = stream.generator().random(x.shape) < probs
    values = x.copy()
    values[mask] = np.nan
    return IncompleteMatrix(values=values, mask=mask)


def mean_impute(inc: IncompleteMatrix) -> np.ndarray:
    """Replace missing entries by the columnwise mean of the observed ones."""
    values = inc.values
    observed = ~inc.mask
    counts = observed.sum(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise InputError(f"column {empty[0]} has no observed entries")
    sums = np.where(inc.mask, 0.0, values).sum(axis=0)
    means = sums / counts
    return np.where(inc.mask, means[None, :], values)


def zero_impute(inc: IncompleteMatrix) -> np.ndarray:
    """Replace missing entries by zero."""
    return np.where(inc.mask, 0.0, inc.values)


_IMPUTERS = {"mean": mean_impute, "zero": zero_impute}


def implied_corruption(x_true: np.ndarray, x_imputed: np.ndarray,
                       beta: np.ndarray) -> np.ndarray:
    """Corruption vector (X - X_imputed) beta / sqrt(n) a given beta implies."""
    x_true = np.asarray(x_true, dtype=float)
    n = x_true.shape[0]
    return (x_true - np.asarray(x_imputed, float)) @ np.asarray(beta, float) / np.sqrt(n)


def rlz_with_missing(y: np.ndarray, inc: IncompleteMatrix, cfg: RlzConfig,
                     qut_spec: Optional[QutSpec] = None,
                     opts: Optional[SolverOptions] = None,
                     impute: str = "mean",
                     restrict_corruption: bool = True) -> RlzFit:
    """End-to-end pipeline for an incomplete design matrix.

    Imputes, centers and rescales columns to norm sqrt(n), restricts the
    corruption block to the incomplete rows (unless told otherwise), and
    runs the median-aggregated estimator. With ``cfg.tau == "qut"`` the
    threshold is calibrated on the imputed, rescaled matrix first.

    The returned fit carries the rescaling factors and the corruption
    column indices, so coefficients can be mapped back to the original
    column scale and row numbering.
    """
    if impute not in _IMPUTERS:
        raise InputError(f"unknown imputation {impute!r}; use one of "
                         f"{sorted(_IMPUTERS)}")
    x_imp = _IMPUTERS[impute](inc)
    x_std, _, scales = standardize_columns(x_imp, return_stats=True)
    cols = inc.incomplete_rows if restrict_corruption else None
    run_cfg = RlzConfig(lam=cfg.lam, tau=cfg.tau,
                        n_dictionaries=cfg.n_dictionaries,
                        master_seed=cfg.master_seed, corruption_cols=cols,
                        rescale_dictionaries=cfg.rescale_dictionaries,
                        tau_omega=cfg.tau_omega, rng_path=cfg.rng_path)
    qut: Optional[QutResult] = None
    if isinstance(cfg.tau, str):
        if qut_spec is None:
            qut_spec = QutSpec(lam=cfg.lam,
                               n_dictionaries=cfg.n_dictionaries,
                               master_seed=cfg.master_seed)
        qut = qut_threshold(x_std, qut_spec, corruption_cols=cols, opts=opts)
    fit = robust_lasso_zero(x_std, np.asarray(y, float), run_cfg, opts, qut=qut)
    if qut is not None:
        qut.tau = fit.tau_used
    fit.column_scales = scales
    return fit
