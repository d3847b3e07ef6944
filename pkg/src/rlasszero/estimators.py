"""Median-aggregated noise-dictionary estimators and hard thresholding.

The main entry point is :func:`robust_lasso_zero`: solve M corruption-aware
l1 problems, each augmented with a fresh n x n standard-normal noise
dictionary, take componentwise medians of the coefficient estimates, and
hard-threshold. :func:`lasso_zero` is the corruption-free baseline (no
omega block) and :func:`tjp` the single-solve thresholded variant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import RngStream
from .errors import InputError, SolverFailure
from .lp import (
    OPTIMAL,
    SolverOptions,
    solve_augmented_jp,
    solve_bp,
    solve_jp,
)


def hard_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Keep entries with |v_j| strictly greater than tau, zero the rest."""
    if tau < 0:
        raise InputError(f"tau must be >= 0, got {tau}")
    v = np.asarray(v, dtype=float)
    return np.where(np.abs(v) > tau, v, 0.0)


def median_aggregate(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Componentwise median; even counts use the midpoint of the central pair."""
    if len(vectors) == 0:
        raise InputError("cannot aggregate an empty collection")
    try:
        stack = np.asarray(vectors, dtype=float)
    except ValueError:
        raise InputError("vectors must all have the same length") from None
    if stack.ndim != 2:
        raise InputError("vectors must all have the same length")
    return np.median(stack, axis=0)


@dataclass
class RlzConfig:
    """Hyperparameters of the median-aggregated estimator.

    ``tau`` is either a numeric threshold or the string "qut", in which
    case a calibration result must be passed to the fitting function.
    ``corruption_cols`` restricts the corruption block to the given rows
    (None = all rows, empty = no corruption block).
    """

    lam: float = 1.0
    tau: Union[float, str] = "qut"
    n_dictionaries: int = 20
    master_seed: int = 0
    corruption_cols: Optional[np.ndarray] = None
    rescale_dictionaries: bool = False  # scale G columns to norm sqrt(n)
    tau_omega: Optional[float] = None   # defaults to tau
    rng_path: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.lam <= 0:
            raise InputError(f"lambda must be > 0, got {self.lam}")
        if self.n_dictionaries < 1:
            raise InputError("need at least one dictionary")
        if isinstance(self.tau, str):
            if self.tau != "qut":
                raise InputError(f"tau must be numeric or 'qut', got {self.tau!r}")
        elif self.tau < 0:
            raise InputError(f"tau must be >= 0, got {self.tau}")


@dataclass
class RlzFit:
    beta_med: np.ndarray
    omega_med: Optional[np.ndarray]
    gamma_all: list[np.ndarray]
    beta_hat: np.ndarray
    omega_hat: Optional[np.ndarray]
    tau_used: float
    per_dictionary_status: list[str]
    corruption_cols: Optional[np.ndarray] = None
    column_scales: Optional[np.ndarray] = None  # set by the missing-data path

    def omega_full(self, n: int) -> Optional[np.ndarray]:
        """Corruption medians indexed by original row, zero on complete rows."""
        if self.omega_med is None:
            return None
        if self.corruption_cols is None:
            return self.omega_med
        out = np.zeros(n)
        out[self.corruption_cols] = self.omega_med
        return out


def _draw_dictionary(n: int, stream: RngStream, rescale: bool) -> np.ndarray:
    g = stream.generator().standard_normal((n, n))
    if rescale:
        g *= np.sqrt(n) / np.linalg.norm(g, axis=0)
    return g


def _resolve_tau(cfg: RlzConfig, gamma_all, qut):
    if not isinstance(cfg.tau, str):
        return float(cfg.tau)
    if qut is None:
        raise InputError("tau='qut' requires a calibration result")
    from .calibration import pivot_scale_from_gammas  # cycle-free local import

    return float(qut.pivot_quantile * pivot_scale_from_gammas(gamma_all))


def robust_lasso_zero(x: np.ndarray, y: np.ndarray, cfg: RlzConfig,
                      opts: Optional[SolverOptions] = None,
                      qut=None) -> RlzFit:
    """Noise-dictionary median estimator for the sparse corruption model.

    Dictionary k (1-based) is drawn from the stream
    (master_seed, (*rng_path, k)), so fits are deterministic and
    dictionary solves could run in any order. Failed solves are dropped
    from the medians with a warning; the fit aborts only when more than
    half of them fail.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    if y.shape != (n,):
        raise InputError(f"y must have length {n}")
    base = RngStream(cfg.master_seed, cfg.rng_path)
    cols = cfg.corruption_cols
    if cols is not None:
        cols = np.asarray(cols, dtype=int)

    betas, omegas, gammas, statuses = [], [], [], []
    for k in range(1, cfg.n_dictionaries + 1):
        g = _draw_dictionary(n, base.child(k), cfg.rescale_dictionaries)
        if cols is None:
            sol = solve_augmented_jp(x, y, cfg.lam, g, opts)
            beta, omega, gamma, status = sol.beta, sol.omega, sol.gamma, sol.status
        else:
            beta, omega, gamma, status = _solve_restricted(
                x, y, cfg.lam, cols, g, opts)
        statuses.append(status)
        if status != OPTIMAL:
            continue
        betas.append(beta)
        omegas.append(omega)
        gammas.append(gamma)

    failures = cfg.n_dictionaries - len(betas)
    if failures:
        warnings.warn(f"{failures} of {cfg.n_dictionaries} dictionary solves "
                      "failed and were dropped from the medians")
    if failures > cfg.n_dictionaries / 2:
        raise SolverFailure("more than half of the dictionary solves failed; "
                            "medians would be unreliable")

    beta_med = median_aggregate(betas)
    omega_med = median_aggregate(omegas) if omegas and omegas[0].size else None
    tau = _resolve_tau(cfg, gammas, qut)
    beta_hat = hard_threshold(beta_med, tau)
    tau_omega = cfg.tau_omega if cfg.tau_omega is not None else tau
    omega_hat = hard_threshold(omega_med, tau_omega) if omega_med is not None else None
    return RlzFit(beta_med=beta_med, omega_med=omega_med, gamma_all=gammas,
                  beta_hat=beta_hat, omega_hat=omega_hat, tau_used=tau,
                  per_dictionary_status=statuses, corruption_cols=cols)


def _eye_cols(n: int, cols: np.ndarray) -> np.ndarray:
    block = np.zeros((n, cols.size))
    block[cols, np.arange(cols.size)] = np.sqrt(n)
    return block


def _solve_restricted(x, y, lam, cols, g, opts):
    """Augmented solve with the corruption block restricted to ``cols``."""
    from .lp import solve_lp, split_signed_problem

    n, p = x.shape
    a_signed = np.hstack([x, _eye_cols(n, cols), g])
    costs = np.concatenate([np.ones(p), np.full(cols.size, lam), np.ones(n)])
    prob = split_signed_problem(a_signed, y, costs)
    sol, _, status = solve_lp(prob, opts)
    signed = prob.recompose(sol)
    return signed[:p], signed[p:p + cols.size], signed[p + cols.size:], status


def lasso_zero(x: np.ndarray, y: np.ndarray, cfg: RlzConfig,
               opts: Optional[SolverOptions] = None, qut=None) -> RlzFit:
    """Baseline without a corruption block: repeated minimum-l1 solves on
    the dictionary-augmented matrix [X | G^(k)]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    base = RngStream(cfg.master_seed, cfg.rng_path)
    betas, gammas, statuses = [], [], []
    for k in range(1, cfg.n_dictionaries + 1):
        g = _draw_dictionary(n, base.child(k), cfg.rescale_dictionaries)
        z, status = solve_bp(np.hstack([x, g]), y, opts)
        statuses.append(status)
        if status != OPTIMAL:
            continue
        betas.append(z[:p])
        gammas.append(z[p:])
    failures = cfg.n_dictionaries - len(betas)
    if failures:
        warnings.warn(f"{failures} of {cfg.n_dictionaries} dictionary solves "
                      "failed and were dropped from the medians")
    if failures > cfg.n_dictionaries / 2:
        raise SolverFailure("more than half of the dictionary solves failed")
    beta_med = median_aggregate(betas)
    tau = _resolve_tau(cfg, gammas, qut)
    return RlzFit(beta_med=beta_med, omega_med=None, gamma_all=gammas,
                  beta_hat=hard_threshold(beta_med, tau), omega_hat=None,
                  tau_used=tau, per_dictionary_status=statuses)


def tjp(x: np.ndarray, y: np.ndarray, lam: float, tau: float,
        corruption_cols: Optional[Sequence[int]] = None,
        opts: Optional[SolverOptions] = None):
    """Hard-thresholded single solve (no dictionaries).

    Returns (beta_hat, omega_hat).
    """
    sol = solve_jp(x, y, lam, corruption_cols, opts)
    if sol.status != OPTIMAL:
        raise SolverFailure(f"solve ended with status {sol.status}")
    return hard_threshold(sol.beta, tau), hard_threshold(sol.omega, tau)
