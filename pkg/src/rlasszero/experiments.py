"""Sign-recovery metrics and the replication harness.

The harness reproduces the standard protocol: Toeplitz-correlated Gaussian
design, +-1 coefficients on a random support, logistic missingness,
mean imputation, and per-replication metrics (exact sign recovery, signed
true-positive and false-discovery proportions) aggregated with standard
errors. Every replication owns its RNG streams, so results do not depend
on execution order or worker count.
"""

from __future__ import annotations

import csv
import io
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .calibration import QutSpec
from .core import RngStream, sample_design, standardize_columns, toeplitz_sigma
from .errors import InputError, SolverFailure
from .estimators import RlzConfig, hard_threshold, lasso_zero, robust_lasso_zero
from .lp import SolverOptions, solve_jp
from .missing import IncompleteMatrix, MissingnessSpec, generate_missingness, \
    mean_impute, rlz_with_missing


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _correct_sign_count(beta_hat: np.ndarray, beta0: np.ndarray) -> int:
    pos = int(np.sum((beta0 > 0) & (beta_hat > 0)))
    neg = int(np.sum((beta0 < 0) & (beta_hat < 0)))
    return pos + neg


def s_tpp(beta_hat: np.ndarray, beta0: np.ndarray) -> float:
    """Proportion of true nonzero coefficients whose sign is recovered."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise InputError("length mismatch")
    support = int(np.count_nonzero(beta0))
    if support == 0:
        raise InputError("true coefficient vector is zero; the signed "
                         "true-positive proportion is undefined, report the "
                         "sign-recovery indicator instead")
    return _correct_sign_count(beta_hat, beta0) / support


def s_fdp(beta_hat: np.ndarray, beta0: np.ndarray) -> float:
    """Proportion of discoveries with an incorrect sign (0 when no discovery)."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise InputError("length mismatch")
    discoveries = int(np.count_nonzero(beta_hat))
    return (discoveries - _correct_sign_count(beta_hat, beta0)) / max(1, discoveries)


def psr_indicator(beta_hat: np.ndarray, beta0: np.ndarray) -> int:
    """1 iff sign(beta_hat) equals sign(beta0) componentwise."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise InputError("length mismatch")
    return int(np.array_equal(np.sign(beta_hat), np.sign(beta0)))


def oracle_s_threshold(beta_med: np.ndarray, s: int) -> float:
    """Threshold below which exactly s entries survive.

    Returns the (s+1)-th largest magnitude so that s entries strictly
    exceed it. Boundary ties are resolved by lowering the cut to the next
    distinct magnitude (support then exceeds s, with a warning); when
    fewer than s nonzero magnitudes exist the cut sits just under the
    smallest nonzero one.
    """
    beta_med = np.asarray(beta_med, dtype=float)
    p = beta_med.size
    if not 1 <= s <= p:
        raise InputError(f"s must be in [1, {p}], got {s}")
    mags = np.sort(np.abs(beta_med))[::-1]
    nonzero = int(np.count_nonzero(mags))
    if nonzero < s:
        warnings.warn(f"only {nonzero} nonzero magnitudes for target support "
                      f"size {s}; best-effort threshold")
        return 0.5 * mags[nonzero - 1] if nonzero else 0.0
    tau = mags[s] if s < p else 0.5 * mags[p - 1]
    if s < p and mags[s - 1] <= tau:
        # tie at the cut: lower tau so the tied block is kept
        below = mags[mags < tau - 1e-300]
        smaller = mags[mags < mags[s - 1]]
        tau = float(smaller[0]) if smaller.size else 0.5 * mags[s - 1]
        warnings.warn("magnitude tie at the oracle cut; support size may "
                      "exceed the target")
    return float(tau)


# ---------------------------------------------------------------------------
# Simulation harness
# ---------------------------------------------------------------------------

_ESTIMATORS = ("rlass0", "lass0", "tjp")
_TUNINGS = ("oracle_s", "automatic")
_MECHANISMS = ("mcar", "mnar")


@dataclass
class SimulationSpec:
    n: int = 100
    p: int = 200
    rho: float = 0.0
    s: int = 3
    sigma_noise: float = 0.5
    beta_magnitude: float = 1.0   # coefficients are +-beta_magnitude
    mechanism: str = "mcar"
    a: float = 5.0                # logistic slope, used when mechanism=mnar
    pi: float = 0.2
    replications: int = 100
    estimators: tuple[str, ...] = ("rlass0", "lass0")
    tuning: str = "oracle_s"
    n_dictionaries: int = 20
    lam: float = 1.0
    alpha: float = 0.05
    master_seed: int = 0
    qut_mc: int = 500             # calibration draws under automatic tuning

    def __post_init__(self):
        if not 1 <= self.s <= self.p:
            raise InputError("need 1 <= s <= p")
        if not 0.0 < self.pi < 1.0:
            raise InputError("pi must be in (0,1)")
        if self.replications < 1:
            raise InputError("replications must be >= 1")
        if self.mechanism not in _MECHANISMS:
            raise InputError(f"mechanism must be one of {_MECHANISMS}")
        if self.tuning not in _TUNINGS:
            raise InputError(f"tuning must be one of {_TUNINGS}")
        self.estimators = tuple(self.estimators)
        unknown = set(self.estimators) - set(_ESTIMATORS)
        if unknown:
            raise InputError(f"unknown estimators {sorted(unknown)}")
        if self.tuning == "automatic" and "tjp" in self.estimators:
            raise InputError("automatic tuning is undefined for tjp "
                             "(no noise dictionaries to pivotize with)")

    def missingness(self) -> MissingnessSpec:
        a = 0.0 if self.mechanism == "mcar" else self.a
        return MissingnessSpec(a=a, pi=self.pi)


@dataclass
class MetricsRecord:
    estimator: str
    psr: float
    psr_se: float
    s_tpr: float
    s_tpr_se: float
    s_fdr: float
    s_fdr_se: float
    replications: int
    runtime_seconds: float = 0.0


def _replication_metrics(spec: SimulationSpec, r: int) -> dict:
    """Metrics for replication r, a pure function of (spec, r)."""
    seed = spec.master_seed
    sigma = toeplitz_sigma(spec.p, spec.rho)
    x = sample_design(spec.n, spec.p, sigma, RngStream(seed, (r, 0)))
    x = standardize_columns(x)

    gen_beta = RngStream(seed, (r, 2)).generator()
    beta0 = np.zeros(spec.p)
    support = gen_beta.choice(spec.p, spec.s, replace=False)
    beta0[support] = gen_beta.choice([-1.0, 1.0], spec.s) * spec.beta_magnitude

    eps = RngStream(seed, (r, 3)).generator().standard_normal(spec.n)
    y = x @ beta0 + spec.sigma_noise * eps

    inc = generate_missingness(x, spec.missingness(), RngStream(seed, (r, 1)))
    out: dict = {"replication": r}
    for name in spec.estimators:
        beta_hat = _run_estimator(name, spec, x, y, inc, r)
        out[name] = {
            "psr": psr_indicator(beta_hat, beta0),
            "s_tpp": s_tpp(beta_hat, beta0),
            "s_fdp": s_fdp(beta_hat, beta0),
        }
    return out


def _run_estimator(name: str, spec: SimulationSpec, x, y,
                   inc: IncompleteMatrix, r: int) -> np.ndarray:
    opts = SolverOptions()
    if name == "tjp":
        x_imp = standardize_columns(mean_impute(inc))
        sol = solve_jp(x_imp, y, spec.lam, opts=opts)
        if sol.status != "optimal":
            raise SolverFailure(f"tjp solve failed in replication {r}")
        tau = oracle_s_threshold(sol.beta, spec.s)
        return hard_threshold(sol.beta, tau)

    cfg = RlzConfig(lam=spec.lam, tau=0.0,
                    n_dictionaries=spec.n_dictionaries,
                    master_seed=spec.master_seed, rng_path=(r, 4))
    if spec.tuning == "automatic":
        cfg.tau = "qut"
        qut_spec = QutSpec(alpha=spec.alpha, n_mc=spec.qut_mc, lam=spec.lam,
                           n_dictionaries=spec.n_dictionaries,
                           master_seed=spec.master_seed)
    else:
        qut_spec = None

    if name == "rlass0":
        fit = rlz_with_missing(y, inc, cfg, qut_spec=qut_spec, opts=opts)
    elif name == "lass0":
        x_imp = standardize_columns(mean_impute(inc))
        if spec.tuning == "automatic":
            from .calibration import qut_threshold
            empty = np.array([], dtype=int)
            qut = qut_threshold(x_imp, qut_spec, corruption_cols=empty,
                                opts=opts)
            fit = lasso_zero(x_imp, y, cfg, opts, qut=qut)
        else:
            fit = lasso_zero(x_imp, y, cfg, opts)
    else:
        raise InputError(f"unknown estimator {name!r}")

    if spec.tuning == "oracle_s":
        tau = oracle_s_threshold(fit.beta_med, spec.s)
        return hard_threshold(fit.beta_med, tau)
    return fit.beta_hat


def run_experiment(spec: SimulationSpec, workers: int = 1):
    """Run all replications and aggregate; returns (records, raw_rows).

    ``raw_rows`` holds one dict per (replication, estimator) for optional
    per-replication output. Failed replications are dropped with a
    warning and the per-estimator replication counts reflect that.
    """
    t0 = time.perf_counter()
    reps = range(1, spec.replications + 1)
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {r: pool.submit(_replication_metrics, spec, r)
                       for r in reps}
            for r in reps:
                try:
                    results.append(futures[r].result())
                except SolverFailure as exc:
                    warnings.warn(f"replication {r} failed: {exc}")
    else:
        for r in reps:
            try:
                results.append(_replication_metrics(spec, r))
            except SolverFailure as exc:
                warnings.warn(f"replication {r} failed: {exc}")
    elapsed = time.perf_counter() - t0

    records = []
    raw_rows = []
    for name in spec.estimators:
        psr = np.array([res[name]["psr"] for res in results], dtype=float)
        tpp = np.array([res[name]["s_tpp"] for res in results], dtype=float)
        fdp = np.array([res[name]["s_fdp"] for res in results], dtype=float)
        m = len(results)
        psr_rate = psr.mean()
        records.append(MetricsRecord(
            estimator=name,
            psr=float(psr_rate),
            psr_se=float(np.sqrt(psr_rate * (1 - psr_rate) / m)),
            s_tpr=float(tpp.mean()),
            s_tpr_se=float(tpp.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0,
            s_fdr=float(fdp.mean()),
            s_fdr_se=float(fdp.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0,
            replications=m,
            runtime_seconds=elapsed,
        ))
        for res in results:
            raw_rows.append({"replication": res["replication"],
                             "estimator": name, **res[name]})
    return records, raw_rows


def _fmt(v: float) -> str:
    return format(float(v), ".10g")


def metrics_to_csv(records: list[MetricsRecord]) -> str:
    """Aggregate metrics as CSV text.

    Runtime is deliberately excluded so identical (spec, seed) runs
    produce byte-identical output.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["estimator", "psr", "psr_se", "s_tpr", "s_tpr_se",
                     "s_fdr", "s_fdr_se", "replications"])
    for rec in records:
        writer.writerow([rec.estimator, _fmt(rec.psr), _fmt(rec.psr_se),
                         _fmt(rec.s_tpr), _fmt(rec.s_tpr_se),
                         _fmt(rec.s_fdr), _fmt(rec.s_fdr_se),
                         rec.replications])
    return buf.getvalue()


def raw_to_csv(raw_rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["replication", "estimator", "psr", "s_tpp", "s_fdp"])
    for row in raw_rows:
        writer.writerow([row["replication"], row["estimator"],
                         row["psr"], _fmt(row["s_tpp"]), _fmt(row["s_fdp"])])
    return buf.getvalue()
