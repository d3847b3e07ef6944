import numpy as np
import pytest

from rlasszero import InputError
from rlasszero.estimators import hard_threshold
from rlasszero.experiments import (
    MetricsRecord,
    SimulationSpec,
    metrics_to_csv,
    oracle_s_threshold,
    psr_indicator,
    raw_to_csv,
    run_experiment,
    s_fdp,
    s_tpp,
)


class TestSTpp:
    def test_all_signs_correct(self):
        assert s_tpp(np.array([0.5, -2.0, 0.0]),
                     np.array([1.0, -1.0, 0.0])) == 1.0

    def test_zero_estimate(self):
        assert s_tpp(np.zeros(3), np.array([1.0, -1.0, 0.0])) == 0.0

    def test_half_correct(self):
        assert s_tpp(np.array([1.0, 1.0, 0.0]),
                     np.array([1.0, -1.0, 0.0])) == 0.5

    def test_zero_truth_rejected(self):
        with pytest.raises(InputError):
            s_tpp(np.ones(2), np.zeros(2))

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            s_tpp(np.ones(2), np.ones(3))


class TestSFdp:
    def test_empty_estimate(self):
        assert s_fdp(np.zeros(2), np.array([1.0, 0.0])) == 0.0

    def test_one_of_two_wrong(self):
        assert s_fdp(np.array([2.0, 3.0]), np.array([1.0, 0.0])) == 0.5

    def test_wrong_sign_counts(self):
        assert s_fdp(np.array([-2.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_bounds(self):
        gen = np.random.default_rng(0)
        for _ in range(50):
            bh = gen.choice([-1.0, 0.0, 1.0], 6)
            b0 = gen.choice([-1.0, 0.0, 1.0], 6)
            assert 0.0 <= s_fdp(bh, b0) <= 1.0


class TestPsrIndicator:
    def test_exact_match(self):
        assert psr_indicator(np.array([0.1, -7.0]), np.array([2.0, -1.0])) == 1

    def test_flipped_sign(self):
        assert psr_indicator(np.array([0.1, 7.0]), np.array([2.0, -1.0])) == 0

    def test_zero_vs_zero(self):
        assert psr_indicator(np.zeros(3), np.zeros(3)) == 1


class TestOracleSThreshold:
    def test_order_statistics(self):
        tau = oracle_s_threshold(np.array([5.0, -3.0, 1.0]), 2)
        assert tau == 1.0
        assert np.count_nonzero(hard_threshold(np.array([5.0, -3.0, 1.0]),
                                               tau)) == 2

    def test_full_support(self):
        v = np.array([5.0, -3.0, 1.0])
        tau = oracle_s_threshold(v, 3)
        assert np.count_nonzero(hard_threshold(v, tau)) == 3

    def test_boundary_tie_warns_and_keeps_block(self):
        v = np.array([3.0, -3.0, 1.0])
        with pytest.warns(UserWarning, match="tie"):
            tau = oracle_s_threshold(v, 1)
        kept = np.count_nonzero(hard_threshold(v, tau))
        assert kept == 2  # tied block survives together

    def test_too_few_nonzeros_warns(self):
        with pytest.warns(UserWarning):
            tau = oracle_s_threshold(np.array([2.0, 0.0, 0.0]), 2)
        assert np.count_nonzero(hard_threshold(np.array([2.0, 0.0, 0.0]),
                                               tau)) == 1

    def test_invalid_s(self):
        with pytest.raises(InputError):
            oracle_s_threshold(np.ones(3), 4)


class TestSimulationSpec:
    def test_defaults_valid(self):
        SimulationSpec()

    @pytest.mark.parametrize("kw", [dict(s=0), dict(s=300), dict(pi=0.0),
                                    dict(pi=1.0), dict(replications=0),
                                    dict(mechanism="mar"),
                                    dict(tuning="cv"),
                                    dict(estimators=("lasso",))])
    def test_invalid_rejected(self, kw):
        with pytest.raises(InputError):
            SimulationSpec(**kw)

    def test_mcar_forces_a_zero(self):
        spec = SimulationSpec(mechanism="mcar", a=5.0)
        assert spec.missingness().a == 0.0

    def test_automatic_tjp_rejected(self):
        with pytest.raises(InputError):
            SimulationSpec(tuning="automatic", estimators=("tjp",))


def _tiny_spec(**kw):
    base = dict(n=30, p=20, rho=0.3, s=2, sigma_noise=0.1, pi=0.1,
                replications=3, estimators=("rlass0", "lass0", "tjp"),
                n_dictionaries=4, master_seed=21)
    base.update(kw)
    return SimulationSpec(**base)


class TestRunExperiment:
    def test_record_per_estimator_and_bounds(self):
        records, raw = run_experiment(_tiny_spec())
        assert [r.estimator for r in records] == ["rlass0", "lass0", "tjp"]
        for r in records:
            assert 0.0 <= r.psr <= 1.0
            assert 0.0 <= r.s_tpr <= 1.0
            assert 0.0 <= r.s_fdr <= 1.0
            assert r.replications == 3
        assert len(raw) == 9

    def test_oracle_identity_per_replication(self):
        _, raw = run_experiment(_tiny_spec())
        for row in raw:
            assert row["s_fdp"] == pytest.approx(1.0 - row["s_tpp"])

    def test_csv_bytes_identical_across_workers(self):
        spec = _tiny_spec()
        r1, raw1 = run_experiment(spec, workers=1)
        r2, raw2 = run_experiment(spec, workers=3)
        assert metrics_to_csv(r1) == metrics_to_csv(r2)
        assert raw_to_csv(raw1) == raw_to_csv(raw2)

    def test_easy_regime_perfect_recovery(self):
        spec = _tiny_spec(sigma_noise=0.0, pi=0.01, estimators=("tjp",),
                          beta_magnitude=10.0)
        records, _ = run_experiment(spec)
        assert records[0].psr == 1.0

    def test_runtime_not_in_csv(self):
        records, _ = run_experiment(_tiny_spec(estimators=("tjp",)))
        assert records[0].runtime_seconds > 0.0
        assert "runtime" not in metrics_to_csv(records)

    def test_psr_se_binomial_formula(self):
        records, _ = run_experiment(_tiny_spec(estimators=("tjp",)))
        r = records[0]
        want = np.sqrt(r.psr * (1 - r.psr) / r.replications)
        assert r.psr_se == pytest.approx(want)
