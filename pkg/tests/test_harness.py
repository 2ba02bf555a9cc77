import io
import math

import numpy as np
import pytest
from scipy import special

from sparserd.harness.config import ExperimentConfig, parse_config, parse_grid
from sparserd.harness.experiments import (
    TrialError,
    logistic_crossing,
    phase_transition_sweep,
    run_trial,
    run_trials,
    splitmix64,
    trial_seed,
    wilson_interval,
    write_sweep_csv,
    write_trials_csv,
)
from sparserd.harness.verify import (
    lemma1_check,
    lemma2_check,
    lemma6_check,
    lemma7_check,
    lemma8_check,
    lemma9_check,
    verify_theorem8,
)


def small_cfg(**kw):
    base = dict(n=200, omega=0.05, rho=0.4, alpha=0.2, trials=20, seed=11)
    base.update(kw)
    return ExperimentConfig(**base)


class TestSeeds:
    def test_splitmix_reference_output(self):
        # first output of the reference generator seeded with 0
        assert splitmix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
        assert trial_seed(0, 0) == 0xE220A8397B1DCDAF

    def test_distinct_and_64_bit(self):
        seeds = [trial_seed(7, i) for i in range(10_000)]
        assert len(set(seeds)) == len(seeds)
        assert all(0 <= s < 2**64 for s in seeds)


class TestConfig:
    def test_parse(self):
        cfg = parse_config(
            """
            # comment line
            n = 500
            family = uniform_magnitude
            params = lo=0.1, hi=1.0
            estimator = ns   # trailing comment
            noiseless = yes
            k_override = none
            """
        )
        assert cfg.n == 500 and cfg.estimator == "ns" and cfg.noiseless
        assert cfg.params == {"lo": 0.1, "hi": 1.0}
        assert cfg.k_override is None

    @pytest.mark.parametrize(
        "text",
        ["colour = red", "n 5", "noiseless = maybe", "n = 2.5", "estimator = lasso", "omega = 0.7", "trials = 0",
         "family = cauchy"],
    )
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_config(text)

    def test_rate_floor(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n=10, rho=0.05)
        assert ExperimentConfig(n=10, omega=0.2, rho=0.0).m == 1

    def test_grid(self):
        np.testing.assert_allclose(parse_grid("0.1:0.5:5"), [0.1, 0.2, 0.3, 0.4, 0.5])
        assert parse_grid("2:3:1") == [2.0]
        with pytest.raises(ValueError):
            parse_grid("1:2")

    def test_source_power(self):
        assert small_cfg(snr_db=10).source.power == pytest.approx(10.0)


class TestWilson:
    @pytest.mark.parametrize("s,n", [(0, 20), (7, 20), (95, 100), (200, 200)])
    def test_formula(self, s, n):
        z = special.ndtri(0.975)
        p = s / n
        centre = (p + z * z / (2 * n)) / (1 + z * z / n)
        half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
        lo, hi = wilson_interval(s, n)
        assert lo == pytest.approx(max(centre - half, 0.0), abs=1e-12)
        assert hi == pytest.approx(min(centre + half, 1.0), abs=1e-12)


class TestRunTrials:
    def test_deterministic(self):
        a = run_trials(small_cfg())
        b = run_trials(small_cfg())
        assert [r.distortion for r in a.results] == [r.distortion for r in b.results]
        assert [r.seed for r in a.results] == [trial_seed(11, i) for i in range(20)]

    def test_csv_bit_identical_across_workers(self):
        cfg = small_cfg(trials=12)
        outs = []
        for workers in (1, 3):
            buf = io.StringIO()
            write_trials_csv(buf, run_trials(cfg, workers=workers))
            outs.append(buf.getvalue())
        assert outs[0] == outs[1]
        assert outs[0].startswith("# config: n=200")
        assert "splitmix64" in outs[0].splitlines()[1]

    def test_trial_independent_of_batch(self):
        cfg = small_cfg(trials=5)
        full = run_trials(cfg)
        assert run_trial(cfg, 3).distortion == full.results[3].distortion
        tail = run_trials(cfg.with_(trials=2), start=3)
        assert [r.index for r in tail.results] == [3, 4]

    def test_chance_level_at_zero_rate(self):
        summary = run_trials(ExperimentConfig(n=1000, omega=0.05, rho=0.0, trials=200, seed=3))
        assert summary.results[0].m == 1
        # random top-k overlap is k^2/n on average
        assert summary.mean_distortion == pytest.approx(1 - 50 / 1000, abs=0.01)

    def test_noiseless_ns_minimal_rate(self):
        cfg = ExperimentConfig(n=12, omega=0.25, rho=4 / 12, alpha=0.0, estimator="ns", noiseless=True, trials=50)
        summary = run_trials(cfg)
        assert summary.results[0].m == 4 and summary.results[0].k == 3
        assert summary.p_error == 0.0

    def test_error_carries_trial_index(self):
        cfg = ExperimentConfig(n=40, omega=0.45, rho=0.5, estimator="ns", trials=2)
        with pytest.raises(TrialError) as info:
            run_trials(cfg, start=5)
        assert info.value.index == 5
        assert "thresholding" in str(info.value)

    def test_matrix_free_agrees_in_law(self):
        base = small_cfg(n=400, rho=0.5, trials=300, alpha=0.3)
        a = run_trials(base.with_(matrix_free="no"))
        b = run_trials(base.with_(matrix_free="yes", seed=99))
        assert abs(a.success_rate - b.success_rate) < 0.1
        assert abs(a.mean_distortion - b.mean_distortion) < 0.03

    def test_matrix_free_requires_thresholding(self):
        with pytest.raises(TrialError):
            run_trials(small_cfg(n=12, omega=0.25, estimator="ns", matrix_free="yes", trials=1))

    def test_k_override(self):
        r = run_trial(small_cfg(k_override=14), 0)
        assert r.k == 10 and r.k_est == 14
        assert r.distortion >= 4 / 14 - 1e-12


class TestRateSharing:
    def test_split_weight_converges(self):
        cfg = ExperimentConfig(n=100_000, omega=0.05, matrix="rate_sharing", lam=0.3, rho1=0.5, rho2=0.5, trials=3)
        for r in run_trials(cfg).results:
            assert abs(r.info["Lambda"] - 0.3) < 0.01

    def test_combined_distortion_bound(self):
        cfg = ExperimentConfig(n=300, omega=0.1, matrix="rate_sharing", lam=0.5, rho1=0.8, rho2=0.2, trials=30,
                               alpha=0.3)
        for r in run_trials(cfg).results:
            lam = r.info["Lambda"]
            bound = lam * r.info["block0_distortion"] + (1 - lam) * r.info["block1_distortion"]
            assert r.distortion <= bound + 1e-12

    def test_materialized_and_free_paths(self):
        base = ExperimentConfig(n=400, omega=0.05, matrix="rate_sharing", lam=0.5, rho1=1.0, rho2=0.3, trials=100)
        a = run_trials(base.with_(matrix_free="no"))
        b = run_trials(base.with_(matrix_free="yes"))
        assert a.results[0].m == b.results[0].m == 200 + 60
        assert abs(a.mean_distortion - b.mean_distortion) < 0.04


class TestLogisticCrossing:
    def test_recovers_known_midpoint(self):
        rng = np.random.default_rng(0)
        rhos = np.linspace(0.5, 2.0, 16)
        p = special.expit(6 * np.log(rhos / 1.1))
        succ = rng.binomial(2000, p)
        assert logistic_crossing(rhos, succ, np.full(16, 2000)) == pytest.approx(1.1, rel=0.02)

    def test_nan_when_not_straddling(self):
        assert math.isnan(logistic_crossing([1, 2, 3], [0, 1, 2], [10, 10, 10]))
        assert math.isnan(logistic_crossing([1, 2, 3], [8, 9, 10], [10, 10, 10]))


class TestSweep:
    def test_sweep_monotone_and_csv(self):
        cfg = ExperimentConfig(n=500, omega=0.05, alpha=0.2, trials=60, seed=1)
        sweep = phase_transition_sweep(cfg, [0.2, 0.6, 1.2, 2.4])
        rates = np.array(sweep.success_rates)
        sd = np.sqrt(np.maximum(rates * (1 - rates), 0.25 / 60) / 60)
        assert np.all(np.diff(rates) >= -2 * (sd[1:] + sd[:-1]))
        assert rates[-1] > rates[0]
        assert sweep.bound > 0
        buf = io.StringIO()
        write_sweep_csv(buf, sweep)
        lines = buf.getvalue().splitlines()
        assert lines[3].startswith("rho,m,trials,successes")
        assert len(lines) == 8

    def test_rejects_descending_grid(self):
        with pytest.raises(ValueError):
            phase_transition_sweep(small_cfg(), [0.5, 0.2])


class TestVerifiers:
    def test_residual_law_small(self):
        assert lemma1_check(n=100, m=40, k=8, trials=600).passed

    def test_truncated_energy(self):
        assert lemma2_check(n=20_000).passed

    def test_binomial_entropy(self):
        check = lemma6_check()
        assert check.passed and check.statistic < 0.02

    def test_chi_square_tail_components(self):
        upper, lower, lm = lemma7_check(d_max=60, num_eps=60)
        assert lower.passed and lm.passed
        # the quadratic upper-tail form is only valid for small eps
        assert not upper.passed

    def test_gap_and_maxtheta(self):
        assert lemma8_check().passed
        assert lemma9_check(draws=30).passed

    def test_check_line(self):
        line = lemma6_check().line()
        assert line.startswith("[PASS] lemma6_binomial_entropy")

    def test_opt_limits_small(self):
        rep = verify_theorem8(instances=20, seed=1)
        a0, a1 = rep.alphas[0], rep.alphas[1]
        assert rep.th_match[a0] == rep.th_unique[a0] and rep.th_match[a1] == rep.th_unique[a1]
        assert rep.ns_match[a0] == rep.ns_unique[a0]
        assert rep.ns_within_alpha[a1] == rep.ns_unique[a1]
        assert len(rep.lines()) == 3


class TestTrialResult:
    def test_success_flag(self):
        r = run_trial(small_cfg(), 0)
        assert r.success == (r.distortion <= 0.2 + 1e-12)
        assert 0 <= r.distortion <= 1
