import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trigcert.errors import CertificateMiss, HypothesisError, ParameterError, ResourceError
from trigcert.katznelson import (KatzConfig, build_katz1, build_T_gamma, choose_window,
                                 lacunary_distribution, preprocess_weight, sample_signs,
                                 t_gamma_record, truncate, truncation_bound, assemble_continuous)
from trigcert.orlicz import gauge, log_weight, power_gauge, power_weight
from trigcert.sequences import GeneratedSequence, weighted_sequence

LOG1 = log_weight(1)
CUBIC = GeneratedSequence(np.arange(1, 200001, dtype=float) ** -3.0, {"kind": "cubic"})


@pytest.fixture(scope="module")
def t_gamma():
    return build_T_gamma(LOG1, 0.05, 64, KatzConfig(seed=7))


class TestPreprocess:
    def test_crossover_against_mpmath(self):
        mp.mp.dps = 30
        root = mp.findroot(lambda x: x ** -0.5 - 1 / mp.log(x + 2), 1.7)
        prep = preprocess_weight(LOG1)
        assert prep.crossover == pytest.approx(float(root), rel=1e-10)

    def test_min_of_two(self):
        prep = preprocess_weight(LOG1)
        n = np.array([1.0, 100.0])
        expect = np.minimum(n ** -0.5, 1 / np.log(n + 2))
        np.testing.assert_allclose(prep.weight(n), expect)
        assert prep.divergent

    def test_no_crossing(self):
        prep = preprocess_weight(power_weight(1.0))
        assert math.isnan(prep.crossover)
        assert not prep.divergent


class TestTruncation:
    @given(st.lists(st.complex_numbers(max_magnitude=100, allow_nan=False), min_size=1,
                    max_size=30), st.floats(0.01, 10))
    @settings(max_examples=60)
    def test_truncate(self, vals, lam):
        v = np.array(vals, dtype=complex)
        t = truncate(v, lam)
        assert np.all(np.abs(t) <= lam * (1 + 1e-12))
        small = np.abs(v) <= lam
        np.testing.assert_array_equal(t[small], v[small])
        big = ~small
        np.testing.assert_allclose(t[big] * np.abs(v[big]), v[big] * lam, rtol=1e-12)

    def test_bound_formula(self):
        assert truncation_bound(1.0, 0.25) == pytest.approx(4 * 1.5 * math.exp(-2))
        assert truncation_bound(1.0, 0.0) == 0.0


class TestWindow:
    def test_exact_mode_thresholds(self):
        # a_n = n^-3 reaches the tail threshold g^4 near n = 87
        a = CUBIC
        g = 0.09
        win = choose_window(a, LOG1, g, 4)
        assert math.fsum(a.terms[win.M - 1:] ** 2) <= g ** 4
        assert math.fsum(a.terms[win.M - 2:] ** 2) > g ** 4
        band = math.fsum(LOG1(np.arange(win.M, win.N_hi, dtype=float)) ** 2)
        assert band <= g ** -2
        assert band + float(LOG1(np.array([float(win.N_hi)]))[0]) ** 2 > g ** -2
        assert not win.index_capped

    @given(st.floats(0.03, 0.099), st.floats(0.03, 0.099))
    @settings(max_examples=30, deadline=None)
    def test_window_monotone_in_gamma(self, g1, g2):
        lo, hi = sorted((g1, g2))
        a = CUBIC
        w_lo = choose_window(a, LOG1, lo, 4)
        w_hi = choose_window(a, LOG1, hi, 4)
        assert w_hi.M <= w_lo.M
        assert w_hi.N_hi <= w_lo.N_hi

    def test_exact_mode_budget(self):
        w = preprocess_weight(LOG1).weight
        a = weighted_sequence(w, 2 ** 10)
        with pytest.raises(ResourceError):
            choose_window(a, w, 0.01, 4)

    def test_capped_scales_to_lambda(self):
        w = preprocess_weight(LOG1).weight
        a = weighted_sequence(w, 64 * 1024)
        win = choose_window(a, w, 0.05, 64, budget=1e3, index_limit=64 * 1024, capped=True,
                            rescale=True)
        assert win.proof_gamma == pytest.approx(math.sqrt(0.05))
        assert win.lam == pytest.approx(0.05, rel=1e-12)
        assert win.M == 64
        assert win.index_capped

    def test_gamma_range(self):
        w = preprocess_weight(LOG1).weight
        a = weighted_sequence(w, 100)
        with pytest.raises(ParameterError):
            choose_window(a, w, 0.1, 4)


class TestSigns:
    def test_reproducible(self):
        w = preprocess_weight(LOG1).weight
        a = weighted_sequence(w, 8192)
        win = choose_window(a, w, 0.05, 64, budget=1e3, index_limit=8192, capped=True,
                            rescale=True)
        s1 = sample_signs(a, win, seed=3)
        s2 = sample_signs(a, win, seed=3)
        np.testing.assert_array_equal(s1.signs, s2.signs)
        assert s1.truncation_error <= s1.slack * s1.bound

    def test_bound_dominates_energy(self):
        # lambda^2 equals the window's sum a^2 = ||f||_2^2, and the bound at that
        # ratio is 12 exp(-1/2) lambda^2 > ||f||_2^2, so the first draw is accepted
        w = preprocess_weight(LOG1).weight
        a = weighted_sequence(w, 8192)
        win = choose_window(a, w, 0.05, 64, budget=1e3, index_limit=8192, capped=True)
        s = sample_signs(a, win, slack=1.0)
        assert win.lam ** 2 == pytest.approx(win.a_tail_sq)
        assert s.bound == pytest.approx(12 * math.exp(-0.5) * win.lam ** 2)
        assert s.trial == 0

    def test_bad_arguments(self):
        w = preprocess_weight(LOG1).weight
        a = weighted_sequence(w, 8192)
        win = choose_window(a, w, 0.05, 64, index_limit=8192, capped=True)
        with pytest.raises(ParameterError):
            sample_signs(a, win, trials=0)
        with pytest.raises(ParameterError):
            sample_signs(a, win, slack=0.5)


class TestTGamma:
    def test_sup_and_support(self, t_gamma):
        T, cert = t_gamma
        assert cert.check("sup_upper").passed
        assert cert.check("support_floor").passed
        assert cert.check("truncation_error").passed
        assert cert.data["sup_upper"] <= 0.5

    def test_spectrum_in_band(self, t_gamma):
        T, cert = t_gamma
        f = np.abs(T.freqs)
        assert f.min() > cert.data["M"]
        assert f.max() < 2 * cert.data["N_hi"]

    def test_weighted_sum_within_cauchy_schwarz(self, t_gamma):
        # |T_hat| <= |(f^lambda)_hat| on the flat band and ||f^lambda||_2 <= lambda
        T, cert = t_gamma
        d = cert.data
        band = np.arange(2 * d["M"], d["N_hi"] + 1)
        cap = d["lambda"] * math.sqrt(math.fsum(LOG1.at_frequencies(band) ** 2))
        assert d["weighted_sum"] <= cap * (1 + 1e-12)

    def test_record(self, t_gamma):
        rec = t_gamma_record(t_gamma[1])
        assert rec["seed"] == 7
        assert set(rec) >= {"gamma", "M", "N_hi", "budget", "lambda", "passed"}

    def test_raise_on_miss(self):
        # with the index span capped, lambda * sqrt(sum w^2) sits below the required bound
        with pytest.raises(CertificateMiss) as info:
            build_T_gamma(power_weight(0.5), 0.02, 64, KatzConfig(seed=7), raise_on_miss=True)
        assert info.value.details["failed"] == ["weighted_sum"]


class TestAssemble:
    def test_two_blocks(self):
        f, cert = assemble_continuous(LOG1, [0.05, 0.02], N_floor=64)
        assert cert.check("supports_disjoint").passed
        assert cert.check("sup_increment_1").passed
        assert cert.check("sup_increment_2").passed
        assert cert.check("weighted_running_total").passed
        first_top = cert.data["blocks"][0]["N_hi"]
        assert np.abs(f.freqs).max() > 2 * first_top

    def test_empty(self):
        f, cert = assemble_continuous(LOG1, [], N_floor=64)
        assert len(f) == 0


class TestKatz1:
    PSI = gauge("power-log:2,-1")

    def test_single_block(self):
        f, cert = build_katz1(self.PSI, [0.9], 1)
        assert cert.passed, cert.failures()
        assert cert.data["block_sums"][0] >= 0.25

    def test_blocks_disjoint(self):
        f, cert = build_katz1(self.PSI, [0.9, 0.85], 2, max_order=30)
        s = cert.data["shifts"]
        assert s[0] == 0 and s[1] > 0
        assert cert.passed, cert.failures()

    def test_resource_report(self):
        with pytest.raises(ResourceError) as info:
            build_katz1(self.PSI, [0.9, 0.5, 0.3], 3)
        d = info.value.details
        assert d["requested_J"] == 3
        assert d["achieved_J"] < 3

    def test_hypothesis(self):
        with pytest.raises(HypothesisError):
            build_katz1(power_gauge(3), [0.5], 1)

    def test_zero_blocks(self):
        f, cert = build_katz1(self.PSI, [0.5], 0)
        assert len(f) == 0


class TestLacunaryDistribution:
    def test_cube_gauge(self):
        series, cert = lacunary_distribution(power_gauge(3), 40)
        assert cert.passed
        assert series.freqs[:3] == (2, 4, 8)
        assert cert.data["l2_total"] == pytest.approx(series.l2_squared())

    def test_bad_J(self):
        with pytest.raises(ParameterError):
            lacunary_distribution(power_gauge(3), 0)
