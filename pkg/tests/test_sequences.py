import csv
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trigcert.errors import HypothesisError, ParameterError, PrecisionError
from trigcert.orlicz import YoungFunction, gauge, log_weight, power_gauge, power_weight, weight
from trigcert.sequences import (LacunaryFreqs, TruncationWarning, katznelson_epsilons,
                                packing_linear, packing_square, select_lacunary_freqs,
                                weighted_sequence, window_inequality)


class TestPacking:
    def test_linear_closed_form_breakpoints(self):
        # Phi = t^1.5 gives Phi(t)/t = sqrt(t) = 1/n^2, so t_n = n^-4
        seq = packing_linear(power_gauge(1.5), 2000)
        ts = np.array(seq.provenance["t_n"])
        n = np.arange(1, ts.size + 1, dtype=float)
        np.testing.assert_allclose(ts, n ** -4.0, rtol=1e-11)

    def test_square_closed_form_breakpoints(self):
        # Phi = t^3 gives Phi(t)/t^2 = t = 1/n^2
        seq = packing_square(power_gauge(3), 500)
        ts = np.array(seq.provenance["t_n"])
        n = np.arange(1, ts.size + 1, dtype=float)
        np.testing.assert_allclose(ts, n ** -2.0, rtol=1e-11)

    def test_block_sizes(self):
        seq = packing_linear(power_gauge(1.5), 300, density=1.0)
        counts = np.bincount(seq.block)[1:]
        # block n holds ceil(1/t_n) = n^4 points; the final block is partial
        assert counts[0] == 1
        assert counts[1] == 16
        assert counts[2] == 81
        assert counts.sum() == 300

    def test_terms_nonincreasing(self):
        seq = packing_linear(gauge("power-log:1.5,1"), 3000)
        assert np.all(np.diff(seq.terms) <= 0)

    def test_terms_inside_their_block(self):
        seq = packing_linear(power_gauge(2), 1000)
        ts = np.array(seq.provenance["t_n"])
        b = seq.block
        assert np.all(seq.terms < ts[b - 1])
        assert np.all(seq.terms >= ts[b])

    def test_chain_dominates_phi(self):
        phi = gauge("power-log:1.5,1")
        seq = packing_linear(phi, 4000)
        assert np.all(phi(seq.terms) <= seq.chain * (1 + 1e-12))

    def test_certificate_bound(self):
        seq = packing_linear(power_gauge(1.5), 20000)
        cert = seq.certificate()
        nmax = cert["blocks_used"]
        limit = 2 * math.fsum(1.0 / n ** 2 for n in range(1, nmax + 1))
        assert cert["sum_phi"] <= cert["chain_bound"] <= limit * 4

    def test_linear_rejects_square_gauge(self):
        with pytest.raises(HypothesisError):
            packing_linear(power_gauge(1), 10)

    def test_square_rejects_square_gauge(self):
        with pytest.raises(HypothesisError):
            packing_square(power_gauge(2), 10)

    def test_bad_count(self):
        with pytest.raises(ParameterError):
            packing_linear(power_gauge(2), 0)

    def test_extended_prefix(self):
        seq = packing_linear(power_gauge(2), 50)
        longer = seq.extended(200)
        np.testing.assert_array_equal(longer.terms[:50], seq.terms)

    def test_underflow_truncates(self):
        # Phi(t)/t = 1/(1 + log(1/t)) puts t_n = exp(1 - n^2) below 1e-300 near n = 27
        def slow(t):
            t = np.asarray(t, float)
            with np.errstate(divide="ignore"):
                return np.where(t > 0, t / (1 + np.log(1 / np.where(t > 0, t, 1))), 0.0)

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            seq = packing_linear(YoungFunction(slow, "slow"), 1000, density=1e-300)
        assert any(issubclass(w.category, TruncationWarning) for w in caught)
        assert len(seq) == 25
        assert seq.warnings

    def test_csv(self, tmp_path):
        seq = packing_linear(power_gauge(2), 20)
        path = tmp_path / "seq.csv"
        seq.to_csv(path)
        rows = list(csv.DictReader(open(path)))
        assert len(rows) == 20
        assert float(rows[-1]["sum_a"]) == pytest.approx(seq.running_sum[-1])

    @given(st.floats(1.05, 3.0), st.integers(10, 400))
    @settings(max_examples=25, deadline=None)
    def test_running_sums_monotone(self, p, count):
        seq = packing_linear(power_gauge(p), count)
        assert len(seq) == count
        assert np.all(np.diff(seq.running_sum) > 0)
        assert np.all(np.diff(seq.running_phi) > 0)


class TestWeightedSequence:
    def test_closed_form_constant_weight(self):
        # w = 1: a = (1 + 2 + ... + 2^(n-1))^(-2/3) = (2^n - 1)^(-2/3) on block n
        seq = weighted_sequence(weight("const:1"), 64)
        for n in range(1, 7):
            lo, hi = 2 ** (n - 1), 2 ** n
            expect = (1 + sum(2 ** j for j in range(1, n))) ** (-2 / 3)
            np.testing.assert_allclose(seq.terms[lo - 1:hi - 1], expect, rtol=1e-14)

    def test_dyadic_blocks_constant(self):
        seq = weighted_sequence(power_weight(0.5), 255)
        for n in range(1, 8):
            block = seq.terms[2 ** (n - 1) - 1:2 ** n - 1]
            assert np.ptp(block) == 0

    def test_window_sides(self):
        w = log_weight(1)
        seq = weighted_sequence(w, 100)
        lhs, rhs = window_inequality(seq, w, 3, 10)
        k = np.arange(3, 10, dtype=float)
        assert lhs == pytest.approx(float(np.sum(seq.terms[2:9] * w(k))))
        assert rhs == pytest.approx(0.25 * (1 + float(np.sum(w(k) ** 2))) ** (1 / 3))

    def test_window_bounds_checked(self):
        seq = weighted_sequence(log_weight(1), 10)
        with pytest.raises(ParameterError):
            window_inequality(seq, log_weight(1), 5, 5)

    def test_running_weighted(self):
        w = power_weight(0.5)
        seq = weighted_sequence(w, 16)
        idx = np.arange(1, 17, dtype=float)
        assert seq.running_weighted[-1] == pytest.approx(float(np.sum(seq.terms * w(idx))))


class TestLacunary:
    def test_root_weight_sum_w(self):
        # w(n) = n^-1/2 <= 2^-j first at n = 4^j, which already exceeds 3 N_{j-1}
        lf = select_lacunary_freqs(power_weight(0.5), "sum_w", 10)
        assert lf.freqs == tuple(4 ** j for j in range(1, 11))
        assert lf.kappa == 4

    def test_ratio_floor_binds(self):
        lf = select_lacunary_freqs(weight("power:2"), "sum_w", 8)
        assert all(b >= 3 * a for a, b in zip(lf.freqs, lf.freqs[1:]))

    def test_sum_w_2pow(self):
        w = power_weight(0.5)
        lf = select_lacunary_freqs(w, "sum_w_2pow", 8)
        vals = w(np.array(lf.freqs, dtype=float))
        assert np.all(vals <= 4.0 ** -np.arange(1, 9))

    def test_minimality(self):
        w = log_weight(1)
        lf = select_lacunary_freqs(w, "sum_w", 3, index_budget=10 ** 6)
        prev = 0
        for j, n in enumerate(lf.freqs, start=1):
            assert w(np.array([float(n)]))[0] <= 2.0 ** -j
            if n - 1 >= max(1, 3 * prev):
                assert w(np.array([float(n - 1)]))[0] > 2.0 ** -j
            prev = n

    def test_truncation_flag(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lf = select_lacunary_freqs(log_weight(1), "sum_w", 10, index_budget=10 ** 6)
        assert lf.truncated
        assert len(lf) < 10

    def test_log_weight_square_target_stops_at_three(self):
        # 1/log(n+2) <= 4^-3 needs n near e^64, beyond any 64-bit index
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            lf = select_lacunary_freqs(log_weight(1), "sum_w_2pow", 8)
        assert len(lf) == 2
        assert lf.freqs[1] == math.ceil(math.exp(16) - 2)
        assert any(issubclass(w.category, TruncationWarning) for w in caught)

    def test_invariant_enforced(self):
        with pytest.raises(ParameterError):
            LacunaryFreqs((1, 2), 3)

    def test_bad_target(self):
        with pytest.raises(ParameterError):
            select_lacunary_freqs(power_weight(0.5), "sum_w_3pow", 3)


class TestKatznelsonEpsilons:
    def test_square_log_closed_form(self):
        # Psi = t^2 log(e + 1/t): Psi/t^2 = log(e + 1/x) >= 1/a^2
        psi = gauge("power-log:2,-1")
        a = 0.8
        eps = katznelson_epsilons(psi, [a])[0]
        x = eps * a
        assert math.log(math.e + 1 / x) >= 1 / a ** 2
        exact = 1 / (math.exp(1 / a ** 2) - math.e)
        assert x == pytest.approx(exact, rel=1e-11)

    def test_condition_by_substitution(self):
        psi = gauge("power-log:2,-1")
        amps = [0.9, 0.7, 0.5]
        for a, e in zip(amps, katznelson_epsilons(psi, amps)):
            x = e * a
            assert float(psi(np.array([x]))[0]) / x ** 2 >= 1 / a ** 2

    def test_underflow_reported(self):
        psi = gauge("power-log:2,-1")
        with pytest.raises(PrecisionError) as info:
            katznelson_epsilons(psi, [0.9, 0.01])
        assert info.value.details["j"] == 2

    def test_rejects_wrong_shape(self):
        with pytest.raises(HypothesisError):
            katznelson_epsilons(power_gauge(3), [0.5])
