import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trigcert.errors import FrequencyRangeError, GaugeDomainError, ParameterError
from trigcert.orlicz import (CoeffSeq, YoungFunction, check_weight, check_young, conjugate,
                             const_weight, gauge, legendre, log_weight, luxemburg_norm,
                             min_weight, phi_sum, power_gauge, power_log_gauge, power_weight,
                             scaled_gauge, weight, weighted_l1)

amps = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=25)


def mp_luxemburg(f, values):
    """Root of sum f(|c|/M) = 1 in 50-digit arithmetic."""
    mp.mp.dps = 50
    vals = [mp.mpf(abs(v)) for v in values]
    lo, hi = mp.mpf(1e-12), mp.mpf(sum(vals)) * 4
    for _ in range(300):
        mid = (lo + hi) / 2
        if sum(f(v / mid) for v in vals) > 1:
            lo = mid
        else:
            hi = mid
    return float(hi)


class TestCoeffSeq:
    def test_sorted_and_summed(self):
        c = CoeffSeq.from_arrays([3, -1, 3, 0], [1.0, 2.0, 0.5, 1.0])
        assert c.freqs.tolist() == [-1, 0, 3]
        assert c.get(3) == 1.5
        assert c.get(7) == 0.0

    def test_hermitian_detection(self):
        c = CoeffSeq.from_arrays([-2, 2], [1 - 1j, 1 + 1j])
        assert c.hermitian
        d = CoeffSeq.from_arrays([-2, 2], [1, 2])
        assert not d.hermitian

    def test_symmetrize(self):
        # c[n] is averaged with conj c[-n]
        c = CoeffSeq.from_arrays([2], [1 + 1j], hermitian=True)
        assert c.get(-2) == 0.5 - 0.5j
        assert c.hermitian

    def test_rejects_unsorted(self):
        with pytest.raises(ParameterError):
            CoeffSeq(np.array([2, 1]), np.array([1, 1], dtype=complex))

    def test_int64_range(self):
        with pytest.raises(FrequencyRangeError):
            CoeffSeq.from_arrays([2 ** 70], [1.0])

    def test_get_many(self):
        c = CoeffSeq.from_arrays([-3, 0, 5], [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(c.get_many([5, 4, -3]), [3, 0, 1])

    def test_window_by_modulus(self):
        c = CoeffSeq.from_arrays(np.arange(-5, 6), np.ones(11))
        assert c.window(2, 3).freqs.tolist() == [-3, -2, 2, 3]

    def test_dict_roundtrip(self):
        c = CoeffSeq.from_arrays([-1, 4], [0.5j, 2.0])
        assert CoeffSeq.from_dict(c.to_dict()).to_dict() == c.to_dict()


class TestGauges:
    def test_registry(self):
        assert gauge("power:2")(np.array([3.0]))[0] == 9.0
        g = gauge("power-log:2,-1")
        t = 0.1
        assert g(np.array([t]))[0] == pytest.approx(t * t * math.log(math.e + 1 / t))

    def test_power_log_at_zero(self):
        assert power_log_gauge(2, 1)(np.array([0.0]))[0] == 0.0

    def test_power_needs_p_at_least_one(self):
        with pytest.raises(ParameterError):
            power_gauge(0.5)

    def test_unknown_key(self):
        with pytest.raises(ParameterError):
            gauge("cosh:1")

    def test_weight_registry(self):
        assert weight("power:0.5")(np.array([4.0]))[0] == 0.5
        assert weight("log:1")(np.array([1.0]))[0] == pytest.approx(1 / math.log(3))
        assert weight("const:2")(np.array([9.0]))[0] == 2.0

    def test_weight_at_zero_frequency(self):
        w = power_weight(0.5)
        np.testing.assert_allclose(w.at_frequencies(np.array([0, -4, 4])), [1, 0.5, 0.5])


class TestLuxemburg:
    def test_two_ones_square(self):
        c = CoeffSeq.from_arrays([1, 2], [1.0, 1.0])
        assert luxemburg_norm(gauge("power:2"), c) == pytest.approx(math.sqrt(2), rel=1e-10)

    @pytest.mark.parametrize("p", [1, 1.5, 2, 3, 4])
    def test_lp_closed_form(self, p, rng):
        v = rng.normal(size=30) + 1j * rng.normal(size=30)
        exact = float(np.sum(np.abs(v) ** p) ** (1 / p))
        assert luxemburg_norm(gauge(f"power:{p}"), v) == pytest.approx(exact, rel=1e-9)

    def test_power_log_against_mpmath(self):
        vals = [0.3, 0.01, 1.7, 2e-4]

        def f(t):
            return t ** 2 * mp.log(mp.e + 1 / t)

        exact = mp_luxemburg(f, vals)
        got = luxemburg_norm(gauge("power-log:2,-1"), np.array(vals))
        assert got == pytest.approx(exact, rel=1e-9)

    def test_empty(self):
        assert luxemburg_norm(gauge("power:2"), CoeffSeq.empty()) == 0.0

    def test_bad_tolerance(self):
        with pytest.raises(ParameterError):
            luxemburg_norm(gauge("power:2"), np.ones(2), tol=0)

    def test_domain_cap(self):
        capped = YoungFunction(lambda t: np.asarray(t, float) ** 2, "capped", domain_cap=1.0)
        with pytest.raises(GaugeDomainError):
            phi_sum(capped, np.array([2.0]))

    @given(amps, st.floats(0.01, 100))
    @settings(max_examples=60, deadline=None)
    def test_homogeneous(self, a, s):
        phi = gauge("power-log:1.5,1")
        base = luxemburg_norm(phi, np.array(a))
        assert luxemburg_norm(phi, s * np.array(a)) == pytest.approx(s * base, rel=1e-8)

    @given(amps, amps)
    @settings(max_examples=60, deadline=None)
    def test_triangle(self, a, b):
        phi = gauge("power:1.5")
        m = min(len(a), len(b))
        x, y = np.array(a[:m]), np.array(b[:m])
        lhs = luxemburg_norm(phi, x + y)
        assert lhs <= (luxemburg_norm(phi, x) + luxemburg_norm(phi, y)) * (1 + 1e-9)

    @given(amps)
    @settings(max_examples=60, deadline=None)
    def test_modular_at_norm_is_one(self, a):
        phi = gauge("power:3")
        x = np.array(a)
        m = luxemburg_norm(phi, x)
        assert phi_sum(phi, x / m) == pytest.approx(1.0, rel=1e-8)


class TestLegendre:
    def test_half_square(self):
        half = scaled_gauge(power_gauge(2), 0.5)
        assert float(legendre(half, 1.0, 10.0)) == pytest.approx(0.5, abs=1e-10)

    def test_third_cube(self):
        phi = scaled_gauge(power_gauge(3), 1 / 3)
        assert float(legendre(phi, 1.0, 10.0)) == pytest.approx(2 / 3, abs=1e-10)

    def test_power_log_against_mpmath(self):
        mp.mp.dps = 30
        phi = gauge("power-log:2,-1")
        x = 0.8

        def h(y):
            return x * y - y ** 2 * mp.log(mp.e + 1 / y)

        ystar = mp.findroot(lambda y: mp.diff(h, y), 0.3)
        assert float(legendre(phi, x, 10.0)) == pytest.approx(float(h(ystar)), rel=1e-9)

    def test_boundary_flag(self):
        res = legendre(power_gauge(1), 2.0, 5.0)
        assert res.at_boundary

    def test_conjugate_infinite_past_slope(self):
        dual = conjugate(power_gauge(1), search_cap=50.0)
        v = dual(np.array([0.5, 2.0]))
        assert v[0] == pytest.approx(0.0, abs=1e-9)
        assert math.isinf(v[1])

    @given(st.floats(0.01, 3), st.floats(0.01, 3))
    @settings(max_examples=50, deadline=None)
    def test_young_inequality(self, x, y):
        phi = gauge("power:1.5")
        star = float(legendre(phi, x, 1e3))
        assert x * y <= float(phi(np.array([y]))[0]) + star + 1e-9


class TestReports:
    def test_three_halves(self):
        rep = check_young(power_gauge(1.5))
        assert rep.is_young
        assert rep.delta2_ratio == pytest.approx(2 ** 1.5, rel=1e-9)
        assert rep.phi_over_t_trend == "decreasing"
        assert rep.phi_over_t2_trend == "increasing"

    def test_square_is_constant_over_t2(self):
        assert check_young(power_gauge(2)).phi_over_t2_trend == "constant"

    def test_oscillating_gauge_not_convex(self):
        wiggle = YoungFunction(lambda t: np.asarray(t) * (1 + np.sin(1 / np.asarray(t))),
                               "wiggle")
        rep = check_young(wiggle, t_min=1e-3)
        assert rep.convexity_violations > 0
        assert not rep.is_young

    def test_root_weight(self):
        rep = check_weight(power_weight(0.5), 2 ** 17)
        assert rep.monotone
        assert rep.doubling_constant == pytest.approx(math.sqrt(2), rel=1e-12)
        # S(2^17) / S(2^16) for the harmonic series
        h = [math.fsum(1.0 / n for n in range(1, m + 1)) for m in (2 ** 16, 2 ** 17)]
        assert rep.divergence_trend == pytest.approx(h[1] / h[0], rel=1e-12)
        assert rep.sum_w2_verdict == "divergent"

    def test_inverse_weight_converges(self):
        rep = check_weight(power_weight(1.0), 2 ** 12)
        assert rep.sum_w2_verdict == "convergent"

    def test_min_weight(self):
        w = min_weight(power_weight(0.5), const_weight(0.3))
        np.testing.assert_allclose(w(np.array([1.0, 100.0])), [0.3, 0.1])

    def test_log_weight_monotone(self):
        assert check_weight(log_weight(1), 1000).monotone

    def test_weighted_l1(self):
        c = CoeffSeq.from_arrays([-4, 1], [2.0, 3.0])
        assert weighted_l1(power_weight(0.5), c) == pytest.approx(2 * 0.5 + 3 * 1.0)
