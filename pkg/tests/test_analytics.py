import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqdaa.analytics import (CSV_COLUMNS, DistributionSpec, algebraic_cost_table, analytic_steps,
                             exact_steps, harmonic, qtot_sqd, qtot_sqdaa, ratio_curve, zeta, zeta_tail)


class TestSpecialFunctions:
    def test_zeta_two(self):
        assert zeta(2.0) == pytest.approx(math.pi ** 2 / 6)

    def test_zeta_domain(self):
        with pytest.raises(ValueError):
            zeta(1.0)

    def test_harmonic_small(self):
        assert harmonic(3, 2.0) == pytest.approx(1 + 1 / 4 + 1 / 9)
        assert harmonic(0, 2.0) == 0.0

    @given(st.integers(0, 200), st.floats(1.1, 8))
    def test_tail_plus_head_is_zeta(self, k, g):
        assert harmonic(k, g) + zeta_tail(k, g) == pytest.approx(zeta(g), rel=1e-10)


class TestSteps:
    @pytest.mark.parametrize("k, expected", [(0, 1), (1, 2), (2, 3), (3, 5), (4, 9)])
    def test_exponential_alpha_one(self, k, expected):
        assert analytic_steps(DistributionSpec.exponential(1.0), k) == expected

    def test_algebraic_gamma_five(self):
        assert analytic_steps(DistributionSpec.algebraic(5.0), 0) == 4

    def test_step_distribution(self):
        spec = DistributionSpec.step(10)
        # reduce 1 of 10 uniform states: theta = asin(sqrt(0.9))
        assert analytic_steps(spec, 0) == math.floor(math.pi / (4 * math.asin(math.sqrt(0.9))))

    def test_step_exhausted(self):
        with pytest.raises(ValueError, match="nothing left"):
            analytic_steps(DistributionSpec.step(3), 2)

    def test_exact_steps_agree_with_closed_form_on_large_register(self):
        spec = DistributionSpec.exponential(1.0, n=12)
        probs = spec.exact_probabilities()
        for k in range(8):
            assert abs(exact_steps(probs, k) - analytic_steps(spec, k)) <= 1

    @given(st.floats(0.1, 3.0), st.integers(0, 15))
    def test_exponential_steps_non_decreasing(self, alpha, k):
        spec = DistributionSpec.exponential(alpha)
        assert analytic_steps(spec, k + 1) >= analytic_steps(spec, k)


class TestSqdCost:
    def test_exponential_m5(self):
        assert qtot_sqd(DistributionSpec.exponential(1.0), 5) == pytest.approx(337.89, abs=0.01)

    def test_step_m10(self):
        assert qtot_sqd(DistributionSpec.step(10), 10) == pytest.approx(10 * math.log(100))

    def test_bad_p_fail(self):
        with pytest.raises(ValueError):
            qtot_sqd(DistributionSpec.exponential(1.0), 5, p_fail=1.0)

    def test_exact_mode_needs_n(self):
        with pytest.raises(ValueError, match="finite"):
            qtot_sqd(DistributionSpec.exponential(1.0), 5, exact=True)


class TestSqdaaCost:
    def test_exponential_closed_form_value(self):
        # N (m + pi/2 (e^{5/2} - 1) / (e^{1/2} - 1)) with m = 5, N = 1
        cost = qtot_sqdaa(DistributionSpec.exponential(1.0), 5, 1)
        assert cost.Q_tot == pytest.approx(32.077, abs=1e-3)
        assert cost.m_star == 5 and cost.Q_dir == 0.0

    def test_step_floor_sum_and_bound(self):
        cost = qtot_sqdaa(DistributionSpec.step(10), 10, 1)
        assert cost.Q_tot == 20.0
        assert cost.bound == pytest.approx(10 * (1 + math.pi))
        assert cost.Q_tot <= cost.bound

    def test_step_width_must_match(self):
        with pytest.raises(ValueError, match="step width"):
            qtot_sqdaa(DistributionSpec.step(10), 5, 1)

    def test_algebraic_m_star_is_argmin(self):
        spec = DistributionSpec.algebraic(2.0)
        Q_aa, Q_dir = algebraic_cost_table(spec, 30, 100, 0.1)
        cost = qtot_sqdaa(spec, 30, 100)
        assert cost.Q_tot == pytest.approx(float(np.min(Q_aa + Q_dir)))
        assert cost.m_star == int(np.argmin(Q_aa + Q_dir)) + 1
        assert Q_dir[-1] == 0.0

    def test_intermediate_form_differs(self):
        spec = DistributionSpec.algebraic(3.0)
        a = algebraic_cost_table(spec, 20, 10, 0.1)[1]
        b = algebraic_cost_table(spec, 20, 10, 0.1, intermediate=True)[1]
        assert not np.allclose(a[:-1], b[:-1])

    def test_exact_mode_close_to_asymptotic(self):
        spec = DistributionSpec.exponential(1.0, n=12)
        a = qtot_sqdaa(spec, 8, 100).Q_tot
        e = qtot_sqdaa(spec, 8, 100, exact=True).Q_tot
        assert 1 / 3 <= e / a <= 3

    @given(st.floats(0.2, 2.0), st.integers(2, 30), st.integers(1, 1000))
    def test_linear_in_shots_per_iteration(self, alpha, m, N):
        spec = DistributionSpec.exponential(alpha)
        assert qtot_sqdaa(spec, m, N).Q_tot == pytest.approx(N * qtot_sqdaa(spec, m, 1).Q_tot)


class TestCurves:
    def test_exponential_slopes(self):
        curve = ratio_curve(DistributionSpec.exponential(1.0), range(20, 61), 1000)
        a, b = curve.log_slopes()
        assert a == pytest.approx(1.0, abs=0.02)
        assert b == pytest.approx(0.5, abs=0.02)

    def test_crossings(self):
        curve = ratio_curve(DistributionSpec.exponential(1.0), range(1, 41), 1000)
        assert curve.crossing(1.0) == 14
        assert curve.crossing(100.0) == 23

    def test_no_crossing(self):
        curve = ratio_curve(DistributionSpec.exponential(1.0), range(1, 5), 1000)
        assert curve.crossing(1.0) is None

    def test_step_curve_uses_matching_width(self):
        curve = ratio_curve(DistributionSpec.step(1), [1, 5, 10], 7)
        assert curve.ratio[0] == pytest.approx(math.log(10) / 7)

    def test_csv_shape(self):
        text = ratio_curve(DistributionSpec.algebraic(2.5), range(2, 6), 10).to_csv()
        lines = text.splitlines()
        assert tuple(lines[0].split(",")) == CSV_COLUMNS
        assert len(lines) == 5

    def test_empty_range(self):
        with pytest.raises(ValueError):
            ratio_curve(DistributionSpec.exponential(1.0), [], 10)

    @given(st.floats(0.3, 2.0))
    def test_ratio_eventually_grows(self, alpha):
        curve = ratio_curve(DistributionSpec.exponential(alpha), [30, 60], 100)
        assert curve.ratio[1] > curve.ratio[0]
