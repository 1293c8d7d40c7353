import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqdaa.amplification import aa_circuit_tcount
from sqdaa.driver import DriverConfig, run_sqd, run_sqdaa, top_bitstrings
from sqdaa.experiments import diagonal_index_hamiltonian
from sqdaa.pauli import PauliHamiltonian, random_hamiltonian
from sqdaa.resources import (ASPModel, TrotterErrorModel, UCJModel, asp_counts, comparison_csv,
                             fit_exponential, fit_trotter_constant, iqpe_qubitization_counts,
                             iqpe_trotter_cost, iqpe_trotter_optimize, majority_vote_shots,
                             pipeline_report, prep_tcounts, qubitization_mu, select_tcount,
                             sk_tcount, trotter_energy_error, ucj_counts)
from sqdaa.statevector import Distribution, model_state


def majority_oracle(p, confidence=0.99):
    """Smallest odd N whose strict majority succeeds with probability >= confidence, via exact sums."""
    N = 1
    while True:
        need = (N + 1) // 2
        prob = sum(math.exp(math.lgamma(N + 1) - math.lgamma(j + 1) - math.lgamma(N - j + 1)
                            + j * math.log(p) + (N - j) * math.log1p(-p)) for j in range(need, N + 1))
        if prob >= confidence:
            return N
        N += 2


class TestGateModels:
    def test_sk(self):
        assert sk_tcount(100, 1e-4) == 33
        assert sk_tcount(1, 1.0) == 10

    def test_sk_rejects(self):
        with pytest.raises(ValueError):
            sk_tcount(0, 1e-4)

    @pytest.mark.parametrize("n, L, expected", [(4, 1, (38, 19)), (2, 1, (9, 11)), (4, 2, (76, 38))])
    def test_ucj(self, n, L, expected):
        assert ucj_counts(n, L) == expected

    def test_ucj_needs_even_n(self):
        with pytest.raises(ValueError, match="even"):
            ucj_counts(3, 1)

    def test_asp_counts_use_reduced_terms(self):
        H = PauliHamiltonian.from_terms([(1, "ZI"), (1, "ZZ"), (1, "XX")])
        assert asp_counts(H, 2, 3) == (12, 12)

    def test_prep_tcounts(self):
        N_rot, depth = ucj_counts(4, 1)
        per = sk_tcount(N_rot, 1e-4)
        assert prep_tcounts(UCJModel(4, 1)) == (per * N_rot, per * depth)
        H = PauliHamiltonian.from_terms([(1, "ZI"), (1, "XX")])
        assert prep_tcounts(ASPModel(H, 1, 1))[0] == 2 * sk_tcount(2, 1e-4)


class TestMajorityVote:
    def test_full_overlap(self):
        assert majority_vote_shots(1.0) == 11

    @pytest.mark.parametrize("overlap", [0.65, 0.7, 0.8, 0.9, 1.0])
    def test_matches_exact_binomial(self, overlap):
        assert majority_vote_shots(overlap) == majority_oracle(8 / math.pi ** 2 * overlap)

    def test_below_half_rejected(self):
        with pytest.raises(ValueError, match="1/2"):
            majority_vote_shots(0.6)

    @given(st.floats(0.62, 1.0), st.floats(0.62, 1.0))
    def test_monotone_in_overlap(self, a, b):
        lo, hi = sorted((a, b))
        assert majority_vote_shots(hi) <= majority_vote_shots(lo)


class TestTrotterFit:
    def test_noncommuting_fit_is_second_order(self):
        H = random_hamiltonian(4, 5, np.random.default_rng(0))
        model = fit_trotter_constant(H)
        assert model.exponent == pytest.approx(2.0, abs=0.05)
        assert model.r2 > 0.99
        assert model.flags == []

    def test_commuting_terms_flagged_exact(self):
        H = PauliHamiltonian.from_terms([(1.0, "ZZ"), (0.5, "XX")])
        model = fit_trotter_constant(H)
        assert model.exact
        assert "exact" in model.flags[0]

    def test_error_vanishes_for_single_term(self):
        H = PauliHamiltonian.from_terms([(0.7, "XY")])
        assert trotter_energy_error(H, 0.1) < 1e-12

    def test_time_snapping(self):
        H = random_hamiltonian(3, 4, np.random.default_rng(2))
        model = fit_trotter_constant(H, [0.01, 0.03, 0.1], t=1.0)
        assert all(abs(1.0 / d - round(1.0 / d)) < 1e-9 for d in model.dtaus)

    def test_refuses_large_register(self):
        with pytest.raises(ValueError, match="n <= 10"):
            fit_trotter_constant(PauliHamiltonian.from_terms([(1.0, "Z" * 11)]))

    def test_exponential_fit_recovers_parameters(self):
        x = np.arange(4, 10)
        a, b, r2 = fit_exponential(x, 0.3 * np.exp(0.8 * x))
        assert (a, b, r2) == pytest.approx((0.3, 0.8, 1.0))


class TestIqpeTrotter:
    def test_cost_formula(self):
        dE = 1.6e-3 / 3
        N_T, N_SK, N_rep = iqpe_trotter_cost(10, 1.0, dE, dE, dE)
        assert N_rep == math.ceil(2 * math.pi / (dE * math.sqrt(dE)))
        assert N_SK == 38
        assert N_T == 40 * N_SK * N_rep

    def test_optimizer_beats_equal_split_and_grid(self):
        model = TrotterErrorModel.supplied(0.05)
        rep = iqpe_trotter_optimize(None, model, L_reduced=10)
        p = rep.parameters
        assert p["dE_TS"] + p["dE_iQPE"] + p["dE_SK"] <= 1.6e-3 * (1 + 1e-12)
        N_T = iqpe_trotter_cost(10, 0.05, p["dE_TS"], p["dE_iQPE"], p["dE_SK"])[0]
        equal = iqpe_trotter_cost(10, 0.05, *(3 * [1.6e-3 / 3]))[0]
        assert N_T <= p["grid_best"] <= equal

    def test_deepest_circuit_adds_prep_per_bit(self):
        rep = iqpe_trotter_optimize(None, TrotterErrorModel.supplied(0.05), L_reduced=4,
                                    prep_tcount=100, prep_tdepth=30, grid_points=30)
        N_T = rep.T_count_deepest - rep.parameters["bits"] * 100
        assert rep.T_depth_deepest == N_T + rep.parameters["bits"] * 30
        assert rep.T_count_total == rep.T_count_deepest * rep.shots

    def test_rejects_exact_model(self):
        H = PauliHamiltonian.from_terms([(1.0, "ZZ"), (0.5, "XX")])
        with pytest.raises(ValueError, match="positive error constant"):
            iqpe_trotter_optimize(H, fit_trotter_constant(H))

    @settings(max_examples=8)
    @given(st.floats(0.01, 1.0), st.floats(1.5, 4.0))
    def test_cost_grows_with_error_constant(self, C, factor):
        model_lo = TrotterErrorModel.supplied(C)
        model_hi = TrotterErrorModel.supplied(C * factor)
        lo = iqpe_trotter_optimize(None, model_lo, L_reduced=6, grid_points=15).T_count_deepest
        hi = iqpe_trotter_optimize(None, model_hi, L_reduced=6, grid_points=15).T_count_deepest
        assert lo <= hi


class TestQubitization:
    def test_mu(self):
        assert qubitization_mu(10.0, 1.6e-3) == 14

    def test_select(self):
        assert select_tcount(4) == 12

    def test_single_term_is_free(self):
        rep = iqpe_qubitization_counts(None, lam=1.0, L=1)
        assert rep.T_count_deepest == 0
        assert rep.notes

    def test_ancilla_itemization(self):
        rep = iqpe_qubitization_counts(None, lam=10.0, L=8)
        mu = rep.parameters["mu"]
        assert rep.ancillas == {"phase": 1, "prep": 1 + 2 * mu + 3, "index": 3,
                                "unary_iteration": 3, "reflection": 2}

    @given(st.floats(0.5, 50.0), st.floats(1.2, 3.0))
    def test_monotone_in_lambda(self, lam, factor):
        a = iqpe_qubitization_counts(None, lam=lam, L=6).T_count_deepest
        b = iqpe_qubitization_counts(None, lam=lam * factor, L=6).T_count_deepest
        assert a <= b

    @given(st.floats(1e-4, 1e-2), st.floats(1.2, 3.0))
    def test_monotone_in_precision(self, dE, factor):
        a = iqpe_qubitization_counts(None, dE_budget=dE, lam=5.0, L=6).T_count_deepest
        b = iqpe_qubitization_counts(None, dE_budget=dE * factor, lam=5.0, L=6).T_count_deepest
        assert b <= a

    def test_not_monotone_in_term_count(self):
        """Power-of-two factors of L cheapen PREP, so N_T can drop as L grows."""
        t = [iqpe_qubitization_counts(None, lam=1.0, L=L).T_count_deepest for L in range(2, 9)]
        assert t[1] > t[2]


@pytest.fixture(scope="module")
def runs():
    H = diagonal_index_hamiltonian(6)
    st0 = model_state(Distribution.exponential(1.0), 6)
    cfg = DriverConfig(shots_per_iteration=100, energy_threshold=None,
                       collect=top_bitstrings(st0, 6), exact_probabilities=True)
    return run_sqd(H, st0, cfg), run_sqdaa(H, st0, cfg)


class TestPipelineReports:
    def test_sqd_report_is_prep_only(self, runs):
        sqd, _ = runs
        rep = pipeline_report(sqd, UCJModel(6, 1))
        T_prep = rep.parameters["T_prep"]
        assert rep.T_count_deepest == T_prep
        assert rep.T_count_total == sqd.N_S_tot * T_prep

    def test_sqdaa_totals_sum_over_plan(self, runs):
        _, aa = runs
        rep = pipeline_report(aa, UCJModel(6, 1))
        T_prep, d_prep = rep.parameters["T_prep"], rep.parameters["d_prep"]
        expected = sum(r.shots * aa_circuit_tcount(6, r.set_size, r.s, T_prep, d_prep)[0]
                       for r in aa.plan.records)
        assert rep.T_count_total == expected
        assert rep.T_count_deepest == max(aa_circuit_tcount(6, r.set_size, r.s, T_prep, d_prep)[0]
                                          for r in aa.plan.records)

    def test_csv_and_json(self, runs):
        reps = [pipeline_report(r, UCJModel(6, 1)) for r in runs]
        lines = comparison_csv(reps).splitlines()
        assert lines[0].startswith("pipeline,") and len(lines) == 3
        assert json.loads(reps[1].to_json())["pipeline"] == "sqdaa"
