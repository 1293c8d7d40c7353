import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import hamiltonians, pauli_words
from sqdaa.pauli import (Bitstring, PauliHamiltonian, PauliString, basis_groups, dense_matrix,
                         matrix_element, parse_hamiltonian, random_hamiltonian, reduced_term_count,
                         serialize_hamiltonian)


class TestPauliString:
    def test_masks_follow_rightmost_is_qubit_zero(self):
        p = PauliString("XZ")
        assert p.x_mask == 0b10
        assert p.z_mask == 0b01
        assert p.op_on(0) == "Z"

    def test_y_sets_both_masks(self):
        p = PauliString("YI")
        assert (p.x_mask, p.z_mask, p.y_count) == (0b10, 0b10, 1)

    def test_rejects_bad_letters(self):
        with pytest.raises(ValueError, match="invalid Pauli"):
            PauliString("XQ")

    def test_x_flips_basis_state(self):
        assert PauliString("X").apply_to_basis(0) == (1, 1.0)

    def test_y_on_one_gives_minus_i(self):
        z, phase = PauliString("Y").apply_to_basis(1)
        assert z == 0
        assert phase == pytest.approx(-1j)

    @given(pauli_words())
    def test_basis_action_matches_kronecker_matrix(self, word):
        p = PauliString(word)
        mat = p.matrix()
        for z in range(1 << p.n):
            out, phase = p.apply_to_basis(z)
            col = np.zeros(1 << p.n, dtype=complex)
            col[out] = phase
            np.testing.assert_allclose(mat[:, z], col, atol=1e-14)


class TestBitstring:
    def test_round_trip(self):
        b = Bitstring.from_str("0110")
        assert (b.value, b.n, str(b)) == (6, 4, "0110")

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            Bitstring(8, 3)


class TestHamiltonian:
    def test_parse_and_serialize_round_trip(self):
        H = parse_hamiltonian("# demo\n0.5 XXI\n-1.25 ZIZ\n\n")
        again = parse_hamiltonian(serialize_hamiltonian(H))
        assert again == H

    def test_duplicates_merge(self):
        H = parse_hamiltonian("1 ZZ\n0.5 ZZ\n")
        assert H.L == 1
        assert H.terms[0][0] == 1.5

    @pytest.mark.parametrize("text, msg", [
        ("abc ZZ", "malformed coefficient"),
        ("1.0", "expected"),
        ("1 ZZ\n1 Z", "inconsistent"),
        ("", "no Hamiltonian terms"),
        ("nan ZZ", "non-finite"),
    ])
    def test_parse_errors(self, text, msg):
        with pytest.raises(ValueError, match=msg):
            parse_hamiltonian(text)

    def test_one_norm(self):
        H = PauliHamiltonian.from_terms([(1.0, "ZZ"), (-0.5, "XX")])
        assert H.one_norm == 1.5

    def test_zz_matrix_element(self):
        H = PauliHamiltonian.from_terms([(1.0, "ZZ")])
        assert matrix_element(H, 0b00, 0b00) == 1
        assert matrix_element(H, 0b01, 0b01) == -1
        assert matrix_element(H, 0b01, 0b10) == 0

    def test_xx_connects_complementary_states(self):
        H = PauliHamiltonian.from_terms([(0.5, "XX")])
        assert matrix_element(H, 0b01, 0b10) == 0.5

    def test_dense_refuses_large_n(self):
        H = PauliHamiltonian.from_terms([(1.0, "Z" * 15)])
        with pytest.raises(ValueError, match="refused"):
            dense_matrix(H)

    @given(hamiltonians())
    def test_matrix_elements_match_dense_oracle(self, H):
        dense = dense_matrix(H)
        dim = 1 << H.n
        for a in range(min(dim, 8)):
            for b in range(min(dim, 8)):
                assert matrix_element(H, a, b) == pytest.approx(dense[a, b], abs=1e-12)

    @given(hamiltonians())
    def test_apply_matches_dense_oracle(self, H):
        rng = np.random.default_rng(H.L)
        v = rng.normal(size=1 << H.n) + 1j * rng.normal(size=1 << H.n)
        np.testing.assert_allclose(H.apply(v), dense_matrix(H) @ v, atol=1e-10)

    @given(hamiltonians())
    def test_hermitian(self, H):
        d = dense_matrix(H)
        np.testing.assert_allclose(d, d.conj().T, atol=1e-12)


class TestReducedTermCount:
    def test_disjoint_z_then_xx(self):
        H = PauliHamiltonian.from_terms([(1, "ZI"), (1, "IZ"), (1, "XX")])
        assert reduced_term_count(H) == 3

    def test_overlapping_z_run(self):
        H = PauliHamiltonian.from_terms([(1, "ZI"), (1, "ZZ"), (1, "XX")])
        assert reduced_term_count(H) == 2

    def test_identity_is_free(self):
        H = PauliHamiltonian.from_terms([(1, "II"), (1, "ZZ")])
        assert reduced_term_count(H) == 1

    def test_stored_order_option(self):
        H = PauliHamiltonian.from_terms([(1, "XX"), (1, "ZI"), (1, "ZZ")])
        assert reduced_term_count(H, ordered=True) == 2

    @given(hamiltonians())
    def test_bounded_by_term_count(self, H):
        non_identity = sum(1 for _, p in H.terms if not p.is_identity())
        assert 0 <= reduced_term_count(H) <= non_identity
        assert sum(len(g) for g in basis_groups(H)) == non_identity

    @given(hamiltonians())
    def test_groups_share_a_basis(self, H):
        for group in basis_groups(H):
            seen = {}
            for _, p in group:
                for q in range(p.n):
                    op = p.op_on(q)
                    if op != "I":
                        assert seen.setdefault(q, op) == op


def test_random_hamiltonian_is_seeded():
    a = random_hamiltonian(4, 5, np.random.default_rng(3))
    b = random_hamiltonian(4, 5, np.random.default_rng(3))
    assert a == b


@given(st.integers(1, 6))
def test_all_z_hamiltonian_is_diagonal(n):
    H = PauliHamiltonian.from_terms([(1.0, "Z" * n)])
    d = dense_matrix(H)
    assert np.count_nonzero(d - np.diag(np.diag(d))) == 0
