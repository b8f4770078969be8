import functools
import io
from itertools import product

import numpy as np
import pytest

from physdrift.fermion import (
    FCIDumpError,
    GroupClass,
    SecondQuantizedHamiltonian,
    build_hubbard,
    classify_groups,
    group_pauli_terms,
    hartree_fock_state,
    jordan_wigner,
    load_fcidump,
    occupation_state,
    particle_number,
    read_fcidump,
    sector_ground_state,
)
from physdrift.harness import bundled_fixture
from physdrift.pauli import PauliHamiltonian, PauliTerm, parse_pauli

_I2 = np.eye(2)
_Z = np.diag([1.0, -1.0])
_RAISE = np.array([[0.0, 0.0], [1.0, 0.0]])  # |1><0|: occupied is |1>


@functools.lru_cache(maxsize=None)
def creation(j, n):
    """Dense a+_j with a Z string on modes < j, built directly by Kronecker products."""
    ops = [_Z] * j + [_RAISE] + [_I2] * (n - j - 1)
    return functools.reduce(np.kron, ops)


def brute_force_dense(h: SecondQuantizedHamiltonian):
    n = h.n_orbitals
    cr = [creation(j, n) for j in range(n)]
    an = [c.T for c in cr]
    out = h.core_constant * np.eye(1 << n)
    for p, q in zip(*np.nonzero(h.one_body)):
        out = out + h.one_body[p, q] * cr[p] @ an[q]
    for p, q, r, s in zip(*np.nonzero(h.two_body)):
        out = out + 0.5 * h.two_body[p, q, r, s] * cr[p] @ cr[q] @ an[r] @ an[s]
    return out


def sq_from(n, one=None, two=None, core=0.0):
    return SecondQuantizedHamiltonian(n, np.zeros((n, n)) if one is None else one,
                                      np.zeros((n,) * 4) if two is None else two, core)


def number_operator_dense(n):
    return sum(creation(j, n) @ creation(j, n).T for j in range(n))


class TestOracle:
    def test_canonical_anticommutation(self):
        n = 3
        for i, j in product(range(n), repeat=2):
            a_i, ad_j = creation(i, n).T, creation(j, n)
            np.testing.assert_allclose(a_i @ ad_j + ad_j @ a_i, np.eye(8) * (i == j))


class TestFCIDump:
    MINIMAL = "&FCI NORB=1,NELEC=2,MS2=0 &END\n0.5 1 1 0 0\n1.0 0 0 0 0\n"

    def test_minimal_stream(self):
        raw = read_fcidump(io.StringIO(self.MINIMAL))
        np.testing.assert_array_equal(raw.one_body, [[0.5]])
        assert raw.core_constant == 1.0
        assert (raw.norb, raw.nelec, raw.ms2) == (1, 2, 0)

    def test_minimal_spin_expansion(self):
        h = load_fcidump(io.StringIO(self.MINIMAL))
        assert h.n_orbitals == 2
        np.testing.assert_array_equal(h.one_body, np.diag([0.5, 0.5]))
        assert h.n_electrons == 2

    def test_bad_number_names_line(self):
        text = self.MINIMAL.replace("0.5 1 1 0 0", "x 1 1 0 0")
        with pytest.raises(FCIDumpError, match="line 2"):
            read_fcidump(io.StringIO(text))

    def test_missing_header(self):
        with pytest.raises(FCIDumpError, match="header"):
            read_fcidump(io.StringIO("0.5 1 1 0 0\n"))

    def test_missing_norb(self):
        with pytest.raises(FCIDumpError, match="NORB"):
            read_fcidump(io.StringIO("&FCI NELEC=2 &END\n"))

    def test_index_out_of_range(self):
        with pytest.raises(FCIDumpError, match="out of range"):
            read_fcidump(io.StringIO("&FCI NORB=1,NELEC=2,MS2=0 &END\n0.5 2 1 0 0\n"))

    def test_symmetry_violation(self):
        text = "&FCI NORB=2,NELEC=2,MS2=0 &END\n0.5 1 2 0 0\n0.7 2 1 0 0\n"
        with pytest.raises(FCIDumpError, match="conflicts"):
            read_fcidump(io.StringIO(text))

    def test_fortran_exponent_and_slash_terminator(self):
        raw = read_fcidump(io.StringIO("&FCI NORB=1,NELEC=1,MS2=1\n/\n2.5D-1 1 1 0 0\n"))
        assert raw.one_body[0, 0] == 0.25

    def test_two_electron_symmetry_expanded(self):
        raw = read_fcidump(io.StringIO("&FCI NORB=2,NELEC=2,MS2=0 &END\n0.3 1 2 1 1\n"))
        for idx in [(0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0)]:
            assert raw.two_body[idx] == 0.3

    @pytest.mark.parametrize("name", ["h2_sto3g", "h3_chain", "h4_chain"])
    def test_fixture_ground_energy(self, name, references):
        h = load_fcidump(bundled_fixture(name))
        ph = jordan_wigner(h)
        ref = references[name]
        assert h.n_electrons == ref["n_electrons"]
        energy, _ = sector_ground_state(ph, h.n_electrons)
        assert abs(energy - ref["fci_energy"]) < 1e-8

    def test_fixture_matches_brute_force(self, h2_sq, h2):
        np.testing.assert_allclose(h2.to_dense(), brute_force_dense(h2_sq), atol=1e-10)


class TestHubbard:
    def test_single_site(self):
        h = build_hubbard(1, 1.0, 4.0)
        assert not h.one_body.any()
        ph = jordan_wigner(h)
        # U n_up n_dn = U/4 (1 - Z0 - Z1 + Z0 Z1)
        assert ph.as_dict() == pytest.approx({"ZI": -1.0, "IZ": -1.0, "ZZ": 1.0})
        assert ph.offset == pytest.approx(1.0)

    def test_free_chain_spectrum(self):
        ph = jordan_wigner(build_hubbard(2, 1.0, 0.0))
        # single-particle energies -1, +1 for each spin; 16x16 diagonalization
        single = [-1.0, 1.0, -1.0, 1.0]
        expected = sorted(sum(e for e, occ in zip(single, bits) if occ)
                          for bits in product([0, 1], repeat=4))
        np.testing.assert_allclose(np.linalg.eigvalsh(ph.to_dense()), expected, atol=1e-12)

    def test_no_hopping_is_diagonal(self):
        ph = jordan_wigner(build_hubbard(2, 0.0, 4.0))
        assert all(t.string.x == 0 for t in ph.terms)

    def test_zero_sites(self):
        with pytest.raises(ValueError):
            build_hubbard(0, 1.0, 1.0)

    @pytest.mark.parametrize("sites,u", [(2, 4.0), (3, 2.5), (4, 1.0)])
    def test_matches_brute_force(self, sites, u):
        h = build_hubbard(sites, 0.7, u)
        np.testing.assert_allclose(jordan_wigner(h).to_dense(), brute_force_dense(h), atol=1e-10)


class TestJordanWigner:
    def test_number_term(self):
        one = np.zeros((2, 2))
        one[0, 0] = 1.0
        ph = jordan_wigner(sq_from(2, one))
        assert ph.offset == pytest.approx(0.5)
        assert ph.as_dict() == pytest.approx({"ZI": -0.5})

    def test_excitation_term(self):
        one = np.array([[0.0, 1.0], [1.0, 0.0]])
        ph = jordan_wigner(sq_from(2, one))
        assert ph.as_dict() == pytest.approx({"XX": 0.5, "YY": 0.5})
        assert ph.offset == 0

    def test_coulomb_term(self):
        two = np.zeros((2,) * 4)
        # n0 n1 = a+0 a+1 a1 a0, and the 1/2 prefactor needs both orderings
        two[0, 1, 1, 0] = two[1, 0, 0, 1] = 1.0
        ph = jordan_wigner(sq_from(2, two=two))
        assert ph.as_dict() == pytest.approx({"ZI": -0.25, "IZ": -0.25, "ZZ": 0.25})
        assert ph.offset == pytest.approx(0.25)

    def test_imaginary_residue_rejected(self):
        h = sq_from(2)
        object.__setattr__(h, "one_body", np.array([[0.0, 1.0], [-1.0, 0.0]]))
        with pytest.raises(ValueError, match="imaginary"):
            jordan_wigner(h)

    def test_asymmetric_one_body_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            sq_from(2, np.array([[0.0, 1.0], [0.5, 0.0]]))

    def test_random_hermitian_matches_brute_force(self, rng):
        n = 4
        a = rng.normal(size=(n, n))
        one = a + a.T
        b = rng.normal(size=(n,) * 4)
        # impose h_pqrs = h_srqp = h_qpsr = h_rspq
        two = b + b.transpose(3, 2, 1, 0)
        two = two + two.transpose(1, 0, 3, 2)
        h = sq_from(n, one, two, core=0.3)
        np.testing.assert_allclose(jordan_wigner(h).to_dense(), brute_force_dense(h), atol=1e-10)


def scatter_fragment():
    """A single a+0 a+1 a2 a3 + h.c. with all four orbitals distinct."""
    two = np.zeros((4,) * 4)
    for idx in [(0, 1, 2, 3), (3, 2, 1, 0), (1, 0, 3, 2), (2, 3, 0, 1)]:
        two[idx] = 0.2
    return sq_from(4, two=two)


class TestGroups:
    def check_invariants(self, sq):
        ph = jordan_wigner(sq)
        groups = classify_groups(sq)
        n = sq.n_orbitals
        total = number_operator_dense(n)
        for g in groups:
            assert g.all_commute()
            m = g.as_hamiltonian().to_dense()
            assert np.linalg.norm(m @ total - total @ m, 2) < 1e-10
            assert g.abs_weight >= abs(g.mean_weight) >= 0
        union = sorted((str(t.string), t.coeff) for g in groups for t in g.terms)
        assert union == sorted((str(t.string), t.coeff) for t in ph.terms)
        assert sum(g.abs_weight for g in groups) == pytest.approx(ph.lambda_one_norm, rel=1e-14)
        assert sum(abs(g.mean_weight) for g in groups) <= sum(g.abs_weight for g in groups)
        return groups

    def test_h2_invariants(self, h2_sq):
        groups = self.check_invariants(h2_sq)
        tags = {g.class_tag for g in groups}
        # spin and spatial symmetry of H2 remove every one- and three-index term
        assert tags == {GroupClass.NUMBER_COUNTING, GroupClass.COULOMB, GroupClass.SCATTER}
        (scatter,) = [g for g in groups if g.class_tag is GroupClass.SCATTER]
        assert len(scatter) == 4
        assert scatter.mean_weight == pytest.approx(0, abs=1e-14)

    def test_h3_has_all_five_classes(self, h3_sq):
        groups = self.check_invariants(h3_sq)
        assert {g.class_tag for g in groups} == set(GroupClass)

    def test_h4_invariants(self):
        self.check_invariants(load_fcidump(bundled_fixture("h4_chain")))

    def test_scatter_fragment_has_eight_strings(self):
        groups = self.check_invariants(scatter_fragment())
        assert [g.class_tag for g in groups] == [GroupClass.SCATTER]
        strings = {str(t.string) for t in groups[0].terms}
        assert strings == {"XXXX", "XXYY", "XYXY", "YXXY", "YXYX", "YYXX", "XYYX", "YYYY"}

    def test_hubbard2_groups(self):
        groups = self.check_invariants(build_hubbard(2, 1.0, 4.0))
        tags = [g.class_tag for g in groups]
        assert tags.count(GroupClass.COULOMB) == 2
        assert tags.count(GroupClass.EXCITATION) == 2
        # single-Z strings from the on-site products form their own groups
        assert tags.count(GroupClass.NUMBER_COUNTING) == 4
        excitations = [g for g in groups if g.class_tag is GroupClass.EXCITATION]
        assert sorted(g.orbital_indices for g in excitations) == [(0, 2), (1, 3)]

    def test_correlated_excitation_label(self):
        two = np.zeros((3,) * 4)
        # a+0 a+1 a1 a2 + h.c.: hop 0<->2 conditioned on orbital 1
        for idx in [(0, 1, 1, 2), (2, 1, 1, 0), (1, 0, 2, 1), (1, 2, 0, 1)]:
            two[idx] = 0.3
        groups = self.check_invariants(sq_from(3, two=two))
        ce = [g for g in groups if g.class_tag is GroupClass.CORRELATED_EXCITATION]
        assert [g.orbital_indices for g in ce] == [(0, 1, 2)]

    def test_diagonal_only(self):
        groups = self.check_invariants(sq_from(3, np.diag([0.1, -0.4, 0.9])))
        assert all(g.class_tag is GroupClass.NUMBER_COUNTING and len(g) == 1 for g in groups)
        assert len(groups) == 3

    def test_non_fermionic_string_rejected(self):
        h = PauliHamiltonian(3, (PauliTerm(parse_pauli("XII"), 1.0),))
        with pytest.raises(ValueError, match="number-conserving"):
            group_pauli_terms(h)


class TestParticleNumber:
    def test_two_qubits(self):
        op = particle_number(2)
        assert op.pauli_form.offset == 1.0
        assert op.pauli_form.as_dict() == {"ZI": -0.5, "IZ": -0.5}

    def test_expectation_on_11(self):
        psi = occupation_state(2, [0, 1])
        pf = particle_number(2).pauli_form
        assert np.vdot(psi, pf.apply(psi)).real == 2.0

    def test_hamming_weight(self):
        pf = particle_number(5).pauli_form
        diag = np.real(np.diag(pf.to_dense()))
        np.testing.assert_allclose(diag, [bin(b).count("1") for b in range(32)])

    def test_per_orbital_sum(self):
        op = particle_number(6)
        assert len(op.per_orbital) == 3
        total = sum(p.to_dense() for p in op.per_orbital)
        np.testing.assert_allclose(total, op.pauli_form.to_dense())

    def test_subset(self):
        op = particle_number(4, [0, 3])
        assert op.pauli_form.offset == 1.0
        assert len(op.per_orbital) == 2

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            particle_number(2, [2])

    def test_commutes_with_h2(self, h2):
        p = particle_number(4).pauli_form.to_dense()
        m = h2.to_dense()
        assert np.linalg.norm(p @ m - m @ p, 2) < 1e-10

    def test_hartree_fock_state(self):
        psi = hartree_fock_state(6, 3)
        assert np.argmax(np.abs(psi)) == 0b111000
