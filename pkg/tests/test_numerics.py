import math

import numpy as np
import pytest
import scipy.linalg as sla

from physdrift import numerics as nm
from physdrift import scheduler as sch
from physdrift.fermion import hartree_fock_state, occupation_state, particle_number, sector_ground_state
from physdrift.gadgets import Gate, PrimitiveCircuit, synthesize_gadget, synthesize_sequence
from physdrift.pauli import PAULI_MATRICES, PauliHamiltonian, parse_pauli, to_dense

XZ = PauliHamiltonian.from_dict({"X": 1.0, "Z": 1.0})


def random_unitary(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_hamiltonian(rng, n, k):
    letters = ["".join(rng.choice(list("IXYZ"), size=n)) for _ in range(k)]
    return PauliHamiltonian.from_dict({s: float(rng.normal()) for s in letters if set(s) != {"I"}})


class TestExactUnitary:
    def test_z_quarter_turn(self):
        u = nm.exact_unitary(PauliHamiltonian.from_dict({"Z": 1.0}), math.pi / 2)
        np.testing.assert_allclose(u, np.diag([-1j, 1j]), atol=1e-14)

    def test_zero_time(self, h2):
        np.testing.assert_allclose(nm.exact_unitary(h2, 0.0), np.eye(16), atol=1e-14)

    def test_expm_oracle(self, h2):
        want = sla.expm(-1j * h2.to_dense(include_offset=False))
        assert np.max(np.abs(nm.exact_unitary(h2, 1.0) - want)) < 1e-10

    def test_offset_phase(self, h2):
        a = nm.exact_unitary(h2, 0.3, include_offset=True)
        b = nm.exact_unitary(h2, 0.3)
        np.testing.assert_allclose(a, np.exp(-0.3j * h2.offset) * b, atol=1e-12)


class TestSequenceUnitary:
    def test_empty(self):
        seq = sch.GateSequence(2, ())
        np.testing.assert_array_equal(nm.sequence_unitary(seq), np.eye(4))

    def test_single_entry(self):
        theta = 0.37
        seq = sch.GateSequence(1, (sch.Entry(parse_pauli("X"), theta),))
        want = math.cos(theta) * np.eye(2) - 1j * math.sin(theta) * PAULI_MATRICES["X"]
        np.testing.assert_allclose(nm.sequence_unitary(seq), want, atol=1e-15)

    def test_refinement(self, h2):
        u = nm.exact_unitary(h2, 1.0)
        e10 = nm.spectral_error(u, nm.sequence_unitary(sch.compile_trotter1(h2, 1.0, 10)))
        e50 = nm.spectral_error(u, nm.sequence_unitary(sch.compile_trotter1(h2, 1.0, 50)))
        assert e50 < e10

    def test_entry_order(self):
        seq = sch.GateSequence(1, (sch.Entry(parse_pauli("X"), 0.2), sch.Entry(parse_pauli("Z"), 0.5)))
        want = sla.expm(-0.5j * to_dense("Z")) @ sla.expm(-0.2j * to_dense("X"))
        np.testing.assert_allclose(nm.sequence_unitary(seq), want, atol=1e-14)


class TestSpectralError:
    def test_self(self, rng):
        u = random_unitary(rng, 4)
        assert nm.spectral_error(u, u) == 0
        assert nm.spectral_error(u, u, aligned=True) < 1e-7

    @pytest.mark.parametrize("t", [0.1, 1.0, 1.5])
    def test_diagonal_case(self, t):
        v = np.diag([np.exp(-1j * t), np.exp(1j * t)])
        assert nm.spectral_error(np.eye(2), v) == pytest.approx(abs(np.exp(-1j * t) - 1))
        assert nm.spectral_error(np.eye(2), v, aligned=True) == pytest.approx(2 * abs(math.sin(t / 2)))

    def test_diagonal_wraps_past_quarter_turn(self):
        # beyond pi/2 the phase -1 brings e^{-it} and e^{it} closer to 1
        t = 2.5
        v = np.diag([np.exp(-1j * t), np.exp(1j * t)])
        assert nm.spectral_error(np.eye(2), v, aligned=True) == pytest.approx(2 * math.sin((math.pi - t) / 2))

    def test_symmetric(self, rng):
        for _ in range(20):
            u, v = random_unitary(rng, 4), random_unitary(rng, 4)
            assert abs(nm.spectral_error(u, v) - nm.spectral_error(v, u)) < 1e-14

    def test_global_phase_removed(self, rng):
        u = random_unitary(rng, 8)
        assert nm.spectral_error(u, np.exp(0.9j) * u, aligned=True) < 1e-12

    def test_aligned_matches_brute_force(self, rng):
        phis = np.linspace(0, 2 * np.pi, 20001)
        for _ in range(5):
            u, v = random_unitary(rng, 3), random_unitary(rng, 3)
            brute = min(np.linalg.norm(u - np.exp(1j * p) * v, 2) for p in phis)
            got = nm.spectral_error(u, v, aligned=True)
            assert got <= brute + 1e-12
            # the minimum sits on a kink, so grid error is linear in the step
            assert got > brute - 5e-4

    def test_numeric_branch_for_non_unitary(self, rng):
        u = random_unitary(rng, 2)
        v = 0.9 * np.exp(0.4j) * u
        assert nm.spectral_error(u, v, aligned=True) == pytest.approx(0.1, abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            nm.spectral_error(np.eye(2), np.eye(4))


class TestChannels:
    def test_probability_validation(self):
        with pytest.raises(ValueError):
            nm.MixedUnitaryChannel(np.array([0.5, 0.6]), (np.eye(2), np.eye(2)))
        with pytest.raises(ValueError):
            nm.MixedUnitaryChannel(np.array([1.0]), (2 * np.eye(2),))

    def test_single_term_exact(self):
        h = PauliHamiltonian.from_dict({"XZ": 0.8})
        for protocol in ("qdrift", "random_permutation"):
            mean = nm.channel_mean_unitary(protocol, h, 1.0, 7)
            assert nm.spectral_error(nm.exact_unitary(h, 1.0), mean) < 1e-12

    def test_qdrift_bound_xz(self):
        t, n = 0.5, 20
        lam = XZ.lambda_one_norm
        mean = nm.channel_mean_unitary("qdrift", XZ, t, n)
        bound = 2 * lam**2 * t**2 / n * math.exp(2 * lam * t / n)
        assert nm.mixing_bound(nm.exact_unitary(XZ, t), mean) <= bound

    def test_monte_carlo_converges(self, hubbard2):
        r = 400
        analytic = nm.channel_mean_unitary("qdrift", hubbard2, 0.5, 4)
        mc = nm.channel_mean_unitary("qdrift", hubbard2, 0.5, 4, mode="monte_carlo", samples=r, seed=1)
        assert np.linalg.norm(mc - analytic, 2) < 5 / math.sqrt(r)

    def test_physdrift_monte_carlo(self, hubbard2):
        from physdrift.fermion import group_pauli_terms

        groups = group_pauli_terms(hubbard2)
        r = 400
        analytic = nm.channel_mean_unitary("physdrift_abs", hubbard2, 0.5, 4, groups=groups)
        mc = nm.channel_mean_unitary("physdrift_abs", hubbard2, 0.5, 4, groups=groups,
                                     mode="monte_carlo", samples=r, seed=2)
        assert np.linalg.norm(mc - analytic, 2) < 5 / math.sqrt(r)

    def test_sparsto_analytic_unsupported(self, h2):
        with pytest.raises(nm.UnsupportedModeError):
            nm.channel_mean_unitary("sparsto", h2, 1.0, 3)

    def test_deterministic_analytic_is_own_unitary(self, h2):
        a = nm.channel_mean_unitary("trotter2", h2, 1.0, 3)
        np.testing.assert_allclose(a, nm.sequence_unitary(sch.compile_trotter2(h2, 1.0, 3)))

    def test_bad_mode(self, h2):
        with pytest.raises(ValueError):
            nm.channel_mean_unitary("qdrift", h2, 1.0, 3, mode="exact")

    def test_telescoping(self, rng):
        for _ in range(5):
            h = random_hamiltonian(rng, 3, 5)
            t, n = 0.8, 6
            step = nm.step_mixture("qdrift", h, t, n).mean()
            one = nm.spectral_error(nm.exact_unitary(h, t / n), step)
            full = nm.spectral_error(nm.exact_unitary(h, t), np.linalg.matrix_power(step, n))
            assert full <= n * one + 1e-9


class TestMixingBound:
    def test_zero(self, rng):
        u = random_unitary(rng, 4)
        assert nm.mixing_bound(u, u) == 0

    def test_homogeneous(self, rng):
        u = random_unitary(rng, 2)
        d = 0.01 * rng.normal(size=(2, 2))
        assert nm.mixing_bound(u, u + 2 * d) == pytest.approx(2 * nm.mixing_bound(u, u + d))

    def test_state_sweep(self, rng):
        for _ in range(10):
            k = int(rng.integers(2, 5))
            p = rng.dirichlet(np.ones(k))
            target = random_unitary(rng, 2)
            # components near the target so the bound is informative
            comps = tuple(target @ sla.expm(-1j * 0.2 * rng.normal() * to_dense(str(rng.choice(list("XYZ")))))
                          for _ in range(k))
            ch = nm.MixedUnitaryChannel(p, comps)
            bound = nm.mixing_bound(target, ch.mean())
            worst = max(ch.output_trace_distance(target, random_state(rng, 2)) for _ in range(1000))
            assert worst <= bound + 1e-9

    def test_factor_two_is_needed(self):
        # U = I against e^{+-i theta X} with equal weights: the mean is cos(theta) I
        theta = 0.3
        comps = tuple(sla.expm(s * 1j * theta * to_dense("X")) for s in (1, -1))
        ch = nm.MixedUnitaryChannel(np.array([0.5, 0.5]), comps)
        a = nm.spectral_error(np.eye(2), ch.mean())
        assert a == pytest.approx(1 - math.cos(theta))
        worst = ch.output_trace_distance(np.eye(2), np.array([1, 0], dtype=complex))
        assert worst == pytest.approx(math.sin(theta) ** 2)
        assert a < worst <= nm.mixing_bound(np.eye(2), ch.mean())


class TestStatevector:
    def test_noiseless_matches_matrix(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 7))
            h = random_hamiltonian(rng, n, 4)
            if len(h) == 0:
                continue
            seq = sch.compile_trotter1(h, float(rng.uniform(0.1, 2)), int(rng.integers(1, 4)))
            psi = random_state(rng, 1 << n)
            got = nm.run_statevector(synthesize_sequence(seq), psi)
            assert np.max(np.abs(got - nm.sequence_unitary(seq) @ psi)) < 1e-10

    def test_norm_drift(self, rng):
        n = 4
        gates = []
        while len(gates) < 10_000:
            p = parse_pauli("".join(rng.choice(list("XYZ"), size=n)))
            gates.extend(synthesize_gadget(p, float(rng.normal())).gates)
        psi = nm.run_statevector(PrimitiveCircuit(n, gates[:10_000]), random_state(rng, 1 << n))
        assert abs(np.linalg.norm(psi) - 1) < 1e-9

    def test_forced_injection(self):
        circuit = PrimitiveCircuit(1, [Gate("h", (0,))])
        psi0 = np.array([1, 0], dtype=complex)
        ideal = nm.run_statevector(circuit, psi0)
        seen = set()
        for seed in range(30):
            out = nm.run_statevector(circuit, psi0, nm.NoiseConfig(depol_p=1.0, seed=seed))
            match = [k for k, m in PAULI_MATRICES.items() if k != "I" and np.allclose(out, m @ ideal)]
            assert len(match) == 1
            seen.add(match[0])
        assert seen == {"X", "Y", "Z"}

    def test_reproducible(self, h2):
        c = synthesize_sequence(sch.compile_trotter1(h2, 1.0, 5))
        psi0 = hartree_fock_state(4, 2)
        cfg = nm.NoiseConfig(depol_p=0.05, seed=4)
        np.testing.assert_array_equal(nm.run_statevector(c, psi0, cfg), nm.run_statevector(c, psi0, cfg))

    def test_noise_hurts(self, h2):
        seq = sch.compile_trotter1(h2, 1.0, 10)
        c = synthesize_sequence(seq)
        psi0 = hartree_fock_state(4, 2)
        target = nm.exact_unitary(h2, 1.0) @ psi0
        clean = nm.state_error(target, nm.run_statevector(c, psi0))
        noisy = np.mean([nm.state_error(target, nm.run_statevector(c, psi0, nm.NoiseConfig(0.001, seed=s)))
                         for s in range(20)])
        assert noisy >= clean

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            nm.run_statevector(PrimitiveCircuit(2), np.ones(2))

    def test_noise_config_validation(self):
        with pytest.raises(ValueError):
            nm.NoiseConfig(depol_p=1.5)
        with pytest.raises(ValueError):
            nm.NoiseConfig(shot_alpha=-1)


class TestObservables:
    def test_two_particles(self):
        assert nm.expectation(occupation_state(2, [0, 1]), particle_number(2).pauli_form) == pytest.approx(2.0)

    def test_hartree_fock_three(self):
        psi = occupation_state(6, [0, 1, 2])
        assert nm.expectation(psi, particle_number(6).pauli_form) == pytest.approx(3.0)

    def test_eigenstate_energy_constant(self, h3):
        e, psi = sector_ground_state(h3, 3)
        assert nm.expectation(psi, h3) == pytest.approx(e, abs=1e-10)
        for t in (0.5, 2.0):
            assert nm.expectation(nm.exact_unitary(h3, t) @ psi, h3) == pytest.approx(e, abs=1e-10)

    def test_physdrift_conserves_number(self, systems):
        for name, system in systems.items():
            if system.n_qubits > 8:
                continue
            pn = particle_number(system.n_qubits)
            psi0 = hartree_fock_state(system.n_qubits, system.n_electrons)
            for seed in range(3):
                seq = sch.sample_physdrift(system.groups, 1.0, 30, "abs", seed)
                col = nm.track_observables(seq, psi0, {"N": pn.pauli_form}, sch.GROUP_END).column("N")
                assert np.max(np.abs(col - col[0])) < 1e-9, name

    def test_per_orbital_sum(self, h3, h3_groups):
        pn = particle_number(6)
        obs = {"N": pn.pauli_form}
        obs.update({f"N{i}": op for i, op in enumerate(pn.per_orbital)})
        seq = sch.sample_qdrift(h3, 1.0, 40, seed=1)
        series = nm.track_observables(seq, hartree_fock_state(6, 3), obs, sch.SAMPLE_STEP_END)
        total = sum(series.column(f"N{i}") for i in range(3))
        assert np.max(np.abs(total - series.column("N"))) < 1e-10

    def test_time_proxy_and_rows(self, h2):
        seq = sch.compile_trotter1(h2, 2.0, 4)
        series = nm.track_observables(seq, hartree_fock_state(4, 2), {"H": h2}, sch.TROTTER_STEP_END, 2.0)
        np.testing.assert_allclose(series.column("time"), [0, 0.5, 1.0, 1.5, 2.0])
        assert series.to_csv().splitlines()[0] == "checkpoint,time,H"

    def test_missing_markers(self, h2):
        seq = sch.compile_trotter1(h2, 1.0, 2)
        with pytest.raises(ValueError, match="markers"):
            nm.track_observables(seq, hartree_fock_state(4, 2), {"H": h2}, sch.GROUP_END)


class TestShotNoise:
    def test_zero_depth(self):
        vals, shots = nm.shot_noise([0.3, -1.2], 0, nm.NoiseConfig(shot_alpha=0.01))
        np.testing.assert_array_equal(vals, [0.3, -1.2])
        assert shots == 10_000

    def test_closed_form(self):
        vals, shots = nm.shot_noise([1.0], 1000, nm.NoiseConfig(shot_alpha=0.001), epsilon=0.01)
        assert shots == 73891 == math.ceil(math.e**2 / 0.01**2)
        assert vals[0] == pytest.approx(math.exp(-1))

    def test_depth_ratio(self):
        a = 0.002
        s1 = nm.shots_required(0.1, a, 500) * 0.1**2
        s2 = nm.shots_required(0.1, a, 1000) * 0.1**2
        assert s2 / s1 == pytest.approx(math.exp(2 * a * 500), rel=1e-3)

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            nm.shots_required(0.0, 0.1, 3)
