"""Dense simulation engine: exact evolution, sequence unitaries, noise, metrics.

Everything here works with full ``2**n`` state vectors or matrices and is
meant for registers of at most a dozen qubits.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from physdrift.fermion import PhysicalGroup
from physdrift.gadgets import PrimitiveCircuit, apply_1q, apply_gate
from physdrift.pauli import PAULI_MATRICES, PauliHamiltonian, PauliString, basis_action, check_dense_limit
from physdrift import scheduler as sch
from physdrift.scheduler import Entry, GateSequence

UNITARY_TOL = 1e-10
IMAG_TOL = 1e-10


class UnsupportedModeError(ValueError):
    """Raised when a protocol has no analytic channel mean."""


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0)


# ---------------------------------------------------------------------------
# exact and compiled evolution


def exact_unitary(h: PauliHamiltonian, t: float, include_offset: bool = False, limit=None) -> np.ndarray:
    """``exp(-i H t)`` from the eigendecomposition of the dense Hamiltonian.

    The scalar offset only contributes a global phase and is left out unless
    ``include_offset`` is set.
    """
    dense = h.to_dense(include_offset=include_offset, limit=limit)
    residue = np.max(np.abs(dense - dense.conj().T), initial=0.0)
    if residue > 1e-10:
        raise ValueError(f"assembled Hamiltonian is not Hermitian (residue {residue:.2e})")
    w, v = np.linalg.eigh(dense)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def apply_entry(state: np.ndarray, string: PauliString, angle: float) -> np.ndarray:
    """``exp(-i angle P) state`` using ``P**2 = I``."""
    target, phase = basis_action(string)
    moved = np.empty_like(state)
    moved[target] = (phase[:, None] if state.ndim == 2 else phase) * state
    return math.cos(angle) * state - 1j * math.sin(angle) * moved


def apply_entries(state: np.ndarray, entries: Sequence[Entry]) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    for e in entries:
        state = apply_entry(state, e.string, e.angle)
    return state


def sequence_unitary(seq: GateSequence, limit=None) -> np.ndarray:
    check_dense_limit(seq.n_qubits, limit)
    return apply_entries(np.eye(1 << seq.n_qubits, dtype=complex), seq.entries)


# ---------------------------------------------------------------------------
# error metrics


def _arc_width(phases: np.ndarray) -> float:
    """Width of the shortest arc of the unit circle containing all phases."""
    w = np.sort(np.mod(phases, 2 * np.pi))
    gaps = np.diff(np.concatenate([w, [w[0] + 2 * np.pi]]))
    return float(2 * np.pi - gaps.max())


def spectral_error(u: np.ndarray, v: np.ndarray, aligned: bool = False) -> float:
    """``||u - v||`` in the spectral norm, optionally minimized over a global phase.

    For two unitaries the aligned value is ``2 sin(w/4)`` where ``w`` is the
    arc spanned by the eigenphases of ``u^dagger v``. Otherwise (for example
    when ``v`` is a channel mean) the phase is found numerically.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    if not aligned:
        return float(np.linalg.norm(u - v, 2))
    if is_unitary(u, 1e-9) and is_unitary(v, 1e-9):
        phases = np.angle(np.linalg.eigvals(u.conj().T @ v))
        return 2.0 * math.sin(_arc_width(phases) / 4.0)
    return _aligned_numeric(u, v)


def _aligned_numeric(u: np.ndarray, v: np.ndarray) -> float:
    def f(phi):
        return np.linalg.norm(u - np.exp(1j * phi) * v, 2)

    grid = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    vals = [f(p) for p in grid]
    k = int(np.argmin(vals))
    step = grid[1] - grid[0]
    res = minimize_scalar(f, bounds=(grid[k] - step, grid[k] + step), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, vals[k]))


def state_error(a: np.ndarray, b: np.ndarray) -> float:
    """``min_phi ||a - e^{i phi} b||`` for normalized states."""
    overlap = abs(np.vdot(a, b))
    return math.sqrt(max(0.0, 2.0 - 2.0 * min(overlap, 1.0)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``1/2 ||rho - sigma||_1`` for Hermitian matrices."""
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def mixing_bound(u: np.ndarray, mean_v: np.ndarray) -> float:
    """Mixing-lemma bound ``2 ||u - E[V]||`` on the diamond distance."""
    return 2.0 * spectral_error(u, mean_v)


# ---------------------------------------------------------------------------
# channels


@dataclass(frozen=True)
class MixedUnitaryChannel:
    """``rho -> sum_i p_i U_i rho U_i^dagger``."""

    probabilities: np.ndarray
    unitaries: tuple[np.ndarray, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size != len(self.unitaries) or p.size == 0:
            raise ValueError("need one probability per unitary")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to one")
        for u in self.unitaries:
            if not is_unitary(u):
                raise ValueError("channel components must be unitary")
        object.__setattr__(self, "probabilities", p)

    def mean(self) -> np.ndarray:
        return sum(p * u for p, u in zip(self.probabilities, self.unitaries))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(p * (u @ rho @ u.conj().T) for p, u in zip(self.probabilities, self.unitaries))

    def output_trace_distance(self, u: np.ndarray, psi: np.ndarray) -> float:
        """Trace distance between ``u|psi>`` and the channel output on ``|psi>``."""
        rho = np.outer(psi, psi.conj())
        target = u @ rho @ u.conj().T
        return trace_distance(target, self.apply(rho))


def _group_unitary(n: int, group: PhysicalGroup, angles: np.ndarray) -> np.ndarray:
    entries = [Entry(term.string, float(a)) for term, a in zip(group.terms, angles)]
    return apply_entries(np.eye(1 << n, dtype=complex), entries)


def step_mixture(protocol: str, h: PauliHamiltonian, t: float, n: int, *, groups=None,
                 distribution=None) -> MixedUnitaryChannel:
    """Single-step unitary mixture of a randomized protocol."""
    dim = 1 << h.n_qubits
    eye = np.eye(dim, dtype=complex)
    if protocol == "qdrift":
        dist = distribution or sch.qdrift_distribution(h)
        with np.errstate(divide="ignore"):
            seq_angles = h.coeffs * t / (dist.weights * n)
        if dist.scheme_tag == "qdrift_abs":
            seq_angles = np.sign(h.coeffs) * h.lambda_one_norm * t / n
        keep = dist.weights > 0
        us = tuple(apply_entry(eye, term.string, a)
                   for term, a, k in zip(h.terms, seq_angles, keep) if k)
        return MixedUnitaryChannel(dist.weights[keep], us)
    if protocol.startswith("physdrift_"):
        scheme = protocol.split("_", 1)[1]
        p = sch.physdrift_distribution(groups, scheme).weights
        angles = sch.physdrift_group_angles(groups, t, n, scheme)
        keep = [j for j, a in enumerate(angles) if a is not None]
        us = tuple(_group_unitary(h.n_qubits, groups[j], angles[j]) for j in keep)
        w = p[keep]
        return MixedUnitaryChannel(w / w.sum(), us)
    if protocol == "random_permutation":
        fwd = sch.compile_trotter1(h, t, n)
        block = fwd.entries[: len(h)]
        return MixedUnitaryChannel(np.array([0.5, 0.5]),
                                   (apply_entries(eye, block), apply_entries(eye, block[::-1])))
    raise UnsupportedModeError(f"no single-step mixture for protocol {protocol!r}")


def channel_mean_unitary(
    protocol: str,
    h: PauliHamiltonian,
    t: float,
    n: int,
    *,
    groups: Sequence[PhysicalGroup] | None = None,
    mode: str = "analytic",
    samples: int = 100,
    seed: int = 0,
    distribution=None,
) -> np.ndarray:
    """Mean of the compiled unitary over the protocol's randomness.

    ``analytic`` raises the single-step mixture mean to the ``n``-th power
    (deterministic protocols return their own unitary); ``monte_carlo``
    averages ``samples`` sequences with seeds ``seed, seed + 1, ...``.
    """
    if mode == "analytic":
        if protocol in sch.DETERMINISTIC:
            return sequence_unitary(sch.compile_protocol(protocol, h, t, n))
        if protocol == "sparsto":
            raise UnsupportedModeError("SparSto has no compact step mixture; use monte_carlo")
        step = step_mixture(protocol, h, t, n, groups=groups, distribution=distribution)
        return np.linalg.matrix_power(step.mean(), n)
    if mode == "monte_carlo":
        if samples < 1:
            raise ValueError("samples must be positive")
        total = np.zeros((1 << h.n_qubits,) * 2, dtype=complex)
        for r in range(samples):
            if protocol == "qdrift" and distribution is not None:
                seq = sch.sample_qdrift(h, t, n, seed + r, distribution)
            else:
                seq = sch.compile_protocol(protocol, h, t, n, seed + r, groups)
            total += sequence_unitary(seq)
        return total / samples
    raise ValueError(f"mode must be 'analytic' or 'monte_carlo', got {mode!r}")


# ---------------------------------------------------------------------------
# noisy gate-level simulation


@dataclass(frozen=True)
class NoiseConfig:
    depol_p: float = 0.001
    shot_alpha: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if not 0 <= self.depol_p <= 1:
            raise ValueError("depol_p must lie in [0, 1]")
        if self.shot_alpha < 0:
            raise ValueError("shot_alpha must be non-negative")


NOISELESS = NoiseConfig(depol_p=0.0)
_INJECTED = ("X", "Y", "Z")


def run_statevector(circuit: PrimitiveCircuit, initial: np.ndarray, noise: NoiseConfig = NOISELESS,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Apply a circuit gate by gate, injecting random Paulis after gates.

    After every gate, with probability ``depol_p``, one of X, Y, Z (uniform)
    hits one of the qubits the gate acted on (uniform).
    """
    n = circuit.n_qubits
    state = np.asarray(initial, dtype=complex)
    if state.shape != (1 << n,):
        raise ValueError(f"state of shape {state.shape} does not fit {n} qubits")
    p = noise.depol_p
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    for g in circuit.gates:
        state = apply_gate(state, n, g)
        if p and rng.random() < p:
            q = g.qubits[rng.integers(len(g.qubits))]
            state = apply_1q(state, n, q, PAULI_MATRICES[_INJECTED[rng.integers(3)]])
    return state


def expectation(state: np.ndarray, observable: PauliHamiltonian) -> float:
    """``<psi|O|psi>`` including the observable's scalar offset."""
    value = np.vdot(state, observable.apply(state))
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        raise ValueError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


@dataclass
class TimeSeries:
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()


def track_observables(
    seq: GateSequence,
    initial: np.ndarray,
    observables: Mapping[str, PauliHamiltonian],
    checkpoint_kind: str = "every_entry",
    t: float | None = None,
) -> TimeSeries:
    """Expectation values at the initial state and at every checkpoint.

    The time column is the proxy ``t * k / K`` for checkpoint ``k`` of ``K``.
    """
    if checkpoint_kind == "every_entry":
        stops = list(range(1, len(seq) + 1))
    else:
        stops = seq.marker_indices(checkpoint_kind)
        if not stops:
            raise ValueError(f"sequence has no {checkpoint_kind!r} markers")
    if t is None:
        t = float(seq.params.get("t", 1.0))
    names = list(observables)
    series = TimeSeries(["checkpoint", "time"] + names)
    state = np.asarray(initial, dtype=complex)
    series.rows.append([0, 0.0] + [expectation(state, observables[k]) for k in names])
    done = 0
    for k, stop in enumerate(stops, start=1):
        state = apply_entries(state, seq.entries[done:stop])
        done = stop
        series.rows.append([k, t * k / len(stops)] + [expectation(state, observables[o]) for o in names])
    return series


def shots_required(epsilon: float, shot_alpha: float, exponential_count: int) -> int:
    """``ceil(1 / (eps**2 exp(-2 alpha count)))``.

    Values within a relative 1e-9 of an integer are taken as that integer so
    that float noise (``1/0.01**2 = 10000.000000000002``) does not add a shot.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    x = math.exp(2 * shot_alpha * exponential_count) / epsilon**2
    r = round(x)
    if abs(x - r) <= 1e-9 * x:
        return int(r)
    return math.ceil(x)


def shot_noise(values, exponential_count: int, cfg: NoiseConfig, epsilon: float = 0.01):
    """Attenuate expectation values by ``exp(-alpha count)`` and count shots."""
    factor = math.exp(-cfg.shot_alpha * exponential_count)
    attenuated = np.asarray(values, dtype=float) * factor
    return attenuated, shots_required(epsilon, cfg.shot_alpha, exponential_count)
