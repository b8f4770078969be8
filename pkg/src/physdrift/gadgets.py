"""Lowering of Pauli exponentials to primitive gates.

``exp(-i theta P)`` is realized as a basis change onto Z, a CNOT parity
ladder over the active qubits ending on the last one, ``Rz(2 theta)`` there,
the mirrored ladder and the inverse basis change. ``Rz(phi)`` is
``diag(exp(-i phi/2), exp(i phi/2))``, so no global phase is dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from physdrift.pauli import PauliString, check_dense_limit
from physdrift.scheduler import GateSequence

GATE_NAMES = ("h", "s", "sdg", "cx", "rz")

_SQ2 = 1 / math.sqrt(2)
_H = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
_S = np.diag([1, 1j]).astype(complex)
_SDG = np.diag([1, -1j]).astype(complex)


class Gate(NamedTuple):
    name: str
    qubits: tuple[int, ...]
    angle: float | None = None
    source_entry: int | None = None

    def qasm(self) -> str:
        if self.name == "cx":
            return f"cx q[{self.qubits[0]}],q[{self.qubits[1]}];"
        if self.name == "rz":
            return f"rz({self.angle!r}) q[{self.qubits[0]}];"
        return f"{self.name} q[{self.qubits[0]}];"


@dataclass
class PrimitiveCircuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    n_exponentials: int = 0

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate) -> None:
        if g.name not in GATE_NAMES:
            raise ValueError(f"unknown gate {g.name!r}")
        if any(not 0 <= q < self.n_qubits for q in g.qubits):
            raise ValueError(f"gate {g} acts outside {self.n_qubits} qubits")
        if g.name == "cx" and g.qubits[0] == g.qubits[1]:
            raise ValueError("CNOT control equals target")

    def append(self, g: Gate) -> None:
        self._check(g)
        self.gates.append(g)

    def extend(self, other: PrimitiveCircuit) -> None:
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        self.gates.extend(other.gates)
        self.n_exponentials += other.n_exponentials

    def __len__(self) -> int:
        return len(self.gates)

    def to_qasm(self) -> str:
        lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{self.n_qubits}];"]
        lines.extend(g.qasm() for g in self.gates)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GateTally:
    cnot_count: int = 0
    rz_count: int = 0
    single_qubit_clifford_count: int = 0
    exponential_count: int = 0
    depth: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "cnot_count": self.cnot_count,
            "rz_count": self.rz_count,
            "single_qubit_clifford_count": self.single_qubit_clifford_count,
            "exponential_count": self.exponential_count,
            "depth": self.depth,
        }


def synthesize_gadget(string: PauliString, angle: float, source_entry: int | None = None) -> PrimitiveCircuit:
    """Pauli gadget for ``exp(-i angle string)``."""
    active = string.support
    if not active:
        raise ValueError("identity string has no gadget; fold it into the scalar offset")
    letters = {q: string.letter(q) for q in active}
    pre: list[Gate] = []
    post: list[Gate] = []
    for q in active:
        if letters[q] == "X":
            pre.append(Gate("h", (q,), None, source_entry))
            post.append(Gate("h", (q,), None, source_entry))
        elif letters[q] == "Y":
            # Y = (S H) Z (S H)^dagger
            pre += [Gate("sdg", (q,), None, source_entry), Gate("h", (q,), None, source_entry)]
            post += [Gate("h", (q,), None, source_entry), Gate("s", (q,), None, source_entry)]
    ladder = [Gate("cx", (a, b), None, source_entry) for a, b in zip(active, active[1:])]
    gates = pre + ladder + [Gate("rz", (active[-1],), 2.0 * angle, source_entry)] + ladder[::-1] + post
    return PrimitiveCircuit(string.n, gates, 1)


def synthesize_sequence(seq: GateSequence) -> PrimitiveCircuit:
    circuit = PrimitiveCircuit(seq.n_qubits)
    for k, entry in enumerate(seq.entries):
        circuit.extend(synthesize_gadget(entry.string, entry.angle, k))
    return circuit


def tally(circuit: PrimitiveCircuit) -> GateTally:
    """Gate counts plus ASAP depth over qubit-disjoint layers."""
    level = [0] * circuit.n_qubits
    counts = {name: 0 for name in GATE_NAMES}
    for g in circuit.gates:
        counts[g.name] += 1
        top = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = top
    return GateTally(
        cnot_count=counts["cx"],
        rz_count=counts["rz"],
        single_qubit_clifford_count=counts["h"] + counts["s"] + counts["sdg"],
        exponential_count=circuit.n_exponentials,
        depth=max(level, default=0),
    )


# ---------------------------------------------------------------------------
# gate application on state vectors (or stacks of them, one per column)


def _split(state: np.ndarray, n: int, q: int) -> np.ndarray:
    tail = state.shape[1:]
    return state.reshape((1 << q, 2, 1 << (n - 1 - q)) + tail)


def apply_1q(state: np.ndarray, n: int, q: int, mat: np.ndarray) -> np.ndarray:
    view = _split(state, n, q)
    return np.einsum("ab,ibj...->iaj...", mat, view).reshape(state.shape)


def apply_cx(state: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    src = np.where(idx & cbit, idx ^ tbit, idx)
    return state[src]


def apply_rz(state: np.ndarray, n: int, q: int, phi: float) -> np.ndarray:
    idx = np.arange(1 << n)
    bit = (idx >> (n - 1 - q)) & 1
    phase = np.where(bit, np.exp(0.5j * phi), np.exp(-0.5j * phi))
    if state.ndim == 2:
        phase = phase[:, None]
    return state * phase


_ONE_QUBIT = {"h": _H, "s": _S, "sdg": _SDG}


def apply_gate(state: np.ndarray, n: int, g: Gate) -> np.ndarray:
    if g.name == "cx":
        return apply_cx(state, n, *g.qubits)
    if g.name == "rz":
        return apply_rz(state, n, g.qubits[0], g.angle)
    return apply_1q(state, n, g.qubits[0], _ONE_QUBIT[g.name])


def circuit_unitary(circuit: PrimitiveCircuit, limit: int | None = None) -> np.ndarray:
    """Dense unitary of a circuit, built by pushing the identity through it."""
    check_dense_limit(circuit.n_qubits, limit)
    u = np.eye(1 << circuit.n_qubits, dtype=complex)
    for g in circuit.gates:
        u = apply_gate(u, circuit.n_qubits, g)
    return u

