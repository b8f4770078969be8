"""Compile Pauli Hamiltonians into ordered lists of Pauli exponentials.

Every protocol returns a :class:`GateSequence`. An entry ``(P, theta)``
stands for ``exp(-i theta P)``; entries are applied in list order, so the
sequence unitary is ``V = E_last ... E_1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from physdrift.fermion import PhysicalGroup
from physdrift.pauli import PauliHamiltonian, PauliString, PauliTerm, parse_pauli

TROTTER_STEP_END = "trotter_step_end"
SAMPLE_STEP_END = "sample_step_end"
GROUP_END = "group_end"
MARKER_KINDS = (TROTTER_STEP_END, SAMPLE_STEP_END, GROUP_END)

SCHEME_TAGS = ("qdrift_abs", "phys_abs", "phys_mean", "importance")


class Entry(NamedTuple):
    string: PauliString
    angle: float


class Marker(NamedTuple):
    index: int
    kind: str


@dataclass(frozen=True)
class GateSequence:
    """Compiled exponential schedule.

    A marker ``(k, kind)`` means "a step of this kind ends after the first
    ``k`` entries". Markers are strictly increasing, so a step that emitted
    nothing gets no marker.
    """

    n_qubits: int
    entries: tuple[Entry, ...]
    markers: tuple[Marker, ...] = ()
    protocol: str = ""
    seed: int | None = None
    params: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        last = -1
        for m in self.markers:
            if m.kind not in MARKER_KINDS:
                raise ValueError(f"unknown marker kind {m.kind!r}")
            if not last < m.index <= len(self.entries):
                raise ValueError("markers must be strictly increasing and within the entry list")
            last = m.index
        for e in self.entries:
            if e.string.n != self.n_qubits:
                raise ValueError(f"entry {e.string} does not act on {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.entries)

    def marker_indices(self, kind: str) -> list[int]:
        return [m.index for m in self.markers if m.kind == kind]

    def blocks(self, kind: str) -> list[tuple[int, int]]:
        """``(start, stop)`` entry ranges delimited by markers of ``kind``."""
        out, start = [], 0
        for stop in self.marker_indices(kind):
            out.append((start, stop))
            start = stop
        return out

    @property
    def total_abs_angle(self) -> float:
        return float(sum(abs(e.angle) for e in self.entries))

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "protocol": self.protocol,
            "seed": self.seed,
            "params": self.params,
            "entries": [{"string": str(e.string), "angle": e.angle} for e in self.entries],
            "markers": [{"index": m.index, "kind": m.kind} for m in self.markers],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> GateSequence:
        entries = tuple(Entry(parse_pauli(e["string"]), float(e["angle"])) for e in data["entries"])
        markers = tuple(Marker(int(m["index"]), m["kind"]) for m in data.get("markers", ()))
        return cls(
            int(data["n_qubits"]),
            entries,
            markers,
            data.get("protocol", ""),
            data.get("seed"),
            dict(data.get("params", {})),
        )


@dataclass(frozen=True)
class SamplingDistribution:
    weights: np.ndarray
    scheme_tag: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if self.scheme_tag not in SCHEME_TAGS:
            raise ValueError(f"unknown scheme tag {self.scheme_tag!r}")
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to one")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size


def _require_terms(h: PauliHamiltonian) -> list[PauliTerm]:
    if not h.terms:
        raise ValueError("Hamiltonian has no non-identity terms")
    return h.canonical_order()


def _require_positive(name: str, value: int) -> int:
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# deterministic product formulas


def compile_trotter1(h: PauliHamiltonian, t: float, steps: int) -> GateSequence:
    """First-order Lie-Trotter: ``steps`` sweeps of the canonical term order."""
    steps = _require_positive("steps", steps)
    terms = _require_terms(h)
    dt = t / steps
    entries, markers = [], []
    for _ in range(steps):
        entries.extend(Entry(term.string, term.coeff * dt) for term in terms)
        markers.append(Marker(len(entries), TROTTER_STEP_END))
    return GateSequence(h.n_qubits, tuple(entries), tuple(markers), "trotter1", None,
                        {"t": t, "steps": steps})


def _s2(terms: Sequence[PauliTerm], tau: float) -> list[Entry]:
    half = [Entry(term.string, term.coeff * tau / 2) for term in terms]
    return half + half[::-1]


def suzuki_coefficient(k: int) -> float:
    """``p_k = 1 / (4 - 4**(1/(2k-1)))`` for the order-2k recursion."""
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1)))


def _suzuki_step(terms, tau: float, k: int) -> list[Entry]:
    if k == 1:
        return _s2(terms, tau)
    p = suzuki_coefficient(k)
    outer = _suzuki_step(terms, p * tau, k - 1)
    middle = _suzuki_step(terms, (1 - 4 * p) * tau, k - 1)
    return outer + outer + middle + outer + outer


def compile_suzuki(h: PauliHamiltonian, t: float, steps: int, order: int = 2) -> GateSequence:
    """Symmetric Suzuki product formula of even ``order``.

    Adjacent exponentials of the same string are not merged, so the entry
    count is ``steps * L * 2 * 5**(k-1)`` with ``order = 2k``.
    """
    if order < 2 or order % 2:
        raise ValueError(f"Suzuki formulas exist only for even orders >= 2, got {order}")
    steps = _require_positive("steps", steps)
    terms = _require_terms(h)
    block = _suzuki_step(terms, t / steps, order // 2)
    entries, markers = [], []
    for _ in range(steps):
        entries.extend(block)
        markers.append(Marker(len(entries), TROTTER_STEP_END))
    protocol = "trotter2" if order == 2 else f"suzuki{order}"
    return GateSequence(h.n_qubits, tuple(entries), tuple(markers), protocol, None,
                        {"t": t, "steps": steps, "order": order})


def compile_trotter2(h: PauliHamiltonian, t: float, steps: int) -> GateSequence:
    return compile_suzuki(h, t, steps, order=2)


# ---------------------------------------------------------------------------
# randomized protocols


def importance_distribution(h: PauliHamiltonian, cost) -> SamplingDistribution:
    """Cost-weighted term distribution ``q(j) = (|h_j|/C_j) / sum_l |h_l|/C_l``."""
    cost = np.asarray(cost, dtype=float)
    if cost.shape != (len(h),):
        raise ValueError(f"need one cost per term ({len(h)}), got shape {cost.shape}")
    if np.any(cost <= 0) or not np.all(np.isfinite(cost)):
        raise ValueError("per-term costs must be positive and finite")
    ratio = np.abs(h.coeffs) / cost
    return SamplingDistribution(ratio / ratio.sum(), "importance")


def qdrift_distribution(h: PauliHamiltonian) -> SamplingDistribution:
    c = np.abs(h.coeffs)
    return SamplingDistribution(c / c.sum(), "qdrift_abs")


def sample_qdrift(
    h: PauliHamiltonian,
    t: float,
    samples: int,
    seed=None,
    distribution: SamplingDistribution | None = None,
) -> GateSequence:
    """qDrift: ``samples`` i.i.d. single-term exponentials.

    With the default distribution ``p_j = |h_j|/lambda`` every angle is
    ``sign(h_j) lambda t / N``. A custom distribution ``q`` uses
    ``sign(h_j) |h_j| t / (q_j N)`` which keeps the mean generator at ``H t/N``.
    Terms are indexed in the Hamiltonian's own term order.
    """
    samples = _require_positive("samples", samples)
    if not h.terms:
        raise ValueError("Hamiltonian has no non-identity terms")
    lam = h.lambda_one_norm
    if lam == 0:
        raise ValueError("lambda must be positive")
    coeffs = h.coeffs
    dist = distribution or qdrift_distribution(h)
    if len(dist) != len(coeffs):
        raise ValueError("distribution length does not match the term count")
    with np.errstate(divide="ignore"):
        angles = np.where(dist.weights > 0, coeffs * t / (dist.weights * samples), 0.0)
    if dist.scheme_tag == "qdrift_abs":
        # same value, without the division round-off
        angles = np.sign(coeffs) * lam * t / samples
    draws = _rng(seed).choice(len(coeffs), size=samples, p=dist.weights)
    entries = tuple(Entry(h.terms[j].string, float(angles[j])) for j in draws)
    markers = tuple(Marker(i + 1, SAMPLE_STEP_END) for i in range(samples))
    params = {"t": t, "samples": samples, "scheme": dist.scheme_tag, "signed_angles": True}
    return GateSequence(h.n_qubits, entries, markers, "qdrift", seed, params)


def group_weights(groups: Sequence[PhysicalGroup], scheme: str) -> np.ndarray:
    if scheme == "abs":
        return np.array([g.abs_weight for g in groups])
    if scheme == "mean":
        return np.array([abs(g.mean_weight) for g in groups])
    raise ValueError(f"scheme must be 'abs' or 'mean', got {scheme!r}")


def physdrift_distribution(groups: Sequence[PhysicalGroup], scheme: str) -> SamplingDistribution:
    w = group_weights(groups, scheme)
    if not w.sum() > 0:
        raise ValueError(f"every group weight is zero under the {scheme!r} scheme")
    return SamplingDistribution(w / w.sum(), f"phys_{scheme}")


def physdrift_group_angles(groups: Sequence[PhysicalGroup], t: float, samples: int,
                           scheme: str) -> list[np.ndarray | None]:
    """Per-string angles used when group ``j`` is drawn (None if it cannot be drawn)."""
    w = group_weights(groups, scheme)
    total = w.sum()
    out = []
    for g, wj in zip(groups, w):
        if wj > 0:
            out.append(np.array([term.coeff for term in g.terms]) * total * t / (wj * samples))
        else:
            out.append(None)
    return out


def expected_group_size(groups: Sequence[PhysicalGroup], scheme: str) -> float:
    p = physdrift_distribution(groups, scheme).weights
    return float(np.dot(p, [len(g) for g in groups]))


def matched_draws(groups: Sequence[PhysicalGroup], scheme: str, exponential_count: int) -> int:
    """Group draws whose expected exponential count is ``exponential_count``."""
    return max(1, round(exponential_count / expected_group_size(groups, scheme)))


def sample_physdrift(
    groups: Sequence[PhysicalGroup],
    t: float,
    samples: int,
    scheme: str = "abs",
    seed=None,
) -> GateSequence:
    """physDrift: ``samples`` i.i.d. draws of whole physical groups.

    A drawn group emits all of its strings back to back; string ``i`` of
    group ``j`` gets angle ``h_i * Lambda_s * t / (W_j * N)`` with ``W`` the
    scheme weight and ``Lambda_s = sum_j W_j``.
    """
    samples = _require_positive("samples", samples)
    if not groups:
        raise ValueError("no groups to sample from")
    dist = physdrift_distribution(groups, scheme)
    angles = physdrift_group_angles(groups, t, samples, scheme)
    draws = _rng(seed).choice(len(groups), size=samples, p=dist.weights)
    entries, markers = [], []
    for j in draws:
        entries.extend(Entry(term.string, float(a)) for term, a in zip(groups[j].terms, angles[j]))
        markers.append(Marker(len(entries), GROUP_END))
    params = {"t": t, "samples": samples, "scheme": scheme, "draws": [int(j) for j in draws]}
    return GateSequence(groups[0].n_qubits, tuple(entries), tuple(markers), f"physdrift_{scheme}",
                        seed, params)


def permute_within_blocks(seq: GateSequence, seed=None, kind: str = GROUP_END) -> GateSequence:
    """Shuffle the entries inside every ``kind``-delimited block."""
    rng = _rng(seed)
    entries = list(seq.entries)
    for start, stop in seq.blocks(kind):
        block = entries[start:stop]
        entries[start:stop] = [block[i] for i in rng.permutation(len(block))]
    return GateSequence(seq.n_qubits, tuple(entries), seq.markers, seq.protocol, seq.seed,
                        dict(seq.params, permuted=True))


def sample_random_permutation(h: PauliHamiltonian, t: float, steps: int, seed=None) -> GateSequence:
    """Per step, a fair coin picks forward or reversed canonical order."""
    steps = _require_positive("steps", steps)
    terms = _require_terms(h)
    forward = [Entry(term.string, term.coeff * t / steps) for term in terms]
    backward = forward[::-1]
    coins = _rng(seed).integers(0, 2, size=steps)
    entries, markers = [], []
    for c in coins:
        entries.extend(backward if c else forward)
        markers.append(Marker(len(entries), TROTTER_STEP_END))
    params = {"t": t, "steps": steps, "coins": ["reverse" if c else "forward" for c in coins]}
    return GateSequence(h.n_qubits, tuple(entries), tuple(markers), "random_permutation", seed,
                        params)


def default_keep_probabilities(h: PauliHamiltonian) -> np.ndarray:
    c = np.abs(h.coeffs)
    return np.clip(c / c.max(), 0.0, 1.0)


def sample_sparsto(h: PauliHamiltonian, t: float, steps: int, seed=None, keep=None) -> GateSequence:
    """Stochastic sparsification of a permuted symmetric Trotter step.

    Each step walks a fresh random permutation of the terms and then its
    reverse. Every visit keeps term ``i`` with probability ``keep_i`` and a
    kept entry carries ``h_i t / (2 N keep_i)``: each half covers half of the
    step, and the ``1/keep`` rescaling keeps the mean generator at ``H t/N``.
    ``keep`` is indexed in the Hamiltonian's own term order.
    """
    steps = _require_positive("steps", steps)
    if not h.terms:
        raise ValueError("Hamiltonian has no non-identity terms")
    keep = default_keep_probabilities(h) if keep is None else np.asarray(keep, dtype=float)
    if keep.shape != (len(h),):
        raise ValueError("need one keep probability per term")
    if np.any(keep <= 0) or np.any(keep > 1):
        raise ValueError("keep probabilities must lie in (0, 1] for every nonzero term")
    rng = _rng(seed)
    coeffs = h.coeffs
    angle = coeffs * t / (2 * steps * keep)
    entries, markers = [], []
    for _ in range(steps):
        perm = rng.permutation(len(coeffs))
        for i in np.concatenate([perm, perm[::-1]]):
            if rng.random() < keep[i]:
                entries.append(Entry(h.terms[i].string, float(angle[i])))
        if not markers or markers[-1].index < len(entries):
            markers.append(Marker(len(entries), TROTTER_STEP_END))
    params = {"t": t, "steps": steps, "keep": [float(k) for k in keep]}
    return GateSequence(h.n_qubits, tuple(entries), tuple(markers), "sparsto", seed, params)


def apply_symmetric_protection(seq: GateSequence, seed=None, discrete: bool = False) -> GateSequence:
    """Conjugate every Trotter step by a random phase rotation ``P = prod_p exp(i phi Z_p)``.

    The step ``S`` becomes ``P^dagger S P``: one ``(Z_p, -phi)`` entry per
    qubit before the step and one ``(Z_p, +phi)`` per qubit after it, with a
    fresh ``phi`` per step drawn from ``[0, 2 pi)`` (or from ``{0, pi}`` when
    ``discrete``).
    """
    blocks = seq.blocks(TROTTER_STEP_END)
    if not blocks:
        raise ValueError("sequence has no trotter_step_end markers to protect")
    rng = _rng(seed)
    n = seq.n_qubits
    zs = [PauliString.from_letters({q: "Z"}, n) for q in range(n)]
    entries, markers, phis = [], [], []
    for start, stop in blocks:
        phi = float(rng.integers(0, 2) * math.pi) if discrete else float(rng.uniform(0, 2 * math.pi))
        phis.append(phi)
        entries.extend(Entry(z, -phi) for z in zs)
        entries.extend(seq.entries[start:stop])
        entries.extend(Entry(z, phi) for z in zs)
        markers.append(Marker(len(entries), TROTTER_STEP_END))
    params = dict(seq.params, protection_seed=seed, protection_phis=phis, discrete=discrete)
    return GateSequence(n, tuple(entries), tuple(markers), seq.protocol + "+protected", seq.seed,
                        params)


# ---------------------------------------------------------------------------
# protocol dispatch


DETERMINISTIC = ("trotter1", "trotter2", "suzuki4", "suzuki6")
RANDOMIZED = ("qdrift", "physdrift_abs", "physdrift_mean", "random_permutation", "sparsto")
PROTOCOLS = DETERMINISTIC + RANDOMIZED


def exponentials_per_unit(protocol: str, h: PauliHamiltonian, groups=None) -> float:
    """Expected exponentials per step or draw, used to match exponential counts."""
    L = len(h)
    if protocol == "trotter1" or protocol == "random_permutation":
        return L
    if protocol == "trotter2":
        return 2 * L
    if protocol.startswith("suzuki"):
        k = int(protocol[len("suzuki"):]) // 2
        return 2 * L * 5 ** (k - 1)
    if protocol == "qdrift":
        return 1.0
    if protocol.startswith("physdrift_"):
        return expected_group_size(groups, protocol.split("_", 1)[1])
    if protocol == "sparsto":
        return 2 * float(default_keep_probabilities(h).sum())
    raise ValueError(f"unknown protocol {protocol!r}")


def units_for_count(protocol: str, h: PauliHamiltonian, exponential_count: int, groups=None) -> int:
    """Steps (or draws) giving roughly ``exponential_count`` exponentials."""
    per = exponentials_per_unit(protocol, h, groups)
    return max(1, round(exponential_count / per))


def compile_protocol(
    protocol: str,
    h: PauliHamiltonian,
    t: float,
    n: int,
    seed=None,
    groups: Sequence[PhysicalGroup] | None = None,
) -> GateSequence:
    """Dispatch by protocol name; ``n`` is steps for Trotter-like schemes, draws otherwise."""
    if protocol == "trotter1":
        return compile_trotter1(h, t, n)
    if protocol == "trotter2":
        return compile_trotter2(h, t, n)
    if protocol.startswith("suzuki"):
        return compile_suzuki(h, t, n, int(protocol[len("suzuki"):]))
    if protocol == "qdrift":
        return sample_qdrift(h, t, n, seed)
    if protocol.startswith("physdrift_"):
        if groups is None:
            raise ValueError("physDrift needs physical groups")
        return sample_physdrift(groups, t, n, protocol.split("_", 1)[1], seed)
    if protocol == "random_permutation":
        return sample_random_permutation(h, t, n, seed)
    if protocol == "sparsto":
        return sample_sparsto(h, t, n, seed)
    raise ValueError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}")
