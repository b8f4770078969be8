"""Second-quantized Hamiltonians, Jordan-Wigner mapping and physical grouping.

Conventions
-----------
* Spin orbitals are interleaved: spatial orbital ``i`` gives qubits ``2i``
  (spin up) and ``2i + 1`` (spin down).
* The two-body tensor uses the physicist ordering of

      H = sum_pq h_pq a+_p a_q + 1/2 sum_pqrs h_pqrs a+_p a+_q a_r a_s + core

  and is related to chemist-notation integrals by ``h_pqrs = (ps|qr)``.
* Occupied is ``|1>``: ``a+_j = Z_0 ... Z_{j-1} (X_j - i Y_j) / 2``.
"""

from __future__ import annotations

import enum
import io
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import TextIO

import numpy as np

from physdrift.pauli import PauliHamiltonian, PauliString, PauliTerm, commutes

SYMMETRY_TOL = 1e-10
IMAG_TOL = 1e-10
COEFF_TOL = 1e-12
"""JW coefficients at or below this magnitude are treated as integral noise and dropped."""


class FCIDumpError(ValueError):
    """Malformed FCIDUMP input."""


@dataclass(frozen=True)
class SecondQuantizedHamiltonian:
    """Spin-orbital one- and two-body tensors plus a constant."""

    n_orbitals: int
    one_body: np.ndarray
    two_body: np.ndarray
    core_constant: float = 0.0
    n_electrons: int | None = None
    ms2: int | None = None

    def __post_init__(self):
        n = self.n_orbitals
        if n < 1:
            raise ValueError("need at least one spin orbital")
        h1 = np.asarray(self.one_body, dtype=float)
        h2 = np.asarray(self.two_body, dtype=float)
        if h1.shape != (n, n):
            raise ValueError(f"one_body must be {n}x{n}, got {h1.shape}")
        if h2.shape != (n,) * 4:
            raise ValueError(f"two_body must have shape {(n,) * 4}, got {h2.shape}")
        if not np.allclose(h1, h1.T, rtol=0, atol=SYMMETRY_TOL):
            raise ValueError("one_body is not symmetric")
        # hermiticity and particle-exchange symmetry of the physicist tensor
        if not np.allclose(h2, h2.transpose(3, 2, 1, 0), rtol=0, atol=SYMMETRY_TOL):
            raise ValueError("two_body violates h_pqrs = h_srqp")
        if not np.allclose(h2, h2.transpose(1, 0, 3, 2), rtol=0, atol=SYMMETRY_TOL):
            raise ValueError("two_body violates h_pqrs = h_qpsr")
        object.__setattr__(self, "one_body", h1)
        object.__setattr__(self, "two_body", h2)

    @property
    def n_qubits(self) -> int:
        return self.n_orbitals


# ---------------------------------------------------------------------------
# FCIDUMP


@dataclass(frozen=True)
class FCIDump:
    """Raw spatial-orbital content of an FCIDUMP file (chemist notation)."""

    norb: int
    nelec: int
    ms2: int
    one_body: np.ndarray
    two_body: np.ndarray
    core_constant: float
    header: dict = field(default_factory=dict)


_HEADER_RE = re.compile(r"&FCI\b(.*?)(?:&END|/)", re.IGNORECASE | re.DOTALL)


def _header_int(header: str, key: str) -> int:
    m = re.search(rf"\b{key}\s*=\s*(-?\d+)", header, re.IGNORECASE)
    if m is None:
        raise FCIDumpError(f"FCIDUMP header is missing {key}")
    return int(m.group(1))


def _set_sym(arr, assigned, positions, value, lineno, tol):
    for pos in positions:
        if assigned[pos] and abs(arr[pos] - value) > tol:
            raise FCIDumpError(
                f"line {lineno}: value {value!r} conflicts with symmetric entry "
                f"{tuple(i + 1 for i in pos)} = {arr[pos]!r}"
            )
    for pos in positions:
        arr[pos] = value
        assigned[pos] = True


def read_fcidump(source: TextIO | str | os.PathLike, symmetry_tol: float = 1e-8) -> FCIDump:
    """Parse an FCIDUMP stream (or path) into spatial integrals.

    Two-electron lines ``v i j k l`` are chemist ``(ij|kl)`` with the 8-fold
    real symmetry expanded; ``v i j 0 0`` fills the one-body matrix and
    ``v 0 0 0 0`` is the core constant. Orbital-energy lines ``v i 0 0 0``
    are ignored.
    """
    if isinstance(source, (str, os.PathLike)) and not isinstance(source, io.IOBase):
        if isinstance(source, str) and "&FCI" in source.upper():
            text = source
        else:
            with open(source) as fh:
                text = fh.read()
    else:
        text = source.read()

    m = _HEADER_RE.search(text)
    if m is None:
        raise FCIDumpError("no '&FCI ... &END' header found")
    header_text = m.group(1)
    norb = _header_int(header_text, "NORB")
    nelec = _header_int(header_text, "NELEC")
    try:
        ms2 = _header_int(header_text, "MS2")
    except FCIDumpError:
        ms2 = 0
    if norb < 1:
        raise FCIDumpError(f"NORB must be positive, got {norb}")

    h1 = np.zeros((norb, norb))
    h1_set = np.zeros((norb, norb), dtype=bool)
    h2 = np.zeros((norb,) * 4)
    h2_set = np.zeros((norb,) * 4, dtype=bool)
    core = 0.0

    first_line = text.count("\n", 0, m.end()) + 1
    for offset, line in enumerate(text[m.end():].splitlines()):
        lineno = first_line + offset
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 5:
            raise FCIDumpError(f"line {lineno}: expected 'value i j k l', got {line.strip()!r}")
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise FCIDumpError(f"line {lineno}: cannot parse {line.strip()!r}") from None
        if any(not 0 <= idx <= norb for idx in (i, j, k, l)):
            raise FCIDumpError(f"line {lineno}: index out of range 0..{norb} in {line.strip()!r}")
        if i == j == k == l == 0:
            core = value
        elif k == 0 and l == 0:
            if j == 0:
                continue
            p, q = i - 1, j - 1
            _set_sym(h1, h1_set, {(p, q), (q, p)}, value, lineno, symmetry_tol)
        else:
            if 0 in (i, j, k, l):
                raise FCIDumpError(f"line {lineno}: zero index in a two-electron line")
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            positions = {
                (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
            }
            _set_sym(h2, h2_set, positions, value, lineno, symmetry_tol)

    header = {"NORB": norb, "NELEC": nelec, "MS2": ms2}
    return FCIDump(norb, nelec, ms2, h1, h2, core, header)


def spin_orbital_tensors(one_body: np.ndarray, chemist_two_body: np.ndarray):
    """Expand spatial integrals to interleaved spin orbitals (physicist two-body)."""
    norb = one_body.shape[0]
    n = 2 * norb
    h1 = np.zeros((n, n))
    for sigma in (0, 1):
        h1[sigma::2, sigma::2] = one_body
    # h_pqrs = (ps|qr), nonzero only when spin(p) == spin(s) and spin(q) == spin(r)
    phys = chemist_two_body.transpose(0, 2, 3, 1)
    h2 = np.zeros((n,) * 4)
    for s1 in (0, 1):
        for s2 in (0, 1):
            h2[s1::2, s2::2, s2::2, s1::2] = phys
    return h1, h2


def load_fcidump(source) -> SecondQuantizedHamiltonian:
    """Read an FCIDUMP and return the spin-orbital Hamiltonian."""
    raw = read_fcidump(source)
    h1, h2 = spin_orbital_tensors(raw.one_body, raw.two_body)
    return SecondQuantizedHamiltonian(2 * raw.norb, h1, h2, raw.core_constant, raw.nelec, raw.ms2)


def build_hubbard(sites: int, t_hop: float, u: float) -> SecondQuantizedHamiltonian:
    """Open-chain spinful Fermi-Hubbard model on interleaved spin orbitals."""
    if sites < 1:
        raise ValueError("Hubbard chain needs at least one site")
    n = 2 * sites
    h1 = np.zeros((n, n))
    h2 = np.zeros((n,) * 4)
    for i in range(sites - 1):
        for sigma in (0, 1):
            a, b = 2 * i + sigma, 2 * (i + 1) + sigma
            h1[a, b] = h1[b, a] = -t_hop
    for i in range(sites):
        up, dn = 2 * i, 2 * i + 1
        # U n_up n_dn = 1/2 U (a+_up a+_dn a_dn a_up + a+_dn a+_up a_up a_dn)
        h2[up, dn, dn, up] = u
        h2[dn, up, up, dn] = u
    return SecondQuantizedHamiltonian(n, h1, h2, 0.0, n_electrons=sites, ms2=sites % 2)


# ---------------------------------------------------------------------------
# Jordan-Wigner


def _ladder(j: int, n: int, dagger: bool) -> list[tuple[complex, int, int]]:
    """``a_j`` or ``a+_j`` as two (coeff, x, z) Pauli terms."""
    chain = 0
    for q in range(j):
        chain |= 1 << (n - 1 - q)
    bit = 1 << (n - 1 - j)
    sign = -0.5j if dagger else 0.5j
    # X_j and Y_j (= i X Z on that qubit) with the Z tail on qubits < j
    return [(0.5, bit, chain), (sign, bit, chain | bit)]


def _mul(a, b):
    ca, xa, za = a
    cb, xb, zb = b
    x, z = xa ^ xb, za ^ zb
    k = _ny(xa, za) + _ny(xb, zb) - _ny(x, z) + 2 * bin(za & xb).count("1")
    return ca * cb * (1, 1j, -1, -1j)[k % 4], x, z


def _ny(x, z):
    return bin(x & z).count("1")


def _product(factors):
    out = [(1.0 + 0j, 0, 0)]
    for f in factors:
        out = [_mul(a, b) for a in out for b in f]
    return out


def jordan_wigner(h: SecondQuantizedHamiltonian, tol: float = COEFF_TOL) -> PauliHamiltonian:
    """Map a second-quantized Hamiltonian to a real Pauli sum.

    The identity component (including ``core_constant``) becomes the offset.
    Raises ``ValueError`` if the mapped operator has an imaginary part above
    1e-10, which signals a non-Hermitian input tensor.
    """
    n = h.n_orbitals
    acc: dict[tuple[int, int], complex] = defaultdict(complex)
    create = [_ladder(j, n, True) for j in range(n)]
    annihilate = [_ladder(j, n, False) for j in range(n)]

    for p, q in zip(*np.nonzero(h.one_body)):
        for c, x, z in _product([create[p], annihilate[q]]):
            acc[(x, z)] += h.one_body[p, q] * c

    pairs_c = {}
    pairs_a = {}
    for p, q, r, s in zip(*np.nonzero(h.two_body)):
        if p == q or r == s:
            continue
        if (p, q) not in pairs_c:
            pairs_c[(p, q)] = _product([create[p], create[q]])
        if (r, s) not in pairs_a:
            pairs_a[(r, s)] = _product([annihilate[r], annihilate[s]])
        w = 0.5 * h.two_body[p, q, r, s]
        for a in pairs_c[(p, q)]:
            for b in pairs_a[(r, s)]:
                c, x, z = _mul(a, b)
                acc[(x, z)] += w * c

    offset = h.core_constant
    terms = []
    for (x, z), c in acc.items():
        if abs(c.imag) > IMAG_TOL:
            raise ValueError(
                f"imaginary coefficient {c.imag:.3e} on {PauliString(n, x, z)}; "
                "input tensors are not Hermitian"
            )
        if x == 0 and z == 0:
            offset += c.real
        elif abs(c.real) > tol:
            terms.append(PauliTerm(PauliString(n, x, z), float(c.real)))
    terms.sort(key=lambda t: str(t.string))
    return PauliHamiltonian(n, tuple(terms), offset)


# ---------------------------------------------------------------------------
# physical groups


class GroupClass(str, enum.Enum):
    NUMBER_COUNTING = "NumberCounting"
    EXCITATION = "Excitation"
    COULOMB = "Coulomb"
    CORRELATED_EXCITATION = "CorrelatedExcitation"
    SCATTER = "Scatter"


_CLASS_ORDER = {c: i for i, c in enumerate(GroupClass)}


@dataclass(frozen=True)
class PhysicalGroup:
    """A particle-conserving bundle of commuting Pauli terms."""

    class_tag: GroupClass
    orbital_indices: tuple[int, ...]
    terms: tuple[PauliTerm, ...]

    @property
    def abs_weight(self) -> float:
        return float(sum(abs(t.coeff) for t in self.terms))

    @property
    def mean_weight(self) -> float:
        return float(sum(t.coeff for t in self.terms))

    @property
    def n_qubits(self) -> int:
        return self.terms[0].string.n

    def __len__(self) -> int:
        return len(self.terms)

    def as_hamiltonian(self) -> PauliHamiltonian:
        return PauliHamiltonian(self.n_qubits, self.terms)

    def all_commute(self) -> bool:
        return all(commutes(a.string, b.string) for a, b in combinations(self.terms, 2))


def _signature_class(p: PauliString) -> tuple[GroupClass, tuple[int, ...], tuple]:
    flips = p.qubits_with("XY")
    zonly = set(p.qubits_with("Z"))
    key = (flips, tuple(sorted(zonly)))
    if not flips:
        if len(zonly) == 1:
            return GroupClass.NUMBER_COUNTING, tuple(zonly), key
        if len(zonly) == 2:
            return GroupClass.COULOMB, tuple(sorted(zonly)), key
    elif len(flips) == 2:
        lo, hi = flips
        chain = set(range(lo + 1, hi))
        extra = zonly ^ chain
        if not extra:
            return GroupClass.EXCITATION, flips, key
        if len(extra) == 1:
            (q,) = extra
            return GroupClass.CORRELATED_EXCITATION, (lo, q, hi), key
    elif len(flips) == 4:
        return GroupClass.SCATTER, flips, key
    raise ValueError(f"{p} is not the image of a one- or two-body number-conserving term")


def group_pauli_terms(h: PauliHamiltonian) -> list[PhysicalGroup]:
    """Partition a Jordan-Wigner Hamiltonian into physical groups.

    Strings are bucketed by their signature: the qubits carrying X/Y and the
    Z pattern on the remaining qubits. Every string of a real number-conserving
    one/two-body operator lands in exactly one bucket, each bucket commutes
    with the particle-number operator on its own, and the strings in a bucket
    commute pairwise.
    """
    buckets: dict[tuple, list[PauliTerm]] = defaultdict(list)
    labels: dict[tuple, tuple[GroupClass, tuple[int, ...]]] = {}
    for term in h.terms:
        tag, indices, key = _signature_class(term.string)
        buckets[key].append(term)
        labels[key] = (tag, indices)
    groups = [
        PhysicalGroup(labels[k][0], labels[k][1], tuple(sorted(v, key=lambda t: str(t.string))))
        for k, v in buckets.items()
    ]
    groups.sort(key=lambda g: (_CLASS_ORDER[g.class_tag], g.orbital_indices, str(g.terms[0].string)))
    return groups


def classify_groups(h: SecondQuantizedHamiltonian) -> list[PhysicalGroup]:
    """Jordan-Wigner map ``h`` and partition the result into physical groups."""
    return group_pauli_terms(jordan_wigner(h))


# ---------------------------------------------------------------------------
# particle number


@dataclass(frozen=True)
class ParticleNumberOperator:
    pauli_form: PauliHamiltonian
    per_orbital: tuple[PauliHamiltonian, ...]


def _number_sum(n_qubits: int, qubits) -> PauliHamiltonian:
    qubits = sorted(qubits)
    terms = tuple(PauliTerm(PauliString.from_letters({q: "Z"}, n_qubits), -0.5) for q in qubits)
    return PauliHamiltonian(n_qubits, terms, 0.5 * len(qubits))


def particle_number(n_qubits: int, orbital_subset=None) -> ParticleNumberOperator:
    """Electron-count operator ``sum_p (I - Z_p) / 2`` over a subset of qubits.

    ``per_orbital`` holds one operator per spatial orbital (qubits ``2i`` and
    ``2i + 1``) restricted to the subset.
    """
    subset = range(n_qubits) if orbital_subset is None else list(orbital_subset)
    for q in subset:
        if not 0 <= q < n_qubits:
            raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
    chosen = set(subset)
    per_orbital = []
    for i in range((n_qubits + 1) // 2):
        qs = chosen & {2 * i, 2 * i + 1}
        if qs:
            per_orbital.append(_number_sum(n_qubits, qs))
    return ParticleNumberOperator(_number_sum(n_qubits, chosen), tuple(per_orbital))


def occupation_state(n_qubits: int, occupied) -> np.ndarray:
    """Computational basis state with the given qubits set to ``|1>``."""
    index = 0
    for q in occupied:
        index |= 1 << (n_qubits - 1 - q)
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def hartree_fock_state(n_qubits: int, n_electrons: int) -> np.ndarray:
    """Lowest ``n_electrons`` spin orbitals filled, e.g. ``|111000>``."""
    return occupation_state(n_qubits, range(n_electrons))


def sector_ground_state(h: PauliHamiltonian, n_electrons: int) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of ``h`` restricted to a fixed electron count."""
    dim = 1 << h.n_qubits
    idx = np.arange(dim)
    sector = idx[np.bitwise_count(idx) == n_electrons]
    dense = h.to_dense()
    block = dense[np.ix_(sector, sector)]
    vals, vecs = np.linalg.eigh(block)
    psi = np.zeros(dim, dtype=complex)
    psi[sector] = vecs[:, 0]
    return float(vals[0]), psi
