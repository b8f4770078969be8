"""Pauli strings, weighted Pauli sums and their dense realization.

A :class:`PauliString` is stored as a pair of bitmasks ``(x, z)``. Bit
``n - 1 - q`` of each mask belongs to qubit ``q`` so that the masks line up
with computational-basis indices (qubit 0 is the most significant bit, the
same ordering as ``np.kron`` over qubits 0..n-1). A letter is recovered as

    I: x=0 z=0,  X: x=1 z=0,  Z: x=0 z=1,  Y: x=1 z=1

and the operator equals ``i**n_y * X^x Z^z`` as a matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np

DENSE_LIMIT = 12
"""Largest register (in qubits) that will be turned into a dense matrix."""

_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PHASES = (1, 1j, -1, -1j)

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliParseError(ValueError):
    """Raised for malformed Pauli-string text."""

    def __init__(self, text, position):
        self.text = text
        self.position = position
        if text:
            msg = f"invalid Pauli letter {text[position]!r} at position {position} in {text!r}"
        else:
            msg = "empty Pauli string"
        super().__init__(msg)


class DenseLimitError(ValueError):
    """Raised when a dense matrix would exceed the configured qubit limit."""


def set_dense_limit(n_qubits: int) -> None:
    """Change the module-wide dense limit (used by the CLI ``--dense-limit``)."""
    global DENSE_LIMIT
    if n_qubits < 1:
        raise ValueError("dense limit must be positive")
    DENSE_LIMIT = int(n_qubits)


def check_dense_limit(n_qubits: int, limit: int | None = None) -> None:
    limit = DENSE_LIMIT if limit is None else limit
    if n_qubits > limit:
        raise DenseLimitError(f"{n_qubits} qubits exceeds the dense limit of {limit}")


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=False)
class PauliString:
    """Tensor product of single-qubit Paulis on ``n`` qubits."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a Pauli string needs at least one qubit")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("bitmask wider than the qubit count")

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n, 0, 0)

    @classmethod
    def from_letters(cls, letters: Mapping[int, str], n: int) -> PauliString:
        """Build a string from a sparse ``{qubit: letter}`` mapping."""
        x = z = 0
        for q, letter in letters.items():
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for {n} qubits")
            bx, bz = _BITS[letter]
            bit = 1 << (n - 1 - q)
            x |= bit * bx
            z |= bit * bz
        return cls(n, x, z)

    def letter(self, q: int) -> str:
        bit = 1 << (self.n - 1 - q)
        bx, bz = bool(self.x & bit), bool(self.z & bit)
        return "Y" if bx and bz else "X" if bx else "Z" if bz else "I"

    def __str__(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    @property
    def weight(self) -> int:
        """Number of non-identity positions."""
        return _popcount(self.x | self.z)

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def support(self) -> tuple[int, ...]:
        """Qubits carrying a non-identity letter, ascending."""
        mask = self.x | self.z
        return tuple(q for q in range(self.n) if mask >> (self.n - 1 - q) & 1)

    def qubits_with(self, letters: str) -> tuple[int, ...]:
        s = str(self)
        return tuple(q for q, c in enumerate(s) if c in letters)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0


def parse_pauli(text: str) -> PauliString:
    """Parse ``"XYZI"``-style text; qubit 0 is the leftmost letter."""
    if not text:
        raise PauliParseError(text, 0)
    n = len(text)
    x = z = 0
    for pos, c in enumerate(text):
        try:
            bx, bz = _BITS[c]
        except KeyError:
            raise PauliParseError(text, pos) from None
        bit = 1 << (n - 1 - pos)
        if bx:
            x |= bit
        if bz:
            z |= bit
    return PauliString(n, x, z)


def _as_string(p: PauliString | str) -> PauliString:
    return parse_pauli(p) if isinstance(p, str) else p


def _check_lengths(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n} qubits")


def multiply(a: PauliString | str, b: PauliString | str) -> tuple[complex, PauliString]:
    """Return ``(phase, c)`` with ``a @ b == phase * c`` and phase in {1, i, -1, -i}."""
    a, b = _as_string(a), _as_string(b)
    _check_lengths(a, b)
    c = PauliString(a.n, a.x ^ b.x, a.z ^ b.z)
    # a = i^ya X^xa Z^za; moving Z^za past X^xb costs (-1)^|za & xb|
    k = a.n_y + b.n_y - c.n_y + 2 * _popcount(a.z & b.x)
    return _PHASES[k % 4], c


def commutes(a: PauliString | str, b: PauliString | str) -> bool:
    """True iff the symplectic product of ``a`` and ``b`` vanishes.

    Equivalent to counting the positions where both letters are
    non-identity and different, and checking that count is even.
    """
    a, b = _as_string(a), _as_string(b)
    _check_lengths(a, b)
    return _popcount((a.x & b.z) ^ (a.z & b.x)) % 2 == 0


@lru_cache(maxsize=8192)
def basis_action(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Signed-permutation form of ``p``: ``p|b> = phase[b] |b ^ x>``.

    Returns the target indices ``b ^ x`` and the complex phases. The arrays
    are cached and read-only.
    """
    dim = 1 << p.n
    idx = np.arange(dim, dtype=np.int64)
    parity = np.bitwise_count(idx & p.z) & 1
    phase = (_PHASES[p.n_y % 4] * (1 - 2 * parity.astype(np.int8))).astype(complex)
    target = idx ^ p.x
    target.flags.writeable = False
    phase.flags.writeable = False
    return target, phase


def to_dense(p: PauliString | str, limit: int | None = None) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of a Pauli string."""
    p = _as_string(p)
    check_dense_limit(p.n, limit)
    target, phase = basis_action(p)
    out = np.zeros((1 << p.n, 1 << p.n), dtype=complex)
    out[target, np.arange(1 << p.n)] = phase
    return out


@dataclass(frozen=True)
class PauliTerm:
    string: PauliString
    coeff: float

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise ValueError(f"non-finite coefficient {self.coeff!r} on {self.string}")

    def __str__(self) -> str:
        return f"{self.coeff:+.12g}*{self.string}"


def _merge(terms: Iterable[PauliTerm], n: int, atol: float) -> tuple[PauliTerm, ...]:
    acc: dict[tuple[int, int], float] = {}
    order: list[tuple[int, int]] = []
    for t in terms:
        if t.string.n != n:
            raise ValueError(f"term {t.string} has {t.string.n} qubits, expected {n}")
        key = (t.string.x, t.string.z)
        if key not in acc:
            acc[key] = 0.0
            order.append(key)
        acc[key] += t.coeff
    return tuple(
        PauliTerm(PauliString(n, *key), acc[key]) for key in order if abs(acc[key]) > atol
    )


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real-weighted sum of Pauli strings plus a scalar offset.

    Identity strings are folded into ``offset`` and duplicate strings are
    merged at construction. ``lambda_one_norm`` and ``lambda_max`` never see
    the offset.
    """

    n_qubits: int
    terms: tuple[PauliTerm, ...] = ()
    offset: float = 0.0
    atol: float = field(default=0.0, repr=False, compare=False)

    def __post_init__(self):
        offset = float(self.offset)
        kept = []
        for t in self.terms:
            if t.string.is_identity():
                offset += t.coeff
            else:
                kept.append(t)
        object.__setattr__(self, "terms", _merge(kept, self.n_qubits, self.atol))
        object.__setattr__(self, "offset", offset)

    @classmethod
    def from_dict(cls, mapping: Mapping[str, float], offset: float = 0.0, atol: float = 0.0):
        """Build from ``{"XZ": 0.5, ...}``."""
        terms = [PauliTerm(parse_pauli(s), float(c)) for s, c in mapping.items()]
        if not terms:
            raise ValueError("cannot infer the qubit count from an empty mapping")
        return cls(terms[0].string.n, tuple(terms), offset, atol)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self.terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms], dtype=float)

    @property
    def strings(self) -> list[PauliString]:
        return [t.string for t in self.terms]

    @property
    def lambda_one_norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs))) if self.terms else 0.0

    @property
    def lambda_max(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.terms else 0.0

    def as_dict(self) -> dict[str, float]:
        return {str(t.string): t.coeff for t in self.terms}

    def canonical_order(self) -> list[PauliTerm]:
        """Descending ``|coeff|``, ties broken by the string text."""
        return sorted(self.terms, key=lambda t: (-abs(t.coeff), str(t.string)))

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "offset": self.offset,
            "terms": [{"string": str(t.string), "coeff": t.coeff} for t in self.terms],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> PauliHamiltonian:
        n = int(data["n_qubits"])
        terms = []
        for item in data["terms"]:
            s = parse_pauli(item["string"])
            if s.n != n:
                raise ValueError(f"string {item['string']!r} does not have {n} qubits")
            terms.append(PauliTerm(s, float(item["coeff"])))
        return cls(n, tuple(terms), float(data.get("offset", 0.0)))

    def to_dense(self, include_offset: bool = True, limit: int | None = None) -> np.ndarray:
        check_dense_limit(self.n_qubits, limit)
        dim = 1 << self.n_qubits
        cols = np.arange(dim)
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            target, phase = basis_action(t.string)
            out[target, cols] += t.coeff * phase
        if include_offset and self.offset:
            out[cols, cols] += self.offset
        return out

    def apply(self, state: np.ndarray, include_offset: bool = True) -> np.ndarray:
        """``H @ state`` for a vector or a stack of column vectors, matrix-free."""
        out = self.offset * state if include_offset else np.zeros_like(state, dtype=complex)
        out = out.astype(complex)
        for t in self.terms:
            target, phase = basis_action(t.string)
            if state.ndim == 2:
                phase = phase[:, None]
            out[target] += t.coeff * phase * state
        return out
