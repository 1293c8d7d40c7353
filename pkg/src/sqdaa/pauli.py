"""Pauli strings, qubit Hamiltonians and computational-basis matrix elements.

Bit convention used throughout the package: the rightmost character of a
Pauli word acts on qubit 0, and qubit ``q`` is bit ``q`` of a basis-state
integer. ``"XZ"`` is therefore ``X`` on qubit 1 and ``Z`` on qubit 0.

A string is stored as a pair of bit masks. ``X`` sets the x bit, ``Z`` sets
the z bit and ``Y`` sets both, so that

    P|z'> = i^{#Y} (-1)^{popcount(z' & zmask)} |z' ^ xmask>.

Hamiltonian text format, one term per line::

    # comment
    0.5 XXI
    -1.25 ZIZ
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

PAULI_LETTERS = "IXYZ"
MAX_DENSE_QUBITS = 14

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def parity_signs(masked: np.ndarray) -> np.ndarray:
    """``(-1)^popcount`` of each entry, as int64 (avoids uint8 wrap-around)."""
    return 1 - 2 * (np.bitwise_count(masked).astype(np.int64) & 1)


@dataclass(frozen=True)
class Bitstring:
    """A computational basis state ``|value>`` on ``n`` qubits."""

    value: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.value < (1 << self.n):
            raise ValueError(f"bitstring value {self.value} out of range for n={self.n}")

    def __str__(self):
        return format(self.value, f"0{self.n}b")

    @classmethod
    def from_str(cls, bits: str) -> "Bitstring":
        return cls(int(bits, 2), len(bits))


def basis_value(z, n: int) -> int:
    """Integer value of ``z`` (an int or :class:`Bitstring`), range-checked for ``n`` qubits."""
    if isinstance(z, Bitstring):
        if z.n != n:
            raise ValueError(f"bitstring has n={z.n}, expected {n}")
        return z.value
    z = int(z)
    if not 0 <= z < (1 << n):
        raise ValueError(f"basis index {z} out of range for n={n}")
    return z


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, written as a word over I, X, Y, Z."""

    ops: str
    x_mask: int = field(init=False, repr=False, compare=False)
    z_mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ops = self.ops.upper()
        if not ops:
            raise ValueError("empty Pauli word")
        bad = set(ops) - set(PAULI_LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli characters {sorted(bad)} in {self.ops!r}")
        object.__setattr__(self, "ops", ops)
        x = z = 0
        for q, op in enumerate(reversed(ops)):
            if op in "XY":
                x |= 1 << q
            if op in "ZY":
                z |= 1 << q
        object.__setattr__(self, "x_mask", x)
        object.__setattr__(self, "z_mask", z)

    @property
    def n(self) -> int:
        return len(self.ops)

    @property
    def y_count(self) -> int:
        return (self.x_mask & self.z_mask).bit_count()

    def op_on(self, qubit: int) -> str:
        return self.ops[self.n - 1 - qubit]

    @property
    def support(self) -> int:
        """Mask of qubits acted on non-trivially."""
        return self.x_mask | self.z_mask

    def is_identity(self) -> bool:
        return self.support == 0

    def is_single_z(self) -> bool:
        return self.x_mask == 0 and self.z_mask.bit_count() == 1

    def apply_to_basis(self, z: int) -> tuple[int, complex]:
        """Return ``(z_out, phase)`` with ``P|z> = phase |z_out>``."""
        sign = -1.0 if (z & self.z_mask).bit_count() & 1 else 1.0
        return z ^ self.x_mask, sign * _I_POWERS[self.y_count % 4]

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for op in self.ops:
            out = np.kron(out, _PAULI_MATRICES[op])
        return out

    def __str__(self):
        return self.ops


def _sort_key(term: tuple[float, PauliString]):
    coeff, string = term
    return (string.ops, coeff < 0, abs(coeff))


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real-weighted sum of Pauli strings ``H = sum_i c_i P_i``.

    Terms keep the order in which they were first seen; duplicate strings are
    merged by adding coefficients. Use :meth:`sorted` for the canonical
    lexicographic order.
    """

    n: int
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("Hamiltonian needs at least one term")
        seen = set()
        for coeff, string in self.terms:
            if string.n != self.n:
                raise ValueError(f"term {string} has {string.n} qubits, expected {self.n}")
            if not math.isfinite(coeff):
                raise ValueError(f"non-finite coefficient on {string}")
            if string.ops in seen:
                raise ValueError(f"duplicate term {string}; use PauliHamiltonian.from_terms")
            seen.add(string.ops)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, str | PauliString]]) -> "PauliHamiltonian":
        merged: dict[str, float] = {}
        for coeff, word in terms:
            ops = word.ops if isinstance(word, PauliString) else PauliString(word).ops
            merged[ops] = merged.get(ops, 0.0) + float(coeff)
        if not merged:
            raise ValueError("Hamiltonian needs at least one term")
        lengths = {len(w) for w in merged}
        if len(lengths) != 1:
            raise ValueError(f"inconsistent Pauli word lengths {sorted(lengths)}")
        return cls(lengths.pop(), tuple((c, PauliString(w)) for w, c in merged.items()))

    @property
    def L(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    @property
    def one_norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients)))

    def sorted(self) -> "PauliHamiltonian":
        return PauliHamiltonian(self.n, tuple(sorted(self.terms, key=_sort_key)))

    def masks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(x_masks, z_masks, coeff * i^{#Y})`` for vectorized evaluation."""
        x = np.array([p.x_mask for _, p in self.terms], dtype=np.int64)
        z = np.array([p.z_mask for _, p in self.terms], dtype=np.int64)
        w = np.array([c * _I_POWERS[p.y_count % 4] for c, p in self.terms], dtype=complex)
        return x, z, w

    def split_single_z(self) -> tuple[list, list]:
        """Partition terms into single-Z terms and everything else."""
        hz = [t for t in self.terms if t[1].is_single_z()]
        rest = [t for t in self.terms if not t[1].is_single_z()]
        return hz, rest

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Return ``H @ vec`` for a length-2^n vector without forming a matrix."""
        vec = np.asarray(vec)
        if vec.shape != (1 << self.n,):
            raise ValueError(f"vector length {vec.shape} does not match n={self.n}")
        idx = np.arange(1 << self.n, dtype=np.int64)
        out = np.zeros(vec.shape, dtype=complex)
        for x, z, w in zip(*self.masks()):
            signs = parity_signs(idx & z)
            out[idx ^ x] += w * signs * vec
        return out


def parse_hamiltonian(text: str | TextIO) -> PauliHamiltonian:
    """Parse ``"<coefficient> <pauli word>"`` lines; ``#`` starts a comment line."""
    if not isinstance(text, str):
        text = text.read()
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<coefficient> <pauli word>', got {raw!r}")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed coefficient {parts[0]!r}") from None
        if not math.isfinite(coeff):
            raise ValueError(f"line {lineno}: non-finite coefficient")
        terms.append((coeff, PauliString(parts[1])))
    if not terms:
        raise ValueError("no Hamiltonian terms found")
    return PauliHamiltonian.from_terms(terms)


def serialize_hamiltonian(H: PauliHamiltonian) -> str:
    buf = io.StringIO()
    for coeff, string in H.terms:
        buf.write(f"{coeff:.17g} {string.ops}\n")
    return buf.getvalue()


def load_hamiltonian(path) -> PauliHamiltonian:
    with open(path) as fh:
        return parse_hamiltonian(fh)


def matrix_element(H: PauliHamiltonian, z, z_prime) -> complex:
    """``<z|H|z'>`` from the parity rules, without building any matrix."""
    a = basis_value(z, H.n)
    b = basis_value(z_prime, H.n)
    flip = a ^ b
    total = 0j
    for coeff, p in H.terms:
        if p.x_mask == flip:
            _, phase = p.apply_to_basis(b)
            total += coeff * phase
    return total


def dense_matrix(H: PauliHamiltonian) -> np.ndarray:
    """Full ``2^n x 2^n`` matrix by Kronecker products (reference oracle)."""
    if H.n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense matrix refused for n={H.n} > {MAX_DENSE_QUBITS}")
    dim = 1 << H.n
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, p in H.terms:
        out += coeff * p.matrix()
    return out


def _basis_conflict(basis: dict[int, str], string: PauliString) -> tuple[bool, bool]:
    """Return ``(overlaps, conflicts)`` between an accumulated basis and a string."""
    overlaps = conflicts = False
    for q in range(string.n):
        op = string.op_on(q)
        if op == "I" or q not in basis:
            continue
        overlaps = True
        if basis[q] != op:
            conflicts = True
    return overlaps, conflicts


def basis_groups(H: PauliHamiltonian, ordered: bool = False) -> list[list[tuple[float, PauliString]]]:
    """Split the non-identity terms into runs that share one single-qubit basis.

    Terms are scanned in lexicographic order (or in stored order when
    ``ordered`` is true). A term joins the current run when it acts on at
    least one qubit already used by the run and agrees with the run's Pauli
    on every such qubit; otherwise it starts a new run. Identity terms need
    no rotation and are skipped.
    """
    terms = H.terms if ordered else H.sorted().terms
    groups: list[list[tuple[float, PauliString]]] = []
    basis: dict[int, str] = {}
    for term in terms:
        string = term[1]
        if string.is_identity():
            continue
        overlaps, conflicts = _basis_conflict(basis, string)
        if not basis or not overlaps or conflicts:
            groups.append([])
            basis = {}
        groups[-1].append(term)
        for q in range(string.n):
            op = string.op_on(q)
            if op != "I":
                basis[q] = op
    return groups


def reduced_term_count(H: PauliHamiltonian, ordered: bool = False) -> int:
    """Number of single-qubit basis layers needed to rotate every term of ``H``."""
    return len(basis_groups(H, ordered))


def random_hamiltonian(n: int, n_terms: int, rng: np.random.Generator,
                       letters: Sequence[str] = "IXYZ") -> PauliHamiltonian:
    """Random real-coefficient Hamiltonian, used by tests and demo configs."""
    terms = []
    for _ in range(n_terms):
        word = "".join(rng.choice(list(letters), size=n))
        terms.append((float(rng.normal()), word))
    return PauliHamiltonian.from_terms(terms)
