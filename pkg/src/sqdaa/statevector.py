"""Exact statevectors, model distributions, seeded sampling and Pauli rotations."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .pauli import PauliHamiltonian, PauliString, basis_value, parity_signs

NORM_TOL = 1e-10
LOAD_NORM_TOL = 1e-6
RNG_ALGORITHM = "numpy.random.Philox(4x64) + inverse-CDF search"
_CHUNK = 1 << 20


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator used for every random draw in the package."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} amplitudes, got shape {amps.shape}")
        self.amplitudes = amps
        self.check_norm()

    def check_norm(self, tol: float = NORM_TOL):
        norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm - 1.0) > tol:
            raise ValueError(f"state norm^2 {norm!r} deviates from 1 by more than {tol}")

    @property
    def dim(self) -> int:
        return 1 << self.n

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def basis(cls, n: int, z) -> "StateVector":
        amps = np.zeros(1 << n, dtype=complex)
        amps[basis_value(z, n)] = 1.0
        return cls(n, amps)


def load_state(text: str | TextIO, n: int) -> StateVector:
    """Read ``index real [imag]`` lines; missing indices are zero amplitudes.

    Inputs whose squared norm is within 1e-6 of one are renormalized.
    """
    if not isinstance(text, str):
        text = text.read()
    amps = np.zeros(1 << n, dtype=complex)
    seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"line {lineno}: expected 'index real [imag]'")
        idx = int(parts[0])
        if not 0 <= idx < (1 << n):
            raise ValueError(f"line {lineno}: index {idx} out of range for n={n}")
        amps[idx] += complex(float(parts[1]), float(parts[2]) if len(parts) == 3 else 0.0)
        seen = True
    if not seen:
        raise ValueError("empty state file")
    norm = float(np.vdot(amps, amps).real)
    if abs(norm - 1.0) > LOAD_NORM_TOL:
        raise ValueError(f"state norm^2 {norm} deviates from 1 by more than {LOAD_NORM_TOL}")
    return StateVector(n, amps / math.sqrt(norm))


def serialize_state(state: StateVector, cutoff: float = 0.0) -> str:
    buf = io.StringIO()
    for idx, amp in enumerate(state.amplitudes):
        if abs(amp) > cutoff:
            buf.write(f"{idx} {amp.real:.17g} {amp.imag:.17g}\n")
    return buf.getvalue()


@dataclass(frozen=True)
class Distribution:
    """Decaying model distribution over basis-state index ``l``.

    ``exponential``: p_l ~ exp(-alpha l); ``algebraic``: p_l ~ (l+1)^-gamma;
    ``step``: uniform over the first ``m`` states.
    """

    kind: str
    param: float

    @classmethod
    def exponential(cls, alpha: float) -> "Distribution":
        return cls("exponential", float(alpha))

    @classmethod
    def algebraic(cls, gamma: float) -> "Distribution":
        return cls("algebraic", float(gamma))

    @classmethod
    def step(cls, m: int) -> "Distribution":
        return cls("step", int(m))

    def validate(self, n: int | None = None):
        if self.kind == "exponential":
            if not self.param > 0:
                raise ValueError("exponential decay needs alpha > 0")
        elif self.kind == "algebraic":
            if not self.param > 1:
                raise ValueError("algebraic decay needs gamma > 1")
        elif self.kind == "step":
            if self.param < 1 or int(self.param) != self.param:
                raise ValueError("step width m must be a positive integer")
            if n is not None and self.param > (1 << n):
                raise ValueError(f"step width m={self.param} exceeds 2^{n}")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    def weights(self, size: int) -> np.ndarray:
        """Unnormalized weights for indices ``0..size-1``."""
        self.validate()
        l = np.arange(size, dtype=float)
        if self.kind == "exponential":
            return np.exp(-self.param * l)
        if self.kind == "algebraic":
            return (l + 1.0) ** (-self.param)
        return (l < self.param).astype(float)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "param": self.param}


def model_probabilities(dist: Distribution, n: int) -> np.ndarray:
    dist.validate(n)
    w = dist.weights(1 << n)
    return w / w.sum()


def model_state(dist: Distribution, n: int) -> StateVector:
    return StateVector(n, np.sqrt(model_probabilities(dist, n)).astype(complex))


@dataclass
class SampleResult:
    counts: dict[int, int]
    shots: int
    seed: object
    n: int
    algorithm: str = field(default=RNG_ALGORITHM)

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not add up to the shot count")

    def frequencies(self) -> dict[int, float]:
        return {z: c / self.shots for z, c in self.counts.items()}

    def most_frequent(self) -> int:
        """Bitstring with the highest count; ties go to the lowest value."""
        return min(self.counts, key=lambda z: (-self.counts[z], z))

    def to_csv(self) -> str:
        lines = ["bitstring,count"]
        for z in sorted(self.counts):
            lines.append(f"{format(z, f'0{self.n}b')},{self.counts[z]}")
        return "\n".join(lines) + "\n"


def _cdf(probs: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    return cdf / cdf[-1]


def draw_indices(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws. Zero-probability indices are never returned."""
    cdf = _cdf(np.asarray(probs, dtype=float))
    out = np.empty(shots, dtype=np.int64)
    for start in range(0, shots, _CHUNK):
        stop = min(shots, start + _CHUNK)
        u = rng.random(stop - start)
        out[start:stop] = np.searchsorted(cdf, u, side="right")
    np.minimum(out, len(cdf) - 1, out=out)
    return out


def sample(state: StateVector, shots: int, seed=None) -> SampleResult:
    """Measure ``state`` in the computational basis ``shots`` times."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = make_rng(seed)
    idx = draw_indices(state.probabilities(), shots, rng)
    values, counts = np.unique(idx, return_counts=True)
    recorded = seed if isinstance(seed, (int, np.integer)) or seed is None else "generator"
    return SampleResult({int(v): int(c) for v, c in zip(values, counts)}, shots, recorded, state.n)


def shots_until_new(probs: np.ndarray, seen: np.ndarray, rng: np.random.Generator) -> tuple[int, int]:
    """Simulate measuring until an index outside ``seen`` appears.

    Returns ``(shots, index)``. Equivalent in distribution to repeated single
    draws: the waiting time is geometric in the unseen probability mass and
    the discovered index is drawn proportionally within the unseen set. Shot
    counts in the billions cost O(2^n) work instead of O(shots).
    Returns ``(0, -1)`` when no unseen index has positive probability.
    """
    unseen = np.where(seen, 0.0, probs)
    q = float(unseen.sum())
    if q <= 0.0:
        return 0, -1
    shots = int(rng.geometric(min(q, 1.0)))
    return shots, int(draw_indices(unseen, 1, rng)[0])


def _pauli_action(amps: np.ndarray, string: PauliString) -> np.ndarray:
    idx = np.arange(len(amps), dtype=np.int64)
    signs = parity_signs(idx & string.z_mask)
    phase = (1, 1j, -1, -1j)[string.y_count % 4]
    out = np.empty_like(amps)
    out[idx ^ string.x_mask] = phase * signs * amps
    return out


def apply_pauli_exponential(state: StateVector, term: tuple[float, PauliString], angle_scale: float) -> StateVector:
    """Apply ``exp(i * angle_scale * c * P) = cos(phi) I + i sin(phi) P``."""
    coeff, string = term
    if string.n != state.n:
        raise ValueError(f"term acts on {string.n} qubits, state has {state.n}")
    phi = angle_scale * coeff
    amps = math.cos(phi) * state.amplitudes + 1j * math.sin(phi) * _pauli_action(state.amplitudes, string)
    return StateVector(state.n, amps)


def expectation(state: StateVector, H: PauliHamiltonian, tol: float = 1e-10) -> float:
    if H.n != state.n:
        raise ValueError(f"Hamiltonian acts on {H.n} qubits, state has {state.n}")
    val = np.vdot(state.amplitudes, H.apply(state.amplitudes))
    if abs(val.imag) > tol * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary part {val.imag}")
    return float(val.real)
