"""Trotterized adiabatic state preparation from a single-Z starting Hamiltonian."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .pauli import PauliHamiltonian, basis_groups
from .statevector import StateVector, apply_pauli_exponential, expectation

FEASIBILITY_GAIN = 1e-3


def _smoothstep(u: float) -> float:
    return u * u * (3.0 - 2.0 * u)


SWEEPS: dict[str, Callable[[float], float]] = {
    "linear": lambda u: u,
    "smoothstep": _smoothstep,
}


class ASPError(ValueError):
    pass


def initial_bitstring(H: PauliHamiltonian) -> int:
    """Ground state of the single-Z part: qubit ``q`` is 1 when its coefficient is positive."""
    hz, _ = H.split_single_z()
    if not hz:
        raise ASPError("Hamiltonian has no single-Z terms to start the sweep from")
    z = 0
    for coeff, string in hz:
        if coeff > 0:
            z |= string.z_mask
    return z


@dataclass
class ASPTrace:
    """Rotation layers applied during one sweep."""

    rotations: int = 0
    steps: int = 0
    reps: int = 0


def asp_evolve(H: PauliHamiltonian, T: float, reps: int, steps: int,
               sweep: Callable[[float], float] | str = "linear", sign: float = -1.0,
               trace: ASPTrace | None = None) -> StateVector:
    """Evolve the single-Z ground state under ``H(u) = H_Z + w(u) H_rest``.

    The sweep runs ``steps`` time slices of length ``T / steps`` at
    ``u = a / steps`` for ``a = 1..steps``; each slice is ``reps`` first-order
    Trotter products over the lexicographically sorted terms. ``sign = -1``
    gives ``exp(-i H dt)``. Each basis group of terms counts as one rotation
    layer in ``trace``.
    """
    if reps < 1 or steps < 1:
        raise ValueError("reps and steps must be >= 1")
    if not T > 0:
        raise ValueError("sweep time T must be positive")
    w = SWEEPS[sweep] if isinstance(sweep, str) else sweep
    state = StateVector.basis(H.n, initial_bitstring(H))
    groups = basis_groups(H)
    dt = T / steps
    for a in range(1, steps + 1):
        scale_rest = w(a / steps)
        for _ in range(reps):
            for group in groups:
                for coeff, string in group:
                    c = coeff if string.is_single_z() else coeff * scale_rest
                    state = apply_pauli_exponential(state, (c, string), sign * dt / reps)
                if trace is not None:
                    trace.rotations += 1
    if trace is not None:
        trace.steps += steps
        trace.reps = reps
    return state


@dataclass(frozen=True)
class ASPResult:
    state: StateVector
    reps: int
    steps: int
    energy: float
    initial_energy: float
    rotations: int
    feasible: tuple[tuple[int, int, float], ...]

    def to_dict(self) -> dict:
        return {
            "reps": self.reps, "steps": self.steps, "energy": self.energy,
            "initial_energy": self.initial_energy, "rotations": self.rotations,
            "feasible": [list(p) for p in self.feasible],
        }


def asp_prepare(H: PauliHamiltonian, T: float, grid: Iterable[tuple[int, int]],
                sweep: Callable[[float], float] | str = "linear",
                min_gain: float = FEASIBILITY_GAIN) -> ASPResult:
    """Cheapest ``(reps, steps)`` whose sweep lowers ``<H>`` by at least ``min_gain``.

    Cost is ``reps * steps``; ties prefer fewer reps, then fewer steps.
    """
    start = StateVector.basis(H.n, initial_bitstring(H))
    e0 = expectation(start, H)
    feasible = []
    for reps, steps in sorted(set(grid), key=lambda p: (p[0] * p[1], p[0], p[1])):
        trace = ASPTrace()
        state = asp_evolve(H, T, reps, steps, sweep, trace=trace)
        e = expectation(state, H)
        if e0 - e >= min_gain:
            feasible.append((reps, steps, e, state, trace.rotations))
    if not feasible:
        resid = H.apply(start.amplitudes) - e0 * start.amplitudes
        if float(np.linalg.norm(resid)) < 1e-9:
            raise ASPError("no feasible (reps, steps) pair: initial state already converged")
        raise ASPError(f"no (reps, steps) pair lowers <H> by {min_gain} from {e0:.6f}")
    reps, steps, e, state, rotations = feasible[0]
    return ASPResult(state, reps, steps, e, e0, rotations,
                     tuple((r, s, en) for r, s, en, _, _ in feasible))
