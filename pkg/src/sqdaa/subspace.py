"""Projection of a Pauli Hamiltonian onto sampled bitstrings and its ground state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .pauli import PauliHamiltonian, basis_value, dense_matrix, parity_signs

HERMITIAN_TOL = 1e-10
MAX_DENSE_DIM = 2048


@dataclass(frozen=True)
class Subspace:
    basis: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(int(z) for z in self.basis))
        if not self.basis:
            raise ValueError("subspace needs at least one bitstring")
        if len(set(self.basis)) != len(self.basis):
            raise ValueError("subspace basis has duplicates")

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class SubspaceSolution:
    energy: float
    groundvector: np.ndarray
    subspace: Subspace | None = None

    def to_dict(self, n: int | None = None) -> dict:
        basis = list(self.subspace.basis) if self.subspace else []
        if n is not None:
            basis = [format(z, f"0{n}b") for z in basis]
        return {"energy": self.energy, "basis": basis}


def project_hamiltonian(H: PauliHamiltonian, S: Subspace) -> np.ndarray:
    """Matrix ``<z_i|H|z_j>`` over the subspace basis.

    For every term, column ``j`` has at most one nonzero row ``z_j ^ xmask``;
    that row is found by binary search over the sorted basis.
    """
    basis = np.array([basis_value(z, H.n) for z in S.basis], dtype=np.int64)
    order = np.argsort(basis)
    sorted_basis = basis[order]
    dim = len(basis)
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for x, z, w in zip(*H.masks()):
        targets = basis ^ x
        pos = np.searchsorted(sorted_basis, targets)
        pos = np.minimum(pos, dim - 1)
        hit = sorted_basis[pos] == targets
        if not hit.any():
            continue
        rows = order[pos[hit]]
        signs = parity_signs(basis[hit] & z)
        out[rows, cols[hit]] += w * signs
    return out


def solve_subspace(Hs: np.ndarray, subspace: Subspace | None = None) -> SubspaceSolution:
    """Lowest eigenpair of a Hermitian matrix (dense solver)."""
    Hs = np.asarray(Hs)
    if Hs.ndim != 2 or Hs.shape[0] != Hs.shape[1] or Hs.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {Hs.shape}")
    scale = max(1.0, float(np.abs(Hs).max()))
    if np.abs(Hs - Hs.conj().T).max() > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    if Hs.shape[0] == 1:
        return SubspaceSolution(float(Hs[0, 0].real), np.ones(1, dtype=complex), subspace)
    if Hs.shape[0] > MAX_DENSE_DIM:
        raise ValueError(f"subspace dimension {Hs.shape[0]} exceeds dense limit {MAX_DENSE_DIM}")
    vals, vecs = scipy.linalg.eigh(Hs, subset_by_index=[0, 0])
    return SubspaceSolution(float(vals[0]), vecs[:, 0].astype(complex), subspace)


def subspace_ground_state(H: PauliHamiltonian, basis) -> SubspaceSolution:
    S = basis if isinstance(basis, Subspace) else Subspace(tuple(basis))
    return solve_subspace(project_hamiltonian(H, S), S)


def energy_delta(prev: SubspaceSolution, cur: SubspaceSolution) -> float:
    return abs(prev.energy - cur.energy)


def exact_ground_state(H: PauliHamiltonian) -> tuple[float, np.ndarray]:
    """Full-space ground energy and vector: dense below 11 qubits, Lanczos above."""
    if H.n <= 10:
        vals, vecs = np.linalg.eigh(dense_matrix(H))
        return float(vals[0]), vecs[:, 0]
    dim = 1 << H.n
    op = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=H.apply, dtype=complex)
    v0 = np.full(dim, dim ** -0.5, dtype=complex)
    vals, vecs = scipy.sparse.linalg.eigsh(op, k=1, which="SA", v0=v0)
    return float(vals[0]), vecs[:, 0]
