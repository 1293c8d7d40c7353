"""Amplitude amplification away from an already-measured set of bitstrings.

Every operator here keeps the state inside the plane spanned by the
initial state's projection onto the reduction set and onto its complement,
so reflections are applied as 2x2 updates on those two coordinates and the
result is expanded back to a full statevector. Gate costs are counted
separately by :func:`aa_circuit_tcount`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .statevector import StateVector


@dataclass(frozen=True)
class ReductionSet:
    """Bitstrings whose probability is suppressed, and their total weight ``R``.

    ``R`` is whatever the caller knows: exact for simulations, an estimate
    inside the driver. Operators below always use the exact weights of the
    members in the state they act on.
    """

    members: tuple[int, ...]
    R: float

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(int(z) for z in self.members))
        if len(set(self.members)) != len(self.members):
            raise ValueError("reduction set members must be distinct")
        if not 0.0 <= self.R < 1.0:
            raise ValueError(f"R must lie in [0, 1), got {self.R}")

    @classmethod
    def exact(cls, state: StateVector, members) -> "ReductionSet":
        members = tuple(int(z) for z in members)
        _, complement = _split_weights(state, members)
        if complement <= 0.0:
            raise ValueError("reduction set covers every nonzero amplitude (R = 1)")
        return cls(members, max(0.0, 1.0 - complement))

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class PlanRecord:
    k: int
    s: int
    shots: int
    phase: str = "aa"          # "aa", "probe" or "direct"
    set_size: int = 0

    @property
    def Q(self) -> int:
        return 2 * self.s + 1

    @property
    def queries(self) -> int:
        return self.shots * self.Q


@dataclass
class AAPlan:
    """Step counts, query counts and shots of every circuit that was sampled."""

    records: list[PlanRecord] = field(default_factory=list)

    def add(self, k: int, s: int, shots: int, phase: str = "aa", set_size: int = 0) -> PlanRecord:
        rec = PlanRecord(k, int(s), int(shots), phase, int(set_size))
        self.records.append(rec)
        return rec

    def _sum(self, phases) -> int:
        return sum(r.queries for r in self.records if r.phase in phases)

    @property
    def Q_tot_AA(self) -> int:
        return self._sum(("aa", "probe"))

    @property
    def Q_tot_dir(self) -> int:
        return self._sum(("direct",))

    @property
    def Q_tot(self) -> int:
        return self.Q_tot_AA + self.Q_tot_dir

    @property
    def shots(self) -> int:
        return sum(r.shots for r in self.records)

    def to_dict(self) -> dict:
        return {
            "records": [
                {"k": r.k, "s": r.s, "Q": r.Q, "shots": r.shots, "phase": r.phase, "set_size": r.set_size}
                for r in self.records
            ],
            "Q_tot_AA": self.Q_tot_AA,
            "Q_tot_dir": self.Q_tot_dir,
            "Q_tot": self.Q_tot,
            "shots": self.shots,
        }


def theta_from_R(R: float, complement: float | None = None) -> float:
    """Rotation half-angle ``arccos(sqrt(R))``.

    Passing the complement weight ``1 - R`` directly keeps precision when
    ``R`` is within a few ulps of one.
    """
    if not 0.0 <= R < 1.0:
        raise ValueError(f"R must lie in [0, 1), got {R}")
    if complement is None:
        complement = 1.0 - R
    return math.atan2(math.sqrt(complement), math.sqrt(R))


def ideal_steps(theta: float, F_T: float = 1.0) -> int:
    """Steps ``floor(arcsin(sqrt(F_T)) / (2 theta))``; ``floor(pi/(4 theta))`` at F_T = 1."""
    if not 0.0 < theta <= math.pi / 2 + 1e-15:
        raise ValueError(f"theta must lie in (0, pi/2], got {theta}")
    if not 0.0 < F_T <= 1.0:
        raise ValueError(f"F_T must lie in (0, 1], got {F_T}")
    # Guard against floor() landing one short on exact ratios such as pi/pi.
    return int(math.floor(math.asin(math.sqrt(F_T)) / (2.0 * theta) + 1e-12))


def _split_weights(state: StateVector, members) -> tuple[float, float]:
    mask = np.zeros(state.dim, dtype=bool)
    mask[list(members)] = True
    probs = state.probabilities()
    return float(probs[mask].sum()), float(probs[~mask].sum())


def _plane(state0: StateVector, members):
    mask = np.zeros(state0.dim, dtype=bool)
    mask[list(members)] = True
    inside = np.where(mask, state0.amplitudes, 0)
    outside = np.where(mask, 0, state0.amplitudes)
    r_in = math.sqrt(float(np.vdot(inside, inside).real))
    r_out = math.sqrt(float(np.vdot(outside, outside).real))
    if r_out <= 0.0:
        raise ValueError("reduction set covers every nonzero amplitude (R = 1)")
    u = inside / r_in if r_in > 0 else inside
    v = outside / r_out
    norm = math.hypot(r_in, r_out)
    return u, v, np.array([r_in / norm, r_out / norm], dtype=complex)


def _members(set_or_members) -> tuple[int, ...]:
    if isinstance(set_or_members, ReductionSet):
        return set_or_members.members
    return tuple(int(z) for z in set_or_members)


def _expand(n: int, u, v, coords) -> StateVector:
    return StateVector(n, coords[0] * u + coords[1] * v)


def standard_step_matrix(psi: np.ndarray) -> np.ndarray:
    """One step ``-S_psi S_P`` in the (set, complement) plane.

    ``S_P = -(I - 2P)`` keeps the set component and flips the complement;
    ``S_psi = I - 2|psi><psi|``.
    """
    s_p = np.diag([1.0, -1.0]).astype(complex)
    s_psi = np.eye(2) - 2.0 * np.outer(psi, psi.conj())
    return -s_psi @ s_p


def apply_standard_aa(state0: StateVector, reduction, s: int) -> StateVector:
    """Return ``A^s |psi_0>``, rotating weight away from the reduction set."""
    if s < 0:
        raise ValueError("s must be >= 0")
    members = _members(reduction)
    if not members:
        raise ValueError("reduction set is empty")
    u, v, psi = _plane(state0, members)
    if s == 0:
        return StateVector(state0.n, state0.amplitudes.copy())
    coords = np.linalg.matrix_power(standard_step_matrix(psi), s) @ psi
    return _expand(state0.n, u, v, coords)


def chebyshev_T(L: float, x: float) -> float:
    """Chebyshev polynomial ``T_L(x)`` continued to non-integer ``L`` and ``x > 1``."""
    if abs(x) <= 1.0:
        return math.cos(L * math.acos(x))
    if x > 1.0:
        return math.cosh(L * math.acosh(x))
    return (-1) ** int(L) * math.cosh(L * math.acosh(-x))


def fixed_point_angles(s: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Phase schedule ``(alpha_1..alpha_s, beta_1..beta_s)`` for ``s`` generalized steps.

    With ``L = 2s + 1`` and ``1/gamma = T_{1/L}(1/delta)``:
    ``alpha_j = 2 acot(tan(2 pi j / L) sqrt(1 - gamma^2))`` on the branch
    (0, pi), and ``beta_j = alpha_{s-j+1}``.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    L = 2 * s + 1
    gamma = 1.0 / chebyshev_T(1.0 / L, 1.0 / delta)
    root = math.sqrt(max(0.0, 1.0 - gamma * gamma))
    j = np.arange(1, s + 1)
    alphas = 2.0 * np.arctan2(1.0, np.tan(2.0 * np.pi * j / L) * root)
    return alphas, alphas[::-1].copy()


def fixed_point_fidelity(s: int, delta: float, F0: float) -> float:
    """Closed-form complement weight after ``s`` fixed-point steps from overlap ``F0``."""
    if s == 0:
        return F0
    L = 2 * s + 1
    x = chebyshev_T(1.0 / L, 1.0 / delta) * math.sqrt(max(0.0, 1.0 - F0))
    return 1.0 - delta ** 2 * chebyshev_T(L, x) ** 2


def fixed_point_min_steps(delta: float, F0: float) -> int:
    """Smallest ``s`` with ``s >= ln(2/delta) / (2 sqrt(F0))``."""
    if not 0.0 < F0 <= 1.0:
        raise ValueError("F0 must lie in (0, 1]")
    return max(1, math.ceil(math.log(2.0 / delta) / (2.0 * math.sqrt(F0)) - 1e-12))


def apply_fixed_point_aa(state0: StateVector, reduction, s: int, delta: float) -> StateVector:
    """Apply ``s`` generalized steps ``-S_psi(alpha_j) S_P(beta_j)``, ``j = 1`` first.

    ``S_P(beta) = I - (1 - e^{i beta}) P`` acts on the reduction set and
    ``S_psi(alpha) = I - (1 - e^{-i alpha}) |psi_0><psi_0|``. The complement
    weight is at least ``1 - delta^2`` once ``s`` reaches
    :func:`fixed_point_min_steps`; smaller ``s`` is allowed with a warning.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    members = _members(reduction)
    if not members:
        raise ValueError("reduction set is empty")
    u, v, psi = _plane(state0, members)
    if s == 0:
        return StateVector(state0.n, state0.amplitudes.copy())
    F0 = float(abs(psi[1]) ** 2)
    if s < fixed_point_min_steps(delta, F0):
        warnings.warn(f"s={s} is below the fixed-point guarantee threshold; fidelity bound not assured",
                      stacklevel=2)
    alphas, betas = fixed_point_angles(s, delta)
    proj = np.outer(psi, psi.conj())
    coords = psi.copy()
    for a, b in zip(alphas, betas):
        coords = np.array([np.exp(1j * b) * coords[0], coords[1]])
        coords = coords - (1.0 - np.exp(-1j * a)) * (proj @ coords)
        coords = -coords
    return _expand(state0.n, u, v, coords)


def cnnot_tcount(n: int) -> int:
    """T gates in one multi-controlled NOT on ``n`` qubits: ``4n - 6``."""
    if n < 2:
        raise ValueError("multi-controlled NOT needs n >= 2")
    return 4 * n - 6


def cnnot_tdepth(n: int) -> int:
    """T depth of one multi-controlled NOT, taken as ``min(5, 4n - 6)``."""
    return min(5, cnnot_tcount(n))


def aa_circuit_tcount(n: int, k: int, s: int, T_prep: int, d_prep: int | None = None,
                      include_reflection: bool = True) -> tuple[int, int]:
    """T count and T depth of one circuit with ``s`` AA steps over ``k`` reduced bitstrings.

    Count: ``(2s+1) T_prep`` for the preparation calls, ``s k (4n-6)`` for the
    one multi-controlled NOT per member per step, and ``s (4n-6)`` for the
    zero-state reflection inside each ``S_psi`` (dropped when
    ``include_reflection`` is false). Depth uses ``d_prep`` (defaults to
    ``T_prep``) and :func:`cnnot_tdepth` with the same multiplicities.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if s < 0 or k < 0:
        raise ValueError("k and s must be >= 0")
    if s > 0 and k < 1:
        raise ValueError("an AA circuit needs k >= 1 reduced bitstrings")
    if d_prep is None:
        d_prep = T_prep
    gates = s * k + (s if include_reflection else 0)
    count = (2 * s + 1) * T_prep + gates * cnnot_tcount(n)
    depth = (2 * s + 1) * d_prep + gates * cnnot_tdepth(n)
    return int(count), int(depth)
