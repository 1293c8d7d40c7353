"""Sampling drivers: plain subspace diagonalization and its amplified variant.

The amplified driver alternates between measuring the current state,
recording the dominant unseen bitstring, estimating how much probability
the recorded bitstrings carry in the initial state, and rotating that
weight away with amplitude amplification. When the reconstructed
probabilities flatten out it switches to sampling the last rotated state
directly.

Two sets are tracked. Every bitstring ever observed joins the
diagonalization subspace. Only the dominant bitstring of each iteration
joins the reduction set that amplification suppresses: assigning all
observed bitstrings to it would hand the entire unreduced weight to the
observed ones and drive the estimated remainder to zero.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .amplification import AAPlan, apply_standard_aa, ideal_steps, theta_from_R
from .pauli import PauliHamiltonian
from .statevector import RNG_ALGORITHM, StateVector, draw_indices, make_rng, shots_until_new
from .subspace import Subspace, SubspaceSolution, project_hamiltonian, solve_subspace

P0_CAP = 1.0 - 1e-9

ENERGY_CONVERGED = "energy-converged"
FLATNESS_THEN_ENERGY = "flatness-then-energy-converged"
TARGET_ERROR = "target-error-reached"
TARGETS_COLLECTED = "targets-collected"
SUPPORT_EXHAUSTED = "support-exhausted"
MAX_ITERATIONS = "max-iterations"


class AdaptationFailed(RuntimeError):
    """Step adaptation used its probe budget without reaching an unreduced bitstring."""


class ShotBudgetExceeded(RuntimeError):
    pass


@dataclass
class LedgerEntry:
    z: int
    p_hat: float                  # frequency in the state where it was last measured
    p0_hat: float | None          # reconstructed initial probability
    iteration: int
    reduced: bool = False
    phase: str = "aa"


@dataclass
class SampleLedger:
    """Observed bitstrings in discovery order plus the reduction-set bookkeeping."""

    entries: list[LedgerEntry] = field(default_factory=list)
    unreduced: float = 1.0        # 1 - sum of p0_hat over reduced entries
    flags: list[str] = field(default_factory=list)
    _index: dict[int, int] = field(default_factory=dict, repr=False)

    def __contains__(self, z) -> bool:
        return int(z) in self._index

    def __len__(self):
        return len(self.entries)

    def get(self, z) -> LedgerEntry:
        return self.entries[self._index[int(z)]]

    def bitstrings(self) -> list[int]:
        return [e.z for e in self.entries]

    def reduced_entries(self) -> list[LedgerEntry]:
        return [e for e in self.entries if e.reduced]

    def reduction_members(self) -> list[int]:
        return [e.z for e in self.entries if e.reduced]

    @property
    def iteration(self) -> int:
        return max((e.iteration for e in self.entries), default=-1)

    def discover(self, z, p_hat: float, iteration: int, p0_hat: float | None = None,
                 phase: str = "aa") -> LedgerEntry:
        z = int(z)
        if z in self._index:
            raise ValueError(f"bitstring {z} already in the ledger")
        entry = LedgerEntry(z, float(p_hat), p0_hat, iteration, False, phase)
        self._index[z] = len(self.entries)
        self.entries.append(entry)
        return entry

    def reduce(self, z, p_hat: float, p0_hat: float, iteration: int) -> LedgerEntry:
        """Move ``z`` into the reduction set with the given estimates."""
        z = int(z)
        if z not in self._index:
            self.discover(z, p_hat, iteration)
        entry = self.get(z)
        if entry.reduced:
            raise ValueError(f"bitstring {z} is already reduced")
        limit = self.unreduced - (1.0 - P0_CAP)
        if p0_hat > limit:
            self.flags.append(f"iteration {iteration}: p0 estimates exceed 1, clamped")
            p0_hat = limit if limit > 0 else 0.5 * self.unreduced
        entry.p_hat, entry.p0_hat, entry.reduced = float(p_hat), float(p0_hat), True
        entry.iteration = iteration
        self.unreduced -= p0_hat
        return entry

    def p0_sum(self) -> float:
        return float(sum(e.p0_hat for e in self.entries if e.reduced))


def reconstruct_p0(ledger: SampleLedger, p_new: float) -> float:
    """Initial-state probability of a new bitstring from its current frequency.

    ``p0 = p_new (1 - sum p0_reduced) / (1 - sum p_current_reduced)``, where
    the current frequencies are the ``p_hat`` values of reduced entries in
    the state just measured.
    """
    residual = sum(e.p_hat for e in ledger.entries if e.reduced)
    denom = 1.0 - residual
    if denom <= 0.0 or ledger.unreduced <= 0.0:
        raise ValueError("non-positive denominator: reduction set holds all measured weight")
    return p_new * ledger.unreduced / denom


def relative_difference(a: float, b: float) -> float:
    return 2.0 * abs(a - b) / (a + b)


def flatness(ledger: SampleLedger) -> float:
    """Relative difference of the last two reconstructed initial probabilities."""
    reduced = ledger.reduced_entries()
    if len(reduced) < 2:
        raise ValueError("flatness needs at least two reduced bitstrings")
    return relative_difference(reduced[-2].p0_hat, reduced[-1].p0_hat)


@dataclass
class DriverConfig:
    """Settings shared by both drivers.

    Exactly one stopping rule applies: ``collect`` (stop once these
    bitstrings are all observed), else ``reference_energy`` (stop once
    ``|E - E_ref| <= energy_threshold``), else the energy-change rule
    (stop once consecutive subspace energies differ by at most
    ``energy_threshold``; ``None`` disables it).
    """

    shots_per_iteration: int = 1000
    target_fidelity: float = 1.0
    flatness_threshold: float = 0.3
    energy_threshold: float | None = 1.6e-3
    max_iterations: int = 500
    seed: int = 0
    reference_energy: float | None = None
    collect: tuple[int, ...] | None = None
    max_probes: int = 12
    max_shots: int = 10 ** 18
    exact_probabilities: bool = False

    def __post_init__(self):
        if self.shots_per_iteration < 1:
            raise ValueError("shots_per_iteration must be >= 1")
        if not 0.0 < self.target_fidelity <= 1.0:
            raise ValueError("target_fidelity must lie in (0, 1]")
        if not self.flatness_threshold > 0:
            raise ValueError("flatness_threshold must be positive")
        if self.energy_threshold is not None and not self.energy_threshold > 0:
            raise ValueError("energy_threshold must be positive")
        if self.reference_energy is not None and self.energy_threshold is None:
            raise ValueError("reference-energy mode needs energy_threshold")
        if self.max_iterations < 1 or self.max_probes < 1:
            raise ValueError("max_iterations and max_probes must be >= 1")
        if self.collect is not None:
            self.collect = tuple(int(z) for z in self.collect)

    @property
    def stop_mode(self) -> str:
        if self.collect is not None:
            return "collect"
        if self.reference_energy is not None:
            return "reference"
        return "energy"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["collect"] = list(self.collect) if self.collect is not None else None
        d["stop_mode"] = self.stop_mode
        return d


@dataclass
class TraceRow:
    k: int
    phase: str
    s: int
    shots: int
    new_bitstring: int | None
    p0_hat: float | None
    energy: float
    flatness: float | None
    delta_energy: float | None


@dataclass
class RunRecord:
    algorithm: str
    n: int
    config: DriverConfig
    ledger: SampleLedger
    plan: AAPlan
    solutions: list[SubspaceSolution]
    trace: list[TraceRow]
    termination: str
    direct_trigger: str | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.solutions[-1].energy

    @property
    def Q_tot(self) -> int:
        return self.plan.Q_tot

    @property
    def N_S_tot(self) -> int:
        return self.plan.shots

    @property
    def aa_iterations(self) -> int:
        return sum(1 for r in self.plan.records if r.phase == "aa")

    @property
    def direct_shots(self) -> int:
        return sum(r.shots for r in self.plan.records if r.phase == "direct")

    def to_dict(self) -> dict:
        fmt = f"0{self.n}b"
        return {
            "algorithm": self.algorithm,
            "n": self.n,
            "config": self.config.to_dict(),
            "rng": RNG_ALGORITHM,
            "termination": self.termination,
            "direct_trigger": self.direct_trigger,
            "flags": list(self.flags) + list(self.ledger.flags),
            "energy": self.energy,
            "Q_tot": self.Q_tot,
            "N_S_tot": self.N_S_tot,
            "aa_iterations": self.aa_iterations,
            "direct_shots": self.direct_shots,
            "plan": self.plan.to_dict(),
            "ledger": [
                {"bitstring": format(e.z, fmt), "p_hat": e.p_hat, "p0_hat": e.p0_hat,
                 "iteration": e.iteration, "reduced": e.reduced, "phase": e.phase}
                for e in self.ledger.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "phase", "s_k", "Q_k", "shots", "new_bitstring", "p0_hat",
                         "E_k", "flatness", "delta_E"])
        fmt = f"0{self.n}b"
        for row in self.trace:
            writer.writerow([
                row.k, row.phase, row.s, 2 * row.s + 1, row.shots,
                "" if row.new_bitstring is None else format(row.new_bitstring, fmt),
                "" if row.p0_hat is None else repr(row.p0_hat),
                repr(row.energy),
                "" if row.flatness is None else repr(row.flatness),
                "" if row.delta_energy is None else repr(row.delta_energy),
            ])
        return buf.getvalue()


def top_bitstrings(state: StateVector, m: int) -> tuple[int, ...]:
    """The ``m`` most probable basis states, ties broken by lower value."""
    probs = state.probabilities()
    order = np.lexsort((np.arange(len(probs)), -probs))
    return tuple(int(z) for z in order[:m])


class _Measurement:
    """Counts (or exact probabilities) of one measured circuit."""

    def __init__(self, freqs: dict[int, float], counts: dict[int, float], exact: bool):
        self.freqs = freqs
        self.counts = counts
        self.exact = exact

    @property
    def dominant(self) -> int:
        return min(self.counts, key=lambda z: (-self.counts[z], z))

    def by_count(self) -> list[int]:
        if self.exact:
            return [self.dominant]
        return sorted(self.counts, key=lambda z: (-self.counts[z], z))

    def residual(self, members) -> float:
        return float(sum(self.freqs.get(z, 0.0) for z in members))


def _measure(state: StateVector, shots: int, rng, exact: bool) -> _Measurement:
    probs = state.probabilities()
    if exact:
        nz = np.flatnonzero(probs > 0)
        freqs = {int(z): float(probs[z]) for z in nz}
        return _Measurement(freqs, freqs, True)
    idx = draw_indices(probs, shots, rng)
    values, counts = np.unique(idx, return_counts=True)
    counts = {int(v): int(c) for v, c in zip(values, counts)}
    return _Measurement({z: c / shots for z, c in counts.items()}, counts, False)


@dataclass
class AdaptResult:
    s: int
    state: StateVector
    measurement: _Measurement
    probes: int


def adapt_steps(state0: StateVector, members, s: int, probe_shots: int, seed=None,
                residual: float | None = None, max_probes: int = 12, plan: AAPlan | None = None,
                k: int = 0, exact: bool = False) -> AdaptResult:
    """Search for a step count whose state is dominated by an unreduced bitstring.

    Starts by halving ``s``. A direction is kept while the measured
    reduction-set frequency does not grow; otherwise the search restarts
    from ``s`` by doubling, and finally bisects towards the best candidate.
    Every probe costs ``probe_shots`` shots and is recorded in ``plan``.
    """
    rng = make_rng(seed)
    members = list(members)
    member_set = set(members)
    if residual is None:
        residual = 1.0
    tried = {s}
    probes = 0

    def probe(sp):
        st = apply_standard_aa(state0, members, sp)
        meas = _measure(st, probe_shots, rng, exact)
        if plan is not None:
            plan.add(k, sp, probe_shots, "probe", len(members))
        return st, meas, meas.residual(members)

    best_s, best_res = s, residual
    cur_s, cur_res = s, residual
    direction = -1
    switched = False
    last_bad = None
    while probes < max_probes:
        if direction < 0:
            cand = max(1, cur_s // 2)
        elif direction > 0:
            cand = max(2 * cur_s, cur_s + 1)
        else:
            cand = (best_s + last_bad) // 2 if last_bad is not None else best_s + 1
        if cand in tried:
            if direction < 0 and not switched:
                direction, switched, cur_s, cur_res = 1, True, s, residual
                continue
            direction = 0
            cand = next(c for c in _around(best_s) if c not in tried)
        st, meas, res = probe(cand)
        probes += 1
        tried.add(cand)
        if meas.dominant not in member_set:
            return AdaptResult(cand, st, meas, probes)
        if res < best_res:
            best_s, best_res = cand, res
        if direction != 0 and res <= cur_res:
            cur_s, cur_res = cand, res
        elif direction < 0 and not switched:
            direction, switched, cur_s, cur_res = 1, True, s, residual
        else:
            last_bad = cand
            direction = 0
    raise AdaptationFailed(f"no unreduced bitstring after {probes} probes around s={s}")


def _around(center: int):
    d = 1
    while True:
        if center + d >= 1:
            yield center + d
        if center - d >= 1:
            yield center - d
        d += 1


class _Run:
    """Mutable state of one driver invocation."""

    def __init__(self, algorithm: str, H: PauliHamiltonian, state0: StateVector, cfg: DriverConfig):
        if H.n != state0.n:
            raise ValueError(f"Hamiltonian has n={H.n}, state has n={state0.n}")
        self.algorithm = algorithm
        self.H = H
        self.state0 = state0
        self.cfg = cfg
        self.rng = make_rng(cfg.seed)
        self.ledger = SampleLedger()
        self.plan = AAPlan()
        self.solutions: list[SubspaceSolution] = []
        self.trace: list[TraceRow] = []
        self.flags: list[str] = []
        self.direct_trigger = None
        self.targets = set(cfg.collect) if cfg.collect is not None else None

    def solve(self) -> SubspaceSolution:
        S = Subspace(tuple(self.ledger.bitstrings()))
        sol = solve_subspace(project_hamiltonian(self.H, S), S)
        self.solutions.append(sol)
        return sol

    def delta_energy(self) -> float | None:
        if len(self.solutions) < 2:
            return None
        return abs(self.solutions[-2].energy - self.solutions[-1].energy)

    def stop_reason(self, after_flatness: bool = False) -> str | None:
        cfg = self.cfg
        mode = cfg.stop_mode
        if mode == "collect":
            if self.targets <= set(self.ledger.bitstrings()):
                return TARGETS_COLLECTED
            return None
        energy = self.solutions[-1].energy
        if mode == "reference":
            if abs(energy - cfg.reference_energy) <= cfg.energy_threshold:
                return TARGET_ERROR
            return None
        dE = self.delta_energy()
        if cfg.energy_threshold is not None and dE is not None and dE <= cfg.energy_threshold:
            return FLATNESS_THEN_ENERGY if after_flatness else ENERGY_CONVERGED
        return None

    def record(self, termination: str) -> RunRecord:
        return RunRecord(self.algorithm, self.state0.n, self.cfg, self.ledger, self.plan, self.solutions,
                         self.trace, termination, self.direct_trigger, self.flags)

    def direct_phase(self, state: StateVector, s: int, k: int) -> str:
        """Sample ``state`` until the stopping rule holds, one discovery at a time."""
        probs = state.probabilities()
        seen = np.zeros(len(probs), dtype=bool)
        seen[self.ledger.bitstrings()] = True
        members = len(self.ledger.reduction_members())
        shots = 0
        reason = None
        budget = self.cfg.max_shots - self.plan.shots
        while reason is None:
            if self.cfg.exact_probabilities:
                unseen = np.where(seen, 0.0, probs)
                z = int(np.argmax(unseen)) if unseen.max() > 0 else -1
                wait = 1 if z >= 0 else 0
            else:
                wait, z = shots_until_new(probs, seen, self.rng)
            if z < 0:
                reason = SUPPORT_EXHAUSTED
                break
            shots += wait
            if shots > budget:
                raise ShotBudgetExceeded(f"shot budget {self.cfg.max_shots} exceeded")
            seen[z] = True
            self.ledger.discover(z, 0.0, k, phase="direct")
            sol = self.solve()
            self.trace.append(TraceRow(k, "direct", s, wait, z, None, sol.energy, None, self.delta_energy()))
            reason = self.stop_reason(after_flatness=self.algorithm == "sqdaa")
        if shots:
            self.plan.add(k, s, shots, "direct", members)
        return reason


def run_sqd(H: PauliHamiltonian, state0: StateVector, cfg: DriverConfig) -> RunRecord:
    """Sample the prepared state directly until the stopping rule holds.

    Every newly observed bitstring triggers a re-diagonalization; the query
    count equals the number of shots.
    """
    run = _Run("sqd", H, state0, cfg)
    reason = run.direct_phase(state0, 0, 0)
    if reason == FLATNESS_THEN_ENERGY:
        reason = ENERGY_CONVERGED
    return run.record(reason)


def run_sqdaa(H: PauliHamiltonian, state0: StateVector, cfg: DriverConfig) -> RunRecord:
    """Amplified sampling loop with a direct-sampling tail."""
    run = _Run("sqdaa", H, state0, cfg)
    ledger, plan = run.ledger, run.plan
    N = cfg.shots_per_iteration
    probs0 = state0.probabilities()
    state, s_k, k = state0, 0, 0
    while True:
        if k >= cfg.max_iterations:
            return run.record(MAX_ITERATIONS)
        members = ledger.reduction_members()
        meas = _measure(state, N, run.rng, cfg.exact_probabilities)
        plan.add(k, s_k, N, "aa", len(members))
        if meas.dominant in set(members):
            for z in meas.by_count():
                if z not in ledger:
                    ledger.discover(z, meas.freqs[z], k)
            try:
                adapted = adapt_steps(state0, members, s_k, N, run.rng, meas.residual(members),
                                      cfg.max_probes, plan, k, cfg.exact_probabilities)
            except AdaptationFailed as exc:
                run.flags.append(f"iteration {k}: {exc}; switching to direct sampling")
                run.direct_trigger = "adaptation-failed"
                if not run.solutions:
                    run.solve()
                return run.record(run.direct_phase(state, s_k, k))
            state, s_k, meas = adapted.state, adapted.s, adapted.measurement

        for e in ledger.reduced_entries():
            e.p_hat = meas.freqs.get(e.z, 0.0)
        residual = meas.residual(members)
        unreduced_before = ledger.unreduced
        dominant = meas.dominant
        p_new = meas.freqs[dominant]
        entry = ledger.reduce(dominant, p_new, reconstruct_p0(ledger, p_new), k)
        for z in meas.by_count():
            if z not in ledger:
                ledger.discover(z, meas.freqs[z], k, meas.freqs[z] * unreduced_before / (1.0 - residual))

        sol = run.solve()
        dE = run.delta_energy()
        reduced = ledger.reduced_entries()
        delta = flatness(ledger) if len(reduced) >= 2 else None
        run.trace.append(TraceRow(k, "aa", s_k, N, dominant, entry.p0_hat, sol.energy, delta, dE))

        reason = run.stop_reason()
        if reason is not None:
            return run.record(reason)

        members = ledger.reduction_members()
        if probs0[np.setdiff1d(np.flatnonzero(probs0 > 0), members)].sum() <= 0.0:
            return run.record(SUPPORT_EXHAUSTED)
        unreduced = max(ledger.unreduced, 1.0 - P0_CAP)
        # s = 0 would re-measure the initial state, whose dominant bitstring is
        # already reduced, so at least one step is always taken.
        s_next = max(1, ideal_steps(theta_from_R(1.0 - unreduced, unreduced), cfg.target_fidelity))
        if delta is not None and delta <= cfg.flatness_threshold and s_next != s_k:
            run.direct_trigger = "flatness"
            return run.record(run.direct_phase(state, s_k, k))
        state = apply_standard_aa(state0, members, s_next)
        s_k = s_next
        k += 1
