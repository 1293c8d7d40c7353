"""T-count, T-depth and ancilla models for sampling and phase-estimation pipelines.

Every fractional count is rounded up. Counts are plain Python integers so
reports serialize exactly.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .amplification import aa_circuit_tcount, cnnot_tcount, cnnot_tdepth
from .pauli import PauliHamiltonian, dense_matrix, reduced_term_count

__all__ = [
    "sk_tcount", "ucj_counts", "asp_counts", "cnnot_tcount", "cnnot_tdepth",
    "UCJModel", "ASPModel", "TrotterErrorModel", "trotter_step_unitary", "trotter_energy_error",
    "fit_trotter_constant", "fit_exponential", "iqpe_trotter_cost", "iqpe_trotter_optimize",
    "qubitization_mu", "select_tcount", "iqpe_qubitization_counts", "majority_vote_shots",
    "ResourceReport", "pipeline_report", "comparison_csv",
]

CHEMICAL_ACCURACY = 1.6e-3
MAJORITY_CONFIDENCE = 0.99
R2_THRESHOLD = 0.9
EXPONENT_RANGE = (1.8, 2.2)


def sk_tcount(N_rot: int, eps_tot: float) -> int:
    """T gates per rotation when ``N_rot`` rotations share total synthesis error ``eps_tot``."""
    if N_rot < 1:
        raise ValueError("N_rot must be >= 1")
    if not eps_tot > 0:
        raise ValueError("eps_tot must be positive")
    return math.ceil(1.15 * math.log2(N_rot / eps_tot) + 9.2)


def ucj_counts(n: int, L: int) -> tuple[int, int]:
    """Rotation count and rotation depth of an ``L``-layer UCJ circuit on ``n`` qubits."""
    if n < 2 or n % 2:
        raise ValueError("UCJ needs an even qubit count n >= 2")
    if L < 1:
        raise ValueError("UCJ needs L >= 1 layers")
    h = n // 2
    N_rot = L * (2 * (n + n * (h - 1)) + n + 3 * h * (n - 1))
    depth = L * (2 * (1 + h) + 1 + 3 * n)
    return N_rot, depth


def asp_counts(H: PauliHamiltonian, reps: int, steps: int) -> tuple[int, int]:
    """Rotations of a Trotterized adiabatic sweep; nothing runs in parallel, so depth = count."""
    if reps < 1 or steps < 1:
        raise ValueError("reps and steps must be >= 1")
    N_rot = reduced_term_count(H) * reps * steps
    return N_rot, N_rot


@dataclass(frozen=True)
class UCJModel:
    n: int
    layers: int
    kind: str = field(default="ucj", init=False)

    def counts(self) -> tuple[int, int]:
        return ucj_counts(self.n, self.layers)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "layers": self.layers}


@dataclass(frozen=True)
class ASPModel:
    H: PauliHamiltonian
    reps: int
    steps: int
    kind: str = field(default="asp", init=False)

    def counts(self) -> tuple[int, int]:
        return asp_counts(self.H, self.reps, self.steps)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "reps": self.reps, "steps": self.steps,
                "reduced_terms": reduced_term_count(self.H)}


def prep_tcounts(model, eps_tot: float = 1e-4) -> tuple[int, int]:
    """``(T_prep, d_prep)``: rotations times per-rotation synthesis cost."""
    N_rot, depth = model.counts()
    per = sk_tcount(N_rot, eps_tot)
    return per * N_rot, per * depth


# --- Trotter error model --------------------------------------------------


@dataclass(frozen=True)
class TrotterErrorModel:
    """Fitted ``dE_TS = C dtau^p`` on a grid of step sizes."""

    C_GS: float
    exponent: float
    r2: float
    dtaus: tuple[float, ...] = ()
    errors: tuple[float, ...] = ()
    exact: bool = False

    @property
    def flags(self) -> list[str]:
        out = []
        if self.exact:
            out.append("exact: Trotter error vanishes (commuting terms)")
            return out
        lo, hi = EXPONENT_RANGE
        if not lo <= self.exponent <= hi:
            out.append(f"exponent {self.exponent:.3f} outside [{lo}, {hi}]")
        if self.r2 < R2_THRESHOLD:
            out.append(f"R^2 {self.r2:.3f} below {R2_THRESHOLD}")
        return out

    @classmethod
    def supplied(cls, C_GS: float) -> "TrotterErrorModel":
        if not C_GS > 0:
            raise ValueError("C_GS must be positive")
        return cls(float(C_GS), 2.0, 1.0)

    def to_dict(self) -> dict:
        return {"C_GS": self.C_GS, "exponent": self.exponent, "r2": self.r2,
                "dtaus": list(self.dtaus), "errors": list(self.errors),
                "exact": self.exact, "flags": self.flags}


def _pauli_exp(coeff: float, mat: np.ndarray, angle: float) -> np.ndarray:
    phi = coeff * angle
    return math.cos(phi) * np.eye(len(mat)) - 1j * math.sin(phi) * mat


def trotter_step_unitary(H: PauliHamiltonian, dtau: float) -> np.ndarray:
    """One symmetric second-order step: half steps forward through the sorted terms, then back."""
    terms = H.sorted().terms
    halves = [_pauli_exp(c, p.matrix(), dtau / 2.0) for c, p in terms]
    U = np.eye(1 << H.n, dtype=complex)
    for g in halves:
        U = g @ U
    for g in reversed(halves):
        U = g @ U
    return U


def trotter_energy_error(H: PauliHamiltonian, dtau: float, ground=None) -> float:
    """``|E_GS - E_GS,eff|`` from the eigenphase continuously connected to the ground state."""
    if ground is None:
        vals, vecs = np.linalg.eigh(dense_matrix(H))
        ground = (vals[0], vecs[:, np.isclose(vals, vals[0], atol=1e-10)])
    E0, gvecs = ground
    evals, evecs = np.linalg.eig(trotter_step_unitary(H, dtau))
    overlap = np.sum(np.abs(gvecs.conj().T @ evecs) ** 2, axis=0)
    j = int(np.argmax(overlap))
    # Unwrap the phase around the exact ground energy so large norms do not alias.
    phase = -np.angle(evals[j] * np.exp(1j * E0 * dtau))
    return abs(phase / dtau)


def fit_trotter_constant(H: PauliHamiltonian, dtaus=None, t: float | None = None,
                         zero_tol: float = 1e-11) -> TrotterErrorModel:
    """Fit ``dE_TS = C dtau^p`` by least squares on log-log data (n <= 10).

    With ``t`` given, each step size is snapped to ``t / s`` for integer ``s``.
    Errors at the round-off floor everywhere mean commuting terms: the fit is
    skipped and the model is marked ``exact``.
    """
    if H.n > 10:
        raise ValueError("dense Trotter fit is limited to n <= 10")
    if dtaus is None:
        dtaus = np.logspace(-3, -1, 9)
    dtaus = np.asarray(dtaus, dtype=float)
    if t is not None:
        dtaus = t / np.maximum(1, np.round(t / dtaus))
    dtaus = np.unique(dtaus)
    if dtaus.size < 2 or np.any(dtaus <= 0):
        raise ValueError("need at least two distinct positive step sizes")
    vals, vecs = np.linalg.eigh(dense_matrix(H))
    ground = (vals[0], vecs[:, np.isclose(vals, vals[0], atol=1e-10)])
    errors = np.array([trotter_energy_error(H, d, ground) for d in dtaus])
    scale = max(1.0, H.one_norm)
    if np.all(errors <= zero_tol * scale):
        return TrotterErrorModel(0.0, float("nan"), float("nan"), tuple(dtaus), tuple(errors), exact=True)
    keep = errors > zero_tol * scale
    if keep.sum() < 2:
        raise ValueError("fewer than two step sizes above the round-off floor")
    x, y = np.log(dtaus[keep]), np.log(errors[keep])
    p, lnC = np.polyfit(x, y, 1)
    r2 = _r_squared(y, p * x + lnC)
    model = TrotterErrorModel(float(math.exp(lnC)), float(p), r2, tuple(dtaus), tuple(errors))
    for msg in model.flags:
        warnings.warn(msg, stacklevel=2)
    return model


def _r_squared(y, fit) -> float:
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def fit_exponential(x, y) -> tuple[float, float, float]:
    """Fit ``y = a exp(b x)`` by a log-linear least-squares fit; returns ``(a, b, R^2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(y <= 0):
        raise ValueError("need at least two points with positive y")
    b, lna = np.polyfit(x, np.log(y), 1)
    return float(math.exp(lna)), float(b), _r_squared(np.log(y), b * x + lna)


# --- majority vote --------------------------------------------------------


def majority_vote_shots(c_gs_overlap: float, confidence: float = MAJORITY_CONFIDENCE) -> int:
    """Smallest odd ``N`` whose majority is correct with probability ``>= confidence``.

    Per-shot success is ``p = (8 / pi^2) |c_GS|^2``; majority success is the
    binomial tail ``P(X >= (N+1)/2)``.
    """
    if not 0.0 < c_gs_overlap <= 1.0:
        raise ValueError("c_gs_overlap must lie in (0, 1]")
    if not 0.5 < confidence < 1.0:
        raise ValueError("confidence must lie in (0.5, 1)")
    p = 8.0 / math.pi ** 2 * c_gs_overlap
    if p <= 0.5:
        raise ValueError(f"per-shot success {p:.4f} <= 1/2: overlap must exceed pi^2/16 for a majority vote")
    def ok(j):  # odd N = 2j + 1; success grows with j when p > 1/2
        return binom.sf(j, 2 * j + 1, p) >= confidence

    hi = 1
    while not ok(hi):
        hi *= 2
    lo = -1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return 2 * hi + 1


# --- reports --------------------------------------------------------------


@dataclass
class ResourceReport:
    pipeline: str
    T_count_deepest: int
    T_depth_deepest: int
    T_count_total: int
    T_depth_total: int
    shots: int
    ancillas: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "T_count_deepest": self.T_count_deepest,
            "T_depth_deepest": self.T_depth_deepest,
            "T_count_total": self.T_count_total,
            "T_depth_total": self.T_depth_total,
            "shots": self.shots,
            "ancillas": dict(self.ancillas),
            "parameters": self.parameters,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


CSV_HEADER = "pipeline,T_count_deepest,T_depth_deepest,T_count_total,T_depth_total,shots"


def comparison_csv(reports) -> str:
    rows = [CSV_HEADER]
    for r in reports:
        rows.append(f"{r.pipeline},{r.T_count_deepest},{r.T_depth_deepest},"
                    f"{r.T_count_total},{r.T_depth_total},{r.shots}")
    return "\n".join(rows) + "\n"


# --- iQPE with Trotterization ---------------------------------------------


def iqpe_trotter_cost(L_reduced: int, C_GS: float, dE_TS: float, dE_QPE: float,
                      dE_SK: float) -> tuple[int, int, int]:
    """``(N_T, N_SK, N_rep)`` for one error split.

    ``N_rep = 2 pi sqrt(C) / (dE_QPE sqrt(dE_TS))`` controlled Trotter
    steps, each with ``4 L'`` rotations synthesized at ``N_SK`` T gates.
    """
    if min(dE_TS, dE_QPE, dE_SK) <= 0:
        raise ValueError("every error share must be positive")
    root = math.sqrt(C_GS / dE_TS)
    N_rep = math.ceil(2.0 * math.pi * root / dE_QPE)
    N_SK = math.ceil(1.15 * math.log2(4 * L_reduced * 2.0 * math.pi * root / dE_SK) + 9.2)
    return 4 * L_reduced * N_SK * N_rep, N_SK, N_rep


def _split(budget, u):
    # u = (log f_TS, log f_QPE); f_SK takes the rest of the budget.
    f_ts, f_qpe = math.exp(u[0]), math.exp(u[1])
    f_sk = 1.0 - f_ts - f_qpe
    if f_sk <= 0.0:
        return None
    return budget * f_ts, budget * f_qpe, budget * f_sk


def _pattern_search(cost, u0, step=0.5, min_step=1e-6, max_evals=20000):
    best_u, best = np.array(u0, dtype=float), cost(u0)
    evals = 0
    dirs = [np.array(d, dtype=float) for d in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1))]
    while step > min_step and evals < max_evals:
        improved = False
        for d in dirs:
            cand = best_u + step * d
            c = cost(cand)
            evals += 1
            if c < best:
                best, best_u, improved = c, cand, True
                break
        if not improved:
            step /= 2.0
    return best_u, best


def iqpe_trotter_optimize(H: PauliHamiltonian | None, err_model: TrotterErrorModel,
                          dE_budget: float = CHEMICAL_ACCURACY, c_gs_overlap: float = 1.0,
                          prep_tcount: int = 0, prep_tdepth: int | None = None,
                          L_reduced: int | None = None, grid_points: int = 100,
                          confidence: float = MAJORITY_CONFIDENCE) -> ResourceReport:
    """Minimize the Trotterized phase-estimation T count over the error split.

    A log grid of ``grid_points^2`` fractions (at least 1e4 by default) is
    searched first; a pattern search on the rounded cost then refines the
    best grid point. The chosen split always satisfies the budget.
    """
    if not dE_budget > 0:
        raise ValueError("dE_budget must be positive")
    if err_model.exact or not err_model.C_GS > 0:
        raise ValueError("Trotter error model has no positive error constant")
    if L_reduced is None:
        if H is None:
            raise ValueError("need H or L_reduced")
        L_reduced = reduced_term_count(H)
    shots = majority_vote_shots(c_gs_overlap, confidence)
    C = err_model.C_GS

    def cost(u):
        split = _split(dE_budget, u)
        if split is None:
            return math.inf
        return iqpe_trotter_cost(L_reduced, C, *split)[0]

    logs = np.linspace(math.log(1e-4), math.log(1.0 - 1e-4), grid_points)
    grid_best, grid_u = math.inf, None
    for a in logs:
        for b in logs:
            c = cost((a, b))
            if c < grid_best:
                grid_best, grid_u = c, (a, b)
    if grid_u is None:
        raise ValueError("no feasible error split")
    u, best = _pattern_search(cost, grid_u)
    dE_TS, dE_QPE, dE_SK = _split(dE_budget, u)
    assert dE_TS + dE_QPE + dE_SK <= dE_budget * (1 + 1e-12)
    N_T, N_SK, N_rep = iqpe_trotter_cost(L_reduced, C, dE_TS, dE_QPE, dE_SK)
    bits = max(1, math.ceil(math.log2(N_rep)))
    if prep_tdepth is None:
        prep_tdepth = prep_tcount
    # Rotations in a Trotter step are sequential, so only the preparation parallelizes.
    count = N_T + bits * prep_tcount
    depth = N_T + bits * prep_tdepth
    return ResourceReport(
        "iqpe-trotter", count, depth, count * shots, depth * shots, shots,
        ancillas={"phase": 1},
        parameters={
            "L_reduced": L_reduced, "C_GS": C, "dE_budget": dE_budget,
            "dE_TS": dE_TS, "dE_iQPE": dE_QPE, "dE_SK": dE_SK,
            "N_SK": N_SK, "N_rep": N_rep, "bits": bits, "grid_points": grid_points ** 2,
            "grid_best": grid_best, "optimizer": "log-grid + pattern search on rounded cost",
            "prep_tcount": prep_tcount, "prep_tdepth": prep_tdepth,
            "c_gs_overlap": c_gs_overlap, "majority_confidence": confidence,
            "trotter_model": err_model.to_dict(),
        },
    )


# --- iQPE with qubitization -----------------------------------------------


def qubitization_mu(lam: float, dE: float) -> int:
    """Bits of coefficient precision for the alias-sampling PREP."""
    if not lam > 0 or not dE > 0:
        raise ValueError("lambda and dE must be positive")
    return math.ceil(math.log2(2.0 * lam / dE) + math.log2(1.0 + dE ** 2 / (4.0 * lam ** 2)))


def select_tcount(L: int) -> int:
    """Unary-iteration SELECT over ``L`` terms: one 4-T AND per term after the first."""
    if L < 1:
        raise ValueError("L must be >= 1")
    return 4 * L - 4


def _odd_split(L: int) -> tuple[int, int]:
    k = (L & -L).bit_length() - 1
    return k, L >> k


def iqpe_qubitization_counts(H: PauliHamiltonian | None, dE_budget: float = CHEMICAL_ACCURACY,
                             c_gs_overlap: float = 1.0, prep_tcount: int = 0,
                             prep_tdepth: int | None = None, lam: float | None = None,
                             L: int | None = None,
                             confidence: float = MAJORITY_CONFIDENCE) -> ResourceReport:
    """T count, T depth and ancillas of qubitized phase estimation.

    ``H`` supplies ``lambda`` (one-norm) and ``L`` (term count) unless they
    are passed directly. With ``L = 1`` the block encoding is a single
    Pauli: PREP, SELECT and the index reflection cost no T gates.
    """
    if not dE_budget > 0:
        raise ValueError("dE_budget must be positive")
    if lam is None:
        lam = H.one_norm
    if L is None:
        L = H.L
    if not lam > 0 or L < 1:
        raise ValueError("need lambda > 0 and L >= 1")
    shots = majority_vote_shots(c_gs_overlap, confidence)
    mu = qubitization_mu(lam, dE_budget)
    reps = 4.0 * math.pi * lam / dE_budget
    k, J = _odd_split(L)
    logL = math.ceil(math.log2(L)) if L > 1 else 0
    logJ = math.ceil(math.log2(J)) if J > 1 else 0
    notes = []
    if L == 1:
        notes.append("L = 1: single-term block encoding, PREP/SELECT/reflection are Clifford")
        prep_c = prep_d = sel_c = sel_d = refl_c = refl_d = 0
    else:
        prep_c = 4 * (L + mu) + 2 * k + 10 * logJ
        prep_d = 2 * (L + mu) + 2 * k + 6 * logJ
        sel_c, sel_d = select_tcount(L), 2 * L - 2
        refl_c = cnnot_tcount(logL + 1)
        refl_d = 5
    step_c = 2 * prep_c + sel_c + refl_c
    step_d = 2 * prep_d + sel_d + refl_d
    N_T = math.ceil(reps * step_c)
    d_T = math.ceil(reps * step_d)
    bits = math.ceil(math.log2(2.0 * math.pi * lam / dE_budget))
    if prep_tdepth is None:
        prep_tdepth = prep_tcount
    count = N_T + bits * prep_tcount
    depth = d_T + bits * prep_tdepth
    ancillas = {
        "phase": 1,
        "prep": (1 + 2 * mu + logL) if L > 1 else 0,
        "index": logL,
        "unary_iteration": logL,
        "reflection": max(0, logL - 1),
    }
    return ResourceReport(
        "iqpe-qubitization", count, depth, count * shots, depth * shots, shots,
        ancillas=ancillas,
        parameters={
            "lambda": lam, "L": L, "mu": mu, "k": k, "J": J, "bits": bits,
            "repetitions": reps, "dE_budget": dE_budget,
            "prep_step_tcount": prep_c, "select_tcount": sel_c, "reflection_tcount": refl_c,
            "prep_tcount": prep_tcount, "prep_tdepth": prep_tdepth,
            "c_gs_overlap": c_gs_overlap, "majority_confidence": confidence,
        },
        notes=notes,
    )


# --- sampling pipelines ---------------------------------------------------


def pipeline_report(run, prep_model, eps_tot: float = 1e-4, include_reflection: bool = True) -> ResourceReport:
    """Cost every sampled circuit of a finished run.

    Each plan record contributes ``shots * circuit`` to the totals; the
    deepest circuit is the maximum over records.
    """
    plan = getattr(run, "plan", None)
    if plan is None or not plan.records:
        raise ValueError("run has no sampling plan")
    T_prep, d_prep = prep_tcounts(prep_model, eps_tot)
    n = run.n
    deep_c = deep_d = tot_c = tot_d = 0
    for rec in plan.records:
        c, d = aa_circuit_tcount(n, rec.set_size, rec.s, T_prep, d_prep, include_reflection)
        deep_c, deep_d = max(deep_c, c), max(deep_d, d)
        tot_c += rec.shots * c
        tot_d += rec.shots * d
    return ResourceReport(
        run.algorithm, deep_c, deep_d, tot_c, tot_d, plan.shots,
        ancillas={"reflection": 1 if any(r.s > 0 for r in plan.records) else 0},
        parameters={
            "prep": prep_model.to_dict(), "eps_tot": eps_tot, "T_prep": T_prep, "d_prep": d_prep,
            "include_reflection": include_reflection, "Q_tot": plan.Q_tot,
            "circuits": len(plan.records),
        },
    )
