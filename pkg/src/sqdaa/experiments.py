"""Experiment configuration, seeded restarts, aggregation and output files.

A config is a YAML mapping::

    mode: compare                 # run-sqd | run-sqdaa | model-dist | resources | asp-prepare | compare
    hamiltonian: {diagonal: 10}   # or a file path, or {random: {n, terms, seed}}
    state: {model: {kind: exponential, param: 1.0}}   # or {file: path} or {asp: {...}}
    driver: {shots_per_iteration: 100, target_fidelity: 0.7, collect_top: 20}
    restarts: 50
    seed_base: 0
    workers: 4
    output: out/

Outputs are written only after all restarts finish. JSON keys are sorted
and floats use ``repr`` in CSV, so identical configs give identical bytes.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .analytics import DistributionSpec, ratio_curve
from .asp import SWEEPS, asp_prepare
from .driver import DriverConfig, run_sqd, run_sqdaa, top_bitstrings
from .pauli import PauliHamiltonian, load_hamiltonian, random_hamiltonian
from .resources import (ASPModel, TrotterErrorModel, UCJModel, comparison_csv, fit_exponential,
                        fit_trotter_constant, iqpe_qubitization_counts, iqpe_trotter_optimize,
                        pipeline_report, prep_tcounts)
from .statevector import Distribution, StateVector, load_state, make_rng, model_state, serialize_state
from .subspace import exact_ground_state

MODES = ("run-sqd", "run-sqdaa", "model-dist", "resources", "asp-prepare", "compare")
SCHEMA_VERSION = 1
PERCENTILES = (16, 50, 84)
_DRIVER_KEYS = {f for f in DriverConfig.__dataclass_fields__} - {"collect", "seed"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str
    hamiltonian: object = None
    state: dict | None = None
    driver: dict = field(default_factory=dict)
    restarts: int = 1
    seed_base: int = 0
    workers: int = 1
    output: str = "out"
    analytics: dict = field(default_factory=dict)
    resources: dict = field(default_factory=dict)
    asp: dict = field(default_factory=dict)
    base_dir: str = "."

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if int(self.restarts) < 1:
            raise ConfigError("restarts must be >= 1")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        unknown = set(self.driver) - _DRIVER_KEYS - {"collect_top"}
        if unknown:
            raise ConfigError(f"unknown driver keys {sorted(unknown)}")
        needs_state = self.mode in ("run-sqd", "run-sqdaa", "compare", "resources")
        needs_h = needs_state or self.mode == "asp-prepare"
        if needs_h and self.hamiltonian is None:
            raise ConfigError(f"mode {self.mode} needs a hamiltonian")
        if needs_state and not self.state:
            raise ConfigError(f"mode {self.mode} needs a state source")
        if self.mode == "model-dist" and "distribution" not in self.analytics:
            raise ConfigError("model-dist needs analytics.distribution")
        if self.mode == "resources" and "prep" not in self.resources:
            raise ConfigError("resources mode needs resources.prep")
        if self.mode == "asp-prepare" and not self.asp:
            raise ConfigError("asp-prepare needs an asp section")

    @classmethod
    def from_dict(cls, data: dict, base_dir: str = ".") -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "mode" not in data:
            raise ConfigError("config needs a mode")
        return cls(**copy.deepcopy(data), base_dir=base_dir)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path) as fh:
            data = yaml.safe_load(fh)
        return cls.from_dict(data, str(path.parent))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "hamiltonian": self.hamiltonian, "state": self.state,
            "driver": self.driver, "restarts": int(self.restarts), "seed_base": int(self.seed_base),
            "analytics": self.analytics, "resources": self.resources, "asp": self.asp,
        }

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p


# --- inputs ---------------------------------------------------------------


def diagonal_index_hamiltonian(n: int) -> PauliHamiltonian:
    """Diagonal ``H`` whose energy grows linearly with the basis index; ``|0>`` is the ground state."""
    return PauliHamiltonian.from_terms(
        (-(2.0 ** q) / 2.0 ** n, "I" * (n - 1 - q) + "Z" + "I" * q) for q in range(n))


def build_hamiltonian(cfg: ExperimentConfig) -> PauliHamiltonian:
    spec = cfg.hamiltonian
    if isinstance(spec, str):
        return load_hamiltonian(cfg.path(spec))
    if isinstance(spec, dict) and "diagonal" in spec:
        return diagonal_index_hamiltonian(int(spec["diagonal"]))
    if isinstance(spec, dict) and "random" in spec:
        r = spec["random"]
        return random_hamiltonian(int(r["n"]), int(r["terms"]), make_rng(int(r.get("seed", 0))),
                                  r.get("letters", "IXYZ"))
    if isinstance(spec, dict) and "terms" in spec:
        return PauliHamiltonian.from_terms((float(c), w) for c, w in spec["terms"])
    raise ConfigError(f"cannot interpret hamiltonian spec {spec!r}")


def _distribution(d: dict) -> Distribution:
    try:
        return Distribution(str(d["kind"]), float(d["param"]))
    except KeyError as exc:
        raise ConfigError(f"distribution needs {exc.args[0]!r}") from None


def build_state(cfg: ExperimentConfig, H: PauliHamiltonian) -> tuple[StateVector, dict]:
    src = cfg.state or {}
    if "model" in src:
        return model_state(_distribution(src["model"]), H.n), {}
    if "file" in src:
        with open(cfg.path(src["file"])) as fh:
            return load_state(fh, H.n), {}
    if "asp" in src:
        res = run_asp(H, src["asp"])
        return res.state, {"asp": res.to_dict()}
    raise ConfigError(f"cannot interpret state source {src!r}")


def run_asp(H: PauliHamiltonian, spec: dict):
    try:
        T = float(spec["T"])
        grid = [tuple(int(v) for v in p) for p in spec["grid"]]
    except KeyError as exc:
        raise ConfigError(f"asp spec needs {exc.args[0]!r}") from None
    sweep = spec.get("sweep", "linear")
    if sweep not in SWEEPS:
        raise ConfigError(f"unknown sweep {sweep!r}; expected one of {sorted(SWEEPS)}")
    return asp_prepare(H, T, grid, sweep)


def driver_config(cfg: ExperimentConfig, state0: StateVector, seed: int) -> DriverConfig:
    opts = {k: v for k, v in cfg.driver.items() if k != "collect_top"}
    collect = None
    if cfg.driver.get("collect_top") is not None:
        collect = top_bitstrings(state0, int(cfg.driver["collect_top"]))
    return DriverConfig(**opts, seed=seed, collect=collect)


# --- aggregation ----------------------------------------------------------


def nearest_rank(values, pct: float) -> float:
    """Nearest-rank percentile: the ``ceil(pct/100 * N)``-th smallest value."""
    v = sorted(values)
    if not v:
        raise ValueError("no values")
    rank = max(1, math.ceil(pct / 100.0 * len(v)))
    return float(v[rank - 1])


@dataclass(frozen=True)
class AggregateStats:
    """Median and nearest-rank 16th/84th percentiles (the central 68% band)."""

    count: int
    median: float
    p16: float
    p84: float

    @classmethod
    def of(cls, values) -> "AggregateStats":
        values = [float(x) for x in values]
        return cls(len(values), float(np.median(values)), nearest_rank(values, 16), nearest_rank(values, 84))

    def to_dict(self) -> dict:
        return {"count": self.count, "median": self.median, "p16": self.p16, "p84": self.p84}


# --- restarts -------------------------------------------------------------


def _restart(args) -> dict:
    cfg_dict, base_dir, index = args
    cfg = ExperimentConfig.from_dict(cfg_dict, base_dir)
    H = build_hamiltonian(cfg)
    state0, _ = build_state(cfg, H)
    seed = int(cfg.seed_base) + index
    out = {"index": index, "seed": seed}
    algos = {"run-sqd": ("sqd",), "run-sqdaa": ("sqdaa",), "compare": ("sqd", "sqdaa")}[cfg.mode]
    for name in algos:
        dcfg = driver_config(cfg, state0, seed)
        rec = (run_sqd if name == "sqd" else run_sqdaa)(H, state0, dcfg)
        out[name] = {"record": rec.to_dict(), "trace": rec.trace_csv()}
    return out


def _run_restarts(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(cfg.to_dict(), cfg.base_dir, i) for i in range(int(cfg.restarts))]
    if int(cfg.workers) == 1 or len(jobs) == 1:
        return [_restart(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=int(cfg.workers)) as pool:
        return list(pool.map(_restart, jobs))


def _metrics(record: dict) -> dict:
    return {"Q_tot": record["Q_tot"], "N_S_tot": record["N_S_tot"], "energy": record["energy"],
            "ledger_size": len(record["ledger"])}


def _dump(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_runs(cfg, out: Path, results) -> dict:
    algos = [a for a in ("sqd", "sqdaa") if a in results[0]]
    per_algo = {}
    for algo in algos:
        rows = []
        for r in results:
            tag = f"{algo}_restart{r['index']:04d}"
            (out / f"{tag}_trace.csv").write_text(r[algo]["trace"])
            _dump(out / f"{tag}.json", r[algo]["record"])
            rows.append(_metrics(r[algo]["record"]))
        per_algo[algo] = {k: AggregateStats.of([row[k] for row in rows]).to_dict() for k in rows[0]}
    summary = {"schema": SCHEMA_VERSION, "config": cfg.to_dict(),
               "seeds": [r["seed"] for r in results], "aggregate": per_algo}
    if len(algos) == 2:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["restart", "seed", "Q_sqd", "Q_sqdaa", "ratio_Q", "N_S_sqd", "N_S_sqdaa", "ratio_N_S"])
        rq, rs = [], []
        for r in results:
            a, b = r["sqd"]["record"], r["sqdaa"]["record"]
            rq.append(a["Q_tot"] / b["Q_tot"])
            rs.append(a["N_S_tot"] / b["N_S_tot"])
            w.writerow([r["index"], r["seed"], a["Q_tot"], b["Q_tot"], repr(rq[-1]),
                        a["N_S_tot"], b["N_S_tot"], repr(rs[-1])])
        (out / "compare.csv").write_text(buf.getvalue())
        summary["ratio_Q"] = AggregateStats.of(rq).to_dict()
        summary["ratio_N_S"] = AggregateStats.of(rs).to_dict()
    _dump(out / "aggregate.json", summary)
    return summary


def aggregate_from_files(out_dir) -> dict:
    """Recompute the comparison aggregates from ``compare.csv`` alone."""
    with open(Path(out_dir) / "compare.csv") as fh:
        rows = list(csv.DictReader(fh))
    return {"ratio_Q": AggregateStats.of(float(r["ratio_Q"]) for r in rows).to_dict(),
            "ratio_N_S": AggregateStats.of(float(r["ratio_N_S"]) for r in rows).to_dict()}


# --- single-shot modes ----------------------------------------------------


def _model_dist(cfg, out: Path) -> dict:
    a = cfg.analytics
    dist = _distribution(a["distribution"])
    spec = DistributionSpec(dist, a.get("n"))
    m_values = range(int(a.get("m_min", 1)), int(a.get("m_max", 60)) + 1)
    curve = ratio_curve(spec, m_values, int(a.get("N_it", 1000)), float(a.get("p_fail", 0.1)),
                        exact=bool(a.get("exact", False)))
    (out / "curve.csv").write_text(curve.to_csv())
    threshold = float(a.get("threshold", 100.0))
    summary = {"schema": SCHEMA_VERSION, "config": cfg.to_dict(),
               "crossing_m": {"1": curve.crossing(1.0), str(threshold): curve.crossing(threshold)}}
    _dump(out / "summary.json", summary)
    return summary


def _prep_model(spec: dict, H: PauliHamiltonian, asp_result: dict | None = None):
    kind = spec.get("kind")
    if kind == "ucj":
        return UCJModel(int(spec["n"]), int(spec["layers"]))
    if kind == "asp":
        # Without explicit counts, reuse the pair chosen by an ASP state source.
        chosen = asp_result or {}
        reps = spec.get("reps", chosen.get("reps"))
        steps = spec.get("steps", chosen.get("steps"))
        if reps is None or steps is None:
            raise ConfigError("asp prep model needs reps and steps")
        return ASPModel(H, int(reps), int(steps))
    raise ConfigError(f"unknown prep model {kind!r}")


def _trotter_model(spec: dict, H: PauliHamiltonian) -> TrotterErrorModel:
    if "C_GS" in spec:
        return TrotterErrorModel.supplied(float(spec["C_GS"]))
    if "extrapolate" in spec:
        # Constants fitted on smaller systems, extrapolated with a*exp(b*n).
        pts = spec["extrapolate"]
        a, b, _ = fit_exponential([p[0] for p in pts], [p[1] for p in pts])
        return TrotterErrorModel.supplied(a * math.exp(b * H.n))
    dtaus = spec.get("dtaus")
    return fit_trotter_constant(H, np.asarray(dtaus, dtype=float) if dtaus else None)


def _resources(cfg, out: Path) -> dict:
    H = build_hamiltonian(cfg)
    state0, extra = build_state(cfg, H)
    r = cfg.resources
    seed = int(cfg.seed_base)
    prep = _prep_model(r["prep"], H, extra.get("asp"))
    eps = float(r.get("eps_tot", 1e-4))
    budget = float(r.get("dE_budget", 1.6e-3))
    T_prep, d_prep = prep_tcounts(prep, eps)
    if "c_gs_overlap" in r:
        overlap = float(r["c_gs_overlap"])
    else:
        _, gs = exact_ground_state(H)
        overlap = float(abs(np.vdot(gs, state0.amplitudes)) ** 2)
    reports = []
    runs = {}
    for name, fn in (("sqd", run_sqd), ("sqdaa", run_sqdaa)):
        rec = fn(H, state0, driver_config(cfg, state0, seed))
        runs[name] = rec
        reports.append(pipeline_report(rec, prep, eps, bool(r.get("include_reflection", True))))
    trotter = _trotter_model(r.get("trotter", {}), H)
    conf = float(r.get("confidence", 0.99))
    notes = []
    try:
        reports.append(iqpe_trotter_optimize(H, trotter, budget, overlap, T_prep, d_prep, confidence=conf))
        reports.append(iqpe_qubitization_counts(H, budget, overlap, T_prep, d_prep, confidence=conf))
    except ValueError as exc:
        notes.append(f"phase estimation skipped: {exc}")
    sqd, sqdaa = reports[0], reports[1]
    summary = {
        "schema": SCHEMA_VERSION, "config": cfg.to_dict(), "seed": seed, "c_gs_overlap": overlap,
        "reports": [rep.to_dict() for rep in reports],
        "ratio_total_T_sqd_over_sqdaa": sqd.T_count_total / sqdaa.T_count_total,
        "shot_reduction": sqd.shots / sqdaa.shots,
        "notes": notes, **extra,
    }
    _dump(out / "resources.json", summary)
    (out / "resources.csv").write_text(comparison_csv(reports))
    return summary


def _asp_prepare(cfg, out: Path) -> dict:
    H = build_hamiltonian(cfg)
    res = run_asp(H, cfg.asp)
    (out / "asp_state.txt").write_text(serialize_state(res.state, cutoff=1e-15))
    summary = {"schema": SCHEMA_VERSION, "config": cfg.to_dict(), "asp": res.to_dict()}
    _dump(out / "asp.json", summary)
    return summary


def run_experiment(cfg: ExperimentConfig, output: str | os.PathLike | None = None) -> dict:
    """Run ``cfg`` and write its outputs; returns the summary that was written."""
    out = Path(output if output is not None else cfg.path(cfg.output))
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode == "model-dist":
        return _model_dist(cfg, out)
    if cfg.mode == "resources":
        return _resources(cfg, out)
    if cfg.mode == "asp-prepare":
        return _asp_prepare(cfg, out)
    return _write_runs(cfg, out, _run_restarts(cfg))
