"""Sample-based quantum diagonalization with amplitude amplification."""

from .amplification import (AAPlan, ReductionSet, aa_circuit_tcount, apply_fixed_point_aa,
                            apply_standard_aa, cnnot_tcount, ideal_steps, theta_from_R)
from .analytics import DistributionSpec, analytic_steps, qtot_sqd, qtot_sqdaa, ratio_curve
from .driver import DriverConfig, RunRecord, run_sqd, run_sqdaa
from .pauli import Bitstring, PauliHamiltonian, PauliString, parse_hamiltonian, reduced_term_count
from .statevector import Distribution, StateVector, model_state, sample
from .subspace import Subspace, project_hamiltonian, solve_subspace

__version__ = "0.1.0"

__all__ = [
    "AAPlan", "ReductionSet", "aa_circuit_tcount", "apply_fixed_point_aa", "apply_standard_aa",
    "cnnot_tcount", "ideal_steps", "theta_from_R",
    "DistributionSpec", "analytic_steps", "qtot_sqd", "qtot_sqdaa", "ratio_curve",
    "DriverConfig", "RunRecord", "run_sqd", "run_sqdaa",
    "Bitstring", "PauliHamiltonian", "PauliString", "parse_hamiltonian", "reduced_term_count",
    "Distribution", "StateVector", "model_state", "sample",
    "Subspace", "project_hamiltonian", "solve_subspace",
]
