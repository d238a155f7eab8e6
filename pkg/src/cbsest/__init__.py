"""Computational-basis-sampling estimation of expectation values, with conventional
Pauli-grouping baselines, closed-form variances and a finite-shot sampling harness."""

__version__ = "0.1.0"

from .cbs import (
    InterferenceSet,
    TruncationResult,
    cbs_expectation,
    interference_from_estimates,
    interference_set,
    renormalized,
    symmetry_filter,
    truncate,
    truncate_to,
    truncated_state,
    truncation_bound,
)
from .grouping import GroupingResult, sorted_insertion, verify_grouping
from .pauli import (
    Observable,
    PauliString,
    PauliTerm,
    generally_commutes,
    load_observable,
    observable_transition,
    operator_inf_norm,
    parse_observable,
    pauli_transition,
    qubit_wise_commutes,
)
from .sampling import ExperimentConfig, run_procedure_1, run_procedure_2, run_procedure_3, sample_basis, sample_bernoulli
from .state import GroundStateResult, StateVector, ab_probabilities, basis_probabilities, expectation, ground_state
from .variance import (
    MeasurementPlan,
    VarianceReport,
    allocation_variance,
    cbs_gradients,
    cbs_variance,
    conventional_variance,
    group_variance,
    heuristic_plan,
    importance_sampling_variance,
    optimal_allocation,
    shots_to_target,
)
