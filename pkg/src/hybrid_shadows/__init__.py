"""Classical shadow tomography with hybrid quantum circuits."""

from .paulis import PauliString, SignedPauli, pauli_commutes, pauli_multiply
from .clifford import (
    CliffordGate2,
    TWO_QUBIT_CLIFFORD_COUNT,
    enumerate_two_qubit_cliffords,
    gate_conjugate,
    random_two_qubit_clifford,
)
from .tableau import ContradictionError, StabilizerTableau
from .circuits import (
    CircuitLayer,
    MeasurementEvent,
    ShadowRecord,
    derive_shot_seed,
    ghz_state,
    reconstruct_snapshot,
    run_forward,
    sample_circuit,
    sample_prior_shot,
    sample_shot,
)
from .shadow_io import ShadowParseError, read_shadows, write_shadows
from .weights_exact import (
    RegionWeightVector,
    evolve_exact,
    meas_transfer,
    prior_snapshot_weights,
    unitary_transfer,
)
from .weights_mps import WeightMPS, init_identity_weight
from .estimation import (
    EstimateReport,
    ObservableSpec,
    TomographicIncompletenessError,
    empirical_shadow_norm,
    estimate_observable,
    single_shot_estimate,
)
from .scaling import FitResult, NormCurve, fit_beta_delta, shadow_norm_curve, sweep_and_minimize

__version__ = "0.1.0"
